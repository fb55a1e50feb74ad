#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exmorph/config.hpp"
#include "exmorph/csv.hpp"
#include "exmorph/error.hpp"
#include "exmorph/morphometry.hpp"
#include "exmorph/nifti.hpp"
#include "exmorph/phantom.hpp"
#include "exmorph/pipeline.hpp"

namespace fs = std::filesystem;
using namespace exmorph;

namespace {

struct StudyFlags {
  std::string config;
  std::optional<int> jobs;
  std::string out;
  std::optional<double> q;
  std::string alternative;
  std::string subset;
  std::vector<std::string> overrides;
};

void add_study_flags(CLI::App* cmd, StudyFlags& f) {
  cmd->add_option("--config", f.config, "Study config file")->check(CLI::ExistingFile);
  cmd->add_option("--jobs", f.jobs, "Subjects processed concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--q", f.q, "Benjamini-Hochberg false discovery rate");
  cmd->add_option("--alternative", f.alternative, "less, greater or two-sided");
  cmd->add_option("--subset", f.subset, "File of subject ids to restrict the cohort to");
  cmd->add_option("--set", f.overrides, "Override a config key: key=value (paths relative to the config)");
}

StudyConfig build_config(const StudyFlags& f) {
  StudyConfig c;
  if (!f.config.empty()) {
    c = load_config(f.config);
  } else {
    c.base_dir = fs::current_path();
    c.landmark_names = cortical_roi_names();
  }
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("invalid-config", "--set expects key=value, got " + kv);
    c.set(csv::trim(kv.substr(0, eq)), csv::trim(kv.substr(eq + 1)));
  }
  // Paths typed on the command line are relative to the working directory.
  if (!f.out.empty()) c.out_dir = fs::absolute(f.out);
  if (!f.subset.empty()) c.subset = fs::absolute(f.subset);
  if (f.jobs) c.jobs = *f.jobs;
  if (f.q) c.set("q", std::to_string(*f.q));
  if (!f.alternative.empty()) c.set("alternative", f.alternative);
  return c;
}

int finish(const pipeline::Report& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& o : r.outputs) std::cout << o.string() << '\n';
  if (r.exit_code == pipeline::exit_partial) std::cerr << "some rows failed; see the flag column\n";
  return r.exit_code;
}

std::vector<std::int32_t> resolve_labels(const std::vector<std::string>& items,
                                         const LabelDictionary& dict) {
  std::vector<std::int32_t> ids;
  for (const auto& item : items) {
    bool found = false;
    for (const auto& [id, name] : dict) {
      if (name == item) {
        ids.push_back(id);
        found = true;
      }
    }
    if (!found) {
      const double v = csv::to_double(item, "label");
      if (v < 1 || v != static_cast<std::int32_t>(v)) throw Error("invalid-config", "bad label " + item);
      ids.push_back(static_cast<std::int32_t>(v));
    }
  }
  return ids;
}

int run_phantom(const std::string& kind, const phantom::Spec& base, const std::string& out,
                const std::string& name, bool gz) {
  phantom::Spec spec = base;
  spec.kind = phantom::parse_kind(kind);
  const phantom::Phantom p = phantom::generate(spec);
  const fs::path dir = fs::weakly_canonical(fs::absolute(out));
  fs::create_directories(dir);
  const std::string stem = name.empty() ? phantom::to_string(spec.kind) : name;
  const fs::path volume = dir / (stem + (gz ? ".nii.gz" : ".nii"));
  const fs::path truth = dir / (stem + ".json");
  const fs::path landmarks = dir / (stem + "_landmarks.csv");
  nifti::write_labels(p.map, volume);
  std::ofstream(truth) << phantom::to_json(spec, p.truth).dump(2) << '\n';
  write_landmarks(p.landmarks, landmarks);
  for (const auto& path : {volume, truth, landmarks}) std::cout << path.string() << '\n';
  return pipeline::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volumetric morphometry and structure-pathology statistics"};
  app.require_subcommand(1);

  StudyFlags thickness_flags, volumes_flags, correlate_flags;
  auto* thickness = app.add_subcommand("thickness", "Landmark thickness by maximal inscribed sphere");
  add_study_flags(thickness, thickness_flags);
  auto* volumes = app.add_subcommand("volumes", "Regional, ICV-adjusted and normalized WMH volumes");
  add_study_flags(volumes, volumes_flags);
  auto* correlate = app.add_subcommand("correlate", "Structure-pathology correlation tables");
  add_study_flags(correlate, correlate_flags);

  pipeline::EvaluateOptions eval;
  std::string eval_config, eval_out = "results";
  std::vector<std::string> eval_labels;
  auto* evaluate = app.add_subcommand("evaluate", "Dice and HD95 of candidate vs reference label maps");
  evaluate->add_option("--candidate", eval.candidate_dir, "Candidate label maps")->required();
  evaluate->add_option("--reference", eval.reference_dir, "Reference label maps")->required();
  evaluate->add_option("--labels", eval_labels, "Label ids or names (default: all)")->delimiter(',');
  evaluate->add_option("--config", eval_config, "Config supplying the label dictionary")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Output directory");
  evaluate->add_option("--jobs", eval.jobs, "Subjects processed concurrently")->check(CLI::PositiveNumber);

  phantom::Spec spec;
  std::string kind, phantom_out = ".", phantom_name;
  bool gz = false;
  auto* ph = app.add_subcommand("phantom", "Write a synthetic phantom with its ground truth");
  ph->add_option("kind", kind, "slab, spherical_shell, cube, two_cubes or multilabel_hemisphere_toy")
      ->required();
  ph->add_option("--out", phantom_out, "Output directory");
  ph->add_option("--name", phantom_name, "File stem (default: the kind)");
  ph->add_flag("--gz", gz, "gzip the volume");
  ph->add_option("--spacing", spec.spacing_mm, "Isotropic spacing in mm");
  ph->add_option("--padding", spec.padding, "Background voxels around the foreground");
  ph->add_option("--label", spec.label, "Foreground label id");
  ph->add_option("--slab-thickness", spec.slab_thickness, "Slab thickness in voxels");
  ph->add_option("--slab-extent", spec.slab_extent, "Slab in-plane size in voxels");
  ph->add_option("--inner-radius", spec.inner_radius, "Shell inner radius in voxels");
  ph->add_option("--outer-radius", spec.outer_radius, "Shell outer radius in voxels");
  ph->add_option("--cube-side", spec.cube_side, "Cube side in voxels");
  ph->add_option("--cube-gap", spec.cube_gap, "Gap between the two cubes in voxels");
  ph->add_option("--toy-radius", spec.toy_radius, "Toy hemisphere radius in voxels");
  ph->add_option("--toy-gm-thickness", spec.toy_gm_thickness, "Toy cortical thickness in voxels");
  ph->add_option("--toy-wmh-period", spec.toy_wmh_period, "Slices per WMH slice in the toy");
  ph->add_option("--seed", spec.seed, "Seed for randomized placement");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*thickness) return finish(pipeline::cmd_thickness(build_config(thickness_flags)));
    if (*volumes) return finish(pipeline::cmd_volumes(build_config(volumes_flags)));
    if (*correlate) return finish(pipeline::cmd_correlate(build_config(correlate_flags)));
    if (*evaluate) {
      if (!eval_config.empty()) eval.dictionary = load_config(eval_config).dictionary;
      eval.labels = resolve_labels(eval_labels, eval.dictionary);
      eval.out_dir = fs::absolute(eval_out);
      return finish(pipeline::cmd_evaluate(eval));
    }
    if (*ph) return run_phantom(kind, spec, phantom_out, phantom_name, gz);
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    return pipeline::exit_invalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pipeline::exit_invalid;
  }
  return pipeline::exit_invalid;
}
