#include "exmorph/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "exmorph/csv.hpp"
#include "exmorph/error.hpp"
#include "exmorph/metrics.hpp"
#include "exmorph/morphometry.hpp"
#include "exmorph/nifti.hpp"
#include "exmorph/ratings.hpp"
#include "exmorph/stats.hpp"

namespace exmorph::pipeline {

namespace {

namespace fs = std::filesystem;

std::string yes_no(bool b) { return b ? "true" : "false"; }

// Runs `work(i)` for every subject index on up to `jobs` threads. `work` must
// not throw; results are collected per index so ordering never depends on
// scheduling.
template <typename Work>
void for_each_subject(std::size_t count, int jobs, Work&& work) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    work(static_cast<std::size_t>(i));
  }
}

void sort_rows(Rows& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a[0], a[1]) < std::tie(b[0], b[1]);
  });
}

Rows flatten(std::vector<Rows>& per_subject) {
  Rows out;
  for (auto& rows : per_subject) {
    for (auto& r : rows) out.push_back(std::move(r));
  }
  sort_rows(out);
  return out;
}

bool failed(const std::string& flag) {
  return !flag.empty() && flag != "thin-region" && flag != "imputed";
}

int exit_code_for(const Rows& rows) {
  for (const auto& r : rows) {
    if (failed(r.back())) return exit_partial;
  }
  return exit_ok;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io-error", "cannot create output directory " + dir.string());
}

Rows subject_thickness(const StudyConfig& config, const SubjectEntry& subject) {
  Rows rows;
  auto error_row = [&](const std::string& landmark, const std::string& code) {
    return std::vector<std::string>{subject.id, landmark, "", "", "", "", "", "", "", code};
  };
  try {
    const LabelMap map = nifti::read_labels(config.resolve(subject.label_map), config.dictionary);
    Mask gm = map.mask_of(map.id_of(config.gm_label));
    if (config.largest_component_only) gm = largest_component(gm);
    const LandmarkSet landmarks = read_landmarks(config.resolve(subject.landmarks));
    const DistanceField edt = distance_transform(gm);
    const ThicknessOptions options{config.search_radius_mm, config.snap_tolerance_mm};
    for (const auto& name : config.landmark_names) {
      const Landmark* lm = landmarks.find(name);
      if (lm == nullptr) {
        rows.push_back(error_row(name, "missing-landmark"));
        continue;
      }
      try {
        const ThicknessResult t = inscribed_sphere_thickness(gm, edt, *lm, options);
        rows.push_back({subject.id, name, csv::format(t.thickness_mm),
                        csv::format(t.sphere_center[0]), csv::format(t.sphere_center[1]),
                        csv::format(t.sphere_center[2]), csv::format(t.sphere_radius_mm),
                        yes_no(t.snapped), csv::format(t.snap_distance_mm),
                        t.thin_region ? "thin-region" : ""});
      } catch (const Error& e) {
        rows.push_back(error_row(name, e.code()));
      }
    }
  } catch (const Error& e) {
    rows.clear();
    for (const auto& name : config.landmark_names) rows.push_back(error_row(name, e.code()));
  } catch (const std::exception&) {
    rows.clear();
    for (const auto& name : config.landmark_names) rows.push_back(error_row(name, "internal-error"));
  }
  return rows;
}

Rows subject_volumes(const StudyConfig& config, const SubjectEntry& subject,
                     std::optional<double> icv, bool icv_imputed) {
  Rows rows;
  auto row = [&](const std::string& measure, const std::string& value, const std::string& flag) {
    rows.push_back({subject.id, measure, value, flag});
  };
  try {
    const LabelMap map = nifti::read_labels(config.resolve(subject.label_map), config.dictionary);
    for (const auto& [id, name] : config.dictionary) {
      const VolumeResult v = region_volume(map, id);
      row(name + "_voxels", std::to_string(v.voxel_count), "");
      row(name + "_mm3", csv::format(v.volume_mm3), "");
    }
    const std::string imputed = icv_imputed ? "imputed" : "";
    if (icv) {
      row("icv_mm3", csv::format(*icv), imputed);
      for (const auto& name : config.subcortical_labels) {
        try {
          const VolumeResult v = region_volume(map, map.id_of(name), icv);
          row(name + "_icv_adj", csv::format(*v.icv_adjusted), imputed);
        } catch (const Error& e) {
          row(name + "_icv_adj", "", e.code());
        }
      }
    }
    try {
      row("normalized_wmh",
          csv::format(normalized_wmh_volume(map, map.id_of(config.wmh_label),
                                            map.id_of(config.wm_label))),
          "");
    } catch (const Error& e) {
      row("normalized_wmh", "", e.code());
    }
  } catch (const std::exception& e) {
    rows.clear();
    const auto* err = dynamic_cast<const Error*>(&e);
    row("*", "", err ? err->code() : "internal-error");
  }
  return rows;
}

// subject -> item -> value; blank or failed cells are absent.
using Measurements = std::map<std::string, std::map<std::string, double>>;

Measurements read_measurements(const fs::path& path, const std::vector<std::string>& header,
                               std::size_t item_col, std::size_t value_col) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, header, path.string());
  Measurements out;
  for (const auto& row : t.rows) {
    auto& subject = out[row[0]];
    const std::string& flag = row.back();
    if (row[value_col].empty() || failed(flag)) continue;
    subject[row[item_col]] = csv::to_double(row[value_col], row[0] + "/" + row[item_col]);
  }
  return out;
}

std::optional<double> lookup(const Measurements& m, const std::string& subject,
                             const std::string& item) {
  const auto s = m.find(subject);
  if (s == m.end()) return std::nullopt;
  const auto v = s->second.find(item);
  if (v == s->second.end()) return std::nullopt;
  return v->second;
}

struct Cell {
  std::string roi;
  std::string measure;
  std::optional<stats::CorrelationResult> result;
  std::size_t n = 0;
  std::string flag;
};

std::size_t complete_count(const stats::Series& a, const stats::Series& b,
                           const stats::Series* c = nullptr) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    n += a[i] && b[i] && (c == nullptr || (*c)[i]);
  }
  return n;
}

template <typename Compute>
Cell make_cell(std::string roi, std::string measure, std::size_t n, Compute&& compute) {
  Cell cell{std::move(roi), std::move(measure), std::nullopt, n, ""};
  try {
    cell.result = compute();
    cell.n = cell.result->n;
    if (cell.result->covariate_fallback) cell.flag = "constant-covariate";
  } catch (const Error& e) {
    cell.flag = e.code();
  }
  return cell;
}

Rows finish_cells(std::vector<Cell>& cells, double q) {
  std::vector<double> ps;
  for (const auto& c : cells) {
    if (c.result) ps.push_back(c.result->p);
  }
  if (!ps.empty()) {
    const auto rejected = stats::bh_fdr(ps, q);
    std::size_t k = 0;
    for (auto& c : cells) {
      if (c.result) c.result->bh_rejected = rejected[k++];
    }
  }
  Rows rows;
  for (const auto& c : cells) {
    if (c.result) {
      rows.push_back({c.roi, c.measure, csv::format(c.result->rho), csv::format(c.result->p),
                      std::to_string(c.n), yes_no(*c.result->bh_rejected), c.flag});
    } else {
      rows.push_back({c.roi, c.measure, "", "", std::to_string(c.n), "", c.flag});
    }
  }
  return rows;
}

}  // namespace

Rows thickness_rows(const StudyConfig& config, std::vector<std::string>& /*warnings*/) {
  std::vector<Rows> per_subject(config.subjects.size());
  for_each_subject(config.subjects.size(), config.jobs, [&](std::size_t i) {
    per_subject[i] = subject_thickness(config, config.subjects[i]);
  });
  return flatten(per_subject);
}

Rows volume_rows(const StudyConfig& config, std::vector<std::string>& warnings) {
  std::vector<std::optional<double>> given;
  for (const auto& s : config.subjects) given.push_back(s.icv_mm3);
  std::vector<std::optional<double>> icv(given.size());
  if (std::any_of(given.begin(), given.end(), [](const auto& v) { return v.has_value(); })) {
    const auto filled = impute_icv(given);
    for (std::size_t i = 0; i < filled.size(); ++i) icv[i] = filled[i];
  } else {
    warnings.push_back("no subject has an ICV; ICV-adjusted volumes omitted");
  }
  std::vector<Rows> per_subject(config.subjects.size());
  for_each_subject(config.subjects.size(), config.jobs, [&](std::size_t i) {
    per_subject[i] = subject_volumes(config, config.subjects[i], icv[i], !given[i] && icv[i]);
  });
  return flatten(per_subject);
}

Report cmd_thickness(const StudyConfig& config) {
  validate(config, Command::thickness);
  Report report;
  const Rows rows = thickness_rows(config, report.warnings);
  const fs::path out_dir = config.resolve(config.out_dir);
  ensure_dir(out_dir);
  const fs::path out = out_dir / "thickness.csv";
  csv::write(out, thickness_header, rows);
  report.outputs.push_back(out);
  report.exit_code = exit_code_for(rows);
  return report;
}

Report cmd_volumes(const StudyConfig& config) {
  validate(config, Command::volumes);
  Report report;
  const Rows rows = volume_rows(config, report.warnings);
  const fs::path out_dir = config.resolve(config.out_dir);
  ensure_dir(out_dir);
  const fs::path out = out_dir / "volumes.csv";
  csv::write(out, volumes_header, rows);
  report.outputs.push_back(out);
  report.exit_code = exit_code_for(rows);
  return report;
}

Report cmd_evaluate(const EvaluateOptions& options) {
  Report report;
  if (!fs::is_directory(options.candidate_dir) || !fs::is_directory(options.reference_dir)) {
    throw Error("invalid-config", "candidate and reference directories must exist");
  }
  auto stem_of = [](const fs::path& p) -> std::optional<std::string> {
    const std::string name = p.filename().string();
    for (const std::string ext : {".nii.gz", ".nii"}) {
      if (name.size() > ext.size() && name.ends_with(ext)) return name.substr(0, name.size() - ext.size());
    }
    return std::nullopt;
  };
  std::map<std::string, fs::path> references, candidates;
  for (const auto& e : fs::directory_iterator(options.reference_dir)) {
    if (auto s = stem_of(e.path())) references[*s] = e.path();
  }
  for (const auto& e : fs::directory_iterator(options.candidate_dir)) {
    if (auto s = stem_of(e.path())) candidates[*s] = e.path();
  }
  if (references.empty()) throw Error("no-subjects", "no subjects: reference directory has no volumes");

  std::vector<std::string> subjects;
  for (const auto& [s, _] : references) subjects.push_back(s);
  std::vector<Rows> per_subject(subjects.size());
  std::vector<std::vector<LabelMetrics>> metrics(subjects.size());
  for_each_subject(subjects.size(), options.jobs, [&](std::size_t i) {
    const std::string& id = subjects[i];
    Rows& rows = per_subject[i];
    try {
      const auto cand = candidates.find(id);
      if (cand == candidates.end()) throw Error("missing-candidate", "no candidate for " + id);
      const LabelMap reference = nifti::read_labels(references.at(id), options.dictionary);
      const LabelMap candidate = nifti::read_labels(cand->second, options.dictionary);
      if (!candidate.grid().same_geometry(reference.grid())) {
        throw Error("grid-mismatch", "candidate and reference grids differ for " + id);
      }
      std::vector<std::int32_t> ids = options.labels;
      if (ids.empty()) {
        for (const auto& [lid, _] : options.dictionary) ids.push_back(lid);
      }
      const MetricsReport r = evaluate_labels(candidate, reference, ids);
      for (const auto& m : r.labels) {
        rows.push_back({id, m.label, csv::format(m.dsc), csv::format(m.hd95_mm), m.flag});
      }
      metrics[i] = r.labels;
    } catch (const std::exception& e) {
      const auto* err = dynamic_cast<const Error*>(&e);
      rows = {{id, "*", "", "", err ? err->code() : "internal-error"}};
    }
  });
  Rows rows = flatten(per_subject);

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_label;
  for (const auto& subject : metrics) {
    for (const auto& m : subject) {
      auto& [dscs, hds] = per_label[m.label];
      dscs.push_back(m.dsc);
      if (m.hd95_mm) hds.push_back(*m.hd95_mm);
    }
  }
  nlohmann::ordered_json aggregate = nlohmann::ordered_json::object();
  auto summary_json = [](const Summary& s) {
    nlohmann::ordered_json j;
    j["mean"] = s.mean;
    j["sd"] = s.sd;
    j["n"] = s.n;
    return j;
  };
  for (const auto& [label, values] : per_label) {
    aggregate[label]["dsc"] = summary_json(summarize(values.first));
    aggregate[label]["hd95_mm"] = summary_json(summarize(values.second));
  }

  ensure_dir(options.out_dir);
  const fs::path csv_out = options.out_dir / "metrics.csv";
  const fs::path json_out = options.out_dir / "aggregate.json";
  csv::write(csv_out, metrics_header, rows);
  std::ofstream(json_out) << aggregate.dump(2) << '\n';
  report.outputs = {csv_out, json_out};
  bool any_failed = false;
  for (const auto& r : rows) any_failed |= r[1] == "*";
  report.exit_code = any_failed ? exit_partial : exit_ok;
  return report;
}

Report cmd_correlate(const StudyConfig& config) {
  validate(config, Command::correlate);
  Report report;
  const fs::path out_dir = config.resolve(config.out_dir);

  const fs::path thickness_path =
      config.resolve(config.thickness_csv ? *config.thickness_csv : config.out_dir / "thickness.csv");
  const Measurements thickness = read_measurements(thickness_path, thickness_header, 1, 2);

  std::optional<Measurements> volumes;
  {
    const fs::path p =
        config.resolve(config.volumes_csv ? *config.volumes_csv : config.out_dir / "volumes.csv");
    if (fs::exists(p)) volumes = read_measurements(p, volumes_header, 1, 2);
  }

  RatingsTable ratings;
  read_regional_ratings(config.resolve(*config.ratings), ratings);
  if (config.globals) read_global_stages(config.resolve(*config.globals), ratings);

  const std::vector<RegionMapping> mapping = config.region_mapping
                                                 ? read_region_mapping(config.resolve(*config.region_mapping))
                                                 : default_region_mapping();

  // Cohort: every subject with measurements, restricted to the subset list.
  std::vector<std::string> cohort;
  {
    std::set<std::string> ids;
    for (const auto& [s, _] : thickness) ids.insert(s);
    if (config.subset) {
      const auto keep = read_subject_list(config.resolve(*config.subset));
      const std::set<std::string> wanted(keep.begin(), keep.end());
      for (const auto& s : wanted) {
        if (!ids.contains(s)) report.warnings.push_back("subset subject " + s + " has no thickness rows");
      }
      std::erase_if(ids, [&](const std::string& s) { return !wanted.contains(s); });
    }
    cohort.assign(ids.begin(), ids.end());
  }

  // ROIs in region-mapping order; measured ROIs without a mapping are listed and skipped.
  std::set<std::string> measured;
  for (const auto& [_, items] : thickness) {
    for (const auto& [roi, v] : items) measured.insert(roi);
  }
  std::vector<const RegionMapping*> rois;
  std::set<std::string> mapped;
  for (const auto& m : mapping) {
    mapped.insert(m.roi);
    if (measured.contains(m.roi)) rois.push_back(&m);
  }
  for (const auto& roi : measured) {
    if (!mapped.contains(roi)) report.warnings.push_back("unmapped ROI skipped: " + roi);
  }

  auto thickness_series = [&](const Measurements& source, const std::string& roi) {
    stats::Series s;
    for (const auto& subject : cohort) s.push_back(lookup(source, subject, roi));
    return s;
  };

  std::vector<std::string> measures(regional_measures.begin(), regional_measures.end());
  if (config.globals) measures.insert(measures.end(), global_measures.begin(), global_measures.end());

  ensure_dir(out_dir);

  {
    std::vector<Cell> cells;
    for (const RegionMapping* m : rois) {
      const stats::Series x = thickness_series(thickness, m->roi);
      if (!ratings.has_region(m->pathology_region)) {
        report.warnings.push_back("no ratings for pathology region '" + m->pathology_region +
                                  "' (roi " + m->roi + ")");
      }
      for (const auto& measure : measures) {
        stats::Series y;
        for (const auto& subject : cohort) y.push_back(ratings.value(subject, m->pathology_region, measure));
        cells.push_back(make_cell(m->roi, measure, complete_count(x, y),
                                  [&] { return stats::spearman(x, y, config.alternative); }));
      }
    }
    const fs::path out = out_dir / "correlations.csv";
    csv::write(out, correlation_header, finish_cells(cells, config.q));
    report.outputs.push_back(out);
  }

  if (volumes) {
    stats::Series wmh, icv;
    for (const auto& subject : cohort) {
      wmh.push_back(lookup(*volumes, subject, "normalized_wmh"));
      icv.push_back(lookup(*volumes, subject, "icv_mm3"));
    }
    std::vector<Cell> cells;
    for (const RegionMapping* m : rois) {
      const stats::Series x = thickness_series(thickness, m->roi);
      cells.push_back(make_cell(m->roi, "normalized_wmh", complete_count(x, wmh),
                                [&] { return stats::spearman(x, wmh, config.alternative); }));
    }
    for (const auto& name : config.subcortical_labels) {
      stats::Series v;
      for (const auto& subject : cohort) v.push_back(lookup(*volumes, subject, name + "_mm3"));
      cells.push_back(make_cell(name, "normalized_wmh|icv", complete_count(v, wmh, &icv), [&] {
        return stats::partial_spearman(v, wmh, icv, config.alternative, "icv");
      }));
    }
    const fs::path out = out_dir / "wmh_correlations.csv";
    csv::write(out, correlation_header, finish_cells(cells, config.q));
    report.outputs.push_back(out);
  } else {
    report.warnings.push_back("no volume measurements; WMH correlations skipped");
  }

  if (config.reference_thickness_csv) {
    const Measurements manual =
        read_measurements(config.resolve(*config.reference_thickness_csv), thickness_header, 1, 2);
    Rows rows;
    for (const RegionMapping* m : rois) {
      const stats::Series a = thickness_series(thickness, m->roi);
      const stats::Series b = thickness_series(manual, m->roi);
      std::vector<std::string> row{m->roi, std::to_string(complete_count(a, b))};
      std::vector<std::string> flags;
      try {
        const auto r = stats::spearman(a, b, stats::Alternative::two_sided);
        row.push_back(csv::format(r.rho));
        row.push_back(csv::format(r.p));
      } catch (const Error& e) {
        row.insert(row.end(), {"", ""});
        flags.push_back("spearman:" + e.code());
      }
      try {
        std::vector<std::vector<double>> matrix;
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (a[i] && b[i]) matrix.push_back({*a[i], *b[i]});
        }
        row.push_back(csv::format(stats::icc_average_fixed_raters(matrix).icc));
      } catch (const Error& e) {
        row.push_back("");
        flags.push_back("icc:" + e.code());
      }
      try {
        const auto ba = stats::bland_altman(a, b);
        for (const double v : {ba.mean_difference, ba.sd_difference, ba.loa_low, ba.loa_high}) {
          row.push_back(csv::format(v));
        }
      } catch (const Error& e) {
        row.insert(row.end(), {"", "", "", ""});
        flags.push_back("bland_altman:" + e.code());
      }
      std::string flag;
      for (const auto& f : flags) flag += (flag.empty() ? "" : ";") + f;
      row.push_back(flag);
      rows.push_back(std::move(row));
    }
    const fs::path out = out_dir / "agreement.csv";
    csv::write(out,
               {"roi", "n", "rho", "p", "icc", "ba_mean_difference", "ba_sd_difference",
                "ba_loa_low", "ba_loa_high", "flag"},
               rows);
    report.outputs.push_back(out);
  }

  if (config.groups && volumes) {
    const csv::Table t = csv::read(config.resolve(*config.groups));
    csv::require_header(t, {"subject", "group"}, config.resolve(*config.groups).string());
    const std::set<std::string> in_cohort(cohort.begin(), cohort.end());
    std::map<std::string, std::vector<std::string>> members;
    for (const auto& row : t.rows) {
      if (in_cohort.contains(row[0])) members[row[1]].push_back(row[0]);
    }
    Rows rows;
    for (const auto& name : config.subcortical_labels) {
      struct Pair {
        std::string a, b;
        std::size_t na = 0, nb = 0;
        std::optional<stats::RankSumResult> r;
        std::string flag;
      };
      std::vector<Pair> pairs;
      auto values = [&](const std::vector<std::string>& subjects) {
        std::vector<double> out;
        for (const auto& s : subjects) {
          if (auto v = lookup(*volumes, s, name + "_icv_adj")) out.push_back(*v);
        }
        return out;
      };
      for (auto i = members.begin(); i != members.end(); ++i) {
        for (auto j = std::next(i); j != members.end(); ++j) {
          Pair p;
          p.a = i->first;
          p.b = j->first;
          const auto va = values(i->second), vb = values(j->second);
          p.na = va.size();
          p.nb = vb.size();
          try {
            p.r = stats::rank_sum_test(va, vb);
          } catch (const Error& e) {
            p.flag = e.code();
          }
          pairs.push_back(std::move(p));
        }
      }
      std::vector<double> ps;
      for (const auto& p : pairs) {
        if (p.r) ps.push_back(p.r->p);
      }
      std::vector<bool> rejected = ps.empty() ? std::vector<bool>{} : stats::bh_fdr(ps, config.q);
      std::size_t k = 0;
      for (const auto& p : pairs) {
        if (p.r) {
          const bool rej = rejected[k++];
          rows.push_back({name, p.a, p.b, std::to_string(p.na), std::to_string(p.nb),
                          csv::format(p.r->u), csv::format(p.r->p), yes_no(rej),
                          rej ? stats::stars(p.r->p) : "ns", p.flag});
        } else {
          rows.push_back({name, p.a, p.b, std::to_string(p.na), std::to_string(p.nb), "", "", "",
                          "", p.flag});
        }
      }
    }
    const fs::path out = out_dir / "group_comparisons.csv";
    csv::write(out,
               {"structure", "group_a", "group_b", "n_a", "n_b", "u", "p", "bh_rejected", "stars",
                "flag"},
               rows);
    report.outputs.push_back(out);
  }
  return report;
}

}  // namespace exmorph::pipeline
