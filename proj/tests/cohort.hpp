// Synthetic study on disk: toy-phantom subjects whose cortical ribbon thickness
// varies, with pathology ratings that fall as the ribbon thickens.
#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "exmorph/morphometry.hpp"
#include "exmorph/nifti.hpp"
#include "exmorph/phantom.hpp"
#include "exmorph/ratings.hpp"

namespace cohort {

struct Study {
  std::filesystem::path dir;
  std::filesystem::path config;
  std::vector<std::string> ids;
  std::vector<std::int64_t> gm_voxels;
};

inline std::string subject_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02d", i + 1);
  return buf;
}

inline Study build(const std::filesystem::path& dir, int n, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "seg");
  fs::create_directories(dir / "lm");
  Study s{dir, dir / "study.cfg", {}, {}};
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution jitter(0.2), up(0.5);
  const double levels[5] = {0, 0.5, 1, 2, 3};

  std::string subjects;
  std::ofstream ratings(dir / "ratings.csv");
  ratings << "subject,region,ptau,abeta,tdp43,asyn,neuronloss\n";
  std::ofstream globals(dir / "globals.csv");
  globals << "subject,a_score,b_score,c_score,braak06\n";
  std::ofstream groups(dir / "groups.csv");
  groups << "subject,group\n";

  std::vector<std::string> regions;
  for (const auto& m : exmorph::default_region_mapping()) {
    if (std::find(regions.begin(), regions.end(), m.pathology_region) == regions.end())
      regions.push_back(m.pathology_region);
  }

  for (int i = 0; i < n; ++i) {
    const std::string id = subject_id(i);
    exmorph::phantom::Spec spec;
    spec.kind = exmorph::phantom::Kind::multilabel_hemisphere_toy;
    spec.toy_radius = 16;
    spec.toy_gm_thickness = 2 + i % 5;
    spec.seed = seed + static_cast<std::uint64_t>(i);
    const auto p = exmorph::phantom::generate(spec);
    exmorph::nifti::write_labels(p.map, dir / "seg" / (id + ".nii.gz"));
    exmorph::write_landmarks(p.landmarks, dir / "lm" / (id + ".csv"));
    s.ids.push_back(id);
    s.gm_voxels.push_back(spec.toy_gm_thickness);

    const std::string icv = i % 7 == 3 ? "-" : std::to_string(1200000 + 10000 * i);
    subjects += id + " seg/" + id + ".nii.gz lm/" + id + ".csv " + icv + "\n";

    // Thicker ribbon, milder pathology; occasionally off by one level.
    int level = 6 - static_cast<int>(spec.toy_gm_thickness);
    if (jitter(rng)) level += up(rng) ? 1 : -1;
    level = std::clamp(level, 0, 4);
    for (const auto& region : regions) {
      ratings << id << ',' << region << ',' << levels[level];
      for (int m = 0; m < 4; ++m) ratings << ',' << levels[rng() % 5];
      ratings << '\n';
    }
    globals << id << ',' << rng() % 4 << ',' << rng() % 4 << ',' << rng() % 4 << ',' << rng() % 7 << '\n';
    groups << id << ",G" << i % 3 << '\n';
  }

  std::ofstream cfg(s.config);
  cfg << "# synthetic cohort\n"
         "out = out\n"
         "ratings = ratings.csv\n"
         "globals = globals.csv\n"
         "groups = groups.csv\n"
         "[subjects]\n"
      << subjects;
  return s;
}

}  // namespace cohort
