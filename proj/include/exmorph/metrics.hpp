#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exmorph/volume.hpp"

namespace exmorph {

// 2|A∩B| / (|A|+|B|); two empty masks agree perfectly (1.0).
double dice(const Mask& a, const Mask& b);

// Foreground voxels with at least one face neighbour in the background or
// outside the grid.
Mask boundary(const Mask& mask);

// Distances (mm) from every boundary voxel of `from` to the nearest boundary
// voxel of `to`, in increasing linear-index order of the `from` voxels.
std::vector<double> directed_boundary_distances(const Mask& from, const Mask& to);

// Linear-interpolation percentile of an unsorted sample, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// 95th-percentile Hausdorff distance in mm: the larger of the two directed
/// 95th percentiles between boundary-voxel sets. nullopt if either mask is empty.
std::optional<double> hd95(const Mask& a, const Mask& b);

struct LabelMetrics {
  std::int32_t label_id = 0;
  std::string label;
  double dsc = 0.0;
  std::optional<double> hd95_mm;
  std::string flag;  // "", "absent-both", "empty-candidate", "empty-reference"
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 when n < 2
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& values);

struct MetricsReport {
  std::vector<LabelMetrics> labels;
  Summary dsc;
  Summary hd95;  // over labels with a defined hd95
};

MetricsReport evaluate_labels(const LabelMap& candidate, const LabelMap& reference,
                              const std::vector<std::int32_t>& label_ids);

}  // namespace exmorph
