#include "exmorph/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "exmorph/distance.hpp"
#include "exmorph/error.hpp"

namespace exmorph {

namespace {

void require_same_grid(const VoxelGrid& a, const VoxelGrid& b) {
  if (!a.same_geometry(b)) throw Error("grid-mismatch", "masks are defined on different grids");
}

bool empty(const Mask& m) {
  return std::none_of(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v != 0; });
}

}  // namespace

double dice(const Mask& a, const Mask& b) {
  require_same_grid(a.grid, b.grid);
  std::int64_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool x = a.data[i] != 0, y = b.data[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

Mask boundary(const Mask& mask) {
  const VoxelGrid& g = mask.grid;
  const auto& d = g.dims();
  Mask out(g, 0);
  static constexpr std::int64_t faces[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                               {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
#pragma omp parallel for schedule(static)
  for (std::int64_t z = 0; z < d[2]; ++z) {
    for (std::int64_t y = 0; y < d[1]; ++y) {
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (mask(x, y, z) == 0) continue;
        for (const auto& f : faces) {
          const Index3 n{x + f[0], y + f[1], z + f[2]};
          if (!g.contains(n) || mask[n] == 0) {
            out(x, y, z) = 1;
            break;
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> directed_boundary_distances(const Mask& from, const Mask& to) {
  require_same_grid(from.grid, to.grid);
  const Mask from_edge = boundary(from);
  const Mask to_edge = boundary(to);
  // Distance to the nearest `to` boundary voxel: transform of its complement.
  Mask complement(to.grid, 0);
  for (std::size_t i = 0; i < complement.data.size(); ++i) {
    complement.data[i] = to_edge.data[i] != 0 ? 0 : 1;
  }
  const DistanceField field = distance_transform(complement);
  std::vector<double> out;
  for (std::size_t i = 0; i < from_edge.data.size(); ++i) {
    if (from_edge.data[i] != 0) out.push_back(field.distance.data[i]);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("empty-sample", "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::optional<double> hd95(const Mask& a, const Mask& b) {
  require_same_grid(a.grid, b.grid);
  if (empty(a) || empty(b)) return std::nullopt;
  const double ab = percentile(directed_boundary_distances(a, b), 95.0);
  const double ba = percentile(directed_boundary_distances(b, a), 95.0);
  return std::max(ab, ba);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

MetricsReport evaluate_labels(const LabelMap& candidate, const LabelMap& reference,
                              const std::vector<std::int32_t>& label_ids) {
  require_same_grid(candidate.grid(), reference.grid());
  MetricsReport report;
  std::vector<double> dscs, hds;
  for (const std::int32_t id : label_ids) {
    LabelMetrics m;
    m.label_id = id;
    const auto named = reference.dictionary().find(id);
    m.label = named != reference.dictionary().end() ? named->second : "label_" + std::to_string(id);
    const Mask c = candidate.mask_of(id);
    const Mask r = reference.mask_of(id);
    const bool c_empty = empty(c), r_empty = empty(r);
    m.dsc = dice(c, r);
    if (c_empty && r_empty) {
      m.flag = "absent-both";
    } else if (c_empty) {
      m.flag = "empty-candidate";
    } else if (r_empty) {
      m.flag = "empty-reference";
    } else {
      m.hd95_mm = hd95(c, r);
      hds.push_back(*m.hd95_mm);
    }
    dscs.push_back(m.dsc);
    report.labels.push_back(std::move(m));
  }
  report.dsc = summarize(dscs);
  report.hd95 = summarize(hds);
  return report;
}

}  // namespace exmorph
