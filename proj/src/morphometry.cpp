#include "exmorph/morphometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "exmorph/csv.hpp"
#include "exmorph/error.hpp"

namespace exmorph {

LandmarkSet::LandmarkSet(std::vector<Landmark> entries) {
  for (auto& e : entries) add(std::move(e));
}

void LandmarkSet::add(Landmark landmark) {
  if (find(landmark.name) != nullptr) {
    throw Error("bad-landmarks", "duplicate landmark name '" + landmark.name + "'");
  }
  for (const double c : landmark.point) {
    if (!std::isfinite(c)) {
      throw Error("bad-landmarks", "non-finite coordinate for landmark '" + landmark.name + "'");
    }
  }
  entries_.push_back(std::move(landmark));
}

const Landmark* LandmarkSet::find(const std::string& name) const noexcept {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const std::vector<std::string>& cortical_roi_names() {
  static const std::vector<std::string> names = {
      "visual",          "motor",           "posterior_cingulate", "midfrontal",
      "anterior_cingulate", "orbitofrontal", "superior_temporal",   "inferior_frontal",
      "anterior_insula", "anterior_temporal", "ventrolateral_temporal", "superior_parietal",
      "angular_gyrus",   "entorhinal",      "ba35",                "parahippocampal"};
  return names;
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, {"name", "x_mm", "y_mm", "z_mm"}, path.string());
  LandmarkSet set;
  for (const auto& row : t.rows) {
    set.add({row[0], {csv::to_double(row[1], row[0] + ".x_mm"), csv::to_double(row[2], row[0] + ".y_mm"),
                      csv::to_double(row[3], row[0] + ".z_mm")}});
  }
  return set;
}

void write_landmarks(const LandmarkSet& set, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : set.entries()) {
    rows.push_back({e.name, csv::format(e.point[0]), csv::format(e.point[1]), csv::format(e.point[2])});
  }
  csv::write(path, {"name", "x_mm", "y_mm", "z_mm"}, rows);
}

namespace {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Voxel-index bounding box of the physical ball (centre, radius), clipped to the grid.
std::pair<Index3, Index3> ball_box(const VoxelGrid& grid, const Vec3& centre, double radius) {
  const Vec3 c = grid.physical_to_voxel(centre);
  const Affine& inv = grid.inverse_affine();
  Index3 lo{}, hi{};
  for (int i = 0; i < 3; ++i) {
    const double extent =
        radius * std::sqrt(inv[i][0] * inv[i][0] + inv[i][1] * inv[i][1] + inv[i][2] * inv[i][2]);
    lo[i] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(c[i] - extent)));
    hi[i] = std::min<std::int64_t>(grid.dims()[i] - 1,
                                   static_cast<std::int64_t>(std::ceil(c[i] + extent)));
  }
  return {lo, hi};
}

template <typename Visit>
void for_each_in_box(const std::pair<Index3, Index3>& box, Visit&& visit) {
  const auto& [lo, hi] = box;
  for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t x = lo[0]; x <= hi[0]; ++x) visit(Index3{x, y, z});
    }
  }
}

}  // namespace

ThicknessResult inscribed_sphere_thickness(const Mask& gm, const Landmark& landmark,
                                           const ThicknessOptions& options) {
  return inscribed_sphere_thickness(gm, distance_transform(gm), landmark, options);
}

ThicknessResult inscribed_sphere_thickness(const Mask& gm, const DistanceField& edt,
                                           const Landmark& landmark,
                                           const ThicknessOptions& options) {
  if (!(options.search_radius_mm > 0.0) || !(options.snap_tolerance_mm > 0.0)) {
    throw Error("bad-options", "search radius and snap tolerance must be positive");
  }
  if (!edt.distance.grid.same_geometry(gm.grid)) {
    throw Error("grid-mismatch", "distance field does not match the mask grid");
  }
  if (edt.unbounded) {
    throw Error("unbounded-region", "segmentation has no background; thickness is unbounded");
  }
  const VoxelGrid& grid = gm.grid;
  const double half_voxel = grid.mean_spacing() / 2.0;
  auto radius_at = [&](const Index3& v) {
    return std::max(edt.distance[v] - half_voxel, 0.0);
  };

  ThicknessResult result;
  result.landmark = landmark.name;

  Vec3 anchor = landmark.point;
  const Vec3 cont = grid.physical_to_voxel(anchor);
  Index3 anchor_voxel{static_cast<std::int64_t>(std::llround(cont[0])),
                      static_cast<std::int64_t>(std::llround(cont[1])),
                      static_cast<std::int64_t>(std::llround(cont[2]))};

  if (!grid.contains(anchor_voxel) || gm[anchor_voxel] == 0) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<Index3> nearest;
    for_each_in_box(ball_box(grid, anchor, options.snap_tolerance_mm), [&](const Index3& v) {
      if (gm[v] == 0) return;
      const double d = distance(grid.voxel_to_physical(v), anchor);
      if (d <= options.snap_tolerance_mm && d < best) {
        best = d;
        nearest = v;
      }
    });
    if (!nearest) {
      throw Error("landmark-outside", "landmark '" + landmark.name + "' outside segmentation");
    }
    result.snapped = true;
    result.snap_distance_mm = best;
    anchor_voxel = *nearest;
    anchor = grid.voxel_to_physical(anchor_voxel);
  }

  double best_radius = -1.0;
  double best_offset = 0.0;
  Index3 best_centre{};
  for_each_in_box(ball_box(grid, anchor, options.search_radius_mm), [&](const Index3& v) {
    if (gm[v] == 0) return;
    const double r = radius_at(v);
    if (r < best_radius) return;
    const double d = distance(grid.voxel_to_physical(v), anchor);
    if (d > options.search_radius_mm || d > r) return;
    // Visit order is increasing linear index, so strict comparisons keep the
    // lowest index among exact ties.
    if (r > best_radius || d < best_offset) {
      best_radius = r;
      best_offset = d;
      best_centre = v;
    }
  });

  if (best_radius < 0.0) {
    result.thin_region = true;
    best_centre = anchor_voxel;
    best_radius = radius_at(anchor_voxel);
  }
  result.sphere_center = grid.voxel_to_physical(best_centre);
  result.sphere_radius_mm = best_radius;
  result.thickness_mm = 2.0 * best_radius;
  return result;
}

VolumeResult region_volume(const LabelMap& map, std::int32_t label_id, std::optional<double> icv_mm3) {
  const auto it = map.dictionary().find(label_id);
  if (it == map.dictionary().end()) {
    throw Error("unknown-label", "label id " + std::to_string(label_id) + " not in dictionary");
  }
  VolumeResult r;
  r.label = it->second;
  r.voxel_count = std::count(map.labels().begin(), map.labels().end(), label_id);
  const Vec3& s = map.grid().spacing();
  r.volume_mm3 = static_cast<double>(r.voxel_count) * s[0] * s[1] * s[2];
  if (icv_mm3) {
    if (!(*icv_mm3 > 0.0) || !std::isfinite(*icv_mm3)) {
      throw Error("bad-icv", "intracranial volume must be positive");
    }
    r.icv_mm3 = icv_mm3;
    r.icv_adjusted = r.volume_mm3 / *icv_mm3;
  }
  return r;
}

double normalized_wmh_volume(const LabelMap& map, std::int32_t wmh_label, std::int32_t wm_label) {
  const auto wm = std::count(map.labels().begin(), map.labels().end(), wm_label);
  if (wm == 0) throw Error("undefined-normalization", "WM volume is zero; undefined normalization");
  const auto wmh = std::count(map.labels().begin(), map.labels().end(), wmh_label);
  // Common voxel volume cancels.
  return static_cast<double>(wmh) / static_cast<double>(wm);
}

namespace {

struct DisjointSets {
  std::vector<std::int64_t> parent;

  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::int64_t find(std::int64_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;  // root is the smallest index of the set
  }
};

std::vector<Index3> backward_offsets(Connectivity c) {
  std::vector<Index3> out;
  for (std::int64_t dz = -1; dz <= 0; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int order = static_cast<int>(dx != 0) + static_cast<int>(dy != 0) + static_cast<int>(dz != 0);
        if (c == Connectivity::face && order > 1) continue;
        if (c == Connectivity::edge && order > 2) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

}  // namespace

Components connected_components(const Mask& mask, Connectivity connectivity) {
  const VoxelGrid& grid = mask.grid;
  const auto& d = grid.dims();
  DisjointSets sets(mask.data.size());
  const auto offsets = backward_offsets(connectivity);
  for (std::int64_t z = 0; z < d[2]; ++z) {
    for (std::int64_t y = 0; y < d[1]; ++y) {
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (mask(x, y, z) == 0) continue;
        const auto here = static_cast<std::int64_t>(grid.linear(x, y, z));
        for (const auto& o : offsets) {
          const Index3 n{x + o[0], y + o[1], z + o[2]};
          if (grid.contains(n) && mask[n] != 0) {
            sets.unite(here, static_cast<std::int64_t>(grid.linear(n)));
          }
        }
      }
    }
  }
  // Roots are the minimum linear index of each component.
  std::vector<std::int64_t> roots;
  std::vector<std::int64_t> size_of(mask.data.size(), 0);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i] == 0) continue;
    const auto r = sets.find(static_cast<std::int64_t>(i));
    if (size_of[r]++ == 0) roots.push_back(r);
  }
  std::stable_sort(roots.begin(), roots.end(), [&](std::int64_t a, std::int64_t b) {
    if (size_of[a] != size_of[b]) return size_of[a] > size_of[b];
    return a < b;
  });
  std::vector<std::int32_t> id_of_root(mask.data.size(), 0);
  Components out{Field<std::int32_t>(grid, 0), {}};
  for (std::size_t k = 0; k < roots.size(); ++k) {
    id_of_root[roots[k]] = static_cast<std::int32_t>(k + 1);
    out.sizes.push_back(size_of[roots[k]]);
  }
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i] != 0) out.labels.data[i] = id_of_root[sets.find(static_cast<std::int64_t>(i))];
  }
  return out;
}

Mask largest_component(const Mask& mask, Connectivity connectivity) {
  const Components c = connected_components(mask, connectivity);
  Mask out(mask.grid, 0);
  for (std::size_t i = 0; i < mask.data.size(); ++i) out.data[i] = c.labels.data[i] == 1 ? 1 : 0;
  return out;
}

std::vector<double> impute_icv(const std::vector<std::optional<double>>& icv) {
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& v : icv) {
    if (v) {
      sum += *v;
      ++present;
    }
  }
  if (present == 0) throw Error("no-icv", "cannot impute ICV: every value is missing");
  const double mean = sum / static_cast<double>(present);
  std::vector<double> out;
  out.reserve(icv.size());
  for (const auto& v : icv) out.push_back(v ? *v : mean);
  return out;
}

}  // namespace exmorph
