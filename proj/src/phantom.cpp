#include "exmorph/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "exmorph/error.hpp"

namespace exmorph::phantom {

Kind parse_kind(const std::string& text) {
  if (text == "slab") return Kind::slab;
  if (text == "spherical_shell" || text == "shell") return Kind::spherical_shell;
  if (text == "cube") return Kind::cube;
  if (text == "two_cubes") return Kind::two_cubes;
  if (text == "multilabel_hemisphere_toy" || text == "toy") return Kind::multilabel_hemisphere_toy;
  throw Error("bad-option", "unknown phantom kind '" + text + "'");
}

const char* to_string(Kind k) noexcept {
  switch (k) {
    case Kind::slab: return "slab";
    case Kind::spherical_shell: return "spherical_shell";
    case Kind::cube: return "cube";
    case Kind::two_cubes: return "two_cubes";
    case Kind::multilabel_hemisphere_toy: return "multilabel_hemisphere_toy";
  }
  return "?";
}

namespace {

constexpr std::int64_t max_dim = 512;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("bad-phantom", what);
}

VoxelGrid make_grid(std::int64_t nx, std::int64_t ny, std::int64_t nz, double spacing) {
  require(nx <= max_dim && ny <= max_dim && nz <= max_dim,
          "phantom parameters exceed the " + std::to_string(max_dim) + "-voxel grid limit");
  return VoxelGrid({nx, ny, nz}, {spacing, spacing, spacing});
}

LabelDictionary dictionary_for(std::int32_t label) {
  LabelDictionary d = default_label_dictionary();
  if (!d.contains(label)) d[label] = "label_" + std::to_string(label);
  return d;
}

std::map<std::int32_t, std::int64_t> count_labels(const LabelMap& map) {
  std::map<std::int32_t, std::int64_t> counts;
  for (const std::int32_t v : map.labels()) {
    if (v != 0) ++counts[v];
  }
  return counts;
}

Landmark landmark_at(const VoxelGrid& grid, std::string name, const Index3& voxel) {
  return {std::move(name), grid.voxel_to_physical(voxel)};
}

Phantom slab(const Spec& s) {
  require(s.slab_thickness >= 1 && s.slab_extent >= 1, "slab parameters must be positive");
  const std::int64_t p = s.padding;
  const std::int64_t e = s.slab_extent, k = s.slab_thickness;
  VoxelGrid grid = make_grid(e + 2 * p, e + 2 * p, k + 2 * p, s.spacing_mm);
  LabelMap map(grid, dictionary_for(s.label));
  for (std::int64_t z = p; z < p + k; ++z)
    for (std::int64_t y = p; y < p + e; ++y)
      for (std::int64_t x = p; x < p + e; ++x) map.set(x, y, z, s.label);
  GroundTruth t;
  t.thickness_mm = static_cast<double>(k) * s.spacing_mm;
  t.label_counts[s.label] = e * e * k;
  t.component_count = 1;
  LandmarkSet lm;
  lm.add(landmark_at(grid, "mid", {p + e / 2, p + e / 2, p + k / 2}));
  return {std::move(map), std::move(lm), std::move(t)};
}

Phantom shell(const Spec& s) {
  require(s.inner_radius >= 1 && s.outer_radius > s.inner_radius,
          "shell needs 1 <= inner_radius < outer_radius");
  const std::int64_t c = s.outer_radius + s.padding;
  const std::int64_t n = 2 * c + 1;
  VoxelGrid grid = make_grid(n, n, n, s.spacing_mm);
  LabelMap map(grid, dictionary_for(s.label));
  const std::int64_t lo2 = s.inner_radius * s.inner_radius;
  const std::int64_t hi2 = s.outer_radius * s.outer_radius;
  std::int64_t count = 0;
  for (std::int64_t z = 0; z < n; ++z)
    for (std::int64_t y = 0; y < n; ++y)
      for (std::int64_t x = 0; x < n; ++x) {
        const std::int64_t r2 = (x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c);
        if (r2 >= lo2 && r2 < hi2) {
          map.set(x, y, z, s.label);
          ++count;
        }
      }
  GroundTruth t;
  t.thickness_mm = static_cast<double>(s.outer_radius - s.inner_radius) * s.spacing_mm;
  t.label_counts[s.label] = count;
  t.component_count = 1;
  LandmarkSet lm;
  lm.add(landmark_at(grid, "mid", {c + (s.inner_radius + s.outer_radius) / 2, c, c}));
  return {std::move(map), std::move(lm), std::move(t)};
}

void fill_cube(LabelMap& map, const Index3& corner, std::int64_t side, std::int32_t label) {
  for (std::int64_t z = corner[2]; z < corner[2] + side; ++z)
    for (std::int64_t y = corner[1]; y < corner[1] + side; ++y)
      for (std::int64_t x = corner[0]; x < corner[0] + side; ++x) map.set(x, y, z, label);
}

Phantom cube(const Spec& s) {
  require(s.cube_side >= 1, "cube side must be positive");
  const std::int64_t p = s.padding, a = s.cube_side;
  VoxelGrid grid = make_grid(a + 2 * p, a + 2 * p, a + 2 * p, s.spacing_mm);
  LabelMap map(grid, dictionary_for(s.label));
  fill_cube(map, {p, p, p}, a, s.label);
  GroundTruth t;
  t.label_counts[s.label] = a * a * a;
  t.component_count = 1;
  LandmarkSet lm;
  lm.add(landmark_at(grid, "center", {p + a / 2, p + a / 2, p + a / 2}));
  return {std::move(map), std::move(lm), std::move(t)};
}

Phantom two_cubes(const Spec& s) {
  require(s.cube_side >= 1 && s.cube_gap >= 1, "two_cubes needs side >= 1 and gap >= 1");
  const std::int64_t p = s.padding, a = s.cube_side, g = s.cube_gap;
  VoxelGrid grid = make_grid(2 * a + g + 2 * p, a + 2 * p, a + 2 * p, s.spacing_mm);
  LabelMap map(grid, dictionary_for(s.label));
  fill_cube(map, {p, p, p}, a, s.label);
  fill_cube(map, {p + a + g, p, p}, a, s.label);
  GroundTruth t;
  t.label_counts[s.label] = 2 * a * a * a;
  t.component_count = 2;
  LandmarkSet lm;
  lm.add(landmark_at(grid, "left", {p + a / 2, p + a / 2, p + a / 2}));
  lm.add(landmark_at(grid, "right", {p + a + g + a / 2, p + a / 2, p + a / 2}));
  return {std::move(map), std::move(lm), std::move(t)};
}

// A ball of white matter wrapped in a cortical ribbon, with one WMH slice in
// every `toy_wmh_period` slices of deep WM and the four nuclei as small cubes.
Phantom toy(const Spec& s) {
  const std::int64_t R = s.toy_radius, gm = s.toy_gm_thickness;
  require(R >= 12 && gm >= 1 && gm < R - 5, "toy needs radius >= 12 and 1 <= gm_thickness < radius - 5");
  require(s.toy_wmh_period >= 2, "toy WMH period must be >= 2");
  const std::int64_t c = R + s.padding;
  const std::int64_t n = 2 * c + 1;
  VoxelGrid grid = make_grid(n, n, n, s.spacing_mm);
  LabelMap map(grid, default_label_dictionary());

  std::mt19937_64 rng(s.seed);
  const auto draw = [&rng](std::int64_t modulus) {
    return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(modulus));
  };
  const std::int64_t phase = draw(s.toy_wmh_period);

  const std::int64_t inner = R - gm;
  const std::int64_t deep = inner - 2;
  for (std::int64_t z = 0; z < n; ++z)
    for (std::int64_t y = 0; y < n; ++y)
      for (std::int64_t x = 0; x < n; ++x) {
        const std::int64_t r2 = (x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c);
        if (r2 >= R * R) continue;
        if (r2 >= inner * inner) {
          map.set(x, y, z, labels::gm);
        } else if (r2 < deep * deep && (z + phase) % s.toy_wmh_period == 0) {
          map.set(x, y, z, labels::wmh);
        } else {
          map.set(x, y, z, labels::wm);
        }
      }

  const std::int32_t nuclei[4] = {labels::caudate, labels::putamen, labels::globus_pallidus,
                                  labels::thalamus};
  const std::int64_t offsets[4][2] = {{-5, -5}, {5, -5}, {-5, 5}, {5, 5}};
  for (int i = 0; i < 4; ++i) {
    const Index3 corner{c + offsets[i][0] - 1 + draw(3) - 1, c + offsets[i][1] - 1 + draw(3) - 1,
                        c - 1 + draw(3) - 1};
    fill_cube(map, corner, 3, nuclei[i]);
  }

  GroundTruth t;
  t.thickness_mm = static_cast<double>(gm) * s.spacing_mm;
  t.label_counts = count_labels(map);
  t.component_count = 1;

  // Cortical landmarks on a Fibonacci spiral through the middle of the ribbon.
  LandmarkSet lm;
  const auto& names = cortical_roi_names();
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double mid = static_cast<double>(R) - static_cast<double>(gm) / 2.0 - 0.5;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double zf = 1.0 - (static_cast<double>(i) + 0.5) * 2.0 / static_cast<double>(names.size());
    const double rr = std::sqrt(1.0 - zf * zf);
    const double th = golden * static_cast<double>(i);
    const Vec3 idx{static_cast<double>(c) + mid * rr * std::cos(th),
                   static_cast<double>(c) + mid * rr * std::sin(th),
                   static_cast<double>(c) + mid * zf};
    lm.add({names[i], grid.voxel_to_physical(idx)});
  }
  return {std::move(map), std::move(lm), std::move(t)};
}

}  // namespace

Phantom generate(const Spec& spec) {
  require(spec.spacing_mm > 0.0 && std::isfinite(spec.spacing_mm), "spacing must be positive");
  require(spec.padding >= 2, "phantoms need at least 2 voxels of background padding");
  switch (spec.kind) {
    case Kind::slab: return slab(spec);
    case Kind::spherical_shell: return shell(spec);
    case Kind::cube: return cube(spec);
    case Kind::two_cubes: return two_cubes(spec);
    case Kind::multilabel_hemisphere_toy: return toy(spec);
  }
  throw Error("bad-phantom", "unknown phantom kind");
}

nlohmann::json to_json(const Spec& spec, const GroundTruth& truth) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  j["spacing_mm"] = spec.spacing_mm;
  j["padding"] = spec.padding;
  j["seed"] = spec.seed;
  switch (spec.kind) {
    case Kind::slab:
      j["slab_thickness"] = spec.slab_thickness;
      j["slab_extent"] = spec.slab_extent;
      j["label"] = spec.label;
      break;
    case Kind::spherical_shell:
      j["inner_radius"] = spec.inner_radius;
      j["outer_radius"] = spec.outer_radius;
      j["label"] = spec.label;
      break;
    case Kind::cube:
    case Kind::two_cubes:
      j["cube_side"] = spec.cube_side;
      if (spec.kind == Kind::two_cubes) j["cube_gap"] = spec.cube_gap;
      j["label"] = spec.label;
      break;
    case Kind::multilabel_hemisphere_toy:
      j["toy_radius"] = spec.toy_radius;
      j["toy_gm_thickness"] = spec.toy_gm_thickness;
      j["toy_wmh_period"] = spec.toy_wmh_period;
      break;
  }
  nlohmann::json gt;
  if (truth.thickness_mm) gt["thickness_mm"] = *truth.thickness_mm;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [id, n] : truth.label_counts) counts[std::to_string(id)] = n;
  gt["label_counts"] = counts;
  gt["component_count"] = truth.component_count;
  j["ground_truth"] = gt;
  return j;
}

}  // namespace exmorph::phantom
