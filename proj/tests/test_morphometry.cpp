#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <functional>
#include <random>

#include "exmorph/distance.hpp"
#include "exmorph/error.hpp"
#include "exmorph/morphometry.hpp"
#include "exmorph/phantom.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace exmorph;

namespace {

Mask box_mask(std::array<std::int64_t, 3> dims, Vec3 spacing, Index3 lo, Index3 hi) {
  Mask m(VoxelGrid(dims, spacing));
  for (std::int64_t z = lo[2]; z < hi[2]; ++z)
    for (std::int64_t y = lo[1]; y < hi[1]; ++y)
      for (std::int64_t x = lo[0]; x < hi[0]; ++x) m(x, y, z) = 1;
  return m;
}

Mask phantom_mask(const phantom::Spec& spec) {
  const auto p = phantom::generate(spec);
  return p.map.mask_of(spec.label);
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Mask dilate(const Mask& m) {
  Mask out = m;
  const auto& g = m.grid;
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (!m.data[i]) continue;
    const Index3 v = g.index(i);
    for (int axis = 0; axis < 3; ++axis) {
      for (int step : {-1, 1}) {
        Index3 n = v;
        n[axis] += step;
        if (g.contains(n)) out[n] = 1;
      }
    }
  }
  return out;
}

Mask upsample2(const Mask& m) {
  const auto& d = m.grid.dims();
  const Vec3& s = m.grid.spacing();
  Mask out(VoxelGrid({2 * d[0], 2 * d[1], 2 * d[2]}, {s[0] / 2, s[1] / 2, s[2] / 2}));
  for (std::int64_t z = 0; z < 2 * d[2]; ++z)
    for (std::int64_t y = 0; y < 2 * d[1]; ++y)
      for (std::int64_t x = 0; x < 2 * d[0]; ++x) out(x, y, z) = m(x / 2, y / 2, z / 2);
  return out;
}

}  // namespace

TEST_CASE("distance transform examples") {
  SUBCASE("single voxel") {
    Mask m = box_mask({5, 5, 5}, {0.3, 0.3, 0.3}, {2, 2, 2}, {3, 3, 3});
    const auto d = distance_transform(m);
    CHECK(d.distance(2, 2, 2) == 0.3);
    CHECK_FALSE(d.unbounded);
  }
  SUBCASE("five-voxel slab centre plane") {
    Mask m = box_mask({12, 12, 9}, {0.3, 0.3, 0.3}, {0, 0, 2}, {12, 12, 7});
    const auto d = distance_transform(m);
    CHECK(d.distance(6, 6, 4) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(d.distance(6, 6, 4) == oracle::edt(m)[m.grid.linear(6, 6, 4)]);
    CHECK(d.distance(0, 0, 0) == 0.0);
    CHECK(d.distance(6, 6, 8) == 0.0);
  }
  SUBCASE("all foreground is unbounded") {
    Mask m(VoxelGrid({3, 4, 5}, {1, 1, 1}), 1);
    const auto d = distance_transform(m);
    CHECK(d.unbounded);
    CHECK(std::isinf(d.distance.data[7]));
  }
  SUBCASE("all background is zero") {
    Mask m(VoxelGrid({3, 4, 5}, {1, 1, 1}), 0);
    const auto d = distance_transform(m);
    for (double v : d.distance.data) CHECK(v == 0.0);
  }
  SUBCASE("one-voxel grid") {
    Mask m(VoxelGrid({1, 1, 1}, {1, 1, 1}), 0);
    CHECK(distance_transform(m).distance.data[0] == 0.0);
  }
}

TEST_CASE("distance transform equals brute force on random anisotropic masks") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const Mask m = oracle::random_mask(rng, 10, 0.5, 0.98);
    const auto expected = oracle::edt(m);
    const auto got = distance_transform(m);
    if (got.unbounded) continue;
    CHECK(got.distance.data == expected);
  }
}

TEST_CASE("parallel and serial transforms are bit-identical") {
  std::mt19937_64 rng(77);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    for (int trial = 0; trial < 5; ++trial) {
      const Mask m = oracle::random_mask(rng, 24, 0.7, 0.99);
      CHECK(distance_transform(m).distance.data == distance_transform_serial(m).distance.data);
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("thickness on phantoms") {
  SUBCASE("five-voxel slab at 0.3 mm") {
    phantom::Spec s;
    s.kind = phantom::Kind::slab;
    const auto p = phantom::generate(s);
    const Mask gm = p.map.mask_of(s.label);
    const auto r = inscribed_sphere_thickness(gm, *p.landmarks.find("mid"));
    CHECK(std::abs(r.thickness_mm - 1.5) <= 0.3);
    CHECK_FALSE(r.snapped);
    CHECK_FALSE(r.thin_region);
    CHECK(r.thickness_mm == 2.0 * r.sphere_radius_mm);
    CHECK(r.thickness_mm == doctest::Approx(oracle::inscribed_diameter(gm, p.landmarks.find("mid")->point)));
    const Vec3 c = gm.grid.physical_to_voxel(r.sphere_center);
    CHECK(gm(std::llround(c[0]), std::llround(c[1]), std::llround(c[2])) == 1);
  }
  SUBCASE("shell 10..14 voxels at 0.3 mm") {
    phantom::Spec s;
    s.kind = phantom::Kind::spherical_shell;
    const auto p = phantom::generate(s);
    const Mask gm = p.map.mask_of(s.label);
    const Landmark& lm = *p.landmarks.find("mid");
    const auto r = inscribed_sphere_thickness(gm, lm);
    CHECK(std::abs(r.thickness_mm - 1.2) <= 0.3 + 1e-9);
    CHECK(r.thickness_mm == doctest::Approx(oracle::inscribed_diameter(gm, lm.point)));
    const Vec3& a = r.sphere_center;
    const double dist = std::sqrt((a[0] - lm.point[0]) * (a[0] - lm.point[0]) +
                                  (a[1] - lm.point[1]) * (a[1] - lm.point[1]) +
                                  (a[2] - lm.point[2]) * (a[2] - lm.point[2]));
    CHECK(dist <= r.sphere_radius_mm + 1e-6);
  }
}

TEST_CASE("thickness matches the brute-force inscribed sphere on random blobs") {
  std::mt19937_64 rng(9);
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Mask m = oracle::random_mask(rng, 9, 0.6, 0.9, trial % 2 == 0);
    const auto fg = oracle::voxels_where(m, true);
    if (fg.empty() || oracle::voxels_where(m, false).empty()) continue;
    const Index3 pick = fg[rng() % fg.size()];
    const Landmark lm{"x", m.grid.voxel_to_physical(pick)};
    const auto r = inscribed_sphere_thickness(m, lm, {100.0, 1.0});
    const double expected = oracle::inscribed_diameter(m, lm.point);
    if (expected < 0) {
      CHECK(r.thin_region);
    } else {
      CHECK_FALSE(r.thin_region);
      CHECK(r.thickness_mm == doctest::Approx(expected).epsilon(1e-12));
      ++compared;
    }
  }
  CHECK(compared > 10);
}

TEST_CASE("thickness error paths and snapping") {
  Mask m = box_mask({20, 20, 20}, {0.3, 0.3, 0.3}, {2, 2, 2}, {18, 18, 7});
  SUBCASE("landmark far from foreground") {
    const Landmark far{"far", m.grid.voxel_to_physical(Vec3{10, 10, 7 + 5.0 / 0.3})};
    CHECK(error_code([&] { inscribed_sphere_thickness(m, far); }) == "landmark-outside");
    const Landmark outside_grid{"off", {100, 100, 100}};
    CHECK(error_code([&] { inscribed_sphere_thickness(m, outside_grid); }) == "landmark-outside");
  }
  SUBCASE("landmark just outside snaps to the nearest voxel") {
    const Landmark near{"near", m.grid.voxel_to_physical(Vec3{10, 10, 8})};
    const auto r = inscribed_sphere_thickness(m, near);
    CHECK(r.snapped);
    CHECK(r.snap_distance_mm == doctest::Approx(0.6));
    CHECK(std::abs(r.thickness_mm - 1.5) <= 0.3);
  }
  SUBCASE("one-voxel sheet is a thin region") {
    Mask sheet = box_mask({9, 9, 9}, {0.3, 0.3, 0.3}, {2, 2, 4}, {7, 7, 5});
    const auto r = inscribed_sphere_thickness(sheet, {"s", sheet.grid.voxel_to_physical(Index3{4, 4, 4})});
    // r = D - s/2 = 0.15 > 0, the landmark voxel covers itself.
    CHECK(r.thickness_mm == doctest::Approx(0.3));
    CHECK(r.thickness_mm <= 0.3 + 1e-12);
  }
  SUBCASE("unbounded region") {
    Mask all(VoxelGrid({4, 4, 4}, {1, 1, 1}), 1);
    CHECK(error_code([&] { inscribed_sphere_thickness(all, {"a", {1, 1, 1}}); }) == "unbounded-region");
  }
  SUBCASE("bad options") {
    CHECK_THROWS_AS(inscribed_sphere_thickness(m, {"x", {3, 3, 1}}, {0.0, 1.0}), Error);
  }
}

TEST_CASE("thickness never decreases under dilation") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    Mask m = oracle::random_mask(rng, 12, 0.4, 0.8, false);
    // keep a background frame so dilation stays bounded
    const auto& d = m.grid.dims();
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      const Index3 v = m.grid.index(i);
      if (v[0] < 2 || v[1] < 2 || v[2] < 2 || v[0] >= d[0] - 2 || v[1] >= d[1] - 2 || v[2] >= d[2] - 2)
        m.data[i] = 0;
    }
    const auto fg = oracle::voxels_where(m, true);
    if (fg.empty()) continue;
    const Landmark lm{"x", m.grid.voxel_to_physical(fg[rng() % fg.size()])};
    const double before = inscribed_sphere_thickness(m, lm).thickness_mm;
    const double after = inscribed_sphere_thickness(dilate(m), lm).thickness_mm;
    CHECK(after >= before);
  }
}

TEST_CASE("resolution consistency under 2x upsampling") {
  for (std::int64_t k = 3; k <= 8; ++k) {
    phantom::Spec s;
    s.kind = phantom::Kind::slab;
    s.slab_thickness = k;
    s.slab_extent = 10;
    const auto p = phantom::generate(s);
    const Mask coarse = p.map.mask_of(s.label);
    const Landmark& lm = *p.landmarks.find("mid");
    const double a = inscribed_sphere_thickness(coarse, lm).thickness_mm;
    const double b = inscribed_sphere_thickness(upsample2(coarse), lm).thickness_mm;
    CHECK(std::abs(a - b) <= s.spacing_mm / 2 + 1e-9);
  }
  for (std::int64_t w = 2; w <= 4; ++w) {
    phantom::Spec s;
    s.kind = phantom::Kind::spherical_shell;
    s.inner_radius = 6;
    s.outer_radius = 6 + w;
    const auto p = phantom::generate(s);
    const Mask coarse = p.map.mask_of(s.label);
    const Landmark& lm = *p.landmarks.find("mid");
    const double a = inscribed_sphere_thickness(coarse, lm).thickness_mm;
    const double b = inscribed_sphere_thickness(upsample2(coarse), lm).thickness_mm;
    CHECK(std::abs(a - b) <= s.spacing_mm / 2 + 1e-9);
  }
}

TEST_CASE("region volumes") {
  phantom::Spec s;
  s.kind = phantom::Kind::cube;
  s.label = labels::caudate;
  const auto p = phantom::generate(s);
  SUBCASE("10^3 cube at 0.3 mm") {
    const auto v = region_volume(p.map, labels::caudate);
    CHECK(v.voxel_count == 1000);
    CHECK(v.volume_mm3 == doctest::Approx(27.0).epsilon(1e-12));
    CHECK(v.label == "caudate");
    CHECK_FALSE(v.icv_adjusted);
  }
  SUBCASE("absent label") {
    const auto v = region_volume(p.map, labels::thalamus);
    CHECK(v.voxel_count == 0);
    CHECK(v.volume_mm3 == 0.0);
  }
  SUBCASE("icv adjustment") {
    const auto v = region_volume(p.map, labels::caudate, 1350.0);
    REQUIRE(v.icv_adjusted);
    CHECK(*v.icv_adjusted == v.volume_mm3 / 1350.0);
    CHECK(error_code([&] { region_volume(p.map, labels::caudate, -1.0); }) == "bad-icv");
  }
  SUBCASE("unknown label") {
    CHECK(error_code([&] { region_volume(p.map, 99); }) == "unknown-label");
  }
  SUBCASE("anisotropic spacing") {
    LabelMap m(VoxelGrid({4, 4, 4}, {0.5, 0.25, 2.0}), default_label_dictionary());
    m.set(1, 1, 1, labels::gm);
    m.set(2, 1, 1, labels::gm);
    CHECK(region_volume(m, labels::gm).volume_mm3 == 0.5);
  }
}

TEST_CASE("shell voxel count equals independent enumeration") {
  for (std::int64_t inner : {3, 7, 10}) {
    for (std::int64_t width : {2, 4, 6}) {
      phantom::Spec s;
      s.kind = phantom::Kind::spherical_shell;
      s.inner_radius = inner;
      s.outer_radius = inner + width;
      const auto p = phantom::generate(s);
      // Centre-radius test in floating point, independent of the generator's integer test.
      std::int64_t expected = 0;
      const double c = static_cast<double>(s.outer_radius + s.padding);
      const auto& d = p.map.grid().dims();
      for (std::int64_t z = 0; z < d[2]; ++z)
        for (std::int64_t y = 0; y < d[1]; ++y)
          for (std::int64_t x = 0; x < d[0]; ++x) {
            const double r = std::sqrt((x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c));
            expected += r >= static_cast<double>(inner) && r < static_cast<double>(inner + width);
          }
      CHECK(region_volume(p.map, s.label).voxel_count == expected);
      CHECK(p.truth.label_counts.at(s.label) == expected);
    }
  }
}

TEST_CASE("volume additivity over disjoint labels") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMap m(VoxelGrid({9, 8, 7}, {0.3, 0.7, 1.1}), default_label_dictionary());
    LabelMap merged(m.grid(), default_label_dictionary());
    for (std::int64_t z = 0; z < 7; ++z)
      for (std::int64_t y = 0; y < 8; ++y)
        for (std::int64_t x = 0; x < 9; ++x) {
          const auto l = static_cast<std::int32_t>(rng() % 3);
          m.set(x, y, z, l);
          merged.set(x, y, z, l == 0 ? 0 : labels::gm);
        }
    const auto a = region_volume(m, 1), b = region_volume(m, 2), u = region_volume(merged, labels::gm);
    CHECK(a.voxel_count + b.voxel_count == u.voxel_count);
    CHECK(std::abs(a.volume_mm3 + b.volume_mm3 - u.volume_mm3) <= 1e-12 * u.volume_mm3);
  }
}

TEST_CASE("normalized WMH volume") {
  LabelMap m(VoxelGrid({20, 20, 10}, {0.3, 0.3, 0.3}), default_label_dictionary());
  for (std::int64_t i = 0; i < 1000; ++i) m.set(i % 20, (i / 20) % 20, i / 400, labels::wm);
  SUBCASE("empty WMH") { CHECK(normalized_wmh_volume(m) == 0.0); }
  SUBCASE("100 over 1000") {
    for (std::int64_t i = 0; i < 100; ++i) m.set(i % 20, (i / 20) % 20, 5 + i / 400, labels::wmh);
    CHECK(normalized_wmh_volume(m) == doctest::Approx(0.1).epsilon(1e-15));
  }
  SUBCASE("empty WM") {
    LabelMap empty(m.grid(), default_label_dictionary());
    CHECK(error_code([&] { normalized_wmh_volume(empty); }) == "undefined-normalization");
  }
  SUBCASE("toy phantom with interleaved WMH slices") {
    phantom::Spec s;
    s.kind = phantom::Kind::multilabel_hemisphere_toy;
    s.toy_radius = 14;
    s.seed = 3;
    const auto p = phantom::generate(s);
    std::int64_t wm = 0, wmh = 0;
    for (auto v : p.map.labels()) {
      wm += v == labels::wm;
      wmh += v == labels::wmh;
    }
    CHECK(wmh > 0);
    CHECK(normalized_wmh_volume(p.map) == static_cast<double>(wmh) / static_cast<double>(wm));
  }
}

TEST_CASE("connected components") {
  SUBCASE("two disjoint cubes") {
    phantom::Spec s;
    s.kind = phantom::Kind::two_cubes;
    s.cube_side = 4;
    const Mask m = phantom_mask(s);
    const auto c = connected_components(m);
    CHECK(c.sizes == std::vector<std::int64_t>{64, 64});
    // equal sizes: the cube with the smaller minimum index is first
    CHECK(c.labels(2, 2, 2) == 1);
    CHECK(c.labels(10, 2, 2) == 2);
  }
  SUBCASE("corner contact depends on connectivity") {
    Mask m = box_mask({8, 8, 8}, {1, 1, 1}, {1, 1, 1}, {3, 3, 3});
    for (std::int64_t z = 3; z < 5; ++z)
      for (std::int64_t y = 3; y < 5; ++y)
        for (std::int64_t x = 3; x < 5; ++x) m(x, y, z) = 1;
    CHECK(connected_components(m, Connectivity::vertex).sizes.size() == 1);
    CHECK(connected_components(m, Connectivity::edge).sizes.size() == 2);
    CHECK(connected_components(m, Connectivity::face).sizes.size() == 2);
  }
  SUBCASE("edge contact") {
    Mask m(VoxelGrid({4, 4, 4}, {1, 1, 1}));
    m(1, 1, 1) = 1;
    m(2, 2, 1) = 1;
    CHECK(connected_components(m, Connectivity::edge).sizes.size() == 1);
    CHECK(connected_components(m, Connectivity::face).sizes.size() == 2);
  }
  SUBCASE("largest component") {
    Mask m = box_mask({12, 6, 6}, {1, 1, 1}, {1, 1, 1}, {3, 3, 3});
    for (std::int64_t x = 5; x < 10; ++x) m(x, 2, 2) = 1;
    const Mask big = largest_component(m);
    std::int64_t n = 0;
    for (auto v : big.data) n += v;
    CHECK(n == 8);
    CHECK(big(1, 1, 1) == 1);
    CHECK(big(6, 2, 2) == 0);
  }
  SUBCASE("empty mask") {
    Mask m(VoxelGrid({3, 3, 3}, {1, 1, 1}));
    CHECK(connected_components(m).sizes.empty());
    CHECK(largest_component(m).data == m.data);
  }
}

TEST_CASE("component sizes equal flood fill on random masks") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 6; ++trial) {
    Mask m(VoxelGrid({16, 16, 16}, {1, 1, 1}));
    std::bernoulli_distribution on(0.15 + 0.05 * trial);
    for (auto& v : m.data) v = on(rng);
    for (int conn : {6, 18, 26}) {
      const auto c = connected_components(m, static_cast<Connectivity>(conn));
      CHECK(c.sizes == oracle::component_sizes(m, conn));
      // labels agree with sizes and order
      std::vector<std::int64_t> counted(c.sizes.size(), 0);
      for (auto l : c.labels.data) {
        if (l > 0) ++counted[static_cast<std::size_t>(l - 1)];
      }
      CHECK(counted == c.sizes);
    }
  }
}

TEST_CASE("ICV imputation") {
  CHECK(impute_icv({1000.0, std::nullopt, 1400.0}) == std::vector<double>{1000, 1200, 1400});
  CHECK(impute_icv({1.0, 2.0}) == std::vector<double>{1, 2});
  CHECK(error_code([] { impute_icv({std::nullopt, std::nullopt}); }) == "no-icv");

  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(1.1e6, 1.6e6);
  std::vector<std::optional<double>> cohort;
  double sum = 0;
  for (int i = 0; i < 27; ++i) {
    const double v = std::round(u(rng));
    sum += v;
    cohort.push_back(v);
  }
  for (int i = 0; i < 10; ++i) cohort.insert(cohort.begin() + 3 * i, std::nullopt);
  const auto filled = impute_icv(cohort);
  const double mean = sum / 27.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (cohort[i]) CHECK(filled[i] == *cohort[i]);
    else CHECK(filled[i] == doctest::Approx(mean).epsilon(1e-14));
  }
}

TEST_CASE("landmark sets") {
  support::TempDir tmp("lm");
  LandmarkSet set;
  set.add({"visual", {1.5, -2.25, 3}});
  set.add({"motor", {0.1, 0.2, 0.3}});
  CHECK_THROWS_AS(set.add({"visual", {0, 0, 0}}), Error);
  CHECK_THROWS_AS(set.add({"nan", {std::nan(""), 0, 0}}), Error);
  write_landmarks(set, tmp / "lm.csv");
  const auto back = read_landmarks(tmp / "lm.csv");
  REQUIRE(back.size() == 2);
  CHECK(back.find("visual")->point == Vec3{1.5, -2.25, 3});
  CHECK(back.find("absent") == nullptr);
  CHECK(cortical_roi_names().size() == 16);
}
