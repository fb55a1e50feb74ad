#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "exmorph/morphometry.hpp"
#include "exmorph/volume.hpp"

namespace exmorph::phantom {

enum class Kind { slab, spherical_shell, cube, two_cubes, multilabel_hemisphere_toy };

Kind parse_kind(const std::string& text);
const char* to_string(Kind k) noexcept;

/// Geometric parameters are in voxels. Every phantom keeps at least two
/// background voxels between the foreground and the grid edge.
struct Spec {
  Kind kind = Kind::slab;
  double spacing_mm = 0.3;
  std::int64_t padding = 2;
  std::int32_t label = labels::gm;  // foreground label for single-label kinds

  std::int64_t slab_thickness = 5;
  std::int64_t slab_extent = 24;  // in-plane size of the slab

  std::int64_t inner_radius = 10;  // shell: inner <= r < outer
  std::int64_t outer_radius = 14;

  std::int64_t cube_side = 10;
  std::int64_t cube_gap = 4;  // background voxels between the two cubes along x

  std::int64_t toy_radius = 20;
  std::int64_t toy_gm_thickness = 4;
  std::int64_t toy_wmh_period = 4;  // one WMH slice every `period` slices of WM

  std::uint64_t seed = 0;
};

struct GroundTruth {
  std::optional<double> thickness_mm;
  std::map<std::int32_t, std::int64_t> label_counts;
  std::int64_t component_count = 0;
};

struct Phantom {
  LabelMap map;
  LandmarkSet landmarks;
  GroundTruth truth;
};

// Deterministic: identical specs give bit-identical phantoms on every platform.
Phantom generate(const Spec& spec);

nlohmann::json to_json(const Spec& spec, const GroundTruth& truth);

}  // namespace exmorph::phantom
