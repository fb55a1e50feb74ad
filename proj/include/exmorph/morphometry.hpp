#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "exmorph/distance.hpp"
#include "exmorph/volume.hpp"

namespace exmorph {

struct Landmark {
  std::string name;
  Vec3 point{};  // physical mm, in the volume's affine frame
};

/// Named landmarks with unique names and finite coordinates.
class LandmarkSet {
 public:
  LandmarkSet() = default;
  explicit LandmarkSet(std::vector<Landmark> entries);

  void add(Landmark landmark);
  const std::vector<Landmark>& entries() const noexcept { return entries_; }
  const Landmark* find(const std::string& name) const noexcept;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Landmark> entries_;
};

// The sixteen cortical regions with a thickness landmark.
const std::vector<std::string>& cortical_roi_names();

// CSV with header `name,x_mm,y_mm,z_mm`.
LandmarkSet read_landmarks(const std::filesystem::path& path);
void write_landmarks(const LandmarkSet& set, const std::filesystem::path& path);

struct ThicknessOptions {
  double search_radius_mm = 20.0;
  double snap_tolerance_mm = 1.0;
};

struct ThicknessResult {
  std::string landmark;
  double thickness_mm = 0.0;
  Vec3 sphere_center{};
  double sphere_radius_mm = 0.0;
  bool snapped = false;
  double snap_distance_mm = 0.0;
  bool thin_region = false;
};

/// Diameter of the largest inscribed sphere that contains the landmark.
///
/// Radii are half-voxel corrected: r(v) = max(D(v) - s/2, 0) with D the EDT and
/// s the mean spacing. Centres range over foreground voxels within the search
/// radius whose sphere covers the landmark. A landmark on a background voxel is
/// first snapped to the nearest foreground voxel centre within the snap
/// tolerance; otherwise Error("landmark-outside").
ThicknessResult inscribed_sphere_thickness(const Mask& gm, const Landmark& landmark,
                                           const ThicknessOptions& options = {});

// Same, reusing a transform of `gm` across landmarks.
ThicknessResult inscribed_sphere_thickness(const Mask& gm, const DistanceField& edt,
                                           const Landmark& landmark,
                                           const ThicknessOptions& options = {});

struct VolumeResult {
  std::string label;
  std::int64_t voxel_count = 0;
  double volume_mm3 = 0.0;
  std::optional<double> icv_mm3;
  std::optional<double> icv_adjusted;
};

VolumeResult region_volume(const LabelMap& map, std::int32_t label_id,
                           std::optional<double> icv_mm3 = std::nullopt);

// WMH volume over WM volume. Error("undefined-normalization") when WM is empty.
double normalized_wmh_volume(const LabelMap& map, std::int32_t wmh_label = labels::wmh,
                             std::int32_t wm_label = labels::wm);

enum class Connectivity { face = 6, edge = 18, vertex = 26 };

struct Components {
  Field<std::int32_t> labels;       // 0 background, 1..K by decreasing size
  std::vector<std::int64_t> sizes;  // sizes[k-1] is the size of component k
};

// Ties in size are ordered by smallest minimum linear voxel index.
Components connected_components(const Mask& mask, Connectivity connectivity = Connectivity::vertex);
Mask largest_component(const Mask& mask, Connectivity connectivity = Connectivity::vertex);

// Missing entries become the mean of present ones.
std::vector<double> impute_icv(const std::vector<std::optional<double>>& icv);

}  // namespace exmorph
