#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "exmorph/error.hpp"

namespace exmorph {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<std::int64_t, 3>;
using Affine = std::array<std::array<double, 4>, 4>;

Affine identity_affine();
Affine diagonal_affine(const Vec3& spacing, const Vec3& origin = {0.0, 0.0, 0.0});

/// Voxel lattice geometry: dimensions, spacing in mm and the voxel->mm affine.
///
/// The constructor enforces the invariants: positive dims and spacing, an
/// invertible affine whose 3x3 column norms equal the spacing within 1e-4 mm.
class VoxelGrid {
 public:
  VoxelGrid(std::array<std::int64_t, 3> dims, Vec3 spacing);
  VoxelGrid(std::array<std::int64_t, 3> dims, Vec3 spacing, const Affine& affine);

  const std::array<std::int64_t, 3>& dims() const noexcept { return dims_; }
  const Vec3& spacing() const noexcept { return spacing_; }
  const Affine& affine() const noexcept { return affine_; }
  const Affine& inverse_affine() const noexcept { return inverse_; }

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  }
  double mean_spacing() const noexcept { return (spacing_[0] + spacing_[1] + spacing_[2]) / 3.0; }
  double voxel_volume() const noexcept { return spacing_[0] * spacing_[1] * spacing_[2]; }

  // x-fastest linear index.
  std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return static_cast<std::size_t>(x + dims_[0] * (y + dims_[1] * z));
  }
  std::size_t linear(const Index3& i) const noexcept { return linear(i[0], i[1], i[2]); }
  Index3 index(std::size_t linear) const noexcept;
  bool contains(const Index3& i) const noexcept {
    return i[0] >= 0 && i[1] >= 0 && i[2] >= 0 && i[0] < dims_[0] && i[1] < dims_[1] &&
           i[2] < dims_[2];
  }

  Vec3 voxel_to_physical(const Index3& index) const noexcept;
  Vec3 voxel_to_physical(const Vec3& continuous_index) const noexcept;
  Vec3 physical_to_voxel(const Vec3& point) const noexcept;

  bool same_geometry(const VoxelGrid& other, double tolerance = 1e-6) const noexcept;

 private:
  std::array<std::int64_t, 3> dims_;
  Vec3 spacing_;
  Affine affine_;
  Affine inverse_;
};

template <typename T>
struct Field {
  VoxelGrid grid;
  std::vector<T> data;

  explicit Field(VoxelGrid g, T fill = T{}) : grid(std::move(g)), data(grid.voxel_count(), fill) {}
  Field(VoxelGrid g, std::vector<T> values) : grid(std::move(g)), data(std::move(values)) {
    if (data.size() != grid.voxel_count()) {
      throw Error("bad-geometry", "data length " + std::to_string(data.size()) +
                                      " does not match grid of " +
                                      std::to_string(grid.voxel_count()) + " voxels");
    }
  }

  T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) { return data[grid.linear(x, y, z)]; }
  const T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data[grid.linear(x, y, z)];
  }
  T& operator[](const Index3& i) { return data[grid.linear(i)]; }
  const T& operator[](const Index3& i) const { return data[grid.linear(i)]; }
};

using ImageVolume = Field<double>;
using Mask = Field<std::uint8_t>;

using LabelDictionary = std::map<std::int32_t, std::string>;

/// The seven-class scheme used throughout: cortical GM, WM, WMH and the four
/// subcortical nuclei. Label 0 is background.
namespace labels {
inline constexpr std::int32_t gm = 1;
inline constexpr std::int32_t wm = 2;
inline constexpr std::int32_t wmh = 3;
inline constexpr std::int32_t caudate = 4;
inline constexpr std::int32_t putamen = 5;
inline constexpr std::int32_t globus_pallidus = 6;
inline constexpr std::int32_t thalamus = 7;
}  // namespace labels

LabelDictionary default_label_dictionary();

class LabelMap {
 public:
  LabelMap(VoxelGrid grid, std::vector<std::int32_t> labels, LabelDictionary dictionary);
  LabelMap(VoxelGrid grid, LabelDictionary dictionary);

  const VoxelGrid& grid() const noexcept { return grid_; }
  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }
  const LabelDictionary& dictionary() const noexcept { return dictionary_; }

  std::int32_t at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return labels_[grid_.linear(x, y, z)];
  }
  // Writes must keep the dictionary invariant; unknown ids throw.
  void set(std::int64_t x, std::int64_t y, std::int64_t z, std::int32_t label);

  std::int32_t max_label() const noexcept;
  Mask mask_of(std::int32_t label) const;
  std::int32_t id_of(const std::string& name) const;

 private:
  VoxelGrid grid_;
  std::vector<std::int32_t> labels_;
  LabelDictionary dictionary_;
};

}  // namespace exmorph
