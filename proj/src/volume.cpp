#include "exmorph/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "exmorph/error.hpp"

namespace exmorph {

namespace {

Affine invert(const Affine& a) {
  const double m00 = a[0][0], m01 = a[0][1], m02 = a[0][2];
  const double m10 = a[1][0], m11 = a[1][1], m12 = a[1][2];
  const double m20 = a[2][0], m21 = a[2][1], m22 = a[2][2];
  const double c00 = m11 * m22 - m12 * m21;
  const double c01 = m12 * m20 - m10 * m22;
  const double c02 = m10 * m21 - m11 * m20;
  const double det = m00 * c00 + m01 * c01 + m02 * c02;
  const double scale = std::max({std::abs(m00), std::abs(m11), std::abs(m22), 1e-300});
  if (!std::isfinite(det) || std::abs(det) <= 1e-12 * scale * scale * scale) {
    throw Error("bad-geometry", "affine is not invertible");
  }
  const double inv = 1.0 / det;
  Affine r{};
  r[0][0] = c00 * inv;
  r[0][1] = (m02 * m21 - m01 * m22) * inv;
  r[0][2] = (m01 * m12 - m02 * m11) * inv;
  r[1][0] = c01 * inv;
  r[1][1] = (m00 * m22 - m02 * m20) * inv;
  r[1][2] = (m02 * m10 - m00 * m12) * inv;
  r[2][0] = c02 * inv;
  r[2][1] = (m01 * m20 - m00 * m21) * inv;
  r[2][2] = (m00 * m11 - m01 * m10) * inv;
  for (int i = 0; i < 3; ++i) {
    r[i][3] = -(r[i][0] * a[0][3] + r[i][1] * a[1][3] + r[i][2] * a[2][3]);
  }
  r[3] = {0.0, 0.0, 0.0, 1.0};
  return r;
}

Vec3 apply(const Affine& a, const Vec3& p) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = a[i][0] * p[0] + a[i][1] * p[1] + a[i][2] * p[2] + a[i][3];
  }
  return out;
}

}  // namespace

Affine identity_affine() { return diagonal_affine({1.0, 1.0, 1.0}); }

Affine diagonal_affine(const Vec3& spacing, const Vec3& origin) {
  Affine a{};
  for (int i = 0; i < 3; ++i) {
    a[i][i] = spacing[i];
    a[i][3] = origin[i];
  }
  a[3][3] = 1.0;
  return a;
}

VoxelGrid::VoxelGrid(std::array<std::int64_t, 3> dims, Vec3 spacing)
    : VoxelGrid(dims, spacing, diagonal_affine(spacing)) {}

VoxelGrid::VoxelGrid(std::array<std::int64_t, 3> dims, Vec3 spacing, const Affine& affine)
    : dims_(dims), spacing_(spacing), affine_(affine) {
  for (int i = 0; i < 3; ++i) {
    if (dims_[i] < 1) throw Error("bad-geometry", "grid dimensions must be >= 1");
    if (!(spacing_[i] > 0.0) || !std::isfinite(spacing_[i])) {
      throw Error("bad-geometry", "voxel spacing must be positive and finite");
    }
  }
  for (int c = 0; c < 3; ++c) {
    const double norm = std::sqrt(affine_[0][c] * affine_[0][c] + affine_[1][c] * affine_[1][c] +
                                  affine_[2][c] * affine_[2][c]);
    if (std::abs(norm - spacing_[c]) > 1e-4) {
      throw Error("bad-geometry", "affine column " + std::to_string(c) + " norm " +
                                      std::to_string(norm) + " disagrees with spacing " +
                                      std::to_string(spacing_[c]));
    }
  }
  inverse_ = invert(affine_);
}

Index3 VoxelGrid::index(std::size_t linear) const noexcept {
  const auto l = static_cast<std::int64_t>(linear);
  const std::int64_t x = l % dims_[0];
  const std::int64_t yz = l / dims_[0];
  return {x, yz % dims_[1], yz / dims_[1]};
}

Vec3 VoxelGrid::voxel_to_physical(const Index3& index) const noexcept {
  return apply(affine_, {static_cast<double>(index[0]), static_cast<double>(index[1]),
                         static_cast<double>(index[2])});
}

Vec3 VoxelGrid::voxel_to_physical(const Vec3& continuous_index) const noexcept {
  return apply(affine_, continuous_index);
}

Vec3 VoxelGrid::physical_to_voxel(const Vec3& point) const noexcept {
  return apply(inverse_, point);
}

bool VoxelGrid::same_geometry(const VoxelGrid& other, double tolerance) const noexcept {
  if (dims_ != other.dims_) return false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (std::abs(affine_[i][j] - other.affine_[i][j]) > tolerance) return false;
    }
  }
  return true;
}

LabelDictionary default_label_dictionary() {
  return {{labels::gm, "GM"},
          {labels::wm, "WM"},
          {labels::wmh, "WMH"},
          {labels::caudate, "caudate"},
          {labels::putamen, "putamen"},
          {labels::globus_pallidus, "globus_pallidus"},
          {labels::thalamus, "thalamus"}};
}

LabelMap::LabelMap(VoxelGrid grid, LabelDictionary dictionary)
    : LabelMap(grid, std::vector<std::int32_t>(grid.voxel_count(), 0), std::move(dictionary)) {}

LabelMap::LabelMap(VoxelGrid grid, std::vector<std::int32_t> labels, LabelDictionary dictionary)
    : grid_(std::move(grid)), labels_(std::move(labels)), dictionary_(std::move(dictionary)) {
  if (labels_.size() != grid_.voxel_count()) {
    throw Error("bad-geometry", "label data length does not match grid");
  }
  dictionary_.erase(0);
  std::vector<bool> seen;
  for (const std::int32_t v : labels_) {
    if (v < 0) throw Error("bad-label", "negative label id " + std::to_string(v));
    if (v == 0) continue;
    if (static_cast<std::size_t>(v) >= seen.size()) seen.resize(static_cast<std::size_t>(v) + 1);
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = true;
    if (!dictionary_.contains(v)) {
      throw Error("bad-label", "label id " + std::to_string(v) + " missing from dictionary");
    }
  }
}

void LabelMap::set(std::int64_t x, std::int64_t y, std::int64_t z, std::int32_t label) {
  if (label < 0 || (label != 0 && !dictionary_.contains(label))) {
    throw Error("bad-label", "label id " + std::to_string(label) + " missing from dictionary");
  }
  labels_[grid_.linear(x, y, z)] = label;
}

std::int32_t LabelMap::max_label() const noexcept {
  return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

Mask LabelMap::mask_of(std::int32_t label) const {
  Mask m(grid_);
  for (std::size_t i = 0; i < labels_.size(); ++i) m.data[i] = labels_[i] == label ? 1 : 0;
  return m;
}

std::int32_t LabelMap::id_of(const std::string& name) const {
  for (const auto& [id, n] : dictionary_) {
    if (n == name) return id;
  }
  throw Error("unknown-label", "label '" + name + "' not in dictionary");
}

}  // namespace exmorph
