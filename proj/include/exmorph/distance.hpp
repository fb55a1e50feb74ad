#pragma once

#include "exmorph/volume.hpp"

namespace exmorph {

/// Exact Euclidean distance transform in physical millimetres.
///
/// Every foreground voxel (mask != 0) receives the centre-to-centre distance to
/// the nearest background voxel; background voxels receive 0. The separable
/// lower-envelope algorithm runs one parabola pass per axis. Squared distances
/// accumulate as ((dx*sx)^2 + (dy*sy)^2) + (dz*sz)^2, and because rounding is
/// monotone the result equals a brute-force minimum evaluated in that order.
///
/// A mask with no background voxel has no finite answer: every value is +inf
/// and `unbounded` is set.
struct DistanceField {
  Field<double> distance;
  bool unbounded = false;
};

// OpenMP across scanlines. Output is bit-identical for any thread count.
DistanceField distance_transform(const Mask& mask);

// Single-threaded reference of the same algorithm, kept for tests and benchmarks.
DistanceField distance_transform_serial(const Mask& mask);

// Squared physical length of an integer voxel offset, in the accumulation order
// used by the transform. Shared by oracles that must match it bit for bit.
inline double squared_offset_mm(std::int64_t dx, std::int64_t dy, std::int64_t dz,
                                const Vec3& spacing) noexcept {
  const double ax = static_cast<double>(dx) * spacing[0];
  const double ay = static_cast<double>(dy) * spacing[1];
  const double az = static_cast<double>(dz) * spacing[2];
  return (ax * ax + ay * ay) + az * az;
}

}  // namespace exmorph
