#include "exmorph/distance.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <vector>

namespace exmorph {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// First pass: squared distance along one x-line to the nearest background voxel.
void binary_line(const std::uint8_t* mask, double* out, std::int64_t n, double spacing) {
  std::int64_t last = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (mask[q] == 0) last = q;
    if (last < 0) {
      out[q] = inf;
    } else {
      const double d = static_cast<double>(q - last) * spacing;
      out[q] = d * d;
    }
  }
  last = -1;
  for (std::int64_t q = n - 1; q >= 0; --q) {
    if (mask[q] == 0) last = q;
    if (last >= 0) {
      const double d = static_cast<double>(last - q) * spacing;
      const double sq = d * d;
      if (sq < out[q]) out[q] = sq;
    }
  }
}

struct Scratch {
  std::vector<std::int64_t> vertex;
  std::vector<double> boundary;
  std::vector<double> line_in;
  std::vector<double> line_out;

  explicit Scratch(std::int64_t n)
      : vertex(static_cast<std::size_t>(n)),
        boundary(static_cast<std::size_t>(n) + 1),
        line_in(static_cast<std::size_t>(n)),
        line_out(static_cast<std::size_t>(n)) {}
};

// Lower envelope of parabolas f(p) + ((q - p) * s)^2 over one line.
void envelope_line(const double* f, double* out, std::int64_t n, double s, Scratch& scratch) {
  std::int64_t* v = scratch.vertex.data();
  double* z = scratch.boundary.data();
  const double s2 = s * s;
  std::int64_t k = -1;
  for (std::int64_t p = 0; p < n; ++p) {
    if (f[p] == inf) continue;
    const double fp = f[p] + s2 * static_cast<double>(p) * static_cast<double>(p);
    while (k >= 0) {
      const std::int64_t u = v[k];
      const double fu = f[u] + s2 * static_cast<double>(u) * static_cast<double>(u);
      const double cross = (fp - fu) / (2.0 * s2 * static_cast<double>(p - u));
      if (cross <= z[k]) {
        --k;
      } else {
        ++k;
        v[k] = p;
        z[k] = cross;
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = p;
      z[0] = -inf;
    }
  }
  if (k < 0) {
    for (std::int64_t q = 0; q < n; ++q) out[q] = inf;
    return;
  }
  const std::int64_t m = k + 1;
  auto value = [&](std::int64_t j, std::int64_t q) {
    const double d = static_cast<double>(q - v[j]) * s;
    return f[v[j]] + d * d;
  };
  // Walk the envelope comparing exact values so the selected minimum matches a
  // direct evaluation even where the rounded crossing points are off by an ulp.
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    double best = value(j, q);
    while (j + 1 < m) {
      const double next = value(j + 1, q);
      if (next > best) break;
      best = next;
      ++j;
    }
    out[q] = best;
  }
}

template <bool Parallel>
DistanceField run(const Mask& mask) {
  const auto& dims = mask.grid.dims();
  const Vec3& sp = mask.grid.spacing();
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  Field<double> sq(mask.grid, 0.0);
  double* data = sq.data.data();
  const std::uint8_t* m = mask.data.data();

  bool any_background = false;
  for (const std::uint8_t v : mask.data) {
    if (v == 0) {
      any_background = true;
      break;
    }
  }
  if (!any_background) {
    return {Field<double>(mask.grid, inf), true};
  }

  const std::int64_t x_lines = ny * nz;
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::int64_t line = 0; line < x_lines; ++line) {
    binary_line(m + line * nx, data + line * nx, nx, sp[0]);
  }

  if (ny > 1) {
    const std::int64_t lines = nx * nz;
#pragma omp parallel if (Parallel)
    {
      Scratch scratch(ny);
#pragma omp for schedule(static)
      for (std::int64_t line = 0; line < lines; ++line) {
        const std::int64_t x = line % nx;
        const std::int64_t z = line / nx;
        double* base = data + x + nx * ny * z;
        for (std::int64_t y = 0; y < ny; ++y) scratch.line_in[y] = base[y * nx];
        envelope_line(scratch.line_in.data(), scratch.line_out.data(), ny, sp[1], scratch);
        for (std::int64_t y = 0; y < ny; ++y) base[y * nx] = scratch.line_out[y];
      }
    }
  }

  if (nz > 1) {
    const std::int64_t lines = nx * ny;
    const std::int64_t stride = nx * ny;
#pragma omp parallel if (Parallel)
    {
      Scratch scratch(nz);
#pragma omp for schedule(static)
      for (std::int64_t line = 0; line < lines; ++line) {
        double* base = data + line;
        for (std::int64_t z = 0; z < nz; ++z) scratch.line_in[z] = base[z * stride];
        envelope_line(scratch.line_in.data(), scratch.line_out.data(), nz, sp[2], scratch);
        for (std::int64_t z = 0; z < nz; ++z) base[z * stride] = scratch.line_out[z];
      }
    }
  }

  const auto total = static_cast<std::int64_t>(sq.data.size());
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::int64_t i = 0; i < total; ++i) data[i] = std::sqrt(data[i]);
  return {std::move(sq), false};
}

}  // namespace

DistanceField distance_transform(const Mask& mask) { return run<true>(mask); }

DistanceField distance_transform_serial(const Mask& mask) { return run<false>(mask); }

}  // namespace exmorph
