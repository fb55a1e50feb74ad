// Brute-force reference implementations. Deliberately naive: each one follows
// the definition directly and shares no code with the library kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "exmorph/distance.hpp"
#include "exmorph/volume.hpp"

namespace oracle {

using exmorph::Index3;
using exmorph::Mask;
using exmorph::Vec3;
using exmorph::VoxelGrid;

inline Mask random_mask(std::mt19937_64& rng, std::int64_t max_side, double density_lo = 0.2,
                        double density_hi = 0.9, bool anisotropic = true) {
  std::uniform_int_distribution<std::int64_t> side(1, max_side);
  std::uniform_real_distribution<double> sp(0.2, 1.5);
  std::uniform_real_distribution<double> dens(density_lo, density_hi);
  const Vec3 spacing = anisotropic ? Vec3{sp(rng), sp(rng), sp(rng)} : Vec3{0.3, 0.3, 0.3};
  Mask m(VoxelGrid({side(rng), side(rng), side(rng)}, spacing));
  std::bernoulli_distribution on(dens(rng));
  for (auto& v : m.data) v = on(rng) ? 1 : 0;
  return m;
}

inline std::vector<Index3> voxels_where(const Mask& m, bool value) {
  std::vector<Index3> out;
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if ((m.data[i] != 0) == value) out.push_back(m.grid.index(i));
  }
  return out;
}

// min over background b of |v - b| in mm, evaluated with the same summation order
// as the kernel, then a single sqrt.
inline std::vector<double> edt(const Mask& m) {
  const auto background = voxels_where(m, false);
  std::vector<double> out(m.data.size(), 0.0);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (m.data[i] == 0) continue;
    const Index3 v = m.grid.index(i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : background) {
      best = std::min(best, exmorph::squared_offset_mm(v[0] - b[0], v[1] - b[1], v[2] - b[2],
                                                       m.grid.spacing()));
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

inline double physical_distance(const VoxelGrid& g, const Index3& a, const Vec3& p) {
  const Vec3 q = g.voxel_to_physical(a);
  return std::sqrt((q[0] - p[0]) * (q[0] - p[0]) + (q[1] - p[1]) * (q[1] - p[1]) +
                   (q[2] - p[2]) * (q[2] - p[2]));
}

// Largest half-voxel-corrected ball centred on a foreground voxel that still
// contains `anchor`; returns its diameter, or -1 when no centre qualifies.
inline double inscribed_diameter(const Mask& m, const Vec3& anchor) {
  const auto d = edt(m);
  const double half = m.grid.mean_spacing() / 2.0;
  double best = -1.0;
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (m.data[i] == 0) continue;
    const double r = std::max(d[i] - half, 0.0);
    if (physical_distance(m.grid, m.grid.index(i), anchor) <= r) best = std::max(best, r);
  }
  return best < 0 ? -1.0 : 2.0 * best;
}

inline bool adjacent(const Index3& a, const Index3& b, int connectivity) {
  const std::int64_t dx = std::abs(a[0] - b[0]), dy = std::abs(a[1] - b[1]),
                     dz = std::abs(a[2] - b[2]);
  if (std::max({dx, dy, dz}) != 1) return false;
  const std::int64_t nonzero = (dx != 0) + (dy != 0) + (dz != 0);
  return connectivity == 26 || (connectivity == 18 && nonzero <= 2) ||
         (connectivity == 6 && nonzero == 1);
}

// Component sizes by repeated flood fill over the explicit foreground list.
inline std::vector<std::int64_t> component_sizes(const Mask& m, int connectivity) {
  const auto fg = voxels_where(m, true);
  std::vector<int> seen(fg.size(), 0);
  std::vector<std::int64_t> sizes;
  for (std::size_t s = 0; s < fg.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    std::int64_t n = 0;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++n;
      for (std::size_t o = 0; o < fg.size(); ++o) {
        if (!seen[o] && adjacent(fg[cur], fg[o], connectivity)) {
          seen[o] = 1;
          stack.push_back(o);
        }
      }
    }
    sizes.push_back(n);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

inline double dice(const Mask& a, const Mask& b) {
  std::int64_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    na += a.data[i] != 0;
    nb += b.data[i] != 0;
    both += a.data[i] != 0 && b.data[i] != 0;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

inline std::vector<Index3> boundary(const Mask& m) {
  std::vector<Index3> out;
  const auto& g = m.grid;
  for (const auto& v : voxels_where(m, true)) {
    bool edge = false;
    for (int axis = 0; axis < 3 && !edge; ++axis) {
      for (int step : {-1, 1}) {
        Index3 n = v;
        n[axis] += step;
        if (!g.contains(n) || m[n] == 0) edge = true;
      }
    }
    if (edge) out.push_back(v);
  }
  return out;
}

inline std::vector<double> directed(const Mask& from, const Mask& to) {
  const auto a = oracle::boundary(from), b = oracle::boundary(to);
  std::vector<double> out;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) {
      best = std::min(best, exmorph::squared_offset_mm(p[0] - q[0], p[1] - q[1], p[2] - q[2],
                                                       from.grid.spacing()));
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

// numpy's default "linear" percentile.
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double hd95(const Mask& a, const Mask& b) {
  return std::max(oracle::percentile(oracle::directed(a, b), 95.0),
                  oracle::percentile(oracle::directed(b, a), 95.0));
}

// Rank of x[i] = (#smaller) + (#equal + 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

inline double partial_rho(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& z) {
  const double rxy = spearman_rho(x, y), rxz = spearman_rho(x, z), ryz = spearman_rho(y, z);
  return (rxy - rxz * ryz) / std::sqrt((1 - rxz * rxz) * (1 - ryz * ryz));
}

// ICC(3,k) through the classical sum-of-squares decomposition.
inline double icc3k(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size(), k = m[0].size();
  double grand = 0;
  for (const auto& row : m) {
    for (double v : row) grand += v;
  }
  grand /= static_cast<double>(n * k);
  double ss_total = 0, ss_rows = 0, ss_cols = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_mean = 0;
    for (double v : m[i]) {
      row_mean += v;
      ss_total += (v - grand) * (v - grand);
    }
    row_mean /= static_cast<double>(k);
    ss_rows += static_cast<double>(k) * (row_mean - grand) * (row_mean - grand);
  }
  for (std::size_t j = 0; j < k; ++j) {
    double col_mean = 0;
    for (std::size_t i = 0; i < n; ++i) col_mean += m[i][j];
    col_mean /= static_cast<double>(n);
    ss_cols += static_cast<double>(n) * (col_mean - grand) * (col_mean - grand);
  }
  const double ms_rows = ss_rows / static_cast<double>(n - 1);
  const double ms_error = (ss_total - ss_rows - ss_cols) / static_cast<double>((n - 1) * (k - 1));
  return (ms_rows - ms_error) / ms_rows;
}

// Benjamini-Hochberg by checking every candidate cut-off k directly.
inline std::vector<bool> bh(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::size_t cut = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (sorted[k - 1] <= static_cast<double>(k) * q / static_cast<double>(m)) cut = k;
  }
  std::vector<bool> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = cut > 0 && p[i] <= sorted[cut - 1];
  return out;
}

// Two-sided exact Mann-Whitney p by enumerating every split of the pooled
// sample into groups of the original sizes.
inline double rank_sum_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  auto u_of = [&](const std::vector<int>& in_a) {
    double u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_a[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_a[j]) continue;
        u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
      }
    }
    return u;
  };
  std::vector<int> observed(n, 0);
  std::fill(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(na), 1);
  const double u_obs = u_of(observed);
  std::vector<int> sel(n, 0);
  std::fill(sel.end() - static_cast<std::ptrdiff_t>(na), sel.end(), 1);
  double total = 0, le = 0, ge = 0;
  do {
    const double u = u_of(sel);
    total += 1;
    le += u <= u_obs;
    ge += u >= u_obs;
  } while (std::next_permutation(sel.begin(), sel.end()));
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace oracle

namespace oracle {

// A permutation y of 1..n whose rank distance to 1..n is exactly `sum_d2`
// (sum_d2 must be even and within [0, n(n^2-1)/3]). Found by random swaps that
// never move away from the target.
inline std::vector<double> permutation_with_sum_d2(std::size_t n, long long sum_d2,
                                                   std::mt19937_64& rng) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(n - i);
  auto total = [&] {
    long long s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long long d = static_cast<long long>(y[i]) - static_cast<long long>(i + 1);
      s += d * d;
    }
    return s;
  };
  long long cur = total();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (cur != sum_d2) {
    const std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    std::swap(y[a], y[b]);
    const long long next = total();
    if (std::llabs(next - sum_d2) <= std::llabs(cur - sum_d2)) {
      cur = next;
    } else {
      std::swap(y[a], y[b]);
    }
  }
  return y;
}

}  // namespace oracle
