#include "exmorph/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "exmorph/error.hpp"

namespace exmorph::stats {

Alternative parse_alternative(const std::string& text) {
  if (text == "less") return Alternative::less;
  if (text == "greater") return Alternative::greater;
  if (text == "two-sided" || text == "two_sided") return Alternative::two_sided;
  throw Error("bad-option", "alternative must be less, greater or two-sided, got '" + text + "'");
}

const char* to_string(Alternative a) noexcept {
  switch (a) {
    case Alternative::less: return "less";
    case Alternative::greater: return "greater";
    case Alternative::two_sided: return "two-sided";
  }
  return "?";
}

std::vector<double> mid_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank ((i+1) + (j+1)) / 2.
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double t_test_p(double t, double df, Alternative alternative) {
  if (std::isinf(t)) {
    switch (alternative) {
      case Alternative::less: return t < 0 ? 0.0 : 1.0;
      case Alternative::greater: return t > 0 ? 0.0 : 1.0;
      case Alternative::two_sided: return 0.0;
    }
  }
  const boost::math::students_t_distribution<double> dist(df);
  switch (alternative) {
    case Alternative::less: return boost::math::cdf(dist, t);
    case Alternative::greater: return boost::math::cdf(boost::math::complement(dist, t));
    case Alternative::two_sided:
      return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return 1.0;
}

namespace {

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double t_from_r(double r, double df) {
  if (std::abs(r) >= 1.0) return r > 0 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
  return r * std::sqrt(df / (1.0 - r * r));
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw Error("length-mismatch", "series lengths differ");
}

}  // namespace

CorrelationResult spearman(const Series& x, const Series& y, Alternative alternative) {
  require_same_length(x.size(), y.size());
  std::vector<double> cx, cy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i]) {
      cx.push_back(*x[i]);
      cy.push_back(*y[i]);
    }
  }
  return spearman(cx, cy, alternative);
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                           Alternative alternative) {
  require_same_length(x.size(), y.size());
  if (x.size() < 3) {
    throw Error("insufficient-n", "spearman needs at least 3 complete pairs, got " +
                                      std::to_string(x.size()));
  }
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  if (constant(rx) || constant(ry)) throw Error("constant-input", "spearman of a constant series");
  CorrelationResult r;
  r.n = x.size();
  r.alternative = alternative;
  r.rho = pearson(rx, ry);
  const double df = static_cast<double>(r.n) - 2.0;
  r.p = t_test_p(t_from_r(r.rho, df), df, alternative);
  return r;
}

CorrelationResult partial_spearman(const Series& x, const Series& y, const Series& covariate,
                                   Alternative alternative, const std::string& covariate_name) {
  require_same_length(x.size(), y.size());
  require_same_length(x.size(), covariate.size());
  std::vector<double> cx, cy, cz;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i] && covariate[i]) {
      cx.push_back(*x[i]);
      cy.push_back(*y[i]);
      cz.push_back(*covariate[i]);
    }
  }
  if (cx.size() < 4) {
    throw Error("insufficient-n", "partial spearman needs at least 4 complete triples, got " +
                                      std::to_string(cx.size()));
  }
  const auto rx = mid_ranks(cx);
  const auto ry = mid_ranks(cy);
  const auto rz = mid_ranks(cz);
  if (constant(rx) || constant(ry)) {
    throw Error("constant-input", "partial spearman of a constant series");
  }
  if (constant(rz)) {
    CorrelationResult fallback = spearman(cx, cy, alternative);
    fallback.covariate_fallback = true;
    return fallback;
  }
  const double rxy = pearson(rx, ry);
  const double rxz = pearson(rx, rz);
  const double ryz = pearson(ry, rz);
  if (std::abs(rxz) >= 1.0 || std::abs(ryz) >= 1.0) {
    throw Error("collinear-covariate", "covariate is perfectly rank-correlated with a variable");
  }
  CorrelationResult r;
  r.n = cx.size();
  r.alternative = alternative;
  r.partialed_on = covariate_name;
  r.rho = std::clamp((rxy - rxz * ryz) / std::sqrt((1.0 - rxz * rxz) * (1.0 - ryz * ryz)), -1.0, 1.0);
  const double df = static_cast<double>(r.n) - 3.0;
  r.p = t_test_p(t_from_r(r.rho, df), df, alternative);
  return r;
}

ICCResult icc_average_fixed_raters(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  if (n < 2) throw Error("insufficient-n", "ICC needs at least 2 targets");
  const std::size_t k = m.front().size();
  if (k < 2) throw Error("insufficient-n", "ICC needs at least 2 raters");
  for (const auto& row : m) {
    if (row.size() != k) throw Error("length-mismatch", "ragged measurement matrix");
    for (const double v : row) {
      if (!std::isfinite(v)) throw Error("missing-value", "ICC requires complete finite data");
    }
  }
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += m[i][j];
      col_mean[j] += m[i][j];
      grand += m[i][j];
    }
  }
  for (auto& v : row_mean) v /= static_cast<double>(k);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_rows = 0.0, ss_error = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
    for (std::size_t j = 0; j < k; ++j) {
      const double e = m[i][j] - row_mean[i] - col_mean[j] + grand;
      ss_error += e * e;
    }
  }
  ss_rows *= static_cast<double>(k);
  const double ms_rows = ss_rows / static_cast<double>(n - 1);
  const double ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  if (!(ms_rows > 0.0)) {
    throw Error("degenerate", "ICC undefined: zero between-target variance");
  }
  return {(ms_rows - ms_error) / ms_rows, n, k};
}

BlandAltmanResult bland_altman(const Series& a, const Series& b) {
  require_same_length(a.size(), b.size());
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) d.push_back(*a[i] - *b[i]);
  }
  if (d.size() < 2) throw Error("insufficient-n", "Bland-Altman needs at least 2 complete pairs");
  BlandAltmanResult r;
  r.n = d.size();
  r.mean_difference = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(r.n);
  double ss = 0.0;
  for (const double v : d) ss += (v - r.mean_difference) * (v - r.mean_difference);
  r.sd_difference = std::sqrt(ss / static_cast<double>(r.n - 1));
  r.loa_low = r.mean_difference - 1.96 * r.sd_difference;
  r.loa_high = r.mean_difference + 1.96 * r.sd_difference;
  return r;
}

std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q) {
  if (p_values.empty()) throw Error("empty-input", "BH correction of an empty p-value list");
  if (!(q > 0.0 && q < 1.0)) throw Error("bad-option", "BH q must lie in (0, 1)");
  for (const double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("bad-p-value", "p-values must lie in [0, 1]");
  }
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t cutoff = 0;  // number of rejected hypotheses
  for (std::size_t i = m; i >= 1; --i) {
    if (p_values[order[i - 1]] <= static_cast<double>(i) * q / static_cast<double>(m)) {
      cutoff = i;
      break;
    }
  }
  std::vector<bool> rejected(m, false);
  for (std::size_t i = 0; i < cutoff; ++i) rejected[order[i]] = true;
  return rejected;
}

namespace {

// counts[u] = number of ways n_a of the n_a + n_b ranks give U_a = u.
std::vector<double> u_null_counts(std::size_t na, std::size_t nb) {
  // f[i][j][u] via rolling tables over (i, j).
  const std::size_t umax = na * nb;
  std::vector<std::vector<std::vector<double>>> f(
      na + 1, std::vector<std::vector<double>>(nb + 1));
  for (std::size_t i = 0; i <= na; ++i) {
    for (std::size_t j = 0; j <= nb; ++j) {
      auto& cell = f[i][j];
      cell.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        cell[0] = 1.0;
        continue;
      }
      // Largest element belongs to a (contributing j to U) or to b.
      const auto& with_a = f[i - 1][j];
      const auto& with_b = f[i][j - 1];
      for (std::size_t u = 0; u < with_a.size(); ++u) cell[u + j] += with_a[u];
      for (std::size_t u = 0; u < with_b.size(); ++u) cell[u] += with_b[u];
    }
  }
  auto out = f[na][nb];
  out.resize(umax + 1, 0.0);
  return out;
}

}  // namespace

RankSumResult rank_sum_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw Error("empty-group", "rank-sum test with an empty group");
  if (a.size() < 2 || b.size() < 2) {
    throw Error("insufficient-n", "rank-sum test needs at least 2 values per group");
  }
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = mid_ranks(pooled);
  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += ranks[i];
  RankSumResult r;
  r.u = ra - static_cast<double>(na * (na + 1)) / 2.0;

  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    i = j + 1;
  }

  if (n <= 12 && !ties) {
    const auto counts = u_null_counts(na, nb);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(r.u);
    double below = 0.0, above = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= u) below += counts[k];
      if (k >= u) above += counts[k];
    }
    r.p = std::min(1.0, 2.0 * std::min(below, above) / total);
    r.exact = true;
    return r;
  }

  const double mu = static_cast<double>(na * nb) / 2.0;
  const double nn = static_cast<double>(n);
  const double var = static_cast<double>(na * nb) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (!(var > 0.0)) {
    r.p = 1.0;
    return r;
  }
  const double z = std::max(std::abs(r.u - mu) - 0.5, 0.0) / std::sqrt(var);
  r.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

std::string stars(double p) {
  if (p <= 0.0001) return "****";
  if (p <= 0.001) return "***";
  if (p <= 0.01) return "**";
  if (p <= 0.05) return "*";
  return "ns";
}

namespace {

std::pair<double, double> extrema(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

}  // namespace

ImageVolume standardize_minmax(const ImageVolume& volume) {
  const auto& v = volume.data;
  if (v.empty()) throw Error("degenerate-range", "degenerate intensity range");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  const auto [lo, hi] = extrema(v);
  if (!(sd > 0.0) || lo == hi) throw Error("degenerate-range", "degenerate intensity range");
  ImageVolume out(volume.grid, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = (v[i] - mean) / sd;
  const auto [zlo, zhi] = extrema(out.data);
  const double span = zhi - zlo;
  for (double& x : out.data) x = (x - zlo) / span;
  return out;
}

ImageVolume rescale_0_1000(const ImageVolume& volume) {
  if (volume.data.empty()) throw Error("degenerate-range", "degenerate intensity range");
  const auto [lo, hi] = extrema(volume.data);
  if (lo == hi) throw Error("degenerate-range", "degenerate intensity range");
  ImageVolume out(volume.grid, 0.0);
  for (std::size_t i = 0; i < volume.data.size(); ++i) {
    out.data[i] = (volume.data[i] - lo) / (hi - lo) * 1000.0;
  }
  return out;
}

}  // namespace exmorph::stats
