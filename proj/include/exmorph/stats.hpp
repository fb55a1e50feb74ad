#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exmorph/volume.hpp"

namespace exmorph::stats {

enum class Alternative { less, greater, two_sided };

Alternative parse_alternative(const std::string& text);
const char* to_string(Alternative a) noexcept;

using Series = std::vector<std::optional<double>>;

// Average (mid) ranks, 1-based; ties share the mean of their positions.
std::vector<double> mid_ranks(const std::vector<double>& values);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Tail probability of Student's t with `df` degrees of freedom.
double t_test_p(double t, double df, Alternative alternative);

struct CorrelationResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  Alternative alternative = Alternative::two_sided;
  std::optional<std::string> partialed_on;
  std::optional<bool> bh_rejected;
  // Set when a constant covariate forced a plain Spearman fallback.
  bool covariate_fallback = false;
};

/// Spearman rank correlation over pairwise-complete cases.
///
/// p comes from t = rho*sqrt((n-2)/(1-rho^2)) on n-2 degrees of freedom; a
/// perfect correlation has p = 0 in its own tail. Errors: "insufficient-n"
/// below 3 complete pairs, "constant-input" when either ranked series is flat.
CorrelationResult spearman(const Series& x, const Series& y, Alternative alternative);
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                           Alternative alternative);

/// Partial Spearman correlation of x and y controlling for `covariate`:
/// (r_xy - r_xz r_yz) / sqrt((1 - r_xz^2)(1 - r_yz^2)) on mid-ranks, t on n-3 df.
CorrelationResult partial_spearman(const Series& x, const Series& y, const Series& covariate,
                                   Alternative alternative,
                                   const std::string& covariate_name = "covariate");

struct ICCResult {
  double icc = 0.0;
  std::size_t n_targets = 0;
  std::size_t k_raters = 0;
  std::string model = "average fixed raters";
};

// Two-way mixed, consistency, average measures: (MS_rows - MS_error) / MS_rows.
// `measurements[i][j]` is target i scored by rater j.
ICCResult icc_average_fixed_raters(const std::vector<std::vector<double>>& measurements);

struct BlandAltmanResult {
  double mean_difference = 0.0;
  double sd_difference = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::size_t n = 0;
};

BlandAltmanResult bland_altman(const Series& a, const Series& b);

// Benjamini-Hochberg step-up; result is in input order.
std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q);

struct RankSumResult {
  double u = 0.0;  // U for group_a
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Mann-Whitney U with mid-rank ties. Exact enumeration of the null when the
// pooled size is at most 12 and there are no ties, otherwise the normal
// approximation with tie-corrected variance and continuity correction.
RankSumResult rank_sum_test(const std::vector<double>& group_a, const std::vector<double>& group_b);

// Significance stars for pairwise group comparisons: "*", "**", "***" or "ns".
std::string stars(double p);

// z-score (population sd) followed by min-max to [0, 1].
ImageVolume standardize_minmax(const ImageVolume& volume);
// Linear min-max to [0, 1000].
ImageVolume rescale_0_1000(const ImageVolume& volume);

}  // namespace exmorph::stats
