#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bodylink {

enum class PValueMethod { Exact, NormalApproximation, Degenerate };

std::string to_string(PValueMethod m);

struct MannWhitneyResult {
  double u = 0.0;  // #{x > y} + ½·#{ties}, x from the first sample
  double p = 1.0;  // two-sided
  PValueMethod method = PValueMethod::Exact;
};

/// Largest pooled size for which the p-value comes from the exact
/// permutation distribution.
inline constexpr std::size_t kMannWhitneyExactMaxSize = 16;

/// Two-sided Mann-Whitney U test. Exact permutation distribution of the
/// mid-rank sum when n_a + n_b ≤ kMannWhitneyExactMaxSize, otherwise the
/// normal approximation with tie-corrected variance and continuity
/// correction. Identical values across both samples give p = 1.
/// Throws std::invalid_argument on an empty sample.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// U statistic of the first sample: #{(x, y) : x > y} + ½·#{x == y},
/// i.e. R_a − n_a(n_a+1)/2 with mid-ranks.
double mann_whitney_statistic(std::span<const double> a, std::span<const double> b);

/// Exact branch, any size (cost grows with C(n_a+n_b, n_a)-like DP tables).
double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b);
/// Normal approximation branch, any size.
double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b);

/// min(1, m·p).
double bonferroni(double p, int m);

struct SummaryStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample (n − 1)
  double whisker_low = 0.0;   // mean − 1.96·stddev
  double whisker_high = 0.0;  // mean + 1.96·stddev
  std::size_t n = 0;
  bool single_value = false;  // stddev undefined, whiskers collapse to the value
};

/// Quantile with linear interpolation between closest ranks, h = (n−1)·p.
double quantile(std::span<const double> values, double p);

SummaryStats summarize(std::span<const double> values);

}  // namespace bodylink
