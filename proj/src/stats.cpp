#include "bodylink/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace bodylink {

std::string to_string(PValueMethod m) {
  switch (m) {
    case PValueMethod::Exact: return "exact";
    case PValueMethod::NormalApproximation: return "normal";
    case PValueMethod::Degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

void require_non_empty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney U needs two non-empty samples");
}

struct PooledRanks {
  std::vector<std::int64_t> doubled_rank;  // 2·mid-rank, first n_a entries belong to a
  double tie_term = 0.0;                   // Σ (t³ − t) over tie groups
};

PooledRanks pooled_ranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> values(a.begin(), a.end());
  values.insert(values.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });

  PooledRanks out;
  out.doubled_rank.assign(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // 1-based positions i+1 .. j+1 share the mid-rank (i+j+2)/2.
    const auto doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) out.doubled_rank[order[k]] = doubled;
    const auto t = static_cast<double>(j - i + 1);
    out.tie_term += t * t * t - t;
    i = j + 1;
  }
  return out;
}

bool all_identical(std::span<const double> a, std::span<const double> b) {
  const double v = a.front();
  return std::all_of(a.begin(), a.end(), [v](double x) { return x == v; }) &&
         std::all_of(b.begin(), b.end(), [v](double x) { return x == v; });
}

}  // namespace

double mann_whitney_statistic(std::span<const double> a, std::span<const double> b) {
  require_non_empty(a, b);
  const PooledRanks r = pooled_ranks(a, b);
  std::int64_t doubled_sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) doubled_sum += r.doubled_rank[i];
  const auto na = static_cast<double>(a.size());
  return static_cast<double>(doubled_sum) / 2.0 - na * (na + 1.0) / 2.0;
}

double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b) {
  require_non_empty(a, b);
  const PooledRanks r = pooled_ranks(a, b);
  const std::size_t na = a.size();
  const std::size_t n = r.doubled_rank.size();
  const std::int64_t max_sum = std::accumulate(r.doubled_rank.begin(), r.doubled_rank.end(), std::int64_t{0});

  // ways[k][s]: subsets of size k with doubled rank sum s. Counts can exceed
  // 2^53 only far beyond the exact-branch size, so long double is enough.
  const auto width = static_cast<std::size_t>(max_sum + 1);
  std::vector<std::vector<long double>> ways(na + 1, std::vector<long double>(width, 0.0L));
  ways[0][0] = 1.0L;
  for (std::size_t item = 0; item < n; ++item) {
    const auto w = static_cast<std::size_t>(r.doubled_rank[item]);
    for (std::size_t k = std::min(item + 1, na); k >= 1; --k) {
      for (auto s = static_cast<std::size_t>(max_sum); s + 1 > w; --s) ways[k][s] += ways[k - 1][s - w];
    }
  }

  std::int64_t observed = 0;
  for (std::size_t i = 0; i < na; ++i) observed += r.doubled_rank[i];
  // Null mean of the doubled rank sum is n_a·(N + 1).
  const auto centre = static_cast<std::int64_t>(na * (n + 1));
  const std::int64_t observed_dev = std::llabs(observed - centre);

  long double extreme = 0.0L;
  long double total = 0.0L;
  for (std::size_t s = 0; s < width; ++s) {
    total += ways[na][s];
    if (std::llabs(static_cast<std::int64_t>(s) - centre) >= observed_dev) extreme += ways[na][s];
  }
  return std::min(1.0, static_cast<double>(extreme / total));
}

double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b) {
  require_non_empty(a, b);
  const PooledRanks r = pooled_ranks(a, b);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  const double n = na + nb;
  const double u = mann_whitney_statistic(a, b);
  const double mean = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double dev = std::abs(u - mean) - 0.5;
  if (dev <= 0.0) return 1.0;
  const double z = dev / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require_non_empty(a, b);
  MannWhitneyResult out;
  out.u = mann_whitney_statistic(a, b);
  if (all_identical(a, b)) {
    out.p = 1.0;
    out.method = PValueMethod::Degenerate;
  } else if (a.size() + b.size() <= kMannWhitneyExactMaxSize) {
    out.p = mann_whitney_exact_p(a, b);
    out.method = PValueMethod::Exact;
  } else {
    out.p = mann_whitney_normal_p(a, b);
    out.method = PValueMethod::NormalApproximation;
  }
  return out;
}

double bonferroni(double p, int m) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-value must lie in [0, 1]");
  if (m < 1) throw std::invalid_argument("Bonferroni factor must be at least 1");
  return std::min(1.0, m * p);
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot summarize an empty sample");
  SummaryStats s;
  s.n = values.size();
  s.median = quantile(values, 0.5);
  s.q25 = quantile(values, 0.25);
  s.q75 = quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n == 1) {
    s.single_value = true;
    s.stddev = 0.0;
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.whisker_low = s.mean - 1.96 * s.stddev;
  s.whisker_high = s.mean + 1.96 * s.stddev;
  return s;
}

}  // namespace bodylink
