#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "infoaccess/error.hpp"
#include "infoaccess/random.hpp"
#include "infoaccess/text.hpp"

namespace infoaccess::stats {

struct TestResult {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
  double corrected_p = 1.0;
  std::uint64_t correction_factor = 1;
  std::optional<std::uint64_t> df;
  std::size_t n_used = 0;
  std::size_t n_missing = 0;
};

struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // row-major
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  ContingencyTable() = default;
  ContingencyTable(std::size_t r, std::size_t c) : rows(r), cols(c), counts(r * c, 0) {}
  ContingencyTable(std::initializer_list<std::initializer_list<std::uint64_t>> values) {
    rows = values.size();
    cols = rows ? values.begin()->size() : 0;
    for (const auto& row : values) {
      if (row.size() != cols) throw std::invalid_argument("ContingencyTable: ragged rows");
      counts.insert(counts.end(), row.begin(), row.end());
    }
  }

  std::uint64_t& operator()(std::size_t r, std::size_t c) { return counts[r * cols + c]; }
  std::uint64_t operator()(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }

  std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
  std::vector<std::uint64_t> row_sums() const {
    std::vector<std::uint64_t> s(rows, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) s[r] += (*this)(r, c);
    return s;
  }
  std::vector<std::uint64_t> col_sums() const {
    std::vector<std::uint64_t> s(cols, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) s[c] += (*this)(r, c);
    return s;
  }

  ContingencyTable transposed() const {
    ContingencyTable t(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
    t.row_labels = col_labels;
    t.col_labels = row_labels;
    return t;
  }

  // Copy without all-zero rows and columns.
  ContingencyTable without_empty_margins() const {
    const auto rs = row_sums();
    const auto cs = col_sums();
    std::vector<std::size_t> keep_r, keep_c;
    for (std::size_t r = 0; r < rows; ++r)
      if (rs[r] > 0) keep_r.push_back(r);
    for (std::size_t c = 0; c < cols; ++c)
      if (cs[c] > 0) keep_c.push_back(c);
    ContingencyTable t(keep_r.size(), keep_c.size());
    for (std::size_t i = 0; i < keep_r.size(); ++i) {
      if (!row_labels.empty()) t.row_labels.push_back(row_labels[keep_r[i]]);
      for (std::size_t j = 0; j < keep_c.size(); ++j) t(i, j) = (*this)(keep_r[i], keep_c[j]);
    }
    for (auto c : keep_c)
      if (!col_labels.empty()) t.col_labels.push_back(col_labels[c]);
    return t;
  }
};

inline double log_factorial(std::uint64_t n) { return boost::math::lgamma(static_cast<double>(n) + 1.0); }

// Upper tail of the chi-squared distribution, Q(df/2, x/2).
inline double chi_squared_sf(double x, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi_squared_sf: df must be positive");
  if (std::isnan(x)) throw NumericError("chi_squared_sf: NaN statistic");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

inline double bonferroni(double p, std::uint64_t m) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bonferroni: p must lie in [0, 1]");
  if (m == 0) throw std::invalid_argument("bonferroni: m must be positive");
  return p * static_cast<double>(m);
}

// Corrected p-values above 1 render as ">1"; tiny ones as "<1e-07".
inline std::string render_p(double p) {
  if (p > 1.0) return ">1";
  if (p < 1e-7) return "<1e-07";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

inline TestResult& apply_correction(TestResult& r, std::uint64_t factor) {
  r.correction_factor = factor;
  r.corrected_p = bonferroni(r.p_value, factor);
  return r;
}

// Kruskal-Wallis H with mid-ranks and tie correction; p from the chi-squared
// approximation with (groups - 1) degrees of freedom.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need at least two groups");
  std::size_t total = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw std::invalid_argument("kruskal_wallis: group " + std::to_string(g) + " is empty");
    for (double x : groups[g]) {
      if (!std::isfinite(x)) throw NumericError("kruskal_wallis: non-finite observation");
    }
    total += groups[g].size();
  }
  if (total < 3) throw std::invalid_argument("kruskal_wallis: need at least three observations");

  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(total);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (double x : groups[g]) pooled.emplace_back(x, g);
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j < total && pooled[j].first == pooled[i].first) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) rank_sum[pooled[t].second] += mid_rank;
    const auto ties = static_cast<double>(j - i);
    tie_term += ties * ties * ties - ties;
    i = j;
  }

  const auto n = static_cast<double>(total);
  TestResult r;
  r.test_name = "kruskal_wallis";
  r.df = groups.size() - 1;
  r.n_used = total;
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
  } else {
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    r.statistic = std::max(0.0, h / correction);
    r.p_value = chi_squared_sf(r.statistic, static_cast<double>(*r.df));
  }
  r.corrected_p = r.p_value;
  return r;
}

namespace detail {

// log P(table) under fixed margins (multivariate hypergeometric).
inline double log_table_probability(const ContingencyTable& t, const std::vector<std::uint64_t>& rs,
                                    const std::vector<std::uint64_t>& cs, std::uint64_t n) {
  double lp = -log_factorial(n);
  for (auto r : rs) lp += log_factorial(r);
  for (auto c : cs) lp += log_factorial(c);
  for (auto x : t.counts) lp -= log_factorial(x);
  return lp;
}

inline constexpr double kRelativeTieSlack = 1e-7;

}  // namespace detail

// Two-sided Fisher exact test on a 2x2 table: sum of probabilities of all
// tables with the observed margins that are no more probable than the
// observed one (1e-7 relative slack). Statistic is the sample odds ratio.
inline TestResult fisher_exact_2x2(const ContingencyTable& table) {
  if (table.rows != 2 || table.cols != 2) throw std::invalid_argument("fisher_exact_2x2: table must be 2x2");
  const auto a = table(0, 0), b = table(0, 1), c = table(1, 0), d = table(1, 1);
  TestResult r;
  r.test_name = "fisher_exact";
  r.n_used = static_cast<std::size_t>(a + b + c + d);
  if (b * c == 0) {
    r.statistic = (a * d == 0) ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    r.statistic = static_cast<double>(a) * static_cast<double>(d) / (static_cast<double>(b) * static_cast<double>(c));
  }
  const auto row0 = a + b, row1 = c + d, col0 = a + c, n = a + b + c + d;
  if (row0 == 0 || row1 == 0 || col0 == 0 || col0 == n) {
    r.p_value = r.corrected_p = 1.0;
    return r;
  }
  // Distribution of the top-left cell x with all margins fixed.
  auto log_p = [&](std::uint64_t x) {
    return log_factorial(row0) + log_factorial(row1) + log_factorial(col0) + log_factorial(n - col0) -
           log_factorial(n) - log_factorial(x) - log_factorial(row0 - x) - log_factorial(col0 - x) -
           log_factorial(row1 + x - col0);
  };
  const std::uint64_t lo = col0 > row1 ? col0 - row1 : 0;
  const std::uint64_t hi = std::min(row0, col0);
  const double observed = log_p(a);
  const double threshold = observed + std::log1p(detail::kRelativeTieSlack);
  double p = 0.0;
  for (auto x = lo; x <= hi; ++x) {
    const double lp = log_p(x);
    if (lp <= threshold) p += std::exp(lp);
  }
  r.p_value = r.corrected_p = std::min(1.0, p);
  return r;
}

// Fisher test for r x c tables by Monte Carlo over tables with the observed
// margins (random permutation of column labels across units). 2x2 tables are
// delegated to the exact routine. Statistic is the observed table's
// probability under the null.
inline TestResult fisher_exact_rxc(const ContingencyTable& table, std::uint64_t mc_trials = 10'000,
                                   std::uint64_t master_seed = 0) {
  if (table.rows < 2 || table.cols < 2) throw std::invalid_argument("fisher_exact_rxc: table must be at least 2x2");
  if (table.rows == 2 && table.cols == 2) return fisher_exact_2x2(table);
  if (mc_trials == 0) throw std::invalid_argument("fisher_exact_rxc: mc_trials must be positive");
  const auto rs = table.row_sums();
  const auto cs = table.col_sums();
  const auto n = table.total();
  TestResult r;
  r.test_name = "fisher_exact_mc";
  r.n_used = static_cast<std::size_t>(n);
  const double observed = detail::log_table_probability(table, rs, cs, n);
  r.statistic = std::exp(observed);
  if (n == 0) {
    r.p_value = r.corrected_p = 1.0;
    return r;
  }

  std::uint64_t table_hash = combine_keys(table.rows, table.cols);
  for (auto x : table.counts) table_hash = combine_keys(table_hash, x);
  SplitMix64 rng(combine_keys(master_seed, table_hash));

  std::vector<std::uint32_t> units;
  units.reserve(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < table.cols; ++c) units.insert(units.end(), cs[c], static_cast<std::uint32_t>(c));
  const double threshold = observed + std::log1p(detail::kRelativeTieSlack);
  std::uint64_t extreme = 0;
  ContingencyTable sample(table.rows, table.cols);
  for (std::uint64_t t = 0; t < mc_trials; ++t) {
    rng.shuffle(std::span<std::uint32_t>(units));
    std::fill(sample.counts.begin(), sample.counts.end(), 0);
    std::size_t pos = 0;
    for (std::size_t row = 0; row < table.rows; ++row) {
      for (std::uint64_t i = 0; i < rs[row]; ++i) ++sample(row, units[pos++]);
    }
    if (detail::log_table_probability(sample, rs, cs, n) <= threshold) ++extreme;
  }
  r.p_value = r.corrected_p = static_cast<double>(1 + extreme) / static_cast<double>(1 + mc_trials);
  return r;
}

// Pearson chi-squared test of independence, no continuity correction.
inline TestResult chi_squared_independence(const ContingencyTable& table) {
  if (table.rows < 2 || table.cols < 2) {
    throw std::invalid_argument("chi_squared_independence: table must be at least 2x2");
  }
  const auto rs = table.row_sums();
  const auto cs = table.col_sums();
  const auto n = static_cast<double>(table.total());
  double stat = 0.0;
  for (std::size_t r = 0; r < table.rows; ++r) {
    for (std::size_t c = 0; c < table.cols; ++c) {
      const double expected = n > 0 ? static_cast<double>(rs[r]) * static_cast<double>(cs[c]) / n : 0.0;
      if (expected <= 0.0) {
        throw NumericError("chi_squared_independence: expected count is zero in cell (" + std::to_string(r) + ", " +
                           std::to_string(c) + ")");
      }
      const double diff = static_cast<double>(table(r, c)) - expected;
      stat += diff * diff / expected;
    }
  }
  TestResult res;
  res.test_name = "chi_squared";
  res.statistic = stat;
  res.df = (table.rows - 1) * (table.cols - 1);
  res.p_value = res.corrected_p = chi_squared_sf(stat, static_cast<double>(*res.df));
  res.n_used = static_cast<std::size_t>(n);
  return res;
}

inline nlohmann::ordered_json to_json(const TestResult& r) {
  nlohmann::ordered_json j;
  j["test"] = r.test_name;
  if (std::isfinite(r.statistic)) j["statistic"] = r.statistic;
  else if (std::isinf(r.statistic)) j["statistic"] = r.statistic > 0 ? "Infinity" : "-Infinity";
  else j["statistic"] = nullptr;
  j["df"] = r.df ? nlohmann::ordered_json(*r.df) : nlohmann::ordered_json(nullptr);
  j["p"] = r.p_value;
  j["corrected_p"] = r.corrected_p;
  j["correction_factor"] = r.correction_factor;
  j["n_used"] = r.n_used;
  j["n_missing"] = r.n_missing;
  return j;
}

}  // namespace infoaccess::stats
