#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace schoenbat::harness {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  double se = 0.0;  // sd / sqrt(count)
};

Summary summarize(std::span<const double> xs);
double median(std::vector<double> xs);
// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// H1: mean(a - b) > 0.
TestResult paired_t_one_sided(std::span<const double> a, std::span<const double> b);
// H1: the differences a - b are shifted above zero. Normal approximation with
// tie and zero corrections; zero differences are dropped.
TestResult wilcoxon_signed_rank_one_sided(std::span<const double> a, std::span<const double> b);

// Rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

// Pearson chi-square goodness of fit; `expected` holds counts and must sum to
// the observed total. Cells are not merged.
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected);

}  // namespace schoenbat::harness
