#pragma once

#include <vector>

namespace noma {

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);
// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);
// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Survival function of the chi-square distribution with k dof.
double chi_square_sf(double stat, int dof);

struct RankSumResult {
  double statistic = 0.0;  // rank sum of the first sample (midranks)
  double p_value = 1.0;    // two-sided
  bool exact = false;      // exact enumeration vs normal approximation
};

// Two-sided Wilcoxon rank-sum test. Uses exact enumeration over all
// C(n+m, n) group assignments when n + m <= exact_limit, otherwise the
// normal approximation with tie correction and 0.5 continuity correction.
RankSumResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b,
                                int exact_limit = 16);

struct TTestResult {
  double statistic = 0.0;
  double p_value = 1.0;  // two-sided
  int dof = 0;
};

// Two-sided one-sample t-test of H0: mean(sample) == mu0. Requires
// sample.size() >= 2; zero-variance samples give p = 1 when the mean equals
// mu0 and p = 0 otherwise.
TTestResult t_test_one_sample(const std::vector<double>& sample, double mu0);

// Midranks of the pooled vector (average rank over ties), 1-based.
std::vector<double> midranks(const std::vector<double>& pooled);

}  // namespace noma
