#include "noma/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace noma {
namespace {

// Lanczos g=7, n=9.
double log_gamma(double x) {
  static const double coef[9] = {0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
                                 771.32342877765313,   -176.61502916214059, 12.507343278686905,
                                 -0.13857109526572012, 9.9843695780195716e-6,
                                 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  x -= 1.0;
  double a = coef[0];
  double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += coef[i] / (x + i);
  return 0.5 * std::log(2.0 * M_PI) + (x + 0.5) * std::log(t) - t + std::log(a);
}

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1 (Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

// Continued fraction for the incomplete beta (Lentz).
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double front = std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                          b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double chi_square_sf(double stat, int dof) {
  if (dof <= 0) throw std::invalid_argument("chi_square_sf: dof must be positive");
  if (stat <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * stat);
}

std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

RankSumResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b,
                                int exact_limit) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  if (n == 0 || m == 0) throw std::invalid_argument("wilcoxon_rank_sum: empty sample");
  const int N = n + m;

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(N));
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<double> ranks = midranks(pooled);

  double w_obs = 0.0;
  for (int i = 0; i < n; ++i) w_obs += ranks[static_cast<std::size_t>(i)];

  RankSumResult res;
  res.statistic = w_obs;
  const double mean = n * (N + 1) / 2.0;

  if (N <= exact_limit && N <= 20) {
    // Exact null: every n-subset of the pooled ranks is equally likely.
    const double dev_obs = std::fabs(w_obs - mean);
    std::uint64_t hits = 0, total = 0;
    const std::uint32_t full = 1u << N;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      if (std::popcount(mask) != n) continue;
      ++total;
      double w = 0.0;
      std::uint32_t bits = mask;
      while (bits) {
        int idx = std::countr_zero(bits);
        bits &= bits - 1;
        w += ranks[static_cast<std::size_t>(idx)];
      }
      if (std::fabs(w - mean) >= dev_obs - 1e-12) ++hits;
    }
    res.exact = true;
    res.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return res;
  }

  // Normal approximation with tie correction.
  double tie_term = 0.0;
  {
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  double var = (static_cast<double>(n) * m / 12.0) *
               (N + 1 - tie_term / (static_cast<double>(N) * (N - 1)));
  if (var <= 0.0) {
    res.p_value = 1.0;  // all observations identical
    return res;
  }
  double dev = std::fabs(w_obs - mean) - 0.5;  // continuity correction
  if (dev < 0.0) dev = 0.0;
  double z = dev / std::sqrt(var);
  res.p_value = std::erfc(z / std::sqrt(2.0));
  res.p_value = std::min(1.0, res.p_value);
  return res;
}

TTestResult t_test_one_sample(const std::vector<double>& sample, double mu0) {
  const int n = static_cast<int>(sample.size());
  if (n < 2) throw std::invalid_argument("t_test_one_sample: need at least 2 observations");
  double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  double var = ss / (n - 1);

  TTestResult res;
  res.dof = n - 1;
  if (var <= 0.0) {
    res.statistic = (mean == mu0) ? 0.0 : std::numeric_limits<double>::infinity();
    res.p_value = (mean == mu0) ? 1.0 : 0.0;
    return res;
  }
  double t = (mean - mu0) / std::sqrt(var / n);
  res.statistic = t;
  double nu = static_cast<double>(res.dof);
  res.p_value = incomplete_beta(0.5 * nu, 0.5, nu / (nu + t * t));
  return res;
}

}  // namespace noma
