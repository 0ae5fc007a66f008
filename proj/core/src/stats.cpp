#include "metagrid/stats.hpp"

#include <algorithm>
#include <cmath>

#include "metagrid/common.hpp"

namespace metagrid {

double mean(const std::vector<double>& xs) {
  MG_CHECK(!xs.empty(), "mean: empty input");
  double s = 0;
  for (double x : xs) s += x;
  return s / xs.size();
}

double sample_std(const std::vector<double>& xs) {
  MG_CHECK(xs.size() >= 2, "sample_std: need at least two samples");
  double m = mean(xs), s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / (xs.size() - 1));
}

double iqm(std::vector<double> xs) {
  MG_CHECK(!xs.empty(), "iqm: empty input");
  std::sort(xs.begin(), xs.end());
  size_t trim = xs.size() / 4;
  double s = 0;
  for (size_t i = trim; i < xs.size() - trim; ++i) s += xs[i];
  return s / (xs.size() - 2 * trim);
}

double optimality_gap(const std::vector<double>& scores) {
  MG_CHECK(!scores.empty(), "optimality_gap: empty input");
  double s = 0;
  for (double x : scores) s += std::max(1.0 - x, 0.0);
  return s / scores.size();
}

Interval stratified_bootstrap(const std::vector<std::vector<double>>& per_task,
                              double (*statistic)(std::vector<double>), int resamples, Rng& rng,
                              double alpha) {
  MG_CHECK(!per_task.empty() && resamples > 0, "stratified_bootstrap: bad inputs");
  std::vector<double> stats(resamples);
  std::vector<double> pooled;
  for (int b = 0; b < resamples; ++b) {
    pooled.clear();
    for (const auto& task : per_task) {
      MG_CHECK(!task.empty(), "stratified_bootstrap: empty task stratum");
      for (size_t i = 0; i < task.size(); ++i)
        pooled.push_back(task[rng.uniform_int(static_cast<int>(task.size()))]);
    }
    stats[b] = statistic(pooled);
  }
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double q) {
    double pos = q * (resamples - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, static_cast<size_t>(resamples - 1));
    double frac = pos - lo;
    return stats[lo] * (1 - frac) + stats[hi] * frac;
  };
  return {quantile(alpha / 2), quantile(1 - alpha / 2)};
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  MG_CHECK(x.size() == y.size() && x.size() >= 2, "pearson: need matched samples");
  double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  MG_CHECK(sxx > 0 && syy > 0, "pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

// Continued-fraction evaluation of the regularized incomplete beta (modified
// Lentz method).
namespace {
double betacf(double a, double b, double x) {
  const double tiny = 1e-300, eps = 1e-14;
  double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1) < eps) break;
  }
  return h;
}
}  // namespace

double incomplete_beta(double a, double b, double x) {
  MG_CHECK(a > 0 && b > 0 && x >= 0 && x <= 1, "incomplete_beta: bad arguments");
  if (x == 0) return 0;
  if (x == 1) return 1;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1) / (a + b + 2)) return front * betacf(a, b, x) / a;
  return 1 - front * betacf(b, a, 1 - x) / b;
}

double incomplete_gamma(double a, double x) {
  MG_CHECK(a > 0 && x >= 0, "incomplete_gamma: bad arguments");
  if (x == 0) return 0;
  if (x < a + 1) {  // series
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // continued fraction for Q, then complement
  const double tiny = 1e-300;
  double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-15) break;
  }
  double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1 - q;
}

double student_t_sf(double t, double nu) {
  MG_CHECK(nu > 0, "student_t_sf: bad degrees of freedom");
  if (t < 0) return 1 - student_t_sf(-t, nu);
  double x = nu / (nu + t * t);
  return 0.5 * incomplete_beta(nu / 2, 0.5, x);
}

double pearson_p_value(double r, int n) {
  MG_CHECK(n >= 3, "pearson_p_value: need n >= 3");
  double r2 = std::min(r * r, 1.0 - 1e-15);
  double t = std::abs(r) * std::sqrt((n - 2) / (1 - r2));
  return 2 * student_t_sf(t, n - 2);
}

TTestResult t_test_greater_zero(const std::vector<double>& x) {
  MG_CHECK(x.size() >= 2, "t_test: need at least two samples");
  TTestResult out;
  double se = sample_std(x) / std::sqrt(static_cast<double>(x.size()));
  MG_CHECK(se > 0, "t_test: zero variance");
  out.t = mean(x) / se;
  double nu = static_cast<double>(x.size() - 1);
  out.p_greater = student_t_sf(out.t, nu);
  out.p_two_sided = 2 * student_t_sf(std::abs(out.t), nu);
  return out;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  MG_CHECK(a.size() == b.size(), "paired_t_test: unmatched samples");
  std::vector<double> d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return t_test_greater_zero(d);
}

double chi_squared_p_value(const std::vector<double>& observed,
                           const std::vector<double>& expected) {
  MG_CHECK(observed.size() == expected.size() && observed.size() >= 2,
           "chi_squared: bad inputs");
  double x2 = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    MG_CHECK(expected[i] > 0, "chi_squared: nonpositive expected count");
    double d = observed[i] - expected[i];
    x2 += d * d / expected[i];
  }
  double k = static_cast<double>(observed.size() - 1);
  return 1 - incomplete_gamma(k / 2, x2 / 2);
}

}  // namespace metagrid
