#pragma once

#include <vector>

#include "metagrid/rng.hpp"

namespace metagrid {

// Interquartile mean: drops the lowest and highest quarter (floor(n/4) each
// side) and averages the rest.
double iqm(std::vector<double> xs);

// Mean shortfall from a normalized score of 1: mean(max(1 - s, 0)).
double optimality_gap(const std::vector<double>& scores);

double mean(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);  // n-1 denominator

struct Interval {
  double lo = 0, hi = 0;
};

// Percentile bootstrap CI for a statistic of per-task score lists, resampling
// seeds within each task independently (stratified).
Interval stratified_bootstrap(const std::vector<std::vector<double>>& per_task,
                              double (*statistic)(std::vector<double>), int resamples, Rng& rng,
                              double alpha = 0.05);

// Pearson correlation and its two-sided p-value from the exact t
// distribution with n-2 degrees of freedom.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double pearson_p_value(double r, int n);

struct TTestResult {
  double t = 0;
  double p_two_sided = 1;
  double p_greater = 1;  // one-sided: mean(a) > mean(b)
};

// Paired t-test over matched samples (e.g. per-seed results of two methods).
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);
// One-sample t-test of mean(x) > 0.
TTestResult t_test_greater_zero(const std::vector<double>& x);

// Survival function of Student's t with nu degrees of freedom: P(T > t).
double student_t_sf(double t, double nu);

// Chi-squared goodness-of-fit p-value for observed counts against expected
// counts (upper tail).
double chi_squared_p_value(const std::vector<double>& observed,
                           const std::vector<double>& expected);

// Regularized incomplete beta function I_x(a, b); exposed because the
// distribution functions above are thin wrappers around it.
double incomplete_beta(double a, double b, double x);
// Regularized lower incomplete gamma P(a, x).
double incomplete_gamma(double a, double x);

}  // namespace metagrid
