#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace fairkit {

/// Spearman rank correlation with average ranks for ties.
/// Undefined (nullopt) when fewer than 2 points or either side is constant.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// One-sided sign test: p-value of observing >= wins successes in
/// wins + losses fair coin flips. Ties must already be excluded.
double sign_test_pvalue(int wins, int losses);

/// Two-sided one-sample Kolmogorov-Smirnov statistic against U[0,1].
double ks_statistic_uniform(std::vector<double> samples);

/// Asymptotic KS critical value at significance alpha for n samples.
double ks_critical_value(std::size_t n, double alpha);

/// Upper-tail chi-square p-value, P(X >= statistic) with df degrees of freedom.
double chi_square_pvalue(double statistic, double df);

/// Mean and (n-1) standard deviation. stddev is 0 for n < 2.
struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};
MeanStd mean_std(const std::vector<double>& xs);

}  // namespace fairkit
