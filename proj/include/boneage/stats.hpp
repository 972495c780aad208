#pragma once

#include <Eigen/Dense>

namespace boneage::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

double normal_cdf(double z);
double normal_quantile(double p);
double t_quantile(double p, double df);
/// Two-sided p-value of a t statistic.
double t_two_sided_p(double t, double df);
double chi2_sf(double x, double df);
/// P(X <= k) for X ~ Binomial(n, p).
double binomial_cdf(int k, int n, double p);

double mean(const Eigen::Ref<const Eigen::VectorXd>& x);
/// Population (biased) skewness g1 and kurtosis b2 (normal = 3).
double skewness(const Eigen::Ref<const Eigen::VectorXd>& x);
double kurtosis(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Pearson r with the two-sided t-test of r = 0 (n - 2 df). statistic = r.
TestResult pearson_test(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Royston's (1995) approximation, valid for 3 <= n <= 5000. statistic = W.
TestResult shapiro_wilk(const Eigen::Ref<const Eigen::VectorXd>& x);
/// D'Agostino's skewness test, n >= 8. statistic = z.
TestResult dagostino_skewness(const Eigen::Ref<const Eigen::VectorXd>& x);
/// JB = n/6 (S^2 + (K - 3)^2 / 4), chi-square(2) p-value. n >= 3.
TestResult jarque_bera(const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace boneage::stats
