#include "boneage/stats.hpp"

#include "boneage/error.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace boneage::stats {

namespace bm = boost::math;

double normal_cdf(double z) { return bm::cdf(bm::normal(), z); }
double normal_quantile(double p) { return bm::quantile(bm::normal(), p); }

double t_quantile(double p, double df) { return bm::quantile(bm::students_t(df), p); }

double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return 2.0 * bm::cdf(bm::complement(bm::students_t(df), std::abs(t)));
}

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return bm::cdf(bm::complement(bm::chi_squared(df), x));
}

double binomial_cdf(int k, int n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  return bm::cdf(bm::binomial(n, p), k);
}

double mean(const Eigen::Ref<const Eigen::VectorXd>& x) { return x.mean(); }

namespace {

struct Moments {
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

Moments central_moments(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double mu = x.mean();
  const Eigen::ArrayXd d = x.array() - mu;
  const double n = static_cast<double>(x.size());
  return {d.square().sum() / n, d.cube().sum() / n, d.square().square().sum() / n};
}

double poly(const double* c, int order, double x) {
  double r = c[0];
  if (order > 1) {
    double p = x * c[order - 1];
    for (int j = order - 2; j > 0; --j) p = (p + c[j]) * x;
    r += p;
  }
  return r;
}

}  // namespace

double skewness(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Moments m = central_moments(x);
  return m.m2 > 0.0 ? m.m3 / std::pow(m.m2, 1.5) : 0.0;
}

double kurtosis(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Moments m = central_moments(x);
  return m.m2 > 0.0 ? m.m4 / (m.m2 * m.m2) : 0.0;
}

TestResult pearson_test(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = x.size();
  if (n != y.size() || n < 3) throw UsageError("pearson_test: need equal lengths >= 3");
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = dx.square().sum(), syy = dy.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) return {0.0, 1.0};
  const double r = std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return {r, 0.0};
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return {r, t_two_sided_p(t, df)};
}

TestResult shapiro_wilk(const Eigen::Ref<const Eigen::VectorXd>& xin) {
  const Eigen::Index n = xin.size();
  if (n < 3) throw UsageError("shapiro_wilk: n must be >= 3");
  if (n > 5000) throw UsageError("shapiro_wilk: n must be <= 5000");
  std::vector<double> x(xin.data(), xin.data() + n);
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::abs(x.front())))) throw NumericError("shapiro_wilk: all values identical");

  static constexpr double g[2] = {-2.273, 0.459};
  static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

  const Eigen::Index half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(static_cast<std::size_t>(half));
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(static_cast<std::size_t>(half));
    double summ2 = 0.0;
    for (Eigen::Index i = 0; i < half; ++i) {
      m[static_cast<std::size_t>(i)] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[static_cast<std::size_t>(i)] * m[static_cast<std::size_t>(i)];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
    std::size_t first = 1;
    double fac = 0.0;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < a.size(); ++i) a[i] = -m[i] / fac;
  }

  double num = 0.0;
  for (Eigen::Index i = 0; i < half; ++i)
    num += a[static_cast<std::size_t>(i)] * (x[static_cast<std::size_t>(n - 1 - i)] - x[static_cast<std::size_t>(i)]);
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / an;
  double ssq = 0.0;
  for (double v : x) ssq += (v - mu) * (v - mu);
  const double w = std::min(1.0, num * num / ssq);

  TestResult res{w, 1.0};
  if (n == 3) {
    const double pw = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75)));
    res.p_value = std::clamp(pw, 0.0, 1.0);
    return res;
  }
  if (w >= 1.0) return res;
  double w1 = std::log(1.0 - w);
  double mean_, sd;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (w1 >= gamma) {
      res.p_value = 1e-99;
      return res;
    }
    w1 = -std::log(gamma - w1);
    mean_ = poly(c3, 4, an);
    sd = std::exp(poly(c4, 4, an));
  } else {
    const double xx = std::log(an);
    mean_ = poly(c5, 4, xx);
    sd = std::exp(poly(c6, 3, xx));
  }
  res.p_value = bm::cdf(bm::complement(bm::normal(), (w1 - mean_) / sd));
  return res;
}

TestResult dagostino_skewness(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 8) throw UsageError(fmt::format("dagostino_skewness: n must be >= 8 (got {})", x.size()));
  const double b = skewness(x);
  const double y = b * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double z = delta * std::asinh(y / alpha);
  return {z, 2.0 * bm::cdf(bm::complement(bm::normal(), std::abs(z)))};
}

TestResult jarque_bera(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 3) throw UsageError("jarque_bera: n must be >= 3");
  const double n = static_cast<double>(x.size());
  const double s = skewness(x);
  const double k = kurtosis(x);
  const double jb = n / 6.0 * (s * s + 0.25 * (k - 3.0) * (k - 3.0));
  return {jb, chi2_sf(jb, 2.0)};
}

}  // namespace boneage::stats
