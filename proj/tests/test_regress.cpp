#include <doctest.h>

#include "boneage/core_data.hpp"
#include "boneage/error.hpp"
#include "boneage/features.hpp"
#include "boneage/regress.hpp"
#include "boneage/stats.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <random>

using namespace boneage;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd X(n, m);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng);
  return X;
}

std::vector<BoneSample> samples_from(const Dataset& ds) {
  std::vector<BoneSample> out;
  for (const auto& r : ds.records) out.push_back({r.subject, r.bone, extract_features(r)});
  return out;
}

}  // namespace

TEST_CASE("exact line is recovered") {
  Eigen::MatrixXd X(5, 1);
  X << 0, 1, 2, 3, 4;
  Eigen::VectorXd y = (2.0 * X.col(0)).array() + 1.0;
  auto m = fit_ols(X, y, TransformSpec::identity());
  CHECK(m.coefficients(0) == doctest::Approx(1.0));
  CHECK(m.coefficients(1) == doctest::Approx(2.0));
  CHECK(m.r2 == doctest::Approx(1.0));
  CHECK(m.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("high leverage point with zero residual has zero cook distance") {
  Eigen::MatrixXd X(6, 1);
  X << 0, 1, 2, 3, 4, 40;
  Eigen::VectorXd y(6);
  y << 1.1, 2.9, 5.2, 6.8, 9.0, 0.0;
  auto first = fit_ols(X.topRows(5), y.head(5), TransformSpec::identity());
  y(5) = first.coefficients(0) + first.coefficients(1) * 40.0;
  auto m = fit_ols(X, y, TransformSpec::identity());
  CHECK(m.leverage(5) > 0.9);
  CHECK(m.cooks_distance(5) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("coefficients match normal equations") {
  auto X = random_matrix(20, 3, 12);
  Eigen::VectorXd y = random_matrix(20, 1, 13).col(0);
  auto m = fit_ols(X, y, TransformSpec::identity());
  auto beta = oracle::normal_equations(oracle::with_intercept(X), y);
  CHECK((m.coefficients - beta).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(m.leverage.sum() == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("press residuals equal refit residuals") {
  auto X = random_matrix(15, 2, 3);
  Eigen::VectorXd y = X.col(0) * 1.5 + random_matrix(15, 1, 4).col(0);
  auto m = fit_ols(X, y, TransformSpec::identity());
  auto press = m.press_residuals();
  for (Eigen::Index i = 0; i < 15; ++i) {
    Eigen::MatrixXd Xi(14, 2);
    Eigen::VectorXd yi(14);
    for (Eigen::Index r = 0, k = 0; r < 15; ++r)
      if (r != i) {
        Xi.row(k) = X.row(r);
        yi(k++) = y(r);
      }
    auto mi = fit_ols(Xi, yi, TransformSpec::identity());
    const double pred = mi.coefficients(0) + X.row(i).dot(mi.coefficients.tail(2));
    CHECK(press(i) == doctest::Approx(y(i) - pred).epsilon(1e-8));
  }
}

TEST_CASE("collinear column is named") {
  auto X = random_matrix(10, 2, 1);
  Eigen::MatrixXd Xc(10, 3);
  Xc << X, X.col(0) * 2.0;
  try {
    fit_ols(Xc, X.col(1), TransformSpec::identity(), {"u", "v", "w"});
    FAIL("expected collinearity");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find('w') != std::string::npos);
  }
}

TEST_CASE("box-cox profile") {
  auto X = random_matrix(200, 1, 5);
  Eigen::VectorXd noise = random_matrix(200, 1, 6).col(0) * 0.2;
  Eigen::VectorXd lin = (X.col(0) * 0.5 + noise).array() + 20.0;
  CHECK(std::abs(boxcox_profile(X, lin, 0.0, default_lambda_grid()).lambda - 1.0) <= 0.3);
  Eigen::VectorXd ex = (X.col(0) * 0.5 + noise).array().exp();
  CHECK(std::abs(boxcox_profile(X, ex, 0.0, default_lambda_grid()).lambda) <= 0.3);
  CHECK(boxcox_profile(X, lin, 0.0, {0.67}).lambda == 0.67);
}

TEST_CASE("heteroscedasticity check") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd X(300, 1);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) {
    X(i, 0) = 1.0 + 9.0 * i / 299.0;
    y(i) = 2.0 * X(i, 0) + nd(rng) * X(i, 0);
  }
  CHECK(heteroscedasticity_check(fit_ols(X, y, TransformSpec::identity())).p_value < 0.05);

  int calm = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto Xs = random_matrix(60, 1, 1000 + s);
    Eigen::VectorXd ys = Xs.col(0) + random_matrix(60, 1, 5000 + s).col(0);
    calm += heteroscedasticity_check(fit_ols(Xs, ys, TransformSpec::identity())).p_value > 0.05;
  }
  CHECK(calm >= 90);
}

TEST_CASE("normality statistics on hand samples") {
  Eigen::VectorXd s3(3);
  s3 << 1, 2, 3;
  CHECK(stats::shapiro_wilk(s3).statistic == doctest::Approx(1.0));
  // moments: skew 0, kurtosis 6/2 = 3
  Eigen::VectorXd k3(6);
  k3 << -1, 0, 0, 0, 0, 1;
  CHECK(stats::kurtosis(k3) == doctest::Approx(3.0));
  CHECK(stats::jarque_bera(k3).statistic == doctest::Approx(0.0).scale(1.0));
  Eigen::VectorXd bimodal(200);
  for (int i = 0; i < 200; ++i) bimodal(i) = (i % 2 ? 5.0 : -5.0) + 0.01 * i / 200.0;
  CHECK(stats::jarque_bera(bimodal).p_value < 0.01);
}

TEST_CASE("stepwise picks the single driving term") {
  auto X = random_matrix(80, 5, 31);
  DesignPool pool{{"x0", "x1", "x2", "x3", "x4"}, std::vector<bool>(5, false), X};
  Eigen::VectorXd y = 3.0 * X.col(2);
  y.array() += 1.0;
  auto m = stepwise_aic(pool, y, TransformSpec::identity(), false);
  REQUIRE_FALSE(m.terms.empty());
  CHECK(m.terms.front() == Term{2, -1});
  CHECK(m.terms.size() <= 2);
}

TEST_CASE("stepwise beats every single term and aic strictly falls") {
  auto X = random_matrix(60, 4, 41);
  Eigen::VectorXd y = X.col(0) - 0.5 * X.col(3) + 0.7 * random_matrix(60, 1, 42).col(0);
  DesignPool pool{{"a", "b", "c", "d"}, std::vector<bool>(4, false), X};
  auto m = stepwise_aic(pool, y, TransformSpec::identity(), false);
  for (int j = 0; j < 4; ++j) {
    auto single = oracle::rss(X.col(j), y);
    CHECK(m.aic <= oracle::aic(60, single, 2) + 1e-9);
  }
  for (std::size_t i = 1; i < m.aic_path.size(); ++i) CHECK(m.aic_path[i] < m.aic_path[i - 1]);
  auto expect = oracle::forward_from_subset_table(X, y);
  std::set<int> got;
  for (const auto& t : m.terms) got.insert(t.a);
  CHECK(got == expect);
}

TEST_CASE("pure noise selects few terms") {
  std::vector<std::size_t> sizes;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto X = random_matrix(40, 5, 100 + s);
    DesignPool pool{{"a", "b", "c", "d", "e"}, std::vector<bool>(5, false), X};
    sizes.push_back(stepwise_aic(pool, random_matrix(40, 1, 900 + s).col(0), TransformSpec::identity(), false).terms.size());
  }
  std::nth_element(sizes.begin(), sizes.begin() + 50, sizes.end());
  CHECK(sizes[50] <= 1);
}

TEST_CASE("fusion rule") {
  auto a = fuse_predictions({5.0, 5.5, 9.0});
  CHECK(a.value == doctest::Approx(5.25));
  CHECK(a.discarded == std::vector<bool>{false, false, true});
  CHECK(fuse_predictions({5.0, 8.0}).value == doctest::Approx(6.5));
  auto c = fuse_predictions({4.0, 6.1, 8.2});
  CHECK(c.all_discordant);
  CHECK(c.value == doctest::Approx(6.1).epsilon(1e-12));
  CHECK(fuse_predictions({9.0, 5.5, 5.0}).value == doctest::Approx(5.25));
}

TEST_CASE("power transform round trip") {
  auto t = TransformSpec::power(0.67);
  for (double y : {0.5, 2.0, 7.3, 17.9}) CHECK(t.inverse(t.apply(y)) == doctest::Approx(y).epsilon(1e-12));
  CHECK_THROWS_AS(t.apply(-1.0), DataError);
}

TEST_CASE("prediction interval centre and collapse") {
  auto X = random_matrix(30, 2, 77);
  Eigen::VectorXd y = (X.col(0) + 0.3 * random_matrix(30, 1, 78).col(0)).array() + 10.0;
  auto m = fit_ols(X, y, TransformSpec::identity());
  Eigen::RowVectorXd mean = X.colwise().mean();
  auto pi = prediction_interval(m, mean, 0.95);
  CHECK(pi.fit == doctest::Approx(y.mean()));
  CHECK((pi.lo + pi.hi) / 2 == doctest::Approx(pi.fit));
  CHECK_FALSE(pi.extrapolation);
  auto tiny = prediction_interval(m, mean, 1e-9);
  CHECK(tiny.hi - tiny.lo < 1e-6);
  Eigen::RowVectorXd far = mean.array() + 100.0;
  CHECK(prediction_interval(m, far, 0.95).extrapolation);
}

TEST_CASE("bone bank structure, shift equivariance and json") {
  auto samples = samples_from(generate_synthetic(150, 1, {}));
  auto bank = train_bone_bank(samples, FactorSet::None);
  for (auto b : kAllBones) {
    CHECK(bank.model(b, true).transform.kind == TransformKind::Power);
    CHECK(bank.model(b, false).transform.kind == TransformKind::Identity);
  }
  auto names = pool_names(true, FactorSet::None);
  CHECK(std::find(names.begin(), names.end(), "f25") != names.end());
  auto plain = pool_names(false, FactorSet::None);
  CHECK(std::find(plain.begin(), plain.end(), "f16") == plain.end());

  auto shifted = samples;
  for (auto& s : shifted) s.subject.age_years += 3.0;
  auto bank2 = train_bone_bank(shifted, FactorSet::None);
  const auto& m1 = bank.model(BoneKind::Middle, false);
  const auto& m2 = bank2.model(BoneKind::Middle, false);
  CHECK(m1.terms == m2.terms);
  CHECK(m2.coefficients(0) - m1.coefficients(0) == doctest::Approx(3.0));

  auto back = bank_from_json(nlohmann::json::parse(bank_to_json(bank).dump()));
  std::vector<BoneSample> one;
  for (const auto& s : samples)
    if (s.subject.subject_id == samples[0].subject.subject_id) one.push_back(s);
  CHECK(predict_age(back, one).fused == doctest::Approx(predict_age(bank, one).fused).epsilon(1e-12));
}

TEST_CASE("sex offset makes the dummy enter") {
  GeneratorConfig cfg;
  cfg.female_age_offset = 1.0;
  auto samples = samples_from(generate_synthetic(400, 1, cfg));
  auto bank = train_bone_bank(samples, FactorSet::Sex);
  bool used = false;
  for (auto b : kAllBones)
    for (bool e : {true, false})
      for (const auto& n : bank.model(b, e).term_names) used = used || n == "s";
  CHECK(used);
}

TEST_CASE("factor set parsing") {
  CHECK(parse_factor_set("none") == FactorSet::None);
  CHECK(parse_factor_set("sex") == FactorSet::Sex);
  CHECK(parse_factor_set("sex,ethnicity") == FactorSet::SexEthnicity);
  CHECK_THROWS(parse_factor_set("height"));
}
