#include <doctest.h>

#include "boneage/elastic.hpp"
#include "boneage/error.hpp"
#include "boneage/shapelets.hpp"
#include "oracles.hpp"

#include <random>

using namespace boneage;

namespace {

Eigen::VectorXd vec(const oracle::Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

std::vector<ElasticMeasure> all_measures() {
  return {ElasticMeasure::euclidean(), ElasticMeasure::dtw(0.3), ElasticMeasure::wdtw(0.1),
          ElasticMeasure::lcss(0.5, 2), ElasticMeasure::erp(0.0, 3), ElasticMeasure::twed(0.01, 0.5),
          ElasticMeasure::msm(0.5)};
}

RadialSeries constant_series(double v, TWStage s) {
  RadialSeries r;
  r.values.setConstant(v);
  r.label = s;
  return r;
}

}  // namespace

TEST_CASE("identical series are at distance zero") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  Eigen::VectorXd a(12);
  for (auto& x : a) x = nd(rng);
  for (const auto& m : all_measures()) CHECK(elastic_distance(m, a, a) == doctest::Approx(0.0));
}

TEST_CASE("toy values from the enumeration oracles") {
  CHECK(elastic_distance(ElasticMeasure::dtw(1.0), vec({1, 2, 3}), vec({1, 3, 3})) == doctest::Approx(1.0));
  CHECK(oracle::dtw({1, 2, 3}, {1, 3, 3}, 1.0) == doctest::Approx(1.0));
  CHECK(elastic_distance(ElasticMeasure::lcss(0.5), vec({1, 2, 3}), vec({1, 2, 4})) == doctest::Approx(1.0 / 3));
  CHECK(elastic_distance(ElasticMeasure::erp(0.0), vec({1, 2}), vec({2, 2})) ==
        doctest::Approx(oracle::erp({1, 2}, {2, 2}, 0.0, std::nullopt)));
}

TEST_CASE("dynamic programs match exhaustive enumeration") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int rep = 0; rep < 15; ++rep) {
    const int n = 2 + rep % 4;
    oracle::Vec a(n), b(n);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const auto A = vec(a), B = vec(b);
    CHECK(elastic_distance(ElasticMeasure::dtw(0.5), A, B) == doctest::Approx(oracle::dtw(a, b, 0.5)).epsilon(1e-9));
    CHECK(elastic_distance(ElasticMeasure::wdtw(0.3), A, B) == doctest::Approx(oracle::wdtw(a, b, 0.3)).epsilon(1e-9));
    CHECK(elastic_distance(ElasticMeasure::lcss(0.6, 1), A, B) == doctest::Approx(oracle::lcss(a, b, 0.6, 1)));
    CHECK(elastic_distance(ElasticMeasure::erp(0.2, std::nullopt), A, B) ==
          doctest::Approx(oracle::erp(a, b, 0.2, std::nullopt)).epsilon(1e-9));
    CHECK(elastic_distance(ElasticMeasure::twed(0.1, 0.2), A, B) == doctest::Approx(oracle::twed(a, b, 0.1, 0.2)).epsilon(1e-9));
    CHECK(elastic_distance(ElasticMeasure::msm(0.4), A, B) == doctest::Approx(oracle::msm(a, b, 0.4)).epsilon(1e-9));
  }
}

TEST_CASE("symmetry, dtw window monotonicity, zero window is euclidean") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  Eigen::VectorXd a(30), b(30);
  for (auto& x : a) x = nd(rng);
  for (auto& x : b) x = nd(rng);
  for (const auto& m : {ElasticMeasure::euclidean(), ElasticMeasure::dtw(0.2), ElasticMeasure::wdtw(0.05),
                        ElasticMeasure::msm(1.0), ElasticMeasure::twed(0.001, 1.0)})
    CHECK(elastic_distance(m, a, b) == elastic_distance(m, b, a));
  CHECK(elastic_distance(ElasticMeasure::dtw(0.0), a, b) == doctest::Approx(elastic_distance(ElasticMeasure::euclidean(), a, b)));
  double last = elastic_distance(ElasticMeasure::dtw(0.0), a, b);
  for (double w = 0.05; w <= 1.0; w += 0.05) {
    const double d = elastic_distance(ElasticMeasure::dtw(w), a, b);
    CHECK(d <= last + 1e-12);
    last = d;
  }
}

TEST_CASE("length mismatch and bad parameters") {
  CHECK_THROWS_AS(elastic_distance(ElasticMeasure::dtw(0.1), vec({1, 2}), vec({1, 2, 3})), UsageError);
  CHECK_THROWS(elastic_distance(ElasticMeasure::dtw(1.5), vec({1, 2}), vec({1, 2})));
  CHECK_THROWS(elastic_distance(ElasticMeasure::msm(0.0), vec({1, 2}), vec({1, 2})));
}

TEST_CASE("weighted vote combination") {
  auto p = combine_votes({stage_index(TWStage::F), stage_index(TWStage::G)}, {0.9, 0.1});
  CHECK(p.stage == TWStage::F);
  CHECK(p.scores[stage_index(TWStage::F)] == doctest::Approx(0.9));
  CHECK(p.scores[stage_index(TWStage::G)] == doctest::Approx(0.1));
  auto tie = combine_votes({stage_index(TWStage::G), stage_index(TWStage::D)}, {0.5, 0.5});
  CHECK(tie.stage == TWStage::D);
  auto swapped = combine_votes({stage_index(TWStage::G), stage_index(TWStage::F)}, {0.1, 0.9});
  CHECK(swapped.scores == p.scores);
}

TEST_CASE("separable constant series give perfect members") {
  std::vector<RadialSeries> train;
  for (int i = 0; i < 6; ++i) {
    train.push_back(constant_series(0.0 + 0.01 * i, TWStage::C));
    train.push_back(constant_series(100.0 + 0.01 * i, TWStage::H));
  }
  Eigen::VectorXd d(1);
  auto grids = default_grids(pooled_std(train));
  auto model = train_elastic_ensemble(train, 3, grids, 1);
  REQUIRE_FALSE(model.members.empty());
  for (const auto& m : model.members) CHECK(m.weight == doctest::Approx(1.0));
  auto p = predict_elastic(model, train[3]);
  CHECK(p.stage == *train[3].label);
  CHECK(p.scores[stage_index(*train[3].label)] == doctest::Approx(1.0));
}

TEST_CASE("one instance per class with leave-one-out") {
  std::vector<RadialSeries> train{constant_series(1.0, TWStage::D), constant_series(5.0, TWStage::E)};
  std::vector<ParameterGrid> grids{{MeasureKind::DTW, {ElasticMeasure::dtw(0.0), ElasticMeasure::dtw(0.1)}}};
  auto model = train_elastic_ensemble(train, 1, grids, 0);
  for (const auto& m : model.members) {
    CHECK(m.weight >= 0.0);
    CHECK(m.weight <= 1.0);
  }
}

TEST_CASE("empty grid is an error") {
  std::vector<RadialSeries> train{constant_series(1.0, TWStage::D), constant_series(5.0, TWStage::E)};
  std::vector<ParameterGrid> grids{{MeasureKind::DTW, {}}};
  CHECK_THROWS(train_elastic_ensemble(train, 1, grids, 0));
}

TEST_CASE("z normalization and its zero variance guard") {
  auto z = z_normalize(vec({1, 2, 3}));
  CHECK(z.mean() == doctest::Approx(0.0));
  CHECK(z.norm() == doctest::Approx(std::sqrt(3.0)));
  CHECK(z_normalize(vec({4, 4, 4})).isZero());
}

TEST_CASE("spike shapelet separates classes perfectly") {
  std::vector<Eigen::VectorXd> series;
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(10);
    a.segment(2 + i, 3) << 0, 5, 0;
    series.push_back(a);
    labels.push_back(0);
    series.push_back(Eigen::VectorXd::Zero(10));
    labels.push_back(1);
  }
  ShapeletConfig cfg;
  cfg.min_len = cfg.max_len = 3;
  cfg.k = 1;
  auto model = discover_shapelets(series, labels, cfg);
  REQUIRE(model.shapelets.size() == 1);
  const auto& s = model.shapelets[0];
  CHECK(s.quality == doctest::Approx(1.0));
  // any window touching the spike splits perfectly; the earliest one wins the tie
  CHECK(labels[static_cast<std::size_t>(s.series_index)] == 0);
  CHECK((s.values - z_normalize(series[static_cast<std::size_t>(s.series_index)].segment(s.offset, 3))).norm() < 1e-12);

  // with the spike filling the whole series only the spike window exists
  std::vector<Eigen::VectorXd> tight{vec({0, 5, 0}), vec({0, 0, 0}), vec({0, 5, 0}), vec({0, 0, 0})};
  auto m2 = discover_shapelets(tight, {0, 1, 0, 1}, cfg);
  REQUIRE(m2.shapelets.size() == 1);
  CHECK(m2.shapelets[0].quality == doctest::Approx(1.0));
  CHECK((m2.shapelets[0].values - z_normalize(vec({0, 5, 0}))).norm() < 1e-12);
}

TEST_CASE("k larger than the candidate pool returns everything left") {
  std::vector<Eigen::VectorXd> series{vec({0, 1, 0, 2}), vec({3, 1, 2, 0})};
  ShapeletConfig cfg;
  cfg.min_len = cfg.max_len = 3;
  cfg.k = 50;
  auto model = discover_shapelets(series, {0, 1}, cfg);
  CHECK(model.shapelets.size() >= 2);
  CHECK(model.shapelets.size() <= 4);
  for (std::size_t i = 1; i < model.shapelets.size(); ++i)
    CHECK(model.shapelets[i].quality <= model.shapelets[i - 1].quality);
}

TEST_CASE("top shapelet and transform match brute force") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  std::vector<oracle::Vec> raw;
  std::vector<Eigen::VectorXd> series;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    oracle::Vec v(10);
    for (auto& x : v) x = nd(rng);
    if (i % 2) v[4] += 4.0;
    raw.push_back(v);
    series.push_back(vec(v));
    labels.push_back(i % 2);
  }
  ShapeletConfig cfg;
  cfg.min_len = cfg.max_len = 4;
  cfg.k = 3;
  auto model = discover_shapelets(series, labels, cfg);
  auto best = oracle::best_shapelet(raw, labels, 4, 4);
  CHECK(model.shapelets[0].quality == doctest::Approx(best.gain).epsilon(1e-12));

  auto T = shapelet_transform(model, series);
  for (int i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < model.shapelets.size(); ++j) {
      const auto& s = model.shapelets[j];
      oracle::Vec sv(s.values.data(), s.values.data() + s.values.size());
      CHECK(T(i, static_cast<Eigen::Index>(j)) == doctest::Approx(oracle::subseq_dist(sv, raw[i])).epsilon(1e-9));
    }
  for (std::size_t j = 0; j < model.shapelets.size(); ++j)
    CHECK(T(model.shapelets[j].series_index, static_cast<Eigen::Index>(j)) == doctest::Approx(0.0));
}

TEST_CASE("constant series against a shapelet") {
  auto s = z_normalize(vec({0, 5, 0}));
  CHECK(subsequence_distance(s, vec({2, 2, 2, 2, 2})) == doctest::Approx(s.squaredNorm() / 3));
  CHECK_THROWS(subsequence_distance(s, vec({1, 2})));
}
