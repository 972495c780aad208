#include <doctest.h>

#include "boneage/error.hpp"
#include "boneage/learners.hpp"

#include <random>

using namespace boneage;

namespace {

struct Toy {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

// two blobs far apart in 2-D
Toy blobs(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  Toy t;
  t.X.resize(2 * per_class, 2);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i % 2;
    t.X(i, 0) = (c ? 3.0 : -3.0) + nd(rng);
    t.X(i, 1) = (c ? 1.0 : -1.0) + nd(rng);
    t.y.push_back(c + 2);
  }
  return t;
}

double train_accuracy(Classifier& c, const Toy& t) {
  auto p = c.predict(t.X);
  int ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == t.y[i];
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

const ClassifierKind kAll[] = {ClassifierKind::KNN,          ClassifierKind::NaiveBayes, ClassifierKind::DecisionTree,
                               ClassifierKind::RandomForest, ClassifierKind::SVMLinear,  ClassifierKind::SVMQuadratic};

}  // namespace

TEST_CASE("every classifier separates two blobs and scores sum to one") {
  auto t = blobs(15, 3);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    auto c = make_classifier(kind);
    c->fit(t.X, t.y, 5);
    CHECK(train_accuracy(*c, t) >= 0.95);
    auto S = c->predict_scores(t.X);
    CHECK(S.minCoeff() >= 0.0);
    CHECK((S.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(c->predict(t.X.topRows(1)).size() == 1);
  }
}

TEST_CASE("fitting is deterministic and survives json") {
  auto t = blobs(12, 9);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    auto a = make_classifier(kind);
    auto b = make_classifier(kind);
    a->fit(t.X, t.y, 17);
    b->fit(t.X, t.y, 17);
    CHECK(a->to_json() == b->to_json());
    auto c = Classifier::from_json(nlohmann::json::parse(a->to_json().dump()));
    CHECK(c->predict_scores(t.X).isApprox(a->predict_scores(t.X), 1e-12));
  }
}

TEST_CASE("input validation") {
  auto t = blobs(5, 1);
  auto c = make_classifier(ClassifierKind::NaiveBayes);
  CHECK_THROWS(c->predict(t.X));
  CHECK_THROWS(c->fit(t.X, std::vector<int>(t.y.size(), 1), 0));
  c->fit(t.X, t.y, 0);
  CHECK_THROWS(c->predict(Eigen::MatrixXd::Zero(2, 3)));
}

TEST_CASE("one nearest neighbour returns a training point's label") {
  auto t = blobs(6, 2);
  ClassifierParams p;
  p.knn_k = 1;
  auto c = make_classifier(ClassifierKind::KNN, p);
  c->fit(t.X, t.y, 0);
  CHECK(c->predict(t.X) == t.y);
}

TEST_CASE("naive bayes boundary sits at the equal-likelihood point") {
  Eigen::MatrixXd X(4, 1);
  X << -1, 1, 3, 5;
  NaiveBayesClassifier nb({});
  nb.fit(X, {0, 0, 1, 1}, 0);
  CHECK(nb.means()(0, 0) == doctest::Approx(0.0));
  CHECK(nb.means()(1, 0) == doctest::Approx(4.0));
  Eigen::MatrixXd q(3, 1);
  q << 2.0, 1.999, 2.001;
  auto S = nb.predict_scores(q);
  CHECK(S(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(S(1, 0) > 0.5);
  CHECK(S(2, 1) > 0.5);
}

TEST_CASE("unpruned tree fits consistent data exactly") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd X(40, 3);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = u(rng);
    y.push_back(static_cast<int>(rng() % 3));
  }
  ClassifierParams p;
  p.tree_min_leaf = 1;
  auto c = make_classifier(ClassifierKind::DecisionTree, p);
  c->fit(X, y, 0);
  CHECK(c->predict(X) == y);
}

TEST_CASE("forest has one hundred trees") {
  auto t = blobs(10, 4);
  RandomForestClassifier rf({});
  rf.fit(t.X, t.y, 1);
  CHECK(rf.tree_count() == 100);
}

TEST_CASE("quadratic kernel solves xor") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, -1, -1, 1, -1, -1, 1;
  std::vector<int> y{0, 0, 1, 1};
  auto c = make_classifier(ClassifierKind::SVMQuadratic);
  c->fit(X, y, 0);
  CHECK(c->predict(X) == y);
  CHECK(kernel_value(KernelKind::Quadratic, X.row(0), X.row(2)) == doctest::Approx(1.0));
}

TEST_CASE("smo respects the dual constraints") {
  auto t = blobs(10, 8);
  Eigen::VectorXd y(t.X.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = t.y[static_cast<std::size_t>(i)] == 2 ? -1.0 : 1.0;
  const double C = 1.0;
  auto r = smo_train(t.X, y, KernelKind::Linear, C, 1e-3, 10, 0);
  CHECK(r.alpha.minCoeff() >= 0.0);
  CHECK(r.alpha.maxCoeff() <= C + 1e-12);
  CHECK(std::abs(r.alpha.dot(y)) < 1e-6);
}
