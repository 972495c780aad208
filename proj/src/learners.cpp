#include "boneage/learners.hpp"

#include "boneage/error.hpp"
#include "boneage/evalkit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace boneage {

namespace {
constexpr std::array<std::string_view, 6> kClassifierNames{"knn", "naive_bayes", "decision_tree",
                                                            "random_forest", "svm_linear", "svm_quadratic"};

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = data.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json classifier_params_to_json(const ClassifierParams& p) {
  return {{"knn_k", p.knn_k},
          {"knn_max_k", p.knn_max_k},
          {"knn_folds", p.knn_folds},
          {"nb_variance_floor", p.nb_variance_floor},
          {"tree_min_leaf", p.tree_min_leaf},
          {"forest_trees", p.forest_trees},
          {"svm_c", p.svm_c},
          {"svm_tolerance", p.svm_tolerance},
          {"svm_max_passes", p.svm_max_passes}};
}

ClassifierParams classifier_params_from_json(const nlohmann::json& j, ClassifierParams p) {
  p.knn_k = j.value("knn_k", p.knn_k);
  p.knn_max_k = j.value("knn_max_k", p.knn_max_k);
  p.knn_folds = j.value("knn_folds", p.knn_folds);
  p.nb_variance_floor = j.value("nb_variance_floor", p.nb_variance_floor);
  p.tree_min_leaf = j.value("tree_min_leaf", p.tree_min_leaf);
  p.forest_trees = j.value("forest_trees", p.forest_trees);
  p.svm_c = j.value("svm_c", p.svm_c);
  p.svm_tolerance = j.value("svm_tolerance", p.svm_tolerance);
  p.svm_max_passes = j.value("svm_max_passes", p.svm_max_passes);
  return p;
}

std::string_view to_string(ClassifierKind k) noexcept { return kClassifierNames[static_cast<std::size_t>(k)]; }

ClassifierKind parse_classifier(std::string_view s) {
  for (std::size_t i = 0; i < kClassifierNames.size(); ++i)
    if (kClassifierNames[i] == s) return static_cast<ClassifierKind>(i);
  throw UsageError(fmt::format("unknown classifier '{}'", s));
}

Eigen::Index argmax_first(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = i;
  return best;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean();
  s.scale = ((X.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(X.rows())).sqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - mean).array().rowwise() / scale.array();
}

// ---------------------------------------------------------------------------
// Base class

void Classifier::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw DataError("fit: row/label count mismatch");
  if (X.rows() < 2) throw DataError("fit: need at least 2 rows");
  if (!X.allFinite()) throw DataError("fit: feature matrix has missing or non-finite values");
  std::vector<int> classes(y);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DataError("fit: need at least 2 classes");
  std::vector<int> pos(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    pos[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
  classes_ = std::move(classes);
  n_features_ = X.cols();
  fit_impl(X, pos, seed);
}

Eigen::MatrixXd Classifier::predict_scores(const Eigen::MatrixXd& X) const {
  if (!fitted()) throw UsageError("classifier is not fitted");
  if (X.cols() != n_features_)
    throw UsageError(fmt::format("dimension mismatch: model has {} features, input has {}", n_features_, X.cols()));
  return scores_impl(X);
}

std::vector<int> Classifier::predict_positions(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd s = scores_impl(X);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(argmax_first(s.row(i)));
  return out;
}

std::vector<int> Classifier::predict(const Eigen::MatrixXd& X) const {
  if (!fitted()) throw UsageError("classifier is not fitted");
  if (X.cols() != n_features_)
    throw UsageError(fmt::format("dimension mismatch: model has {} features, input has {}", n_features_, X.cols()));
  std::vector<int> pos = predict_positions(X);
  for (int& p : pos) p = classes_[static_cast<std::size_t>(p)];
  return pos;
}

nlohmann::json Classifier::to_json() const {
  return {{"kind", to_string(kind_)},
          {"params", classifier_params_to_json(params_)},
          {"classes", classes_},
          {"n_features", n_features_},
          {"state", state_json()}};
}

std::unique_ptr<Classifier> Classifier::from_json(const nlohmann::json& j) {
  try {
    auto c = make_classifier(parse_classifier(j.at("kind").get<std::string>()), classifier_params_from_json(j.at("params")));
    c->classes_ = j.at("classes").get<std::vector<int>>();
    c->n_features_ = j.at("n_features").get<Eigen::Index>();
    c->load_state(j.at("state"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed classifier JSON: {}", e.what()));
  }
}

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const ClassifierParams& params) {
  switch (kind) {
    case ClassifierKind::KNN: return std::make_unique<KnnClassifier>(params);
    case ClassifierKind::NaiveBayes: return std::make_unique<NaiveBayesClassifier>(params);
    case ClassifierKind::DecisionTree: return std::make_unique<DecisionTreeClassifier>(params);
    case ClassifierKind::RandomForest: return std::make_unique<RandomForestClassifier>(params);
    case ClassifierKind::SVMLinear:
    case ClassifierKind::SVMQuadratic: return std::make_unique<SvmClassifier>(kind, params);
  }
  throw UsageError("unknown classifier kind");
}

// ---------------------------------------------------------------------------
// k nearest neighbours

namespace {

// Neighbour order of `query` among `rows` of `train`: ascending distance, ties by index.
std::vector<int> neighbour_order(const Eigen::MatrixXd& train, const std::vector<int>& rows,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& query, std::size_t limit) {
  std::vector<std::pair<double, int>> d;
  d.reserve(rows.size());
  for (int r : rows) d.emplace_back((train.row(r) - query).squaredNorm(), r);
  limit = std::min(limit, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(limit), d.end());
  std::vector<int> out(limit);
  for (std::size_t i = 0; i < limit; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace

void KnnClassifier::fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) {
  scaler_ = Standardizer::fit(X);
  train_ = scaler_.apply(X);
  y_ = y;
  const int n = static_cast<int>(X.rows());
  if (params().knn_k > 0) {
    k_ = std::min(params().knn_k, n);
    return;
  }
  const int folds = std::min(params().knn_folds, n);
  const std::vector<int> fold = folds <= 1 ? loocv(static_cast<std::size_t>(n)) : stratified_kfold(y, folds, seed);
  const int n_folds = *std::max_element(fold.begin(), fold.end()) + 1;
  std::vector<int> fold_size(static_cast<std::size_t>(n_folds), 0);
  for (int f : fold) ++fold_size[static_cast<std::size_t>(f)];
  const int smallest_train = n - *std::max_element(fold_size.begin(), fold_size.end());
  const int kmax = std::max(1, std::min({params().knn_max_k, n - 1, smallest_train}));

  std::vector<int> correct(static_cast<std::size_t>(kmax) + 1, 0);
  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> tr;
    for (int i = 0; i < n; ++i)
      if (fold[static_cast<std::size_t>(i)] != f) tr.push_back(i);
    for (int i = 0; i < n; ++i) {
      if (fold[static_cast<std::size_t>(i)] != f) continue;
      const auto nb = neighbour_order(train_, tr, train_.row(i), static_cast<std::size_t>(kmax));
      std::vector<int> votes(n_classes(), 0);
      for (int k = 1; k <= kmax; ++k) {
        ++votes[static_cast<std::size_t>(y_[static_cast<std::size_t>(nb[static_cast<std::size_t>(k - 1)])])];
        const int pred = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        if (pred == y_[static_cast<std::size_t>(i)]) ++correct[static_cast<std::size_t>(k)];
      }
    }
  }
  k_ = 1;
  for (int k = 2; k <= kmax; ++k)
    if (correct[static_cast<std::size_t>(k)] > correct[static_cast<std::size_t>(k_)]) k_ = k;
}

Eigen::MatrixXd KnnClassifier::scores_impl(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd Z = scaler_.apply(X);
  std::vector<int> all(static_cast<std::size_t>(train_.rows()));
  std::iota(all.begin(), all.end(), 0);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(X.rows(), static_cast<Eigen::Index>(n_classes()));
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const auto nb = neighbour_order(train_, all, Z.row(i), static_cast<std::size_t>(k_));
    for (int r : nb) s(i, y_[static_cast<std::size_t>(r)]) += 1.0;
    s.row(i) /= static_cast<double>(nb.size());
  }
  return s;
}

nlohmann::json KnnClassifier::state_json() const {
  return {{"k", k_}, {"mean", vector_json(scaler_.mean.transpose())}, {"scale", vector_json(scaler_.scale.transpose())},
          {"train", matrix_json(train_)}, {"labels", y_}};
}

void KnnClassifier::load_state(const nlohmann::json& j) {
  k_ = j.at("k").get<int>();
  scaler_.mean = vector_from_json(j.at("mean")).transpose();
  scaler_.scale = vector_from_json(j.at("scale")).transpose();
  train_ = matrix_from_json(j.at("train"));
  y_ = j.at("labels").get<std::vector<int>>();
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

void NaiveBayesClassifier::fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t) {
  const auto c = static_cast<Eigen::Index>(n_classes());
  mean_ = Eigen::MatrixXd::Zero(c, X.cols());
  var_ = Eigen::MatrixXd::Zero(c, X.cols());
  prior_ = Eigen::VectorXd::Zero(c);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    mean_.row(y[static_cast<std::size_t>(i)]) += X.row(i);
    prior_(y[static_cast<std::size_t>(i)]) += 1.0;
  }
  for (Eigen::Index k = 0; k < c; ++k) mean_.row(k) /= prior_(k);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int k = y[static_cast<std::size_t>(i)];
    var_.row(k) += (X.row(i) - mean_.row(k)).array().square().matrix();
  }
  for (Eigen::Index k = 0; k < c; ++k) var_.row(k) /= prior_(k);
  var_ = var_.cwiseMax(params().nb_variance_floor);
  prior_ /= static_cast<double>(X.rows());
}

Eigen::MatrixXd NaiveBayesClassifier::scores_impl(const Eigen::MatrixXd& X) const {
  const Eigen::Index c = mean_.rows();
  Eigen::MatrixXd s(X.rows(), c);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < c; ++k) {
      const Eigen::ArrayXd d = (X.row(i) - mean_.row(k)).transpose().array();
      const Eigen::ArrayXd v = var_.row(k).transpose().array();
      s(i, k) = std::log(prior_(k)) - 0.5 * (log2pi + v.log() + d.square() / v).sum();
    }
    const double mx = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - mx).exp().matrix();
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

nlohmann::json NaiveBayesClassifier::state_json() const {
  return {{"mean", matrix_json(mean_)}, {"variance", matrix_json(var_)}, {"prior", vector_json(prior_)}};
}

void NaiveBayesClassifier::load_state(const nlohmann::json& j) {
  mean_ = matrix_from_json(j.at("mean"));
  var_ = matrix_from_json(j.at("variance"));
  prior_ = vector_from_json(j.at("prior"));
}

// ---------------------------------------------------------------------------
// Trees

namespace {

double entropy(const Eigen::VectorXd& counts, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (Eigen::Index k = 0; k < counts.size(); ++k)
    if (counts(k) > 0.0) {
      const double p = counts(k) / total;
      h -= p * std::log2(p);
    }
  return h;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  double ratio = 0.0;
};

// Best information-gain threshold for one feature.
SplitChoice best_split_for_feature(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& rows,
                                   int feature, int n_classes, int min_leaf, double parent_entropy) {
  std::vector<int> order(rows);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return X(a, feature) < X(b, feature); });
  const double n = static_cast<double>(order.size());
  Eigen::VectorXd left = Eigen::VectorXd::Zero(n_classes), right = Eigen::VectorXd::Zero(n_classes);
  for (int r : order) right(y[static_cast<std::size_t>(r)]) += 1.0;
  SplitChoice best;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const int r = order[i];
    left(y[static_cast<std::size_t>(r)]) += 1.0;
    right(y[static_cast<std::size_t>(r)]) -= 1.0;
    const double v0 = X(r, feature), v1 = X(order[i + 1], feature);
    if (!(v1 > v0)) continue;
    const double nl = static_cast<double>(i + 1), nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    const double gain = parent_entropy - nl / n * entropy(left, nl) - nr / n * entropy(right, nr);
    if (best.feature < 0 || gain > best.gain) {
      double thr = 0.5 * (v0 + v1);
      if (!(thr < v1)) thr = v0;
      const double pl = nl / n, pr = nr / n;
      const double split_info = -pl * std::log2(pl) - pr * std::log2(pr);
      best = {feature, thr, gain, split_info > 0.0 ? gain / split_info : 0.0};
    }
  }
  return best;
}

}  // namespace

std::vector<TreeNode> grow_tree(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<int> rows,
                                int n_classes, const TreeGrowth& growth, std::mt19937_64& rng) {
  std::vector<TreeNode> nodes;
  const int m = static_cast<int>(X.cols());
  const int min_leaf = std::max(1, growth.min_leaf);
  struct Pending {
    int node;
    std::vector<int> rows;
  };
  std::vector<Pending> stack;
  nodes.push_back({});
  stack.push_back({0, std::move(rows)});
  std::vector<int> features(static_cast<std::size_t>(m));

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_classes);
    for (int r : job.rows) counts(y[static_cast<std::size_t>(r)]) += 1.0;
    const double n = static_cast<double>(job.rows.size());
    nodes[static_cast<std::size_t>(job.node)].distribution = counts / n;
    const bool pure = (counts.array() > 0.0).count() <= 1;
    if (pure || static_cast<int>(job.rows.size()) < 2 * min_leaf) continue;

    const double parent = entropy(counts, n);
    std::iota(features.begin(), features.end(), 0);
    int n_try = m;
    if (growth.features_per_split > 0 && growth.features_per_split < m) {
      n_try = growth.features_per_split;
      for (int i = 0; i < n_try; ++i) {
        std::uniform_int_distribution<int> pick(i, m - 1);
        std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(pick(rng))]);
      }
    }

    auto choose = [&](int begin, int end) {
      std::vector<SplitChoice> cands;
      for (int fi = begin; fi < end; ++fi) {
        const SplitChoice s = best_split_for_feature(X, y, job.rows, features[static_cast<std::size_t>(fi)], n_classes,
                                                     min_leaf, parent);
        if (s.feature >= 0) cands.push_back(s);
      }
      SplitChoice best;
      if (cands.empty()) return best;
      if (growth.criterion == SplitCriterion::InformationGain) {
        for (const auto& c : cands)
          if (best.feature < 0 || c.gain > best.gain) best = c;
        return best;
      }
      // C4.5: among attributes with at least average gain, maximize gain ratio.
      double avg = 0.0;
      for (const auto& c : cands) avg += c.gain;
      avg /= static_cast<double>(cands.size());
      for (const auto& c : cands) {
        if (c.gain < avg - 1e-12) continue;
        if (best.feature < 0 || c.ratio > best.ratio) best = c;
      }
      return best;
    };

    SplitChoice split = choose(0, n_try);
    // Sampled features may all be constant here; fall back to the rest.
    if (split.feature < 0 && n_try < m) split = choose(n_try, m);
    if (split.feature < 0) continue;

    std::vector<int> lrows, rrows;
    for (int r : job.rows) (X(r, split.feature) <= split.threshold ? lrows : rrows).push_back(r);
    const int left = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes.push_back({});
    TreeNode& node = nodes[static_cast<std::size_t>(job.node)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, std::move(rrows)});
    stack.push_back({left, std::move(lrows)});
  }
  return nodes;
}

Eigen::VectorXd tree_distribution(const std::vector<TreeNode>& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  std::size_t at = 0;
  while (tree[at].feature >= 0) at = static_cast<std::size_t>(x(tree[at].feature) <= tree[at].threshold ? tree[at].left : tree[at].right);
  return tree[at].distribution;
}

namespace {

nlohmann::json tree_json(const std::vector<TreeNode>& tree) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : tree)
    arr.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"distribution", vector_json(n.distribution)}});
  return arr;
}

std::vector<TreeNode> tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> tree;
  for (const auto& n : j)
    tree.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                    n.at("right").get<int>(), vector_from_json(n.at("distribution"))});
  return tree;
}

}  // namespace

void DecisionTreeClassifier::fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) {
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(seed);
  nodes_ = grow_tree(X, y, std::move(rows), static_cast<int>(n_classes()),
                     {SplitCriterion::GainRatio, params().tree_min_leaf, 0}, rng);
}

Eigen::MatrixXd DecisionTreeClassifier::scores_impl(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd s(X.rows(), static_cast<Eigen::Index>(n_classes()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) s.row(i) = tree_distribution(nodes_, X.row(i)).transpose();
  return s;
}

nlohmann::json DecisionTreeClassifier::state_json() const { return {{"nodes", tree_json(nodes_)}}; }
void DecisionTreeClassifier::load_state(const nlohmann::json& j) { nodes_ = tree_from_json(j.at("nodes")); }

void RandomForestClassifier::fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  const int per_split = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  trees_.clear();
  trees_.reserve(static_cast<std::size_t>(params().forest_trees));
  for (int t = 0; t < params().forest_trees; ++t) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(t));
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int& r : rows) r = pick(rng);
    trees_.push_back(grow_tree(X, y, std::move(rows), static_cast<int>(n_classes()),
                               {SplitCriterion::InformationGain, 1, per_split}, rng));
  }
}

Eigen::MatrixXd RandomForestClassifier::scores_impl(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(X.rows(), static_cast<Eigen::Index>(n_classes()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (const auto& t : trees_) s.row(i) += tree_distribution(t, X.row(i)).transpose();
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

nlohmann::json RandomForestClassifier::state_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trees_) arr.push_back(tree_json(t));
  return {{"trees", arr}};
}

void RandomForestClassifier::load_state(const nlohmann::json& j) {
  trees_.clear();
  for (const auto& t : j.at("trees")) trees_.push_back(tree_from_json(t));
}

// ---------------------------------------------------------------------------
// Support vector machines

double kernel_value(KernelKind k, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const double dot = a.dot(b);
  if (k == KernelKind::Linear) return dot;
  return (dot + 1.0) * (dot + 1.0);
}

double BinarySvm::decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double f = bias;
  for (Eigen::Index i = 0; i < support.rows(); ++i) f += coef(i) * kernel_value(kernel, support.row(i), x);
  return f;
}

SmoResult smo_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelKind kernel, double C, double tol,
                    int max_passes, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) K(i, j) = K(j, i) = kernel_value(kernel, X.row(i), X.row(j));

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd E = -y;  // f(x_i) - y_i with f = 0
  double b = 0.0;
  std::mt19937_64 rng(seed);

  auto take_step = [&](Eigen::Index i, Eigen::Index j) {
    if (i == j) return false;
    const double ai = alpha(i), aj = alpha(j), yi = y(i), yj = y(j);
    double L, H;
    if (yi != yj) {
      L = std::max(0.0, aj - ai);
      H = std::min(C, C + aj - ai);
    } else {
      L = std::max(0.0, ai + aj - C);
      H = std::min(C, ai + aj);
    }
    if (!(H - L > 1e-12)) return false;
    const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
    if (!(eta < 0.0)) return false;
    double aj_new = std::clamp(aj - yj * (E(i) - E(j)) / eta, L, H);
    if (std::abs(aj_new - aj) < 1e-9 * (aj_new + aj + 1e-9)) return false;
    double ai_new = ai + yi * yj * (aj - aj_new);
    ai_new = std::clamp(ai_new, 0.0, C);
    const double dai = ai_new - ai, daj = aj_new - aj;
    const double b1 = b - E(i) - yi * dai * K(i, i) - yj * daj * K(i, j);
    const double b2 = b - E(j) - yi * dai * K(i, j) - yj * daj * K(j, j);
    double b_new;
    if (ai_new > 0.0 && ai_new < C)
      b_new = b1;
    else if (aj_new > 0.0 && aj_new < C)
      b_new = b2;
    else
      b_new = 0.5 * (b1 + b2);
    E += (yi * dai) * K.col(i) + (yj * daj) * K.col(j);
    E.array() += b_new - b;
    alpha(i) = ai_new;
    alpha(j) = aj_new;
    b = b_new;
    return true;
  };

  SmoResult res;
  int passes = 0;
  const int max_iterations = 10000;
  while (passes < max_passes && res.iterations < max_iterations) {
    int changed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = E(i) * y(i);
      if (!((r < -tol && alpha(i) < C) || (r > tol && alpha(i) > 0.0))) continue;
      Eigen::Index j = 0;
      (E.array() - E(i)).abs().maxCoeff(&j);
      if (take_step(i, j)) {
        ++changed;
        continue;
      }
      const Eigen::Index start = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
      for (Eigen::Index t = 0; t < n; ++t)
        if (take_step(i, (start + t) % n)) {
          ++changed;
          break;
        }
    }
    passes = changed == 0 ? passes + 1 : 0;
    ++res.iterations;
  }
  res.alpha = alpha;
  res.bias = b;
  return res;
}

void SvmClassifier::fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) {
  scaler_ = Standardizer::fit(X);
  const Eigen::MatrixXd Z = scaler_.apply(X);
  machines_.clear();
  const int c = static_cast<int>(n_classes());
  std::uint64_t pair = 0;
  for (int a = 0; a < c; ++a)
    for (int b = a + 1; b < c; ++b, ++pair) {
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == a || y[i] == b) rows.push_back(static_cast<Eigen::Index>(i));
      const auto m = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd sub(m, Z.cols());
      Eigen::VectorXd ys(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        sub.row(r) = Z.row(rows[static_cast<std::size_t>(r)]);
        ys(r) = y[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])] == a ? 1.0 : -1.0;
      }
      const SmoResult res = smo_train(sub, ys, kernel(), params().svm_c, params().svm_tolerance,
                                      params().svm_max_passes, seed + pair);
      BinarySvm svm;
      svm.kernel = kernel();
      svm.bias = res.bias;
      std::vector<Eigen::Index> sv;
      for (Eigen::Index r = 0; r < m; ++r)
        if (res.alpha(r) > 0.0) sv.push_back(r);
      svm.support.resize(static_cast<Eigen::Index>(sv.size()), Z.cols());
      svm.coef.resize(static_cast<Eigen::Index>(sv.size()));
      for (std::size_t s = 0; s < sv.size(); ++s) {
        svm.support.row(static_cast<Eigen::Index>(s)) = sub.row(sv[s]);
        svm.coef(static_cast<Eigen::Index>(s)) = res.alpha(sv[s]) * ys(sv[s]);
      }
      machines_.push_back(std::move(svm));
    }
}

void SvmClassifier::tally(const Eigen::Ref<const Eigen::RowVectorXd>& z, Eigen::RowVectorXd& votes,
                          Eigen::RowVectorXd& margin) const {
  const int c = static_cast<int>(n_classes());
  votes = Eigen::RowVectorXd::Zero(c);
  margin = Eigen::RowVectorXd::Zero(c);
  std::size_t m = 0;
  for (int a = 0; a < c; ++a)
    for (int b = a + 1; b < c; ++b, ++m) {
      const double f = machines_[m].decision(z);
      if (f >= 0.0) {
        votes(a) += 1.0;
        margin(a) += f;
      } else {
        votes(b) += 1.0;
        margin(b) -= f;
      }
    }
}

Eigen::MatrixXd SvmClassifier::scores_impl(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd Z = scaler_.apply(X);
  const double pairs = static_cast<double>(machines_.size());
  Eigen::MatrixXd s(X.rows(), static_cast<Eigen::Index>(n_classes()));
  Eigen::RowVectorXd votes, margin;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    tally(Z.row(i), votes, margin);
    s.row(i) = votes / pairs;
  }
  return s;
}

std::vector<int> SvmClassifier::predict_positions(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd Z = scaler_.apply(X);
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  Eigen::RowVectorXd votes, margin;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    tally(Z.row(i), votes, margin);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < votes.size(); ++k)
      if (votes(k) > votes(best) || (votes(k) == votes(best) && margin(k) > margin(best))) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

nlohmann::json SvmClassifier::state_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : machines_)
    ms.push_back({{"support", matrix_json(m.support)}, {"coef", vector_json(m.coef)}, {"bias", m.bias}});
  return {{"mean", vector_json(scaler_.mean.transpose())}, {"scale", vector_json(scaler_.scale.transpose())},
          {"machines", ms}};
}

void SvmClassifier::load_state(const nlohmann::json& j) {
  scaler_.mean = vector_from_json(j.at("mean")).transpose();
  scaler_.scale = vector_from_json(j.at("scale")).transpose();
  machines_.clear();
  for (const auto& m : j.at("machines")) {
    BinarySvm svm;
    svm.kernel = kernel();
    svm.support = matrix_from_json(m.at("support"));
    svm.coef = vector_from_json(m.at("coef"));
    svm.bias = m.at("bias").get<double>();
    machines_.push_back(std::move(svm));
  }
}

}  // namespace boneage
