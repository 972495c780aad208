#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

namespace boneage {

enum class ClassifierKind { KNN, NaiveBayes, DecisionTree, RandomForest, SVMLinear, SVMQuadratic };

std::string_view to_string(ClassifierKind k) noexcept;
ClassifierKind parse_classifier(std::string_view s);

struct ClassifierParams {
  int knn_k = 0;            // 0: choose by stratified CV over 1..min(knn_max_k, n-1)
  int knn_max_k = 50;
  int knn_folds = 10;
  double nb_variance_floor = 1e-9;
  int tree_min_leaf = 2;    // C4.5-style tree; forests always grow to purity
  int forest_trees = 100;
  double svm_c = 1.0;
  double svm_tolerance = 1e-3;
  int svm_max_passes = 10;
};

nlohmann::json classifier_params_to_json(const ClassifierParams& p);
/// Keys absent from `j` keep their value in `base`.
ClassifierParams classifier_params_from_json(const nlohmann::json& j, ClassifierParams base = {});

/// Column-wise standardization fitted on training data; zero-variance
/// columns keep unit scale.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

class Classifier {
public:
  virtual ~Classifier() = default;

  ClassifierKind kind() const noexcept { return kind_; }
  const ClassifierParams& params() const noexcept { return params_; }
  bool fitted() const noexcept { return !classes_.empty(); }
  /// Sorted distinct training labels; score columns follow this order.
  const std::vector<int>& classes() const noexcept { return classes_; }

  /// Throws DataError for fewer than 2 rows, a single class, non-finite
  /// values or a label count mismatch.
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed);
  /// Row-wise probability vectors over classes().
  Eigen::MatrixXd predict_scores(const Eigen::MatrixXd& X) const;
  std::vector<int> predict(const Eigen::MatrixXd& X) const;

  nlohmann::json to_json() const;
  static std::unique_ptr<Classifier> from_json(const nlohmann::json& j);

protected:
  Classifier(ClassifierKind kind, ClassifierParams params) : kind_(kind), params_(params) {}

  /// y holds class positions 0..classes().size()-1.
  virtual void fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) = 0;
  virtual Eigen::MatrixXd scores_impl(const Eigen::MatrixXd& X) const = 0;
  /// Class positions; defaults to the first maximum of each score row.
  virtual std::vector<int> predict_positions(const Eigen::MatrixXd& X) const;
  virtual nlohmann::json state_json() const = 0;
  virtual void load_state(const nlohmann::json& j) = 0;

  std::size_t n_classes() const noexcept { return classes_.size(); }
  Eigen::Index n_features_ = 0;

private:
  ClassifierKind kind_;
  ClassifierParams params_;
  std::vector<int> classes_;
};

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const ClassifierParams& params = {});

/// Index of the row maximum; ties go to the lowest index.
Eigen::Index argmax_first(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// ---------------------------------------------------------------------------
// Concrete learners, exposed for tests that inspect fitted state.

class KnnClassifier : public Classifier {
public:
  explicit KnnClassifier(ClassifierParams p) : Classifier(ClassifierKind::KNN, p) {}
  int chosen_k() const noexcept { return k_; }

private:
  void fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) override;
  Eigen::MatrixXd scores_impl(const Eigen::MatrixXd& X) const override;
  nlohmann::json state_json() const override;
  void load_state(const nlohmann::json& j) override;

  Standardizer scaler_;
  Eigen::MatrixXd train_;
  std::vector<int> y_;
  int k_ = 1;
};

class NaiveBayesClassifier : public Classifier {
public:
  explicit NaiveBayesClassifier(ClassifierParams p) : Classifier(ClassifierKind::NaiveBayes, p) {}
  const Eigen::MatrixXd& means() const noexcept { return mean_; }
  const Eigen::MatrixXd& variances() const noexcept { return var_; }
  const Eigen::VectorXd& priors() const noexcept { return prior_; }

private:
  void fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) override;
  Eigen::MatrixXd scores_impl(const Eigen::MatrixXd& X) const override;
  nlohmann::json state_json() const override;
  void load_state(const nlohmann::json& j) override;

  Eigen::MatrixXd mean_;  // classes x features
  Eigen::MatrixXd var_;
  Eigen::VectorXd prior_;
};

/// Binary-split tree over numeric features. Leaves store class proportions.
struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1, right = -1;
  Eigen::VectorXd distribution;
};

enum class SplitCriterion { GainRatio, InformationGain };

struct TreeGrowth {
  SplitCriterion criterion = SplitCriterion::GainRatio;
  int min_leaf = 2;
  int features_per_split = 0;  // 0: all features
};

/// `rows` may repeat (bootstrap samples). `rng` drives per-split feature sampling.
std::vector<TreeNode> grow_tree(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<int> rows,
                                int n_classes, const TreeGrowth& growth, std::mt19937_64& rng);
Eigen::VectorXd tree_distribution(const std::vector<TreeNode>& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x);

class DecisionTreeClassifier : public Classifier {
public:
  explicit DecisionTreeClassifier(ClassifierParams p) : Classifier(ClassifierKind::DecisionTree, p) {}
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

private:
  void fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) override;
  Eigen::MatrixXd scores_impl(const Eigen::MatrixXd& X) const override;
  nlohmann::json state_json() const override;
  void load_state(const nlohmann::json& j) override;

  std::vector<TreeNode> nodes_;
};

class RandomForestClassifier : public Classifier {
public:
  explicit RandomForestClassifier(ClassifierParams p) : Classifier(ClassifierKind::RandomForest, p) {}
  std::size_t tree_count() const noexcept { return trees_.size(); }

private:
  void fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) override;
  Eigen::MatrixXd scores_impl(const Eigen::MatrixXd& X) const override;
  nlohmann::json state_json() const override;
  void load_state(const nlohmann::json& j) override;

  std::vector<std::vector<TreeNode>> trees_;
};

enum class KernelKind { Linear, Quadratic };

/// Two-class soft-margin SVM trained by sequential minimal optimization.
/// Labels are +1 / -1.
struct BinarySvm {
  KernelKind kernel = KernelKind::Linear;
  Eigen::MatrixXd support;  // rows = support vectors (standardized space)
  Eigen::VectorXd coef;     // alpha_i * y_i
  double bias = 0.0;

  double decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct SmoResult {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  int iterations = 0;
};

double kernel_value(KernelKind k, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b);

SmoResult smo_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelKind kernel, double C, double tol,
                    int max_passes, std::uint64_t seed);

class SvmClassifier : public Classifier {
public:
  SvmClassifier(ClassifierKind kind, ClassifierParams p) : Classifier(kind, p) {}
  const std::vector<BinarySvm>& machines() const noexcept { return machines_; }
  const Standardizer& scaler() const noexcept { return scaler_; }

private:
  KernelKind kernel() const {
    return kind() == ClassifierKind::SVMQuadratic ? KernelKind::Quadratic : KernelKind::Linear;
  }
  void fit_impl(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) override;
  Eigen::MatrixXd scores_impl(const Eigen::MatrixXd& X) const override;
  std::vector<int> predict_positions(const Eigen::MatrixXd& X) const override;
  nlohmann::json state_json() const override;
  void load_state(const nlohmann::json& j) override;

  // Per-row one-vs-one votes and the summed winning margins per class.
  void tally(const Eigen::Ref<const Eigen::RowVectorXd>& z, Eigen::RowVectorXd& votes, Eigen::RowVectorXd& margin) const;

  Standardizer scaler_;
  std::vector<BinarySvm> machines_;  // pairs (a, b), a < b, in lexicographic order
};

}  // namespace boneage
