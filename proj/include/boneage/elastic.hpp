#pragma once

#include "boneage/core_data.hpp"
#include "boneage/error.hpp"
#include "boneage/outline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace boneage {

enum class MeasureKind { Euclidean, DTW, WDTW, LCSS, ERP, TWED, MSM };

std::string_view to_string(MeasureKind k) noexcept;
MeasureKind parse_measure(std::string_view s);

/// A distance measure with its parameters. Fields not used by `kind` are ignored.
struct ElasticMeasure {
  MeasureKind kind = MeasureKind::Euclidean;
  double window = 1.0;          // DTW: Sakoe-Chiba band as a fraction of the length
  double weight_g = 0.0;        // WDTW: logistic weight steepness
  double epsilon = 0.0;         // LCSS: match threshold
  std::optional<int> band;      // LCSS / ERP: max |i - j|; unbounded when empty
  double gap = 0.0;             // ERP: gap value
  double nu = 1.0;              // TWED: stiffness
  double lambda = 0.0;          // TWED: edit penalty
  double cost = 1.0;            // MSM: split/merge cost

  static ElasticMeasure euclidean() { return {}; }
  static ElasticMeasure dtw(double window) {
    ElasticMeasure m;
    m.kind = MeasureKind::DTW;
    m.window = window;
    return m;
  }
  static ElasticMeasure wdtw(double g) {
    ElasticMeasure m;
    m.kind = MeasureKind::WDTW;
    m.weight_g = g;
    return m;
  }
  static ElasticMeasure lcss(double epsilon, std::optional<int> band = std::nullopt) {
    ElasticMeasure m;
    m.kind = MeasureKind::LCSS;
    m.epsilon = epsilon;
    m.band = band;
    return m;
  }
  static ElasticMeasure erp(double gap, std::optional<int> band = std::nullopt) {
    ElasticMeasure m;
    m.kind = MeasureKind::ERP;
    m.gap = gap;
    m.band = band;
    return m;
  }
  static ElasticMeasure twed(double nu, double lambda) {
    ElasticMeasure m;
    m.kind = MeasureKind::TWED;
    m.nu = nu;
    m.lambda = lambda;
    return m;
  }
  static ElasticMeasure msm(double cost) {
    ElasticMeasure m;
    m.kind = MeasureKind::MSM;
    m.cost = cost;
    return m;
  }

  /// Throws UsageError when a parameter is out of range.
  void validate() const;
  bool operator==(const ElasticMeasure&) const = default;
};

namespace elastic {

template <typename T>
constexpr T inf() {
  return std::numeric_limits<T>::infinity();
}

/// Sakoe-Chiba half-width for a window fraction: ceil(w * n).
inline int window_cells(double window, Eigen::Index n) {
  // Guard against w * n landing one ulp above an integer (e.g. 0.1 * 80).
  return static_cast<int>(std::ceil(window * static_cast<double>(n) - 1e-9));
}

template <typename DA, typename DB>
typename DA::Scalar euclidean(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using T = typename DA::Scalar;
  T acc = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const T d = a(i) - b(i);
    acc += d * d;
  }
  return acc;
}

/// Generic warping DP with squared pointwise costs scaled by weights[|i-j|].
template <typename DA, typename DB, typename Weight>
typename DA::Scalar warp(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, int radius,
                         Weight&& weight) {
  using T = typename DA::Scalar;
  const Eigen::Index n = a.size(), m = b.size();
  Eigen::Matrix<T, Eigen::Dynamic, 1> prev = Eigen::Matrix<T, Eigen::Dynamic, 1>::Constant(m + 1, inf<T>());
  Eigen::Matrix<T, Eigen::Dynamic, 1> cur(m + 1);
  prev(0) = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    cur.setConstant(inf<T>());
    const Eigen::Index lo = std::max<Eigen::Index>(1, i - radius);
    const Eigen::Index hi = std::min<Eigen::Index>(m, i + radius);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      const T d = a(i - 1) - b(j - 1);
      const T c = weight(i > j ? i - j : j - i) * (d * d);
      cur(j) = c + std::min({prev(j - 1), prev(j), cur(j - 1)});
    }
    std::swap(prev, cur);
  }
  return prev(m);
}

template <typename DA, typename DB>
typename DA::Scalar dtw(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double window) {
  using T = typename DA::Scalar;
  const int r = window_cells(window, std::max(a.size(), b.size()));
  return warp(a, b, r, [](Eigen::Index) { return T(1); });
}

/// WDTW weights w(k) = 1 / (1 + exp(-g (k - n/2))).
template <typename T = double>
Eigen::Matrix<T, Eigen::Dynamic, 1> wdtw_weights(double g, Eigen::Index n) {
  Eigen::Matrix<T, Eigen::Dynamic, 1> w(n + 1);
  for (Eigen::Index k = 0; k <= n; ++k)
    w(k) = T(1) / (T(1) + std::exp(-g * (static_cast<double>(k) - 0.5 * static_cast<double>(n))));
  return w;
}

template <typename DA, typename DB>
typename DA::Scalar wdtw(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double g) {
  const Eigen::Index n = std::max(a.size(), b.size());
  const auto w = wdtw_weights<typename DA::Scalar>(g, n);
  return warp(a, b, static_cast<int>(n), [&](Eigen::Index k) { return w(k); });
}

/// Length of the longest common subsequence under an epsilon match and a band.
template <typename DA, typename DB>
int lcss_length(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double epsilon,
                std::optional<int> band) {
  const Eigen::Index n = a.size(), m = b.size();
  Eigen::MatrixXi L = Eigen::MatrixXi::Zero(n + 1, m + 1);
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j) {
      const bool in_band = !band || std::abs(i - j) <= *band;
      if (in_band && std::abs(a(i - 1) - b(j - 1)) <= epsilon)
        L(i, j) = L(i - 1, j - 1) + 1;
      else
        L(i, j) = std::max(L(i - 1, j), L(i, j - 1));
    }
  return L(n, m);
}

template <typename DA, typename DB>
typename DA::Scalar lcss(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double epsilon,
                         std::optional<int> band) {
  using T = typename DA::Scalar;
  const int len = lcss_length(a, b, epsilon, band);
  return T(1) - T(len) / T(std::min(a.size(), b.size()));
}

/// Edit distance with real penalty, L1 costs, gap value g.
template <typename DA, typename DB>
typename DA::Scalar erp(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double gap,
                        std::optional<int> band) {
  using T = typename DA::Scalar;
  const Eigen::Index n = a.size(), m = b.size();
  auto ok = [&](Eigen::Index i, Eigen::Index j) { return !band || std::abs(i - j) <= *band; };
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> D =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Constant(n + 1, m + 1, inf<T>());
  D(0, 0) = 0;
  for (Eigen::Index i = 1; i <= n && ok(i, 0); ++i) D(i, 0) = D(i - 1, 0) + std::abs(a(i - 1) - gap);
  for (Eigen::Index j = 1; j <= m && ok(0, j); ++j) D(0, j) = D(0, j - 1) + std::abs(b(j - 1) - gap);
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j) {
      if (!ok(i, j)) continue;
      D(i, j) = std::min({D(i - 1, j - 1) + std::abs(a(i - 1) - b(j - 1)),
                          D(i - 1, j) + std::abs(a(i - 1) - gap), D(i, j - 1) + std::abs(b(j - 1) - gap)});
    }
  return D(n, m);
}

/// Time warp edit distance with unit timestamps; both series are padded with
/// a leading 0 at time 0.
template <typename DA, typename DB>
typename DA::Scalar twed(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double nu,
                         double lambda) {
  using T = typename DA::Scalar;
  const Eigen::Index n = a.size(), m = b.size();
  auto av = [&](Eigen::Index i) { return i == 0 ? T(0) : a(i - 1); };
  auto bv = [&](Eigen::Index j) { return j == 0 ? T(0) : b(j - 1); };
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> D =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Constant(n + 1, m + 1, inf<T>());
  D(0, 0) = 0;
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j) {
      const T del_a = D(i - 1, j) + std::abs(av(i) - av(i - 1)) + nu + lambda;
      const T del_b = D(i, j - 1) + std::abs(bv(j) - bv(j - 1)) + nu + lambda;
      const T match = D(i - 1, j - 1) + std::abs(av(i) - bv(j)) + std::abs(av(i - 1) - bv(j - 1)) +
                      nu * T(2 * std::abs(i - j));
      D(i, j) = std::min({match, del_a, del_b});
    }
  return D(n, m);
}

/// Move-split-merge split/merge cost for inserting x between y and z.
template <typename T>
T msm_cost(T x, T y, T z, double c) {
  if ((y <= x && x <= z) || (y >= x && x >= z)) return T(c);
  return T(c) + std::min(std::abs(x - y), std::abs(x - z));
}

template <typename DA, typename DB>
typename DA::Scalar msm(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double c) {
  using T = typename DA::Scalar;
  const Eigen::Index n = a.size(), m = b.size();
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> D(n, m);
  D(0, 0) = std::abs(a(0) - b(0));
  for (Eigen::Index i = 1; i < n; ++i) D(i, 0) = D(i - 1, 0) + msm_cost<T>(a(i), a(i - 1), b(0), c);
  for (Eigen::Index j = 1; j < m; ++j) D(0, j) = D(0, j - 1) + msm_cost<T>(b(j), a(0), b(j - 1), c);
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 1; j < m; ++j)
      D(i, j) = std::min({D(i - 1, j - 1) + std::abs(a(i) - b(j)),
                          D(i - 1, j) + msm_cost<T>(a(i), a(i - 1), b(j), c),
                          D(i, j - 1) + msm_cost<T>(b(j), a(i), b(j - 1), c)});
  return D(n - 1, m - 1);
}

}  // namespace elastic

/// Distance between two equal-length series. Throws UsageError on a length
/// mismatch or out-of-range parameters.
template <typename DA, typename DB>
typename DA::Scalar elastic_distance(const ElasticMeasure& m, const Eigen::MatrixBase<DA>& a,
                                     const Eigen::MatrixBase<DB>& b);

double elastic_distance(const ElasticMeasure& m, const RadialSeries& a, const RadialSeries& b);

// ---------------------------------------------------------------------------
// 1-NN members and the accuracy-weighted ensemble

struct ParameterGrid {
  MeasureKind kind = MeasureKind::DTW;
  std::vector<ElasticMeasure> candidates;
};

/// Default grids per measure; sigma is the standard deviation of all training values.
std::vector<ParameterGrid> default_grids(double sigma, Eigen::Index series_length = kSeriesLength);
double pooled_std(const std::vector<RadialSeries>& series);

struct EnsembleMember {
  ElasticMeasure measure;
  double weight = 0.0;            // best cross-validated 1-NN accuracy
  std::vector<int> cv_predictions;  // stage indices from the winning parameter's CV
};

struct ElasticEnsembleModel {
  std::vector<EnsembleMember> members;
  std::vector<RadialSeries> reference;

  /// Ensemble vote over the members' cross-validated predictions.
  std::vector<int> ensemble_cv_predictions() const;
};

/// Pairwise distances of a labeled set under one measure.
Eigen::MatrixXd distance_matrix(const ElasticMeasure& m, const std::vector<RadialSeries>& series);

/// Cross-validated 1-NN predictions from a precomputed distance matrix.
/// `folds[i]` is the fold of instance i. Ties go to the lowest index.
std::vector<int> nn_cv_predictions(const Eigen::MatrixXd& dist, const std::vector<int>& labels,
                                   const std::vector<int>& folds);

ElasticEnsembleModel train_elastic_ensemble(const std::vector<RadialSeries>& train, int folds,
                                            const std::vector<ParameterGrid>& grids, std::uint64_t seed);

struct StagePrediction {
  TWStage stage = TWStage::B;
  std::array<double, kNumStages> scores{};
};

/// Weighted vote of member predictions (class indices) into normalized stage
/// scores; ties go to the lower stage.
StagePrediction combine_votes(const std::vector<int>& votes, const std::vector<double>& weights);

StagePrediction predict_elastic(const ElasticEnsembleModel& model, const RadialSeries& query);

// ---------------------------------------------------------------------------

template <typename DA, typename DB>
typename DA::Scalar elastic_distance(const ElasticMeasure& m, const Eigen::MatrixBase<DA>& a,
                                     const Eigen::MatrixBase<DB>& b) {
  m.validate();
  if (a.size() != b.size() || a.size() == 0)
    throw UsageError("elastic_distance: series lengths differ or are empty");
  switch (m.kind) {
    case MeasureKind::Euclidean: return elastic::euclidean(a, b);
    case MeasureKind::DTW: return elastic::dtw(a, b, m.window);
    case MeasureKind::WDTW: return elastic::wdtw(a, b, m.weight_g);
    case MeasureKind::LCSS: return elastic::lcss(a, b, m.epsilon, m.band);
    case MeasureKind::ERP: return elastic::erp(a, b, m.gap, m.band);
    case MeasureKind::TWED: return elastic::twed(a, b, m.nu, m.lambda);
    case MeasureKind::MSM: return elastic::msm(a, b, m.cost);
  }
  return 0;
}

}  // namespace boneage
