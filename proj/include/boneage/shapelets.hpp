#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace boneage {

struct Shapelet {
  Eigen::VectorXd values;  // z-normalized
  int series_index = 0;
  int offset = 0;
  double quality = 0.0;    // information gain, bits

  int length() const { return static_cast<int>(values.size()); }
  bool overlaps(const Shapelet& o) const {
    return series_index == o.series_index && offset < o.offset + o.length() && o.offset < offset + length();
  }
};

struct ShapeletConfig {
  int min_len = 9;
  int max_len = 36;
  int k = 0;                    // 0: min(100, 10 * number of classes)
  std::size_t max_candidates = 0;  // 0: score every candidate; otherwise a seeded uniform subsample
  std::uint64_t seed = 0;
};

struct ShapeletTransformModel {
  std::vector<Shapelet> shapelets;  // descending quality
  ShapeletConfig config;
};

/// Windows with population variance below this z-normalize to all zeros.
inline constexpr double kZeroVarianceGuard = 1e-12;

Eigen::VectorXd z_normalize(const Eigen::Ref<const Eigen::VectorXd>& x);

/// min over alignments of the length-normalized squared distance between a
/// z-normalized shapelet and each z-normalized window of `series`.
double subsequence_distance(const Eigen::Ref<const Eigen::VectorXd>& shapelet,
                            const Eigen::Ref<const Eigen::VectorXd>& series);

struct SplitQuality {
  double gain = 0.0;       // bits
  double threshold = 0.0;  // midpoint between the two sides
};

/// Best single-threshold information-gain split of a distance line.
SplitQuality best_information_gain(const std::vector<double>& distances, const std::vector<int>& labels);

ShapeletTransformModel discover_shapelets(const std::vector<Eigen::VectorXd>& series, const std::vector<int>& labels,
                                          const ShapeletConfig& config);

/// n x k matrix of subsequence distances.
Eigen::MatrixXd shapelet_transform(const ShapeletTransformModel& model, const std::vector<Eigen::VectorXd>& batch);

}  // namespace boneage
