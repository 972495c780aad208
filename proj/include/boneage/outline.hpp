#pragma once

#include "boneage/core_data.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace boneage {

inline constexpr Eigen::Index kPhalanxSamples = 50;
inline constexpr Eigen::Index kEpiphysisSamples = 30;
inline constexpr Eigen::Index kSeriesLength = kPhalanxSamples + kEpiphysisSamples;

using SeriesVector = Eigen::Matrix<double, kSeriesLength, 1>;

struct RadialSeries {
  SeriesVector values = SeriesVector::Zero();
  std::optional<TWStage> label;
  std::string subject_id;
  std::optional<BoneKind> bone;

  bool has_epiphysis() const { return (values.tail<kEpiphysisSamples>().array() != 0.0).any(); }
  bool operator==(const RadialSeries& o) const {
    return values == o.values && label == o.label && subject_id == o.subject_id && bone == o.bone;
  }
};

/// Resampled distances from `count` arc-length-uniform outline points to the
/// area centroid, starting at the midpoint of one long side (the ray from the
/// centroid along the fitted ellipse's minor axis) and moving clockwise on
/// screen.
Eigen::VectorXd radial_profile(const PointMatrix& outline, Eigen::Index count);

/// Phalanx profile (50) followed by epiphysis profile (30) or 30 zeros.
RadialSeries to_radial_series(const BoneRecord& rec);
std::vector<RadialSeries> to_radial_series(const std::vector<BoneRecord>& recs);

void series_to_csv(const std::vector<RadialSeries>& batch, const std::filesystem::path& path);
std::vector<RadialSeries> csv_to_series(const std::filesystem::path& path);

}  // namespace boneage
