#pragma once

#include "boneage/core_data.hpp"

#include <array>
#include <string>

namespace boneage {

struct EllipseFit {
  Point2 center = Point2::Zero();
  double major_axis_len = 0.0;  // full length (2a)
  double minor_axis_len = 0.0;  // full length (2b)
  double orientation = 0.0;     // major-axis angle in [0, pi)

  Point2 major_direction() const { return {std::cos(orientation), std::sin(orientation)}; }
  Point2 minor_direction() const { return {-std::sin(orientation), std::cos(orientation)}; }
};

/// Direct least-squares ellipse fit (Fitzgibbon, Pilu & Fisher, in the
/// numerically stable Halir-Flusser form) on the outline vertices.
EllipseFit fit_ellipse(const PointMatrix& pts);
inline EllipseFit fit_ellipse(const Outline& o) { return fit_ellipse(o.points()); }

inline constexpr int kNumFeatures = 25;

/// The 25 shape features, stored 0-based: values[k] is feature f(k+1).
struct ShapeFeatures {
  std::array<double, kNumFeatures> values{};

  double& f(int number) { return values[static_cast<std::size_t>(number - 1)]; }
  double f(int number) const { return values[static_cast<std::size_t>(number - 1)]; }
  bool epiphysis_present() const { return f(1) == 1.0; }

  Eigen::Map<const Eigen::VectorXd> vector() const { return {values.data(), kNumFeatures}; }
};

/// Short column name "f1".."f25".
std::string feature_column(int number);
/// Descriptive name, e.g. "phalanx_ellipse_height".
std::string_view feature_description(int number);

// Chord fractions measured from the distal end along the phalanx height.
inline constexpr double kMidChord = 0.50;
inline constexpr double kFirstQuartileChord = 0.25;
inline constexpr double kThirdQuartileChord = 0.75;
inline constexpr double kMetaphysisChord = 0.90;

ShapeFeatures extract_features(const BoneRecord& rec);

}  // namespace boneage
