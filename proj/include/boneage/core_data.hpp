#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boneage {

using Point2 = Eigen::Vector2d;
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Closed simple polygon in image coordinates (y grows downward). The last
/// vertex connects back to the first.
class Outline {
public:
  static constexpr Eigen::Index kMinPoints = 8;

  Outline() = default;
  /// Throws DataError when fewer than kMinPoints vertices, non-finite values,
  /// or two consecutive (cyclically) identical vertices.
  explicit Outline(PointMatrix points);

  const PointMatrix& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  Point2 point(Eigen::Index i) const { return points_.row(i).transpose(); }

  friend bool operator==(const Outline& a, const Outline& b) {
    return a.points_.rows() == b.points_.rows() && a.points_ == b.points_;
  }

private:
  PointMatrix points_;
};

enum class BoneKind { Distal, Middle, Proximal };
inline constexpr std::array<BoneKind, 3> kAllBones{BoneKind::Distal, BoneKind::Middle,
                                                   BoneKind::Proximal};

enum class TWStage { B, C, D, E, F, G, H, I };
inline constexpr int kNumStages = 8;

enum class Sex { M, F };
enum class Ethnicity { ASI, BLK, CAU, HIS };

constexpr int stage_index(TWStage s) noexcept { return static_cast<int>(s); }
TWStage stage_from_index(int index);

std::string_view to_string(BoneKind b) noexcept;
std::string_view to_string(TWStage s) noexcept;
std::string_view to_string(Sex s) noexcept;
std::string_view to_string(Ethnicity e) noexcept;

BoneKind parse_bone(std::string_view s);
TWStage parse_stage(std::string_view s);
Sex parse_sex(std::string_view s);
Ethnicity parse_ethnicity(std::string_view s);

struct Subject {
  std::string subject_id;
  double age_years = 0.0;
  Sex sex = Sex::M;
  Ethnicity ethnicity = Ethnicity::CAU;

  bool operator==(const Subject&) const = default;
};

struct BoneRecord {
  Subject subject;
  BoneKind bone = BoneKind::Distal;
  Outline phalanx;
  std::optional<Outline> epiphysis;
  std::optional<TWStage> tw_stage;

  bool operator==(const BoneRecord&) const = default;
};

struct Dataset {
  std::vector<BoneRecord> records;
  std::string provenance;
  std::optional<std::int64_t> seed;
};

/// Checks record-level invariants (age > 0, epiphysis centroid distinct from
/// phalanx centroid). Throws DataError.
void validate_record(const BoneRecord& rec);

/// Ages outside the 2..18 population range are accepted; this reports them.
bool age_in_population_range(double age_years) noexcept;

// JSON-lines dataset file, one BoneRecord per line.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

std::string record_to_json_line(const BoneRecord& rec);
BoneRecord record_from_json_line(std::string_view line);

struct GeneratorConfig {
  double age_min = 2.0;
  double age_max = 18.0;
  // Subject-level noise between chronological age and skeletal maturity (years).
  double age_noise_sd = 0.5;
  // Per-bone jitter of maturity, in units of the [0, 1] maturity scale.
  double bone_maturity_sd = 0.0;
  // Additive coordinate noise (pixels).
  double coord_noise_sd = 0.2;
  // Seven ascending maturity cut points separating B|C|...|H|I.
  std::array<double, 7> stage_thresholds{0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875};
  // Fraction of stage H bones whose epiphysis has already fused.
  double fused_fraction_h = 0.5;
  // Phalanx superellipse height at maturity 0 and 1, per bone (distal, middle, proximal).
  std::array<double, 3> height_young{40.0, 50.0, 70.0};
  std::array<double, 3> height_mature{80.0, 100.0, 140.0};
  double width_to_height = 0.45;
  double width_to_height_growth = 0.0;
  // Relative widening of the metaphysis end: x scales by (1 + taper * y / half_height).
  double taper = 0.15;
  // Epiphysis width as a fraction of metaphysis width, from stage B to the G cap.
  double epi_ratio_young = 0.3;
  double epi_ratio_cap = 1.0;
  double epi_height_ratio = 0.35;
  // Gap between phalanx and epiphysis at maturity 0; shrinks to 40% at maturity 1.
  double epi_gap = 4.0;
  int phalanx_points = 128;
  int epiphysis_points = 64;
  double superellipse_exponent = 4.0;
  // Mixture weights (M, F) and (ASI, BLK, CAU, HIS); normalized internally.
  std::array<double, 2> sex_weights{1.0, 1.0};
  std::array<double, 4> ethnicity_weights{1.0, 1.0, 1.0, 1.0};
  // Added to chronological age for female subjects / per ethnicity.
  double female_age_offset = 0.0;
  std::array<double, 4> ethnicity_age_offset{0.0, 0.0, 0.0, 0.0};
  // Rotate every bone by a random angle (radians, uniform in +-max_rotation).
  double max_rotation = 0.0;
  // Bones are translated uniformly within [0, canvas] in both axes.
  double canvas = 400.0;

  void validate() const;
};

/// Maps skeletal maturity in [0, 1] to a TW stage using the config thresholds.
TWStage stage_for_maturity(const GeneratorConfig& cfg, double maturity);

Dataset generate_synthetic(int n_subjects, std::uint64_t seed, const GeneratorConfig& cfg = {});

/// Discretized superellipse |x/a|^e + |y/b|^e = 1 traversed clockwise on screen.
PointMatrix superellipse_points(double half_width, double half_height, double exponent,
                                int n_points);
PointMatrix ellipse_points(double half_width, double half_height, int n_points);

}  // namespace boneage
