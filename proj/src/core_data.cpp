#include "boneage/core_data.hpp"

#include "boneage/error.hpp"
#include "boneage/geometry.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <utility>

namespace boneage {

using ordered_json = nlohmann::ordered_json;

Outline::Outline(PointMatrix points) : points_(std::move(points)) {
  const Eigen::Index n = points_.rows();
  if (n < kMinPoints) throw DataError(fmt::format("outline too short ({} points, need {})", n, kMinPoints));
  if (!points_.allFinite()) throw DataError("outline has non-finite coordinates");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (points_.row(i) == points_.row((i + 1) % n))
      throw DataError(fmt::format("outline has identical consecutive points at index {}", i));
  }
}

namespace {

constexpr std::array<std::string_view, 3> kBoneNames{"distal", "middle", "proximal"};
constexpr std::array<std::string_view, 8> kStageNames{"B", "C", "D", "E", "F", "G", "H", "I"};
constexpr std::array<std::string_view, 2> kSexNames{"M", "F"};
constexpr std::array<std::string_view, 4> kEthnicityNames{"ASI", "BLK", "CAU", "HIS"};

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<Enum>(i);
  throw DataError(fmt::format("invalid {} '{}'", what, s));
}

}  // namespace

TWStage stage_from_index(int index) {
  if (index < 0 || index >= kNumStages) throw DataError(fmt::format("stage index {} out of range", index));
  return static_cast<TWStage>(index);
}

std::string_view to_string(BoneKind b) noexcept { return kBoneNames[static_cast<std::size_t>(b)]; }
std::string_view to_string(TWStage s) noexcept { return kStageNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Sex s) noexcept { return kSexNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Ethnicity e) noexcept { return kEthnicityNames[static_cast<std::size_t>(e)]; }

BoneKind parse_bone(std::string_view s) { return parse_enum<BoneKind>(s, kBoneNames, "bone"); }
TWStage parse_stage(std::string_view s) { return parse_enum<TWStage>(s, kStageNames, "tw_stage"); }
Sex parse_sex(std::string_view s) { return parse_enum<Sex>(s, kSexNames, "sex"); }
Ethnicity parse_ethnicity(std::string_view s) {
  return parse_enum<Ethnicity>(s, kEthnicityNames, "ethnicity");
}

bool age_in_population_range(double age_years) noexcept { return age_years >= 2.0 && age_years <= 18.0; }

void validate_record(const BoneRecord& rec) {
  if (!(rec.subject.age_years > 0.0) || !std::isfinite(rec.subject.age_years))
    throw DataError(fmt::format("age must be positive (subject {})", rec.subject.subject_id));
  if (rec.epiphysis) {
    const Point2 cp = geometry::centroid(rec.phalanx.points());
    const Point2 ce = geometry::centroid(rec.epiphysis->points());
    if ((cp - ce).norm() == 0.0)
      throw DataError(fmt::format("epiphysis centroid coincides with phalanx centroid (subject {})",
                                  rec.subject.subject_id));
  }
}

// ---------------------------------------------------------------------------
// JSON lines

namespace {

ordered_json points_to_json(const PointMatrix& pts) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) arr.push_back({pts(i, 0), pts(i, 1)});
  return arr;
}

Outline outline_from_json(const ordered_json& j, const char* field) {
  if (!j.is_array()) throw DataError(fmt::format("field '{}' must be an array of [x,y]", field));
  PointMatrix pts(static_cast<Eigen::Index>(j.size()), 2);
  Eigen::Index i = 0;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw DataError(fmt::format("field '{}' point {} is not [x,y]", field, i));
    pts(i, 0) = p[0].get<double>();
    pts(i, 1) = p[1].get<double>();
    ++i;
  }
  try {
    return Outline(std::move(pts));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", field, e.what()));
  }
}

const ordered_json& require(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(fmt::format("missing field '{}'", key));
  return *it;
}

std::string require_string(const ordered_json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) throw DataError(fmt::format("field '{}' must be a string", key));
  return v.get<std::string>();
}

}  // namespace

std::string record_to_json_line(const BoneRecord& rec) {
  ordered_json j;
  j["subject_id"] = rec.subject.subject_id;
  j["bone"] = to_string(rec.bone);
  j["age_years"] = rec.subject.age_years;
  j["sex"] = to_string(rec.subject.sex);
  j["ethnicity"] = to_string(rec.subject.ethnicity);
  j["tw_stage"] = rec.tw_stage ? ordered_json(to_string(*rec.tw_stage)) : ordered_json(nullptr);
  j["phalanx"] = points_to_json(rec.phalanx.points());
  j["epiphysis"] = rec.epiphysis ? points_to_json(rec.epiphysis->points()) : ordered_json(nullptr);
  return j.dump();
}

BoneRecord record_from_json_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("malformed JSON: {}", e.what()));
  }
  if (!j.is_object()) throw DataError("record must be a JSON object");
  BoneRecord rec;
  rec.subject.subject_id = require_string(j, "subject_id");
  rec.bone = parse_bone(require_string(j, "bone"));
  const auto& age = require(j, "age_years");
  if (!age.is_number()) throw DataError("field 'age_years' must be a number");
  rec.subject.age_years = age.get<double>();
  rec.subject.sex = parse_sex(require_string(j, "sex"));
  rec.subject.ethnicity = parse_ethnicity(require_string(j, "ethnicity"));
  const auto& stage = require(j, "tw_stage");
  if (!stage.is_null()) {
    if (!stage.is_string()) throw DataError("field 'tw_stage' must be a string or null");
    rec.tw_stage = parse_stage(stage.get<std::string>());
  }
  rec.phalanx = outline_from_json(require(j, "phalanx"), "phalanx");
  const auto& epi = require(j, "epiphysis");
  if (!epi.is_null()) rec.epiphysis = outline_from_json(epi, "epiphysis");
  validate_record(rec);
  return rec;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open dataset '{}'", path.string()));
  Dataset ds;
  ds.provenance = path.string();
  std::set<std::pair<std::string, BoneKind>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    BoneRecord rec;
    try {
      rec = record_from_json_line(line);
    } catch (const Error& e) {
      throw DataError(fmt::format("{}, line {}", e.what(), line_no));
    }
    if (!seen.emplace(rec.subject.subject_id, rec.bone).second)
      throw DataError(fmt::format("duplicate (subject, bone) key ({}, {}), line {}", rec.subject.subject_id,
                                  to_string(rec.bone), line_no));
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write dataset '{}'", path.string()));
  for (const auto& rec : ds.records) out << record_to_json_line(rec) << '\n';
  if (!out) throw DataError(fmt::format("I/O failure writing '{}'", path.string()));
}

// ---------------------------------------------------------------------------
// Synthetic generator

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("invalid generator config: " + msg); };
  if (!(age_max > age_min) || !(age_min > 0.0)) fail("need 0 < age_min < age_max");
  if (age_noise_sd < 0.0 || bone_maturity_sd < 0.0 || coord_noise_sd < 0.0) fail("noise must be >= 0");
  for (std::size_t i = 1; i < stage_thresholds.size(); ++i)
    if (!(stage_thresholds[i] > stage_thresholds[i - 1])) fail("stage thresholds must be ascending");
  if (fused_fraction_h < 0.0 || fused_fraction_h > 1.0) fail("fused_fraction_h must be in [0,1]");
  for (std::size_t b = 0; b < 3; ++b)
    if (!(height_young[b] > 0.0) || !(height_mature[b] > 0.0)) fail("heights must be positive");
  if (!(width_to_height > 0.0) || !(width_to_height + width_to_height_growth > 0.0))
    fail("width_to_height must be positive");
  if (!(epi_ratio_young > 0.0) || !(epi_ratio_cap > 0.0) || !(epi_height_ratio > 0.0))
    fail("epiphysis ratios must be positive");
  if (!(epi_gap > 0.0)) fail("epi_gap must be positive");
  if (taper < 0.0 || taper >= 1.0) fail("taper must be in [0,1)");
  if (phalanx_points < Outline::kMinPoints || epiphysis_points < Outline::kMinPoints)
    fail("point counts must be >= 8");
  if (!(superellipse_exponent > 0.0)) fail("superellipse_exponent must be positive");
  if (!(sex_weights[0] + sex_weights[1] > 0.0)) fail("sex weights must not all be zero");
  double ew = 0.0;
  for (double w : ethnicity_weights) {
    if (w < 0.0) fail("weights must be >= 0");
    ew += w;
  }
  if (!(ew > 0.0) || sex_weights[0] < 0.0 || sex_weights[1] < 0.0) fail("weights must be >= 0 and not all zero");
  if (canvas < 0.0 || max_rotation < 0.0) fail("canvas and max_rotation must be >= 0");
}

TWStage stage_for_maturity(const GeneratorConfig& cfg, double maturity) {
  int idx = 0;
  for (double t : cfg.stage_thresholds)
    if (maturity >= t) ++idx;
  return stage_from_index(idx);
}

PointMatrix superellipse_points(double half_width, double half_height, double exponent, int n_points) {
  PointMatrix pts(n_points, 2);
  const double p = 2.0 / exponent;
  for (int k = 0; k < n_points; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n_points;
    const double c = std::cos(th);
    const double s = std::sin(th);
    pts(k, 0) = half_width * std::copysign(std::pow(std::abs(c), p), c);
    pts(k, 1) = half_height * std::copysign(std::pow(std::abs(s), p), s);
  }
  return pts;
}

PointMatrix ellipse_points(double half_width, double half_height, int n_points) {
  return superellipse_points(half_width, half_height, 2.0, n_points);
}

namespace {

double lerp(double a, double b, double t) { return a + (b - a) * t; }

// Width of the tapered superellipse at the 90% chord (t = 0.9 from the distal end).
double metaphysis_width(const GeneratorConfig& cfg, double width) {
  const double y = 0.8;
  const double e = cfg.superellipse_exponent;
  return width * (1.0 + cfg.taper * y) * std::pow(1.0 - std::pow(y, e), 1.0 / e);
}

}  // namespace

Dataset generate_synthetic(int n_subjects, std::uint64_t seed, const GeneratorConfig& cfg) {
  if (n_subjects < 1) throw UsageError("n_subjects must be >= 1");
  cfg.validate();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::discrete_distribution<int> sex_dist(cfg.sex_weights.begin(), cfg.sex_weights.end());
  std::discrete_distribution<int> eth_dist(cfg.ethnicity_weights.begin(), cfg.ethnicity_weights.end());

  const double cap_maturity = cfg.stage_thresholds[5];  // G|H boundary
  const int width = static_cast<int>(std::to_string(n_subjects).size());

  Dataset ds;
  ds.seed = static_cast<std::int64_t>(seed);
  ds.provenance = fmt::format("synthetic(n={}, seed={})", n_subjects, seed);
  ds.records.reserve(static_cast<std::size_t>(n_subjects) * 3);

  for (int s = 0; s < n_subjects; ++s) {
    Subject subj;
    subj.subject_id = fmt::format("S{:0{}}", s, width);
    subj.age_years = lerp(cfg.age_min, cfg.age_max, unit(rng));
    subj.sex = static_cast<Sex>(sex_dist(rng));
    subj.ethnicity = static_cast<Ethnicity>(eth_dist(rng));

    double offset = cfg.ethnicity_age_offset[static_cast<std::size_t>(subj.ethnicity)];
    if (subj.sex == Sex::F) offset += cfg.female_age_offset;
    const double skeletal_age = subj.age_years - offset + cfg.age_noise_sd * normal(rng);
    const double maturity = (skeletal_age - cfg.age_min) / (cfg.age_max - cfg.age_min);

    for (BoneKind bone : kAllBones) {
      const auto b = static_cast<std::size_t>(bone);
      const double m = std::clamp(maturity + cfg.bone_maturity_sd * normal(rng), 0.0, 1.0);
      const TWStage stage = stage_for_maturity(cfg, m);
      const double u_fused = unit(rng);
      const double angle = cfg.max_rotation * (2.0 * unit(rng) - 1.0);
      const Point2 shift(cfg.canvas * unit(rng), cfg.canvas * unit(rng));

      const double height = lerp(cfg.height_young[b], cfg.height_mature[b], m);
      const double wph = cfg.width_to_height + cfg.width_to_height_growth * m;
      const double w = wph * height;

      PointMatrix phalanx = superellipse_points(0.5 * w, 0.5 * height, cfg.superellipse_exponent,
                                                cfg.phalanx_points);
      for (Eigen::Index k = 0; k < phalanx.rows(); ++k)
        phalanx(k, 0) *= 1.0 + cfg.taper * phalanx(k, 1) / (0.5 * height);

      std::optional<PointMatrix> epiphysis;
      const bool fused = stage == TWStage::I || (stage == TWStage::H && u_fused < cfg.fused_fraction_h);
      if (!fused) {
        const double ratio = lerp(cfg.epi_ratio_young, cfg.epi_ratio_cap, std::min(m / cap_maturity, 1.0));
        const double ew = ratio * metaphysis_width(cfg, w);
        const double eh = cfg.epi_height_ratio * ew;
        const double gap = cfg.epi_gap * (1.0 - 0.6 * m);
        PointMatrix e = ellipse_points(0.5 * ew, 0.5 * eh, cfg.epiphysis_points);
        e.col(1).array() += 0.5 * height + gap + 0.5 * eh;
        epiphysis = std::move(e);
      }

      const Eigen::Matrix2d rot = Eigen::Rotation2Dd(angle).toRotationMatrix();
      auto place = [&](PointMatrix& pts) {
        pts = (pts * rot.transpose()).rowwise() + shift.transpose();
        if (cfg.coord_noise_sd > 0.0)
          for (Eigen::Index k = 0; k < pts.rows(); ++k)
            for (int c = 0; c < 2; ++c) pts(k, c) += cfg.coord_noise_sd * normal(rng);
      };
      place(phalanx);
      if (epiphysis) place(*epiphysis);

      BoneRecord rec;
      rec.subject = subj;
      rec.bone = bone;
      rec.phalanx = Outline(std::move(phalanx));
      if (epiphysis) rec.epiphysis = Outline(std::move(*epiphysis));
      rec.tw_stage = stage;
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

}  // namespace boneage
