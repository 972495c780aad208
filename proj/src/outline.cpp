#include "boneage/outline.hpp"

#include "boneage/csv.hpp"
#include "boneage/error.hpp"
#include "boneage/features.hpp"
#include "boneage/geometry.hpp"

#include <fmt/format.h>

namespace boneage {

Eigen::VectorXd radial_profile(const PointMatrix& outline, Eigen::Index count) {
  const PointMatrix pts = geometry::clockwise(outline);
  const Point2 c = geometry::centroid(pts);
  const EllipseFit fit = fit_ellipse(pts);
  auto hit = geometry::ray_hit(pts, c, fit.minor_direction());
  if (!hit) throw NumericError("outline is not visible from its centroid along the minor axis");
  const PointMatrix samples = geometry::resample_closed(pts, hit->edge, hit->edge_fraction, count);
  return (samples.rowwise() - c.transpose()).rowwise().norm();
}

RadialSeries to_radial_series(const BoneRecord& rec) {
  RadialSeries rs;
  rs.label = rec.tw_stage;
  rs.subject_id = rec.subject.subject_id;
  rs.bone = rec.bone;
  try {
    rs.values.head<kPhalanxSamples>() = radial_profile(rec.phalanx.points(), kPhalanxSamples);
    if (rec.epiphysis)
      rs.values.tail<kEpiphysisSamples>() = radial_profile(rec.epiphysis->points(), kEpiphysisSamples);
  } catch (const Error& e) {
    throw NumericError(fmt::format("{} (record {}/{})", e.what(), rec.subject.subject_id, to_string(rec.bone)));
  }
  return rs;
}

std::vector<RadialSeries> to_radial_series(const std::vector<BoneRecord>& recs) {
  std::vector<RadialSeries> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(to_radial_series(r));
  return out;
}

void series_to_csv(const std::vector<RadialSeries>& batch, const std::filesystem::path& path) {
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < kSeriesLength; ++i) header.push_back(fmt::format("v{}", i));
  header.insert(header.end(), {"tw_stage", "subject_id", "bone"});
  std::vector<std::vector<std::string>> rows;
  rows.reserve(batch.size());
  for (const auto& s : batch) {
    std::vector<std::string> row;
    row.reserve(header.size());
    for (Eigen::Index i = 0; i < kSeriesLength; ++i) row.push_back(csv::format_double(s.values(i)));
    row.emplace_back(s.label ? to_string(*s.label) : "");
    row.push_back(s.subject_id);
    row.emplace_back(s.bone ? to_string(*s.bone) : "");
    rows.push_back(std::move(row));
  }
  csv::write(path, header, rows);
}

std::vector<RadialSeries> csv_to_series(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const auto expected = static_cast<std::size_t>(kSeriesLength) + 3;
  if (t.header.size() != expected)
    throw DataError(fmt::format("series CSV column-count mismatch: expected {}, got {}", expected, t.header.size()));
  const std::size_t c_stage = t.column("tw_stage");
  const std::size_t c_subject = t.column("subject_id");
  const std::size_t c_bone = t.column("bone");
  std::vector<std::size_t> c_values;
  for (Eigen::Index i = 0; i < kSeriesLength; ++i) c_values.push_back(t.column(fmt::format("v{}", i)));
  std::vector<RadialSeries> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    RadialSeries s;
    for (Eigen::Index i = 0; i < kSeriesLength; ++i)
      s.values(i) = csv::parse_double(row[c_values[static_cast<std::size_t>(i)]]);
    if (!row[c_stage].empty()) s.label = parse_stage(row[c_stage]);
    s.subject_id = row[c_subject];
    if (!row[c_bone].empty()) s.bone = parse_bone(row[c_bone]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace boneage
