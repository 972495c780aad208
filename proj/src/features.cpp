#include "boneage/features.hpp"

#include "boneage/error.hpp"
#include "boneage/geometry.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace boneage {

EllipseFit fit_ellipse(const PointMatrix& pts) {
  const Eigen::Index n = pts.rows();
  if (n < 5) throw NumericError("ellipse fit needs at least 5 points");

  // Normalize for conditioning: centre on the mean, unit RMS radius.
  const Eigen::RowVector2d mean = pts.colwise().mean();
  const PointMatrix centred = pts.rowwise() - mean;
  const double scale = std::sqrt(centred.rowwise().squaredNorm().mean());
  if (!(scale > 0.0)) throw NumericError("ellipse fit on coincident points");
  const Eigen::ArrayXd x = centred.col(0).array() / scale;
  const Eigen::ArrayXd y = centred.col(1).array() / scale;

  Eigen::MatrixXd d1(n, 3), d2(n, 3);
  d1.col(0) = x * x;
  d1.col(1) = x * y;
  d1.col(2) = y * y;
  d2.col(0) = x;
  d2.col(1) = y;
  d2.col(2).setOnes();

  const Eigen::Matrix3d s1 = d1.transpose() * d1;
  const Eigen::Matrix3d s2 = d1.transpose() * d2;
  const Eigen::Matrix3d s3 = d2.transpose() * d2;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
  if (!lu.isInvertible()) throw NumericError("ellipse fit: collinear points");
  const Eigen::Matrix3d t = -lu.solve(s2.transpose());
  const Eigen::Matrix3d m = s1 + s2 * t;
  // Premultiply by the inverse of the ellipse constraint matrix.
  Eigen::Matrix3d mc;
  mc.row(0) = 0.5 * m.row(2);
  mc.row(1) = -m.row(1);
  mc.row(2) = 0.5 * m.row(0);

  Eigen::EigenSolver<Eigen::Matrix3d> es(mc);
  if (es.info() != Eigen::Success) throw NumericError("ellipse fit: eigen decomposition failed");
  Eigen::Vector3d a1 = Eigen::Vector3d::Zero();
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(es.eigenvalues()(k).imag()) > 1e-9 * (1.0 + std::abs(es.eigenvalues()(k).real()))) continue;
    const Eigen::Vector3d v = es.eigenvectors().col(k).real();
    const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (cond <= 0.0) continue;
    const double lambda = std::abs(es.eigenvalues()(k).real());
    if (lambda < best) {
      best = lambda;
      a1 = v;
    }
  }
  if (!std::isfinite(best)) throw NumericError("ellipse fit: no elliptical solution (degenerate points)");
  const Eigen::Vector3d a2 = t * a1;

  const double A = a1(0), B = a1(1), C = a1(2), D = a2(0), E = a2(1), F = a2(2);
  Eigen::Matrix2d q;
  q << A, 0.5 * B, 0.5 * B, C;
  const Eigen::Vector2d c0 = (2.0 * q).ldlt().solve(Eigen::Vector2d(-D, -E));
  const double f0 = F + 0.5 * (D * c0.x() + E * c0.y());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> qs(q);
  const Eigen::Vector2d lam = qs.eigenvalues();
  const double r0 = -f0 / lam(0);
  const double r1 = -f0 / lam(1);
  if (!(r0 > 0.0) || !(r1 > 0.0)) throw NumericError("ellipse fit: imaginary ellipse");
  const double ax0 = std::sqrt(r0), ax1 = std::sqrt(r1);
  const int major = ax0 >= ax1 ? 0 : 1;
  const Eigen::Vector2d dir = qs.eigenvectors().col(major);

  EllipseFit fit;
  fit.center = c0 * scale + mean.transpose();
  fit.major_axis_len = 2.0 * scale * std::max(ax0, ax1);
  fit.minor_axis_len = 2.0 * scale * std::min(ax0, ax1);
  double theta = std::atan2(dir.y(), dir.x());
  if (theta < 0.0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  fit.orientation = theta;
  return fit;
}

std::string feature_column(int number) { return fmt::format("f{}", number); }

std::string_view feature_description(int number) {
  static constexpr std::array<std::string_view, kNumFeatures> names{
      "epiphysis_present",      "phalanx_ellipse_height",   "phalanx_ellipse_width",
      "phalanx_height",         "phalanx_width",            "first_quartile_width",
      "third_quartile_width",   "metaphysis_width",         "phalanx_eccentricity",
      "width_to_height",        "phalanx_roundness",        "phalanx_area_to_perimeter",
      "first_quartile_to_width", "third_quartile_to_width", "metaphysis_to_width",
      "epi_ellipse_height",     "epi_ellipse_width",        "epi_height",
      "epi_width",              "epi_eccentricity",         "epi_distance_to_phalanx",
      "epi_width_to_height",    "epi_roundness",            "epi_area_to_perimeter",
      "epi_width_to_metaphysis"};
  return names.at(static_cast<std::size_t>(number - 1));
}

namespace {

struct AxisFrame {
  EllipseFit fit;
  double low = 0.0;   // min projection onto the major axis, relative to the centre
  double high = 0.0;  // max projection
  double extent() const { return high - low; }
};

AxisFrame axis_frame(const PointMatrix& pts) {
  AxisFrame fr;
  fr.fit = fit_ellipse(pts);
  const Eigen::VectorXd proj = (pts.rowwise() - fr.fit.center.transpose()) * fr.fit.major_direction();
  fr.low = proj.minCoeff();
  fr.high = proj.maxCoeff();
  return fr;
}

// Chord perpendicular to the major axis at fraction t of the extent measured
// from `from_low ? low : high`.
double chord_at(const PointMatrix& pts, const AxisFrame& fr, bool from_low, double t) {
  const double pos = from_low ? fr.low + t * fr.extent() : fr.high - t * fr.extent();
  const Point2 origin = fr.fit.center + pos * fr.fit.major_direction();
  const double len = geometry::chord_length(pts, origin, fr.fit.minor_direction());
  if (!(len > 0.0)) throw DataError(fmt::format("chord at t={} misses the outline", t));
  return len;
}

double eccentricity(const EllipseFit& e) {
  const double r = e.minor_axis_len / e.major_axis_len;
  return std::sqrt(std::max(0.0, 1.0 - r * r));
}

}  // namespace

ShapeFeatures extract_features(const BoneRecord& rec) {
  ShapeFeatures sf;
  const PointMatrix& ph = rec.phalanx.points();
  const AxisFrame pf = axis_frame(ph);

  // Pick the distal end: the metaphysis end faces the epiphysis, or is the
  // wider end when there is none.
  bool from_low = true;
  std::optional<AxisFrame> ef;
  if (rec.epiphysis) {
    ef = axis_frame(rec.epiphysis->points());
    const double e_proj = (ef->fit.center - pf.fit.center).dot(pf.fit.major_direction());
    from_low = e_proj >= 0.5 * (pf.low + pf.high);
  } else {
    const double near_low = chord_at(ph, pf, true, 0.05);
    const double near_high = chord_at(ph, pf, true, 0.95);
    from_low = near_high >= near_low;
  }

  const double area = geometry::area(ph);
  const double perim = geometry::perimeter(ph);

  sf.f(1) = rec.epiphysis ? 1.0 : 0.0;
  sf.f(2) = pf.fit.major_axis_len;
  sf.f(3) = pf.fit.minor_axis_len;
  sf.f(4) = pf.extent();
  sf.f(5) = chord_at(ph, pf, from_low, kMidChord);
  sf.f(6) = chord_at(ph, pf, from_low, kFirstQuartileChord);
  sf.f(7) = chord_at(ph, pf, from_low, kThirdQuartileChord);
  sf.f(8) = chord_at(ph, pf, from_low, kMetaphysisChord);
  sf.f(9) = eccentricity(pf.fit);
  sf.f(10) = sf.f(5) / sf.f(4);
  sf.f(11) = 4.0 * std::numbers::pi * area / (perim * perim);
  sf.f(12) = area / perim;
  sf.f(13) = sf.f(6) / sf.f(5);
  sf.f(14) = sf.f(7) / sf.f(5);
  sf.f(15) = sf.f(8) / sf.f(5);

  if (ef) {
    const PointMatrix& ep = rec.epiphysis->points();
    const double e_area = geometry::area(ep);
    const double e_perim = geometry::perimeter(ep);
    sf.f(16) = ef->fit.major_axis_len;
    sf.f(17) = ef->fit.minor_axis_len;
    sf.f(18) = ef->extent();
    sf.f(19) = chord_at(ep, *ef, true, 0.5);
    sf.f(20) = eccentricity(ef->fit);
    sf.f(21) = (ef->fit.center - pf.fit.center).norm();
    sf.f(22) = sf.f(19) / sf.f(18);
    sf.f(23) = 4.0 * std::numbers::pi * e_area / (e_perim * e_perim);
    sf.f(24) = e_area / e_perim;
    sf.f(25) = sf.f(19) / sf.f(8);
  }
  return sf;
}

}  // namespace boneage
