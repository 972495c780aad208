#include "boneage/geometry.hpp"

#include "boneage/error.hpp"

#include <algorithm>
#include <cmath>

namespace boneage::geometry {

namespace {

Point2 vertex(const PointMatrix& pts, Eigen::Index i) {
  return pts.row(i % pts.rows()).transpose();
}

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

double signed_area(const PointMatrix& pts) {
  const Eigen::Index n = pts.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    acc += pts(i, 0) * pts(j, 1) - pts(j, 0) * pts(i, 1);
  }
  return 0.5 * acc;
}

double area(const PointMatrix& pts) { return std::abs(signed_area(pts)); }

double perimeter(const PointMatrix& pts) {
  const Eigen::Index n = pts.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += (vertex(pts, i + 1) - vertex(pts, i)).norm();
  return acc;
}

Point2 centroid(const PointMatrix& pts) {
  const Eigen::Index n = pts.rows();
  // Shift to the first vertex so the accumulation does not lose precision for
  // outlines far from the origin.
  const Point2 ref = vertex(pts, 0);
  double a2 = 0.0;
  Point2 acc = Point2::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = vertex(pts, i) - ref;
    const Point2 q = vertex(pts, i + 1) - ref;
    const double c = cross(p, q);
    a2 += c;
    acc += (p + q) * c;
  }
  const double scale = (pts.rowwise() - ref.transpose()).cwiseAbs().maxCoeff();
  if (!(std::abs(a2) > 1e-12 * scale * scale)) throw NumericError("degenerate outline (zero area)");
  return ref + acc / (3.0 * a2);
}

PointMatrix clockwise(const PointMatrix& pts) {
  if (signed_area(pts) >= 0.0) return pts;
  return pts.colwise().reverse();
}

std::vector<double> line_crossings(const PointMatrix& pts, const Point2& origin,
                                   const Point2& direction) {
  const Eigen::Index n = pts.rows();
  std::vector<double> out;
  // Side of each vertex relative to the line; vertices exactly on the line are
  // nudged to the positive side so each crossing is counted once.
  auto side = [&](const Point2& p) {
    const double s = cross(direction, p - origin);
    return s >= 0.0;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = vertex(pts, i);
    const Point2 q = vertex(pts, i + 1);
    if (side(p) == side(q)) continue;
    const Point2 e = q - p;
    const double denom = cross(direction, e);
    if (denom == 0.0) continue;
    // origin + s*d = p + u*e  =>  s = cross(p - origin, e) / cross(d, e)
    out.push_back(cross(p - origin, e) / denom);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double chord_length(const PointMatrix& pts, const Point2& origin, const Point2& direction) {
  const auto s = line_crossings(pts, origin, direction);
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) len += s[i + 1] - s[i];
  return len * direction.norm();
}

std::optional<RayHit> ray_hit(const PointMatrix& pts, const Point2& origin, const Point2& direction) {
  const Eigen::Index n = pts.rows();
  std::optional<RayHit> best;
  double best_s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = vertex(pts, i);
    const Point2 e = vertex(pts, i + 1) - p;
    const double denom = cross(direction, e);
    if (denom == 0.0) continue;
    const double s = cross(p - origin, e) / denom;
    const double u = cross(p - origin, direction) / denom;
    if (s <= 0.0 || u < 0.0 || u >= 1.0) continue;
    if (!best || s < best_s) {
      best_s = s;
      best = RayHit{origin + s * direction, i, u};
    }
  }
  return best;
}

PointMatrix resample_closed(const PointMatrix& pts, Eigen::Index start_edge, double edge_fraction,
                            Eigen::Index count) {
  const Eigen::Index n = pts.rows();
  // Walk the outline starting at the hit point: first the remainder of the
  // start edge, then every following edge, then the leading part of the start
  // edge.
  std::vector<Point2> walk;
  walk.reserve(static_cast<std::size_t>(n) + 2);
  const Point2 a = vertex(pts, start_edge);
  const Point2 b = vertex(pts, start_edge + 1);
  const Point2 start = a + edge_fraction * (b - a);
  walk.push_back(start);
  for (Eigen::Index k = 1; k <= n; ++k) walk.push_back(vertex(pts, start_edge + k));
  walk.push_back(start);

  std::vector<double> cum(walk.size(), 0.0);
  for (std::size_t i = 1; i < walk.size(); ++i) cum[i] = cum[i - 1] + (walk[i] - walk[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 0.0)) throw NumericError("degenerate outline (zero perimeter)");

  PointMatrix out(count, 2);
  std::size_t seg = 0;
  for (Eigen::Index k = 0; k < count; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(count);
    while (seg + 2 < walk.size() && cum[seg + 1] <= target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double u = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    out.row(k) = (walk[seg] + u * (walk[seg + 1] - walk[seg])).transpose();
  }
  return out;
}

}  // namespace boneage::geometry
