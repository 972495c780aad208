#pragma once

#include "boneage/core_data.hpp"

#include <optional>
#include <vector>

namespace boneage::geometry {

/// Shoelace signed area. Positive for vertices ordered clockwise on screen
/// (y-down), i.e. counter-clockwise in the usual y-up convention.
double signed_area(const PointMatrix& pts);
double area(const PointMatrix& pts);
double perimeter(const PointMatrix& pts);

/// Area-weighted centroid. Throws NumericError for zero-area polygons.
Point2 centroid(const PointMatrix& pts);

/// Returns the vertices reordered so that signed_area() > 0.
PointMatrix clockwise(const PointMatrix& pts);

/// Parameters s along the line origin + s * direction where it crosses the
/// polygon boundary, sorted ascending.
std::vector<double> line_crossings(const PointMatrix& pts, const Point2& origin,
                                   const Point2& direction);

/// Total length of line ∩ polygon (summed over all inside segments).
double chord_length(const PointMatrix& pts, const Point2& origin, const Point2& direction);

/// First boundary point hit by the ray origin + s * direction, s > 0, along
/// with the index of the edge (i -> i+1) containing it.
struct RayHit {
  Point2 point;
  Eigen::Index edge;
  double edge_fraction;
};
std::optional<RayHit> ray_hit(const PointMatrix& pts, const Point2& origin, const Point2& direction);

/// Resamples the closed polygon at `count` points uniformly spaced in arc
/// length, starting at position `edge_fraction` along edge `start_edge`.
PointMatrix resample_closed(const PointMatrix& pts, Eigen::Index start_edge, double edge_fraction,
                            Eigen::Index count);

}  // namespace boneage::geometry
