#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "dsprof/error.hpp"

namespace dsprof {

template <typename Scalar>
using LatLong = Eigen::Matrix<Scalar, 2, 1>;

/// Closed ring of (lat, long) vertices in degrees. The closing vertex may be
/// given or omitted; both forms describe the same polygon.
template <typename Scalar>
struct BasicPolygon {
  std::vector<LatLong<Scalar>> vertices;
};

using Polygon = BasicPolygon<double>;

namespace detail {

template <typename Scalar>
std::vector<LatLong<Scalar>> open_ring(const BasicPolygon<Scalar>& polygon) {
  std::vector<LatLong<Scalar>> ring = polygon.vertices;
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

}  // namespace detail

/// Planar shoelace area (signed) on raw lat/long.
template <typename Scalar>
Scalar signed_area(const BasicPolygon<Scalar>& polygon) {
  const auto ring = detail::open_ring(polygon);
  Scalar twice_area = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % ring.size()];
    twice_area += a.x() * b.y() - b.x() * a.y();
  }
  return twice_area / 2;
}

/// Shoelace centroid on the raw lat/long plane. Orientation and the starting
/// vertex do not matter. Throws degenerate_geometry for fewer than three
/// distinct vertices or zero area.
template <typename Scalar>
LatLong<Scalar> polygon_centroid(const BasicPolygon<Scalar>& polygon) {
  const auto ring = detail::open_ring(polygon);
  if (ring.size() < 3) {
    throw Error(ErrorKind::degenerate_geometry, "polygon needs at least 3 vertices");
  }
  Scalar twice_area = 0;
  LatLong<Scalar> weighted = LatLong<Scalar>::Zero();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % ring.size()];
    const Scalar cross = a.x() * b.y() - b.x() * a.y();
    twice_area += cross;
    weighted += (a + b) * cross;
  }
  const Scalar area = twice_area / 2;
  if (!std::isfinite(area) || area == Scalar(0)) {
    throw Error(ErrorKind::degenerate_geometry, "polygon has zero area");
  }
  return weighted / (6 * area);
}

/// Maps geographic degrees onto the unit sphere: (cos lat cos long, cos lat sin long, sin lat).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> to_unit_sphere(Scalar lat_deg, Scalar long_deg) {
  if (!(lat_deg >= -90 && lat_deg <= 90) || !(long_deg >= -180 && long_deg <= 180)) {
    throw Error(ErrorKind::domain, "lat must lie in [-90, 90] and long in [-180, 180]");
  }
  constexpr Scalar to_rad = std::numbers::pi_v<Scalar> / Scalar(180);
  const Scalar lat = lat_deg * to_rad;
  const Scalar lon = long_deg * to_rad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

}  // namespace dsprof
