#pragma once

#include <cmath>

namespace tourkit {

/// Mean Earth radius in kilometres.
constexpr double kEarthRadiusKm = 6371.0088;

/// Great-circle distance in kilometres between two (lat, lon) points given in
/// decimal degrees, via the haversine formula.
inline double haversine_km(double lat_a, double lon_a, double lat_b, double lon_b) {
  constexpr double kDegToRad = M_PI / 180.0;
  const double phi_a = lat_a * kDegToRad;
  const double phi_b = lat_b * kDegToRad;
  const double d_phi = (lat_b - lat_a) * kDegToRad;
  const double d_lambda = (lon_b - lon_a) * kDegToRad;
  const double s_phi = std::sin(d_phi / 2.0);
  const double s_lambda = std::sin(d_lambda / 2.0);
  const double h = s_phi * s_phi + std::cos(phi_a) * std::cos(phi_b) * s_lambda * s_lambda;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace tourkit
