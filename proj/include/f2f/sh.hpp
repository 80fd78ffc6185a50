// Copyright 2026 The f2f Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef F2F_SH_HPP_
#define F2F_SH_HPP_

#include <cmath>

#include "f2f/core.hpp"

namespace f2f {

// Real spherical harmonics, bands 0-2, evaluated as cartesian polynomials of
// a unit direction d = (x, y, z). Band order (l, m):
//   (0,0) (1,-1) (1,0) (1,1) (2,-2) (2,-1) (2,0) (2,1) (2,2)
// Constants (no Condon-Shortley factor):
//   B0 = 1/2 sqrt(1/pi)
//   B1 = sqrt(3/(4 pi)) y      B2 = sqrt(3/(4 pi)) z     B3 = sqrt(3/(4 pi)) x
//   B4 = 1/2 sqrt(15/pi) x y   B5 = 1/2 sqrt(15/pi) y z
//   B6 = 1/4 sqrt(5/pi) (3 z^2 - 1)
//   B7 = 1/2 sqrt(15/pi) x z   B8 = 1/4 sqrt(15/pi) (x^2 - y^2)

inline constexpr int kShCount = 9;

namespace detail {
inline const double kShC0 = 0.5 * std::sqrt(1.0 / M_PI);
inline const double kShC1 = std::sqrt(3.0 / (4.0 * M_PI));
inline const double kShC2 = 0.5 * std::sqrt(15.0 / M_PI);
inline const double kShC20 = 0.25 * std::sqrt(5.0 / M_PI);
inline const double kShC22 = 0.25 * std::sqrt(15.0 / M_PI);
}  // namespace detail

/// Evaluates the nine basis functions at unit direction d.
inline Eigen::Matrix<double, 9, 1> sh_basis(const Vec3& d) {
  using namespace detail;
  const double x = d.x(), y = d.y(), z = d.z();
  Eigen::Matrix<double, 9, 1> b;
  b[0] = kShC0;
  b[1] = kShC1 * y;
  b[2] = kShC1 * z;
  b[3] = kShC1 * x;
  b[4] = kShC2 * x * y;
  b[5] = kShC2 * y * z;
  b[6] = kShC20 * (3.0 * z * z - 1.0);
  b[7] = kShC2 * x * z;
  b[8] = kShC22 * (x * x - y * y);
  return b;
}

/// d(sh_basis)/d(d) as a 9x3 matrix (ambient polynomial gradient; callers
/// compose it with the normalization Jacobian of the shading normal).
inline Eigen::Matrix<double, 9, 3> sh_basis_gradient(const Vec3& d) {
  using namespace detail;
  const double x = d.x(), y = d.y(), z = d.z();
  Eigen::Matrix<double, 9, 3> g;
  g.setZero();
  g(1, 1) = kShC1;
  g(2, 2) = kShC1;
  g(3, 0) = kShC1;
  g(4, 0) = kShC2 * y;
  g(4, 1) = kShC2 * x;
  g(5, 1) = kShC2 * z;
  g(5, 2) = kShC2 * y;
  g(6, 2) = kShC20 * 6.0 * z;
  g(7, 0) = kShC2 * z;
  g(7, 2) = kShC2 * x;
  g(8, 0) = kShC22 * 2.0 * x;
  g(8, 1) = -kShC22 * 2.0 * y;
  return g;
}

/// Smooth distant illumination: 9 coefficients per RGB channel.
/// coeffs(j, c) weights basis j in channel c.
struct Illumination {
  Eigen::Matrix<double, 9, 3> coeffs = Eigen::Matrix<double, 9, 3>::Zero();

  /// Per-channel ambient level `value`: irradiance == value for any normal.
  static Illumination ambient(double value) {
    Illumination g;
    const double b0 = detail::kShC0;
    g.coeffs(0, 0) = g.coeffs(0, 1) = g.coeffs(0, 2) = value / b0;
    return g;
  }

  /// Channel-major flat view (gamma_r0..r8, g0..g8, b0..b8): the wire order.
  VecX flatten() const {
    VecX v(27);
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < 9; ++j) v[c * 9 + j] = coeffs(j, c);
    return v;
  }
  static Illumination unflatten(const VecX& v) {
    Illumination g;
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < 9; ++j) g.coeffs(j, c) = v[c * 9 + j];
    return g;
  }
};

/// Per-channel irradiance sum_j gamma_{c,j} B_j(n) for a unit normal.
inline Vec3 sh_irradiance(const Vec3& unit_normal, const Illumination& gamma) {
  return gamma.coeffs.transpose() * sh_basis(unit_normal);
}

/// Lambertian shading: albedo_c * sum_j gamma_{c,j} B_j(n). Unclamped; the
/// pipeline clamps to [0,1] only when writing viewable images.
inline Vec3 sh_shade(const Vec3& unit_normal, const Vec3& albedo,
                     const Illumination& gamma) {
  return albedo.cwiseProduct(sh_irradiance(unit_normal, gamma));
}

}  // namespace f2f

#endif  // F2F_SH_HPP_
