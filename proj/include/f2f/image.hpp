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

#ifndef F2F_IMAGE_HPP_
#define F2F_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "f2f/core.hpp"

namespace f2f {

/// Row-major linear-color RGB image. Input frames are clamped to [0,1] on
/// ingestion; synthesized colors may run out of range until written to disk.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;  // 3 * width * height, row-major

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), rgb(pixel_count(w, h) * 3u, 0.0) {}

  static std::size_t pixel_count(int w, int h) {
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }

  Vec3 at(int x, int y) const {
    const std::size_t i = 3u * (static_cast<std::size_t>(y) * width + x);
    return Vec3(rgb[i], rgb[i + 1], rgb[i + 2]);
  }
  void set(int x, int y, const Vec3& c) {
    const std::size_t i = 3u * (static_cast<std::size_t>(y) * width + x);
    rgb[i] = c.x();
    rgb[i + 1] = c.y();
    rgb[i + 2] = c.z();
  }

  void fill(const Vec3& c) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
      rgb[i] = c.x();
      rgb[i + 1] = c.y();
      rgb[i + 2] = c.z();
    }
  }

  /// Ingestion contract: finite values clamped to [0,1].
  void clamp01() {
    for (double& v : rgb) v = std::clamp(v, 0.0, 1.0);
  }
};

/// Coarse-to-fine pyramid. Index 0 is full resolution (the finest solver
/// level); each further entry is a 2x2 box-filter downsample.
inline std::vector<Frame> build_pyramid(const Frame& frame, int levels) {
  if (levels < 1) throw ConfigError("build_pyramid: levels must be >= 1");
  const int div = 1 << (levels - 1);
  if (frame.width % div != 0 || frame.height % div != 0)
    throw ConfigError("build_pyramid: frame dims not divisible by 2^(levels-1)");
  std::vector<Frame> pyr;
  pyr.reserve(levels);
  pyr.push_back(frame);
  for (int l = 1; l < levels; ++l) {
    const Frame& src = pyr.back();
    Frame dst(src.width / 2, src.height / 2);
    for (int y = 0; y < dst.height; ++y)
      for (int x = 0; x < dst.width; ++x) {
        const Vec3 c = 0.25 * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) +
                               src.at(2 * x, 2 * y + 1) +
                               src.at(2 * x + 1, 2 * y + 1));
        dst.set(x, y, c);
      }
    pyr.push_back(std::move(dst));
  }
  return pyr;
}

namespace detail {

// Catmull-Rom weights and derivative for t in [0,1].
inline void catmull_rom(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t + 2.0 * t2 - t3);
  w[1] = 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3);
  w[2] = 0.5 * (t + 4.0 * t2 - 3.0 * t3);
  w[3] = 0.5 * (-t2 + t3);
}
inline void catmull_rom_deriv(double t, double w[4]) {
  const double t2 = t * t;
  w[0] = 0.5 * (-1.0 + 4.0 * t - 3.0 * t2);
  w[1] = 0.5 * (-10.0 * t + 9.0 * t2);
  w[2] = 0.5 * (1.0 + 8.0 * t - 9.0 * t2);
  w[3] = 0.5 * (-2.0 * t + 3.0 * t2);
}

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace detail

/// Bilinear sample at continuous pixel coordinate (pixel centers at i+0.5).
/// Coordinates clamp to the valid sample range at the border.
inline Vec3 sample_bilinear(const Frame& img, double u, double v) {
  const double x = u - 0.5, y = v - 0.5;
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  const double tx = x - x0, ty = y - y0;
  const int x1 = detail::clamp_index(x0 + 1, img.width);
  const int y1 = detail::clamp_index(y0 + 1, img.height);
  x0 = detail::clamp_index(x0, img.width);
  y0 = detail::clamp_index(y0, img.height);
  return (1 - tx) * (1 - ty) * img.at(x0, y0) + tx * (1 - ty) * img.at(x1, y0) +
         (1 - tx) * ty * img.at(x0, y1) + tx * ty * img.at(x1, y1);
}

/// C1 Catmull-Rom bicubic sample; reproduces pixel values exactly at pixel
/// centers. Optionally returns the analytic gradient d(color)/d(u,v) used by
/// the photometric Jacobian.
inline Vec3 sample_bicubic(const Frame& img, double u, double v,
                           Eigen::Matrix<double, 3, 2>* grad = nullptr) {
  const double x = u - 0.5, y = v - 0.5;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double tx = x - x0, ty = y - y0;
  double wx[4], wy[4], dwx[4], dwy[4];
  detail::catmull_rom(tx, wx);
  detail::catmull_rom(ty, wy);
  if (grad) {
    detail::catmull_rom_deriv(tx, dwx);
    detail::catmull_rom_deriv(ty, dwy);
  }
  Vec3 value = Vec3::Zero(), du = Vec3::Zero(), dv = Vec3::Zero();
  for (int j = 0; j < 4; ++j) {
    const int yy = detail::clamp_index(y0 - 1 + j, img.height);
    Vec3 row = Vec3::Zero(), drow = Vec3::Zero();
    for (int i = 0; i < 4; ++i) {
      const Vec3 s = img.at(detail::clamp_index(x0 - 1 + i, img.width), yy);
      row += wx[i] * s;
      if (grad) drow += dwx[i] * s;
    }
    value += wy[j] * row;
    if (grad) {
      du += wy[j] * drow;
      dv += dwy[j] * row;
    }
  }
  if (grad) {
    grad->col(0) = du;
    grad->col(1) = dv;
  }
  return value;
}

}  // namespace f2f

#endif  // F2F_IMAGE_HPP_
