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

#ifndef F2F_RASTER_HPP_
#define F2F_RASTER_HPP_

#include <limits>
#include <vector>

#include "f2f/image.hpp"
#include "f2f/prior.hpp"
#include "f2f/scene.hpp"

namespace f2f {

/// Synthesized image plus the per-pixel data the photometric energy and its
/// Jacobian consume. Pixels outside `visible` carry sentinel values
/// (tri_id -1, depth +inf). Colors are unclamped linear RGB.
///
/// Raster conventions (fixed for bit-exact goldens): pixel centers at
/// (x+0.5, y+0.5) with top-left origin; barycentric coordinates are
/// screen-space affine; depth is the affinely interpolated camera z;
/// inclusive edge rule with depth ties resolved to the lower triangle index;
/// back faces and triangles touching the near plane are culled, zero-area
/// projected triangles are skipped and counted.
struct RasterOutput {
  Frame color;
  std::vector<double> depth;
  std::vector<int> tri_id;
  std::vector<Vec3> bary;
  std::vector<Eigen::Vector2i> visible;  // row-major order

  // State the raster was produced from, reused by the energy module.
  VecX geometry;                    // model-space, 3n
  VecX albedo;                      // unclamped Eq.2 output, 3n
  std::vector<Vec3> model_normals;  // area-weighted, unnormalized
  std::vector<Vec3> cam_positions;  // per vertex

  int degenerate_triangles = 0;
  int near_plane_culled = 0;
  int backface_culled = 0;

  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * color.width + x;
  }
};

namespace detail {
inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}
}  // namespace detail

/// Z-buffered, back-face-culled software rasterization of the prior under
/// `params` (Eq.1 geometry -> rigid transform -> perspective -> SH shading).
/// Deterministic for any thread count: rows are rasterized independently and
/// triangles are tested in ascending index order.
inline RasterOutput rasterize(const FacePrior& prior, const SceneParams& params,
                              int width, int height) {
  RasterOutput out;
  out.color = Frame(width, height);
  const std::size_t n_px = Frame::pixel_count(width, height);
  out.depth.assign(n_px, std::numeric_limits<double>::infinity());
  out.tri_id.assign(n_px, -1);
  out.bary.assign(n_px, Vec3::Zero());

  out.geometry = eval_geometry(prior, params.alpha, params.delta);
  out.albedo = eval_albedo(prior, params.beta);
  out.model_normals = vertex_normals(prior.triangles, out.geometry);

  const int n = prior.n_vertices;
  out.cam_positions.resize(static_cast<std::size_t>(n));
  std::vector<Vec2> screen(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    const Vec3 pc = transform_point(params.pose, FacePrior::vertex(out.geometry, k));
    out.cam_positions[static_cast<std::size_t>(k)] = pc;
    if (auto uv = project_point(params.kappa, pc)) {
      screen[static_cast<std::size_t>(k)] = *uv;
      valid[static_cast<std::size_t>(k)] = 1;
    }
  }

  // Classify triangles once, then bin the survivors per row.
  struct TriSetup {
    int id;
    Vec2 s0, e1, e2;  // screen vertex 0 and edge vectors
    double inv_denom;
    Vec3 z;  // camera-space depths
    int y_begin, y_end, x_begin, x_end;
  };
  std::vector<TriSetup> tris;
  tris.reserve(prior.triangles.size());
  for (std::size_t t = 0; t < prior.triangles.size(); ++t) {
    const auto& tri = prior.triangles[t];
    if (!valid[tri[0]] || !valid[tri[1]] || !valid[tri[2]]) {
      ++out.near_plane_culled;
      continue;
    }
    const Vec3& p0 = out.cam_positions[tri[0]];
    const Vec3& p1 = out.cam_positions[tri[1]];
    const Vec3& p2 = out.cam_positions[tri[2]];
    // Front-facing iff the camera-space plane normal points toward the eye.
    if ((p1 - p0).cross(p2 - p0).dot(p0) >= 0.0) {
      ++out.backface_culled;
      continue;
    }
    TriSetup s;
    s.id = static_cast<int>(t);
    s.s0 = screen[tri[0]];
    s.e1 = screen[tri[1]] - s.s0;
    s.e2 = screen[tri[2]] - s.s0;
    const double denom = detail::cross2(s.e1, s.e2);
    if (std::abs(denom) < 1e-12) {
      ++out.degenerate_triangles;
      continue;
    }
    s.inv_denom = 1.0 / denom;
    s.z = Vec3(p0.z(), p1.z(), p2.z());
    const Vec2 s1 = s.s0 + s.e1, s2 = s.s0 + s.e2;
    const double min_x = std::min({s.s0.x(), s1.x(), s2.x()});
    const double max_x = std::max({s.s0.x(), s1.x(), s2.x()});
    const double min_y = std::min({s.s0.y(), s1.y(), s2.y()});
    const double max_y = std::max({s.s0.y(), s1.y(), s2.y()});
    // First/last pixel whose center (i + 0.5) can fall inside the bbox.
    s.x_begin = std::max(0, static_cast<int>(std::floor(min_x - 0.5)) + 1);
    s.x_end = std::min(width - 1, static_cast<int>(std::floor(max_x - 0.5 + 1.0)));
    s.y_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)) + 1);
    s.y_end = std::min(height - 1, static_cast<int>(std::floor(max_y - 0.5 + 1.0)));
    if (s.x_begin > s.x_end || s.y_begin > s.y_end) continue;
    tris.push_back(s);
  }

  std::vector<std::vector<int>> row_bins(static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < tris.size(); ++i)
    for (int y = tris[i].y_begin; y <= tris[i].y_end; ++y)
      row_bins[static_cast<std::size_t>(y)].push_back(static_cast<int>(i));

  parallel_for(static_cast<std::size_t>(height), 8, [&](std::size_t yb, std::size_t ye) {
    for (std::size_t y = yb; y < ye; ++y) {
      const double py = static_cast<double>(y) + 0.5;
      for (int ti : row_bins[y]) {
        const TriSetup& s = tris[static_cast<std::size_t>(ti)];
        for (int x = s.x_begin; x <= s.x_end; ++x) {
          const Vec2 d(static_cast<double>(x) + 0.5 - s.s0.x(), py - s.s0.y());
          const double l1 = detail::cross2(d, s.e2) * s.inv_denom;
          if (l1 < 0.0) continue;
          const double l2 = detail::cross2(s.e1, d) * s.inv_denom;
          if (l2 < 0.0 || l1 + l2 > 1.0) continue;
          const Vec3 b(1.0 - l1 - l2, l1, l2);
          const double z = b.dot(s.z);
          const std::size_t idx = static_cast<std::size_t>(y) * width + x;
          if (z < out.depth[idx]) {
            out.depth[idx] = z;
            out.tri_id[idx] = s.id;
            out.bary[idx] = b;
          }
        }
      }
    }
  });

  // Shading pass over covered pixels.
  parallel_for(n_px, 1024, [&](std::size_t b, std::size_t e) {
    for (std::size_t idx = b; idx < e; ++idx) {
      const int t = out.tri_id[idx];
      if (t < 0) continue;
      const auto& tri = prior.triangles[static_cast<std::size_t>(t)];
      const Vec3& w = out.bary[idx];
      Vec3 m = w[0] * out.model_normals[tri[0]] + w[1] * out.model_normals[tri[1]] +
               w[2] * out.model_normals[tri[2]];
      m = params.pose.rotation * m;
      const double mn = m.norm();
      if (mn > 0) m /= mn;
      Vec3 alb = w[0] * FacePrior::vertex(out.albedo, tri[0]) +
                 w[1] * FacePrior::vertex(out.albedo, tri[1]) +
                 w[2] * FacePrior::vertex(out.albedo, tri[2]);
      alb = alb.cwiseMax(0.0).cwiseMin(1.0);
      const int x = static_cast<int>(idx % static_cast<std::size_t>(width));
      const int y = static_cast<int>(idx / static_cast<std::size_t>(width));
      out.color.set(x, y, sh_shade(m, alb, params.gamma));
    }
  });

  out.visible.reserve(n_px / 4);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (out.tri_id[static_cast<std::size_t>(y) * width + x] >= 0)
        out.visible.emplace_back(x, y);
  return out;
}

}  // namespace f2f

#endif  // F2F_RASTER_HPP_
