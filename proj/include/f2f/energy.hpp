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

#ifndef F2F_ENERGY_HPP_
#define F2F_ENERGY_HPP_

#include <vector>

#include "f2f/raster.hpp"
#include "f2f/scene.hpp"

namespace f2f {

// ---------------------------------------------------------------------------
// Parameter block layout. Column order is fixed: alpha | beta | delta |
// gamma | pose (3 axis-angle + 3 translation) | kappa (fx fy cx cy).

struct ActiveBlocks {
  bool alpha = false;
  bool beta = false;
  bool delta = false;
  bool gamma = false;
  bool pose = false;
  bool kappa = false;

  static ActiveBlocks tracking() { return {false, false, true, true, true, false}; }
  static ActiveBlocks all() { return {true, true, true, true, true, true}; }
};

struct BlockLayout {
  ActiveBlocks active;
  int d_id = 0, d_alb = 0, d_exp = 0;
  int off_alpha = -1, off_beta = -1, off_delta = -1, off_gamma = -1,
      off_pose = -1, off_kappa = -1;
  int cols = 0;

  static BlockLayout make(const FacePrior& prior, const ActiveBlocks& active) {
    BlockLayout l;
    l.active = active;
    l.d_id = prior.dim_id();
    l.d_alb = prior.dim_alb();
    l.d_exp = prior.dim_exp();
    int off = 0;
    if (active.alpha) { l.off_alpha = off; off += l.d_id; }
    if (active.beta) { l.off_beta = off; off += l.d_alb; }
    if (active.delta) { l.off_delta = off; off += l.d_exp; }
    if (active.gamma) { l.off_gamma = off; off += 27; }
    if (active.pose) { l.off_pose = off; off += 6; }
    if (active.kappa) { l.off_kappa = off; off += 4; }
    l.cols = off;
    return l;
  }
};

/// Applies a stacked linear update: additive for coefficient blocks, gamma,
/// translation and intrinsics; compositional (axis-angle exponential) for the
/// rotation. `kappa_scale` converts a pyramid-level intrinsics update back to
/// full-resolution units.
inline SceneParams apply_update(const SceneParams& params, const BlockLayout& l,
                                const VecX& step, double kappa_scale = 1.0) {
  SceneParams out = params;
  if (l.active.alpha) out.alpha += step.segment(l.off_alpha, l.d_id);
  if (l.active.beta) out.beta += step.segment(l.off_beta, l.d_alb);
  if (l.active.delta) out.delta += step.segment(l.off_delta, l.d_exp);
  if (l.active.gamma)
    out.gamma = Illumination::unflatten(params.gamma.flatten() + step.segment(l.off_gamma, 27));
  if (l.active.pose)
    out.pose = compose_increment(params.pose, step.segment<3>(l.off_pose),
                                 step.segment<3>(l.off_pose + 3));
  if (l.active.kappa) {
    out.kappa.fx += step[l.off_kappa] / kappa_scale;
    out.kappa.fy += step[l.off_kappa + 1] / kappa_scale;
    out.kappa.cx += step[l.off_kappa + 2] / kappa_scale;
    out.kappa.cy += step[l.off_kappa + 3] / kappa_scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// IRLS state: per-pixel residual norms of the previous iterate. The robust
// l2,1 photo term is minimized as a sequence of weighted least squares with
// w_p = 1 / max(||r_p(P_old)||, epsilon).

struct IrlsState {
  std::vector<double> norms;  // one per visible pixel, >= 0
  double epsilon = 1e-4;

  double weight(std::size_t i) const { return 1.0 / std::max(norms[i], epsilon); }
};

inline IrlsState irls_from_raster(const RasterOutput& raster, const Frame& frame,
                                  double epsilon = 1e-4) {
  IrlsState s;
  s.epsilon = epsilon;
  s.norms.reserve(raster.visible.size());
  for (const auto& px : raster.visible)
    s.norms.push_back((raster.color.at(px.x(), px.y()) - frame.at(px.x(), px.y())).norm());
  return s;
}

// ---------------------------------------------------------------------------
// Frozen linearization state for one Gauss-Newton step. Visibility, triangle
// ids, barycentric weights, IRLS weights and the reference projections u0 are
// fixed from the step's initial rasterization; the residual below is then an
// ordinary differentiable function of the parameters:
//
//   photo row block per visible pixel p (3 rows):
//     sqrt(w_col/|V|) sqrt(w_p) * [ S_p(P) - C_I(p + u_p(P) - u0_p) ]
//   landmark rows (2 per observation):
//     sqrt(w_lan/|F|) sqrt(w_conf) * ( f_j - proj(pose(v_j(P))) )
//   regularizer rows:
//     sqrt(w_reg) alpha_i/sigma_id_i,  beta/sigma_alb,  delta/sigma_exp
//
// S_p is the SH-shaded interpolated surface color of the frozen site, u_p its
// projection, and C_I is sampled with C1 bicubic interpolation so the
// Jacobian's image-gradient term is the interpolant's exact derivative. At
// the raster state u_p == u0_p, so the photo rows reduce to C_S(p) - C_I(p).

struct PixelSite {
  int x = 0, y = 0;
  int tri = 0;
  Vec3 bary = Vec3::Zero();
  Vec2 u0 = Vec2::Zero();
  double sqrt_w = 0.0;  // sqrt(w_col/|V|) * sqrt(w_irls)
};

struct FrozenStep {
  const FacePrior* prior = nullptr;
  const Frame* frame = nullptr;
  std::vector<LandmarkObservation> landmarks;
  EnergyWeights weights;
  std::vector<PixelSite> sites;
  int n_visible = 0;
  int landmarks_dropped = 0;  // behind-camera at freeze time

  Eigen::Index rows() const {
    return static_cast<Eigen::Index>(3 * sites.size() + 2 * landmarks.size()) +
           prior->dim_id() + prior->dim_alb() + prior->dim_exp();
  }
  Eigen::Index landmark_row_offset() const {
    return static_cast<Eigen::Index>(3 * sites.size());
  }
  Eigen::Index reg_row_offset() const {
    return landmark_row_offset() + static_cast<Eigen::Index>(2 * landmarks.size());
  }
};

inline FrozenStep build_frozen_step(const FacePrior& prior,
                                    const RasterOutput& raster, const Frame& frame,
                                    const std::vector<LandmarkObservation>& landmarks,
                                    const EnergyWeights& weights,
                                    const SceneParams& params0,
                                    double irls_epsilon = 1e-4) {
  if (raster.visible.empty())
    throw NumericError("no visible pixels; re-initialize the pose");
  FrozenStep step;
  step.prior = &prior;
  step.frame = &frame;
  step.landmarks = landmarks;
  step.weights = weights;
  step.n_visible = static_cast<int>(raster.visible.size());

  const IrlsState irls = irls_from_raster(raster, frame, irls_epsilon);
  const double col_scale = weights.w_col / static_cast<double>(step.n_visible);
  step.sites.resize(raster.visible.size());
  for (std::size_t i = 0; i < raster.visible.size(); ++i) {
    PixelSite& s = step.sites[i];
    s.x = raster.visible[i].x();
    s.y = raster.visible[i].y();
    const std::size_t idx = raster.pixel_index(s.x, s.y);
    s.tri = raster.tri_id[idx];
    s.bary = raster.bary[idx];
    const auto& tri = prior.triangles[static_cast<std::size_t>(s.tri)];
    const Vec3 sm = s.bary[0] * FacePrior::vertex(raster.geometry, tri[0]) +
                    s.bary[1] * FacePrior::vertex(raster.geometry, tri[1]) +
                    s.bary[2] * FacePrior::vertex(raster.geometry, tri[2]);
    const auto u0 = project_point(params0.kappa, transform_point(params0.pose, sm));
    s.u0 = u0 ? *u0 : Vec2(s.x + 0.5, s.y + 0.5);
    s.sqrt_w = std::sqrt(col_scale * irls.weight(i));
  }
  for (const auto& lm : step.landmarks) {
    const Vec3 v = FacePrior::vertex(raster.geometry, lm.vertex_id);
    if (!(transform_point(params0.pose, v).z() > kZNear)) ++step.landmarks_dropped;
  }
  return step;
}

namespace detail {

// Shared per-site shading state at a given parameter vector.
struct SiteState {
  Vec3 s_model, q;       // interpolated surface point, camera space point
  Vec3 m_cam;            // unnormalized interpolated normal, camera space
  double m_norm = 1.0;
  Vec3 n_hat;
  Vec3 albedo;           // interpolated, clamped to [0,1]
  Vec3 albedo_clamped_lo, albedo_clamped_hi;  // clamp masks (0/1 per channel)
  Vec3 irradiance;
  Eigen::Matrix<double, 9, 1> sh;
};

inline SiteState site_state(const FacePrior& prior, const PixelSite& site,
                            const VecX& geometry, const VecX& albedo,
                            const std::vector<Vec3>& normals,
                            const SceneParams& params) {
  SiteState st;
  const auto& tri = prior.triangles[static_cast<std::size_t>(site.tri)];
  const Vec3& w = site.bary;
  st.s_model = w[0] * FacePrior::vertex(geometry, tri[0]) +
               w[1] * FacePrior::vertex(geometry, tri[1]) +
               w[2] * FacePrior::vertex(geometry, tri[2]);
  st.q = transform_point(params.pose, st.s_model);
  Vec3 m = w[0] * normals[tri[0]] + w[1] * normals[tri[1]] + w[2] * normals[tri[2]];
  m = params.pose.rotation * m;
  st.m_norm = m.norm();
  st.m_cam = m;
  st.n_hat = st.m_norm > 0 ? Vec3(m / st.m_norm) : Vec3(0, 0, -1);
  Vec3 alb = w[0] * FacePrior::vertex(albedo, tri[0]) +
             w[1] * FacePrior::vertex(albedo, tri[1]) +
             w[2] * FacePrior::vertex(albedo, tri[2]);
  for (int c = 0; c < 3; ++c) {
    st.albedo_clamped_lo[c] = alb[c] < 0.0 ? 1.0 : 0.0;
    st.albedo_clamped_hi[c] = alb[c] > 1.0 ? 1.0 : 0.0;
  }
  st.albedo = alb.cwiseMax(0.0).cwiseMin(1.0);
  st.sh = sh_basis(st.n_hat);
  st.irradiance = params.gamma.coeffs.transpose() * st.sh;
  return st;
}

}  // namespace detail

/// Full residual vector at `params` under the frozen linearization state.
inline VecX residual(const FrozenStep& step, const SceneParams& params) {
  const FacePrior& prior = *step.prior;
  const VecX geometry = eval_geometry(prior, params.alpha, params.delta);
  const VecX albedo = eval_albedo(prior, params.beta);
  const std::vector<Vec3> normals = vertex_normals(prior.triangles, geometry);

  VecX r = VecX::Zero(step.rows());
  parallel_for(step.sites.size(), 256, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const PixelSite& site = step.sites[i];
      const auto st = detail::site_state(prior, site, geometry, albedo, normals, params);
      const Vec3 shaded = st.albedo.cwiseProduct(st.irradiance);
      const auto u = project_point(params.kappa, st.q);
      const Vec2 warped = u ? Vec2(site.x + 0.5 + (u->x() - site.u0.x()),
                                   site.y + 0.5 + (u->y() - site.u0.y()))
                            : Vec2(site.x + 0.5, site.y + 0.5);
      const Vec3 sample = sample_bicubic(*step.frame, warped.x(), warped.y());
      r.segment<3>(static_cast<Eigen::Index>(3 * i)) = site.sqrt_w * (shaded - sample);
    }
  });

  const double lan_scale =
      step.landmarks.empty() ? 0.0
                             : step.weights.w_lan / static_cast<double>(step.landmarks.size());
  Eigen::Index row = step.landmark_row_offset();
  for (const auto& lm : step.landmarks) {
    const Vec3 v = FacePrior::vertex(geometry, lm.vertex_id);
    const Vec3 q = transform_point(params.pose, v);
    if (const auto u = project_point(params.kappa, q)) {
      const double s = std::sqrt(lan_scale * lm.confidence);
      r.segment<2>(row) = s * (lm.position - *u);
    }
    row += 2;
  }

  const double sr = std::sqrt(step.weights.w_reg);
  Eigen::Index off = step.reg_row_offset();
  for (int i = 0; i < prior.dim_id(); ++i)
    r[off + i] = sr * params.alpha[i] / prior.sigma_id[i];
  off += prior.dim_id();
  for (int i = 0; i < prior.dim_alb(); ++i)
    r[off + i] = sr * params.beta[i] / prior.sigma_alb[i];
  off += prior.dim_alb();
  for (int i = 0; i < prior.dim_exp(); ++i)
    r[off + i] = sr * params.delta[i] / prior.sigma_exp[i];
  return r;
}

/// Analytic Jacobian of `residual` w.r.t. the active blocks, evaluated at
/// `params` (normally the freeze state). Derivatives run through shading,
/// normals, projection and geometry; barycentric weights, visibility and the
/// IRLS weights are held fixed.
inline MatX analytic_jacobian(const FrozenStep& step, const SceneParams& params,
                              const BlockLayout& layout) {
  const FacePrior& prior = *step.prior;
  const VecX geometry = eval_geometry(prior, params.alpha, params.delta);
  const VecX albedo = eval_albedo(prior, params.beta);
  const std::vector<Vec3> normals = vertex_normals(prior.triangles, geometry);
  const Mat3 rot = params.pose.rotation;

  // Per-vertex derivatives of the (unnormalized, model-space) normals w.r.t.
  // each active geometry coefficient, accumulated over incident triangles.
  const int n_geo_cols = (layout.active.alpha ? layout.d_id : 0) +
                         (layout.active.delta ? layout.d_exp : 0);
  const int n_verts = prior.n_vertices;
  std::vector<Vec3> dnormals(static_cast<std::size_t>(n_geo_cols) * n_verts,
                             Vec3::Zero());
  auto geo_basis_col = [&](int gc) -> Eigen::Ref<const VecX> {
    if (layout.active.alpha && gc < layout.d_id) return prior.basis_id.col(gc);
    return prior.basis_exp.col(gc - (layout.active.alpha ? layout.d_id : 0));
  };
  parallel_for(static_cast<std::size_t>(n_geo_cols), 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t gc = b; gc < e; ++gc) {
      Eigen::Ref<const VecX> col = geo_basis_col(static_cast<int>(gc));
      Vec3* out = &dnormals[gc * static_cast<std::size_t>(n_verts)];
      for (const auto& tri : prior.triangles) {
        const Vec3 a = FacePrior::vertex(geometry, tri[0]);
        const Vec3 e1 = FacePrior::vertex(geometry, tri[1]) - a;
        const Vec3 e2 = FacePrior::vertex(geometry, tri[2]) - a;
        const Vec3 da = col.segment<3>(3 * static_cast<Eigen::Index>(tri[0]));
        const Vec3 de1 = col.segment<3>(3 * static_cast<Eigen::Index>(tri[1])) - da;
        const Vec3 de2 = col.segment<3>(3 * static_cast<Eigen::Index>(tri[2])) - da;
        const Vec3 dfn = de1.cross(e2) + e1.cross(de2);
        out[tri[0]] += dfn;
        out[tri[1]] += dfn;
        out[tri[2]] += dfn;
      }
    }
  });

  MatX jac = MatX::Zero(step.rows(), layout.cols);

  parallel_for(step.sites.size(), 128, [&](std::size_t blk_b, std::size_t blk_e) {
    for (std::size_t i = blk_b; i < blk_e; ++i) {
      const PixelSite& site = step.sites[i];
      const auto st = detail::site_state(prior, site, geometry, albedo, normals, params);
      const auto& tri = prior.triangles[static_cast<std::size_t>(site.tri)];
      const Vec3& w = site.bary;
      const Eigen::Index row = static_cast<Eigen::Index>(3 * i);

      const auto u = project_point(params.kappa, st.q);
      Eigen::Matrix<double, 3, 2> img_grad = Eigen::Matrix<double, 3, 2>::Zero();
      Eigen::Matrix<double, 2, 3> proj_jac = Eigen::Matrix<double, 2, 3>::Zero();
      if (u) {
        const Vec2 warped(site.x + 0.5 + (u->x() - site.u0.x()),
                          site.y + 0.5 + (u->y() - site.u0.y()));
        sample_bicubic(*step.frame, warped.x(), warped.y(), &img_grad);
        proj_jac = projection_jacobian(params.kappa, st.q);
      }
      const Eigen::Matrix<double, 9, 3> sh_grad = sh_basis_gradient(st.n_hat);
      // d(irradiance)/d(m_cam): gamma^T * dB/dn * (I - n n^T)/|m|
      const Mat3 n_jac = (Mat3::Identity() - st.n_hat * st.n_hat.transpose()) / st.m_norm;
      const Eigen::Matrix<double, 3, 3> dirr_dm =
          params.gamma.coeffs.transpose() * sh_grad * n_jac;

      auto geometry_column = [&](const Vec3& dv_model, const Vec3& dm_model,
                                 Eigen::Index col) {
        const Vec3 dq = rot * dv_model;
        const Vec3 dm_cam = rot * dm_model;
        const Vec3 dshade = st.albedo.cwiseProduct(dirr_dm * dm_cam);
        Vec3 r_col = dshade;
        if (u) r_col -= img_grad * (proj_jac * dq);
        jac.block<3, 1>(row, col) = site.sqrt_w * r_col;
      };

      if (layout.active.alpha) {
        for (int j = 0; j < layout.d_id; ++j) {
          const Vec3 dv = w[0] * Vec3(prior.basis_id.block<3, 1>(3 * tri[0], j)) +
                          w[1] * Vec3(prior.basis_id.block<3, 1>(3 * tri[1], j)) +
                          w[2] * Vec3(prior.basis_id.block<3, 1>(3 * tri[2], j));
          const Vec3* dn = &dnormals[static_cast<std::size_t>(j) * n_verts];
          const Vec3 dm = w[0] * dn[tri[0]] + w[1] * dn[tri[1]] + w[2] * dn[tri[2]];
          geometry_column(dv, dm, layout.off_alpha + j);
        }
      }
      if (layout.active.delta) {
        const int base = layout.active.alpha ? layout.d_id : 0;
        for (int j = 0; j < layout.d_exp; ++j) {
          const Vec3 dv = w[0] * Vec3(prior.basis_exp.block<3, 1>(3 * tri[0], j)) +
                          w[1] * Vec3(prior.basis_exp.block<3, 1>(3 * tri[1], j)) +
                          w[2] * Vec3(prior.basis_exp.block<3, 1>(3 * tri[2], j));
          const Vec3* dn = &dnormals[static_cast<std::size_t>(base + j) * n_verts];
          const Vec3 dm = w[0] * dn[tri[0]] + w[1] * dn[tri[1]] + w[2] * dn[tri[2]];
          geometry_column(dv, dm, layout.off_delta + j);
        }
      }
      if (layout.active.beta) {
        for (int j = 0; j < layout.d_alb; ++j) {
          Vec3 dalb = w[0] * Vec3(prior.basis_alb.block<3, 1>(3 * tri[0], j)) +
                      w[1] * Vec3(prior.basis_alb.block<3, 1>(3 * tri[1], j)) +
                      w[2] * Vec3(prior.basis_alb.block<3, 1>(3 * tri[2], j));
          for (int c = 0; c < 3; ++c)
            if (st.albedo_clamped_lo[c] > 0 || st.albedo_clamped_hi[c] > 0) dalb[c] = 0.0;
          jac.block<3, 1>(row, layout.off_beta + j) =
              site.sqrt_w * dalb.cwiseProduct(st.irradiance);
        }
      }
      if (layout.active.gamma) {
        for (int c = 0; c < 3; ++c)
          for (int j = 0; j < 9; ++j)
            jac(row + c, layout.off_gamma + 9 * c + j) =
                site.sqrt_w * st.albedo[c] * st.sh[j];
      }
      if (layout.active.pose) {
        const Vec3 rotated = st.q - params.pose.translation;
        for (int a = 0; a < 3; ++a) {
          const Vec3 dq = Vec3::Unit(a).cross(rotated);
          const Vec3 dm_cam = Vec3::Unit(a).cross(st.m_cam);
          Vec3 r_col = st.albedo.cwiseProduct(dirr_dm * dm_cam);
          if (u) r_col -= img_grad * (proj_jac * dq);
          jac.block<3, 1>(row, layout.off_pose + a) = site.sqrt_w * r_col;
        }
        if (u) {
          for (int a = 0; a < 3; ++a)
            jac.block<3, 1>(row, layout.off_pose + 3 + a) =
                site.sqrt_w * (-img_grad * proj_jac.col(a));
        }
      }
      if (layout.active.kappa && u) {
        const double inv_z = 1.0 / st.q.z();
        Eigen::Matrix<double, 2, 4> du_dk = Eigen::Matrix<double, 2, 4>::Zero();
        du_dk(0, 0) = st.q.x() * inv_z;
        du_dk(1, 1) = st.q.y() * inv_z;
        du_dk(0, 2) = 1.0;
        du_dk(1, 3) = 1.0;
        jac.block<3, 4>(row, layout.off_kappa) = site.sqrt_w * (-img_grad * du_dk);
      }
    }
  });

  // Landmark rows.
  const double lan_scale =
      step.landmarks.empty() ? 0.0
                             : step.weights.w_lan / static_cast<double>(step.landmarks.size());
  Eigen::Index row = step.landmark_row_offset();
  for (const auto& lm : step.landmarks) {
    const Vec3 v = FacePrior::vertex(geometry, lm.vertex_id);
    const Vec3 q = transform_point(params.pose, v);
    if (q.z() > kZNear) {
      const double s = std::sqrt(lan_scale * lm.confidence);
      const auto proj_jac = projection_jacobian(params.kappa, q);
      if (layout.active.alpha)
        jac.block(row, layout.off_alpha, 2, layout.d_id) =
            -s * proj_jac * rot *
            prior.basis_id.block(3 * static_cast<Eigen::Index>(lm.vertex_id), 0, 3,
                                 layout.d_id);
      if (layout.active.delta)
        jac.block(row, layout.off_delta, 2, layout.d_exp) =
            -s * proj_jac * rot *
            prior.basis_exp.block(3 * static_cast<Eigen::Index>(lm.vertex_id), 0, 3,
                                  layout.d_exp);
      if (layout.active.pose) {
        const Vec3 rotated = q - params.pose.translation;
        for (int a = 0; a < 3; ++a)
          jac.block<2, 1>(row, layout.off_pose + a) =
              -s * proj_jac * Vec3::Unit(a).cross(rotated);
        jac.block<2, 3>(row, layout.off_pose + 3) = -s * proj_jac;
      }
      if (layout.active.kappa) {
        const double inv_z = 1.0 / q.z();
        jac(row, layout.off_kappa) = -s * q.x() * inv_z;
        jac(row + 1, layout.off_kappa + 1) = -s * q.y() * inv_z;
        jac(row, layout.off_kappa + 2) = -s;
        jac(row + 1, layout.off_kappa + 3) = -s;
      }
    }
    row += 2;
  }

  // Regularizer rows (diagonal).
  const double sr = std::sqrt(step.weights.w_reg);
  Eigen::Index off = step.reg_row_offset();
  if (layout.active.alpha)
    for (int i = 0; i < layout.d_id; ++i)
      jac(off + i, layout.off_alpha + i) = sr / prior.sigma_id[i];
  off += layout.d_id;
  if (layout.active.beta)
    for (int i = 0; i < layout.d_alb; ++i)
      jac(off + i, layout.off_beta + i) = sr / prior.sigma_alb[i];
  off += layout.d_alb;
  if (layout.active.delta)
    for (int i = 0; i < layout.d_exp; ++i)
      jac(off + i, layout.off_delta + i) = sr / prior.sigma_exp[i];
  return jac;
}

// ---------------------------------------------------------------------------
// True (non-surrogate) energy of Eq.3: l2,1 photo term, squared landmark
// reprojection, statistical regularizer.

struct EnergyValues {
  double total = 0.0;
  double col = 0.0;
  double lan = 0.0;
  double reg = 0.0;
  int n_visible = 0;
};

inline EnergyValues eval_energy_with_raster(const FacePrior& prior,
                                            const SceneParams& params,
                                            const RasterOutput& raster,
                                            const Frame& frame,
                                            const std::vector<LandmarkObservation>& landmarks,
                                            const EnergyWeights& weights) {
  if (raster.visible.empty())
    throw NumericError("eval_energy: no visible pixels; re-initialize the pose");
  EnergyValues e;
  e.n_visible = static_cast<int>(raster.visible.size());
  double col_sum = 0.0;
  for (const auto& px : raster.visible)
    col_sum += (raster.color.at(px.x(), px.y()) - frame.at(px.x(), px.y())).norm();
  e.col = col_sum / static_cast<double>(e.n_visible);

  if (!landmarks.empty()) {
    double lan_sum = 0.0;
    for (const auto& lm : landmarks) {
      const Vec3 v = FacePrior::vertex(raster.geometry, lm.vertex_id);
      if (const auto u = project_point(params.kappa, transform_point(params.pose, v)))
        lan_sum += lm.confidence * (lm.position - *u).squaredNorm();
    }
    e.lan = lan_sum / static_cast<double>(landmarks.size());
  }

  for (int i = 0; i < prior.dim_id(); ++i) e.reg += sqr(params.alpha[i] / prior.sigma_id[i]);
  for (int i = 0; i < prior.dim_alb(); ++i) e.reg += sqr(params.beta[i] / prior.sigma_alb[i]);
  for (int i = 0; i < prior.dim_exp(); ++i) e.reg += sqr(params.delta[i] / prior.sigma_exp[i]);

  e.total = weights.w_col * e.col + weights.w_lan * e.lan + weights.w_reg * e.reg;
  return e;
}

inline EnergyValues eval_energy(const FacePrior& prior, const SceneParams& params,
                                const Frame& frame,
                                const std::vector<LandmarkObservation>& landmarks,
                                const EnergyWeights& weights) {
  const RasterOutput raster = rasterize(prior, params, frame.width, frame.height);
  return eval_energy_with_raster(prior, params, raster, frame, landmarks, weights);
}

}  // namespace f2f

#endif  // F2F_ENERGY_HPP_
