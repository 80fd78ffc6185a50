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

#ifndef F2F_PRIOR_HPP_
#define F2F_PRIOR_HPP_

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "f2f/binio.hpp"
#include "f2f/core.hpp"

namespace f2f {

/// Multi-linear statistical face prior: mean shape/albedo plus linear
/// identity, albedo and expression bases with per-mode standard deviations.
/// Geometry:  mean_shape + basis_id * alpha + basis_exp * delta
/// Albedo:    mean_albedo + basis_alb * beta
/// Immutable after construction; evaluation is pure.
struct FacePrior {
  int n_vertices = 0;
  VecX mean_shape;   // 3n, model units
  VecX mean_albedo;  // 3n, linear RGB
  MatX basis_id;     // 3n x d_id
  MatX basis_alb;    // 3n x d_alb
  MatX basis_exp;    // 3n x d_exp
  VecX sigma_id;
  VecX sigma_alb;
  VecX sigma_exp;
  std::vector<std::array<int, 3>> triangles;
  // landmark_vertices[0..3] are by convention the mouth landmarks:
  // left corner, right corner, upper-lip mid, lower-lip mid.
  std::vector<int> landmark_vertices;
  std::vector<int> mouth_region;  // triangle indices
  std::vector<Vec2> uv_coords;    // per vertex, in [0,1]^2

  int dim_id() const { return static_cast<int>(basis_id.cols()); }
  int dim_alb() const { return static_cast<int>(basis_alb.cols()); }
  int dim_exp() const { return static_cast<int>(basis_exp.cols()); }

  static Vec3 vertex(const VecX& field, int k) {
    return field.segment<3>(3 * static_cast<Eigen::Index>(k));
  }

  std::vector<std::uint8_t> mouth_triangle_mask() const {
    std::vector<std::uint8_t> mask(triangles.size(), 0);
    for (int t : mouth_region) mask[static_cast<std::size_t>(t)] = 1;
    return mask;
  }

  static constexpr int kMouthLandmarkCount = 4;
  int mouth_landmark_vertex(int i) const { return landmark_vertices[i]; }
};

inline VecX eval_geometry(const FacePrior& prior, const VecX& alpha,
                          const VecX& delta) {
  if (alpha.size() != prior.basis_id.cols())
    throw std::invalid_argument("eval_geometry: alpha dimension mismatch");
  if (delta.size() != prior.basis_exp.cols())
    throw std::invalid_argument("eval_geometry: delta dimension mismatch");
  return prior.mean_shape + prior.basis_id * alpha + prior.basis_exp * delta;
}

inline VecX eval_albedo(const FacePrior& prior, const VecX& beta) {
  if (beta.size() != prior.basis_alb.cols())
    throw std::invalid_argument("eval_albedo: beta dimension mismatch");
  return prior.mean_albedo + prior.basis_alb * beta;
}

/// Area-weighted vertex normals (sum of unnormalized face normals; the cross
/// product magnitude is twice the face area, which provides the weighting).
/// Not normalized per vertex; shading normalizes once per pixel.
inline std::vector<Vec3> vertex_normals(
    const std::vector<std::array<int, 3>>& triangles, const VecX& geometry) {
  std::vector<Vec3> normals(static_cast<std::size_t>(geometry.size() / 3),
                            Vec3::Zero());
  for (const auto& tri : triangles) {
    const Vec3 a = FacePrior::vertex(geometry, tri[0]);
    const Vec3 e1 = FacePrior::vertex(geometry, tri[1]) - a;
    const Vec3 e2 = FacePrior::vertex(geometry, tri[2]) - a;
    const Vec3 fn = e1.cross(e2);
    normals[static_cast<std::size_t>(tri[0])] += fn;
    normals[static_cast<std::size_t>(tri[1])] += fn;
    normals[static_cast<std::size_t>(tri[2])] += fn;
  }
  return normals;
}

struct PriorConfig {
  int n_subdiv = 2;  // grid resolution 8 * 2^n_subdiv per side
  int d_id = 8;
  int d_alb = 8;
  int d_exp = 12;
  std::uint64_t seed = 1;
};

namespace detail {

// uv targets for the designated landmark vertices. The first four are the
// mouth landmarks (left corner, right corner, upper-lip mid, lower-lip mid).
inline const std::vector<Vec2>& landmark_uv_targets() {
  static const std::vector<Vec2> targets = {
      {0.34, 0.32}, {0.66, 0.32}, {0.50, 0.395}, {0.50, 0.245},
      {0.05, 0.50}, {0.95, 0.50}, {0.08, 0.25},  {0.92, 0.25},
      {0.08, 0.75}, {0.92, 0.75}, {0.50, 0.04},  {0.50, 0.96},
      {0.25, 0.06}, {0.75, 0.06}, {0.28, 0.62},  {0.42, 0.62},
      {0.58, 0.62}, {0.72, 0.62}, {0.35, 0.66},  {0.65, 0.66},
      {0.32, 0.74}, {0.68, 0.74}, {0.50, 0.56},  {0.50, 0.50},
      {0.44, 0.455},{0.56, 0.455},{0.50, 0.44},  {0.50, 0.12},
      {0.30, 0.18}, {0.70, 0.18}, {0.20, 0.42},  {0.80, 0.42}};
  return targets;
}

constexpr double kMouthCenterU = 0.5;
constexpr double kMouthCenterV = 0.32;
constexpr double kMouthSemiU = 0.16;
constexpr double kMouthSemiV = 0.075;

inline bool in_mouth_ellipse(double u, double v, double scale = 1.0) {
  return sqr((u - kMouthCenterU) / (kMouthSemiU * scale)) +
             sqr((v - kMouthCenterV) / (kMouthSemiV * scale)) <=
         1.0;
}

// Smooth scalar field over (u,v): cosine harmonics with random amplitudes
// and phases drawn from the [k_min, k_max] frequency band.
struct SmoothField {
  struct Term {
    double amp, ku, kv, phase;
  };
  std::vector<Term> terms;

  static SmoothField random(std::mt19937_64& rng, int n_terms, int k_min = 0,
                            int k_max = 2) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> freq(k_min, k_max);
    SmoothField f;
    f.terms.reserve(static_cast<std::size_t>(n_terms));
    for (int i = 0; i < n_terms; ++i) {
      Term t;
      t.ku = freq(rng);
      t.kv = freq(rng);
      t.amp = gauss(rng) / (1.0 + 0.5 * (t.ku + t.kv));
      t.phase = uni(rng);
      f.terms.push_back(t);
    }
    return f;
  }

  double operator()(double u, double v) const {
    double s = 0.0;
    for (const auto& t : terms)
      s += t.amp * std::cos(2.0 * M_PI * (t.ku * u + t.kv * v) + t.phase);
    return s;
  }
};

// Modified Gram-Schmidt with a second pass; throws when the field family
// cannot span the requested dimension at this mesh resolution.
inline void orthonormalize_columns(MatX& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index p = 0; p < c; ++p)
        basis.col(c) -= basis.col(p).dot(basis.col(c)) * basis.col(p);
    const double norm = basis.col(c).norm();
    if (norm < 1e-8)
      throw ConfigError(
          "synth_prior: requested basis dimension exceeds what the mesh "
          "resolution supports (rank-deficient column " +
          std::to_string(c) + ")");
    basis.col(c) /= norm;
  }
}

}  // namespace detail

/// Deterministic synthetic prior: a subdivided half-ellipsoid face with a
/// marked mouth region, >= 30 designated landmark vertices, orthonormal
/// smooth displacement bases and geometrically decaying sigmas. Identical
/// (cfg, seed) produce bit-identical priors.
///
/// The expression basis is orthonormal within itself but intentionally not
/// orthogonal to the identity basis; single-frame identity/expression
/// separation is ambiguous, which is what multi-frame bundling resolves.
inline FacePrior synth_prior(const PriorConfig& cfg) {
  if (cfg.d_id < 1 || cfg.d_alb < 1 || cfg.d_exp < 1)
    throw ConfigError("synth_prior: basis dims must be >= 1");
  if (cfg.n_subdiv < 1 || cfg.n_subdiv > 5)
    throw ConfigError("synth_prior: n_subdiv must be in [1,5]");

  const int res = 8 << cfg.n_subdiv;  // quads per side
  const int side = res + 1;
  FacePrior prior;
  prior.n_vertices = side * side;
  const int n = prior.n_vertices;

  // Base mesh: half-ellipsoid bulging toward -z (the camera side), with an
  // analytic nose ridge and a shallow lip indentation for shading detail.
  prior.mean_shape.resize(3 * n);
  prior.uv_coords.resize(static_cast<std::size_t>(n));
  const double rx = 1.0, ry = 1.3, rz = 0.75;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const int k = j * side + i;
      const double u = static_cast<double>(i) / res;
      const double v = static_cast<double>(j) / res;
      const double theta = (u - 0.5) * 0.8 * M_PI;
      const double phi = (v - 0.5) * 0.8 * M_PI;
      Vec3 p(rx * std::sin(theta) * std::cos(phi), ry * std::sin(phi),
             -rz * std::cos(theta) * std::cos(phi));
      // Analytic relief: nose ridge, brows, cheekbones, chin and a lip dent.
      // The varied surface orientation is what keeps SH illumination
      // estimation well-posed (normals must not cluster on a smooth dome).
      auto bump = [&](double cu, double cv, double su, double sv) {
        return std::exp(-(sqr(u - cu) / su + sqr(v - cv) / sv));
      };
      double relief = -0.16 * bump(0.5, 0.47, 0.006, 0.012);  // nose
      relief += -0.06 * bump(0.35, 0.72, 0.012, 0.004);       // left brow
      relief += -0.06 * bump(0.65, 0.72, 0.012, 0.004);       // right brow
      relief += -0.07 * bump(0.24, 0.48, 0.010, 0.016);       // left cheek
      relief += -0.07 * bump(0.76, 0.48, 0.010, 0.016);       // right cheek
      relief += -0.06 * bump(0.5, 0.10, 0.014, 0.006);        // chin
      relief += -0.05 * bump(0.5, 0.88, 0.030, 0.008);        // forehead
      relief += 0.035 * bump(0.38, 0.62, 0.004, 0.003);       // left eye socket
      relief += 0.035 * bump(0.62, 0.62, 0.004, 0.003);       // right eye socket
      relief += 0.04 * bump(0.5, 0.32, 0.02, 0.004);          // lip dent
      p.z() += relief;
      prior.mean_shape.segment<3>(3 * k) = p;
      prior.uv_coords[static_cast<std::size_t>(k)] = Vec2(u, v);
    }
  }

  // Triangles wound so the geometric normal points outward (toward -z at the
  // face center).
  prior.triangles.reserve(static_cast<std::size_t>(2 * res * res));
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const int a = j * side + i;
      const int b = j * side + i + 1;
      const int c = (j + 1) * side + i;
      const int d = (j + 1) * side + i + 1;
      prior.triangles.push_back({a, c, b});
      prior.triangles.push_back({b, c, d});
    }
  }

  // Mouth region: triangles whose vertices all lie inside the mouth ellipse.
  for (std::size_t t = 0; t < prior.triangles.size(); ++t) {
    bool inside = true;
    for (int v = 0; v < 3; ++v) {
      const Vec2 uv = prior.uv_coords[static_cast<std::size_t>(prior.triangles[t][v])];
      inside = inside && detail::in_mouth_ellipse(uv.x(), uv.y());
    }
    if (inside) prior.mouth_region.push_back(static_cast<int>(t));
  }
  if (prior.mouth_region.empty())
    throw ConfigError("synth_prior: mesh resolution leaves no mouth triangles");

  // Designated landmark vertices, snapped to the grid.
  for (const Vec2& uv : detail::landmark_uv_targets()) {
    const int i = static_cast<int>(std::lround(uv.x() * res));
    const int j = static_cast<int>(std::lround(uv.y() * res));
    const int k = j * side + i;
    for (int existing : prior.landmark_vertices)
      if (existing == k)
        throw ConfigError("synth_prior: landmark targets collide at this resolution");
    prior.landmark_vertices.push_back(k);
  }

  // Mean albedo: skin tone with low-frequency variation, tinted lips, and a
  // mid-frequency texture band. The texture is what makes dense photometric
  // pose alignment well-posed; without it the shaded face is nearly
  // gradient-free away from the silhouette.
  auto rng = seeded_rng(cfg.seed, "prior");
  prior.mean_albedo.resize(3 * n);
  {
    const detail::SmoothField var_r = detail::SmoothField::random(rng, 4);
    const detail::SmoothField var_g = detail::SmoothField::random(rng, 4);
    const detail::SmoothField var_b = detail::SmoothField::random(rng, 4);
    const detail::SmoothField tex_lum = detail::SmoothField::random(rng, 10, 3, 9);
    const detail::SmoothField tex_chroma = detail::SmoothField::random(rng, 6, 3, 7);
    for (int k = 0; k < n; ++k) {
      const Vec2 uv = prior.uv_coords[static_cast<std::size_t>(k)];
      Vec3 base(0.72, 0.52, 0.42);
      base += 0.04 * Vec3(var_r(uv.x(), uv.y()), var_g(uv.x(), uv.y()),
                          var_b(uv.x(), uv.y()));
      if (detail::in_mouth_ellipse(uv.x(), uv.y(), 1.25)) {
        const Vec3 lip(0.60, 0.30, 0.30);
        const double w = 0.7;
        base = (1.0 - w) * base + w * lip;
      }
      const double lum = 0.055 * tex_lum(uv.x(), uv.y());
      const double chroma = 0.025 * tex_chroma(uv.x(), uv.y());
      base += Vec3(lum + chroma, lum, lum - chroma);
      for (int c = 0; c < 3; ++c) base[c] = std::clamp(base[c], 0.12, 0.92);
      prior.mean_albedo.segment<3>(3 * k) = base;
    }
  }

  // Displacement bases. Raw columns are smooth random fields; mouth-windowed
  // columns give the expression basis localized mouth motion, and expression
  // columns leak identity-subspace content (see header comment).
  auto make_field_column = [&](double window_mouth) {
    VecX col(3 * n);
    const detail::SmoothField fx = detail::SmoothField::random(rng, 6);
    const detail::SmoothField fy = detail::SmoothField::random(rng, 6);
    const detail::SmoothField fz = detail::SmoothField::random(rng, 6);
    for (int k = 0; k < n; ++k) {
      const Vec2 uv = prior.uv_coords[static_cast<std::size_t>(k)];
      double w = 1.0;
      if (window_mouth > 0.0) {
        w = std::exp(-(sqr(uv.x() - detail::kMouthCenterU) / (2.0 * sqr(0.14)) +
                       sqr(uv.y() - detail::kMouthCenterV) / (2.0 * sqr(0.07))));
      }
      col.segment<3>(3 * k) =
          w * Vec3(fx(uv.x(), uv.y()), fy(uv.x(), uv.y()), fz(uv.x(), uv.y()));
    }
    return col;
  };

  prior.basis_id.resize(3 * n, cfg.d_id);
  for (int c = 0; c < cfg.d_id; ++c) prior.basis_id.col(c) = make_field_column(0.0);
  detail::orthonormalize_columns(prior.basis_id);

  prior.basis_alb.resize(3 * n, cfg.d_alb);
  for (int c = 0; c < cfg.d_alb; ++c) prior.basis_alb.col(c) = make_field_column(0.0);
  detail::orthonormalize_columns(prior.basis_alb);

  prior.basis_exp.resize(3 * n, cfg.d_exp);
  {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n_mouth_cols = (cfg.d_exp + 1) / 2;
    for (int c = 0; c < cfg.d_exp; ++c) {
      const bool mouth_col = c < n_mouth_cols;
      VecX col = make_field_column(mouth_col ? 1.0 : 0.0);
      col /= col.norm();
      // Identity-subspace leakage: expressions share low-frequency content
      // with identity, so single-frame fits cannot separate the two.
      VecX leak = VecX::Zero(3 * n);
      for (int p = 0; p < cfg.d_id; ++p) leak += gauss(rng) * prior.basis_id.col(p);
      if (leak.norm() > 0) leak /= leak.norm();
      const double leak_weight = mouth_col ? 0.15 : 0.55;
      prior.basis_exp.col(c) = (1.0 - leak_weight) * col + leak_weight * leak;
    }
    detail::orthonormalize_columns(prior.basis_exp);
  }

  auto geometric_sigmas = [](int d, double first, double ratio) {
    VecX s(d);
    double v = first;
    for (int i = 0; i < d; ++i, v *= ratio) s[i] = v;
    return s;
  };
  prior.sigma_id = geometric_sigmas(cfg.d_id, 1.2, 0.82);
  prior.sigma_alb = geometric_sigmas(cfg.d_alb, 0.8, 0.82);
  prior.sigma_exp = geometric_sigmas(cfg.d_exp, 1.0, 0.90);

  return prior;
}

// ---------------------------------------------------------------------------
// F2FPRIOR1 container: magic, little-endian u64 dims, then arrays in declared
// field order (f64 row-major matrices, u64 index lists). A JSON sidecar at
// <path>.json mirrors the dims and metadata for inspection.

inline void save_prior(const FacePrior& prior, const std::string& path) {
  BinWriter w(path);
  w.magic("F2FPRIOR1");
  w.u64(static_cast<std::uint64_t>(prior.n_vertices));
  w.u64(static_cast<std::uint64_t>(prior.dim_id()));
  w.u64(static_cast<std::uint64_t>(prior.dim_alb()));
  w.u64(static_cast<std::uint64_t>(prior.dim_exp()));
  w.u64(prior.triangles.size());
  w.u64(prior.landmark_vertices.size());
  w.u64(prior.mouth_region.size());
  w.f64_array(prior.mean_shape);
  w.f64_array(prior.mean_albedo);
  w.f64_matrix(prior.basis_id);
  w.f64_matrix(prior.basis_alb);
  w.f64_matrix(prior.basis_exp);
  w.f64_array(prior.sigma_id);
  w.f64_array(prior.sigma_alb);
  w.f64_array(prior.sigma_exp);
  std::vector<std::uint64_t> tris;
  tris.reserve(prior.triangles.size() * 3);
  for (const auto& t : prior.triangles)
    for (int v : t) tris.push_back(static_cast<std::uint64_t>(v));
  w.u64_array(tris);
  std::vector<std::uint64_t> lms(prior.landmark_vertices.begin(),
                                 prior.landmark_vertices.end());
  w.u64_array(lms);
  std::vector<std::uint64_t> mouth(prior.mouth_region.begin(),
                                   prior.mouth_region.end());
  w.u64_array(mouth);
  VecX uv(2 * prior.n_vertices);
  for (int k = 0; k < prior.n_vertices; ++k) {
    uv[2 * k] = prior.uv_coords[static_cast<std::size_t>(k)].x();
    uv[2 * k + 1] = prior.uv_coords[static_cast<std::size_t>(k)].y();
  }
  w.f64_array(uv);
  w.close();

  nlohmann::json sidecar;
  sidecar["format"] = "F2FPRIOR1";
  sidecar["n_vertices"] = prior.n_vertices;
  sidecar["d_id"] = prior.dim_id();
  sidecar["d_alb"] = prior.dim_alb();
  sidecar["d_exp"] = prior.dim_exp();
  sidecar["n_triangles"] = prior.triangles.size();
  sidecar["landmark_vertices"] = prior.landmark_vertices;
  sidecar["mouth_region_triangles"] = prior.mouth_region.size();
  std::ofstream js(path + ".json");
  if (!js) throw IoError("cannot write prior sidecar: " + path + ".json");
  js << sidecar.dump(2) << "\n";
}

inline FacePrior load_prior(const std::string& path) {
  BinReader r(path);
  r.expect_magic("F2FPRIOR1");
  FacePrior prior;
  prior.n_vertices = static_cast<int>(r.u64());
  const auto d_id = r.u64(), d_alb = r.u64(), d_exp = r.u64();
  const auto n_tri = r.u64(), n_lm = r.u64(), n_mouth = r.u64();
  const std::size_t n3 = static_cast<std::size_t>(prior.n_vertices) * 3;
  prior.mean_shape = r.f64_array(n3);
  prior.mean_albedo = r.f64_array(n3);
  prior.basis_id = r.f64_matrix(n3, d_id);
  prior.basis_alb = r.f64_matrix(n3, d_alb);
  prior.basis_exp = r.f64_matrix(n3, d_exp);
  prior.sigma_id = r.f64_array(d_id);
  prior.sigma_alb = r.f64_array(d_alb);
  prior.sigma_exp = r.f64_array(d_exp);
  const auto tris = r.u64_array(n_tri * 3);
  prior.triangles.resize(n_tri);
  for (std::size_t t = 0; t < n_tri; ++t)
    prior.triangles[t] = {static_cast<int>(tris[3 * t]),
                          static_cast<int>(tris[3 * t + 1]),
                          static_cast<int>(tris[3 * t + 2])};
  for (auto v : r.u64_array(n_lm))
    prior.landmark_vertices.push_back(static_cast<int>(v));
  for (auto v : r.u64_array(n_mouth))
    prior.mouth_region.push_back(static_cast<int>(v));
  const VecX uv = r.f64_array(n3 / 3 * 2);
  prior.uv_coords.resize(static_cast<std::size_t>(prior.n_vertices));
  for (int k = 0; k < prior.n_vertices; ++k)
    prior.uv_coords[static_cast<std::size_t>(k)] = Vec2(uv[2 * k], uv[2 * k + 1]);
  for (const auto& t : prior.triangles)
    for (int v : t)
      if (v < 0 || v >= prior.n_vertices)
        throw IoError(path + ": triangle index out of range");
  return prior;
}

}  // namespace f2f

#endif  // F2F_PRIOR_HPP_
