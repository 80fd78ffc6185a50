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

#ifndef F2F_SOLVER_HPP_
#define F2F_SOLVER_HPP_

#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "f2f/energy.hpp"

namespace f2f {

// ---------------------------------------------------------------------------
// Coarse-to-fine schedule. Level numbering follows the hierarchy convention:
// the highest level is full resolution, level 1 the coarsest. An entry
// (level, gn, pcg) runs `gn` Gauss-Newton steps with `pcg` PCG iterations
// each on that level's pyramid image.

struct ScheduleEntry {
  int level = 1;
  int gn_iterations = 1;
  int pcg_iterations = 4;
};

struct SolveSchedule {
  std::vector<ScheduleEntry> entries;

  /// Online tracking: levels 2 and 3 of three, one and seven GN steps, four
  /// PCG steps each.
  static SolveSchedule tracking() {
    return SolveSchedule{{{2, 1, 4}, {3, 7, 4}}};
  }
  /// Bundling hierarchy: 25 / 5 / 1 GN iterations coarse-to-fine, four PCG
  /// steps each.
  static SolveSchedule bundling() {
    return SolveSchedule{{{1, 25, 4}, {2, 5, 4}, {3, 1, 4}}};
  }

  int max_level() const {
    int m = 1;
    for (const auto& e : entries) m = std::max(m, e.level);
    return m;
  }
  void validate() const {
    if (entries.empty()) throw ConfigError("schedule: no entries");
    int prev = 0;
    for (const auto& e : entries) {
      if (e.level < 1 || e.gn_iterations < 1 || e.pcg_iterations < 1)
        throw ConfigError("schedule: levels and iteration counts must be >= 1");
      if (e.level < prev) throw ConfigError("schedule: levels must ascend");
      prev = e.level;
    }
  }
};

// ---------------------------------------------------------------------------
// Deterministic data-parallel matrix products. Rows are processed in fixed
// 2048-row chunks and partial results combined in chunk order, so results are
// bit-identical for every thread count.

namespace detail {
inline constexpr std::size_t kMatvecChunk = 2048;
}

inline VecX parallel_matvec(const MatX& m, const VecX& x) {
  VecX y(m.rows());
  parallel_for(static_cast<std::size_t>(m.rows()), detail::kMatvecChunk,
               [&](std::size_t b, std::size_t e) {
                 y.segment(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b))
                     .noalias() = m.middleRows(static_cast<Eigen::Index>(b),
                                               static_cast<Eigen::Index>(e - b)) * x;
               });
  return y;
}

inline VecX parallel_tmatvec(const MatX& m, const VecX& x) {
  const std::size_t rows = static_cast<std::size_t>(m.rows());
  const std::size_t n_chunks = (rows + detail::kMatvecChunk - 1) / detail::kMatvecChunk;
  MatX partial = MatX::Zero(m.cols(), static_cast<Eigen::Index>(std::max<std::size_t>(n_chunks, 1)));
  parallel_for(rows, detail::kMatvecChunk, [&](std::size_t b, std::size_t e) {
    const std::size_t c = b / detail::kMatvecChunk;
    partial.col(static_cast<Eigen::Index>(c)).noalias() =
        m.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b)).transpose() *
        x.segment(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b));
  });
  VecX y = VecX::Zero(m.cols());
  for (Eigen::Index c = 0; c < partial.cols(); ++c) y += partial.col(c);
  return y;
}

// ---------------------------------------------------------------------------
// Gauss-Newton normal equations J^T J d = -J^T F with a precomputed Jacobi
// preconditioner. J^T J is never formed; applications use the two-matvec
// split J^T (J x).

struct NormalSystem {
  MatX jacobian;
  VecX residual_vec;
  VecX preconditioner;  // diag(J^T J), floored at 1e-12
  VecX rhs;             // -J^T F

  NormalSystem(MatX j, VecX f) : jacobian(std::move(j)), residual_vec(std::move(f)) {
    preconditioner = VecX(jacobian.cols());
    for (Eigen::Index c = 0; c < jacobian.cols(); ++c)
      preconditioner[c] = std::max(jacobian.col(c).squaredNorm(), 1e-12);
    rhs = -parallel_tmatvec(jacobian, residual_vec);
  }

  VecX apply_JtJ(const VecX& x) const {
    return parallel_tmatvec(jacobian, parallel_matvec(jacobian, x));
  }
};

struct PcgResult {
  VecX x;
  std::vector<double> residual_norms;  // ||b - A x_k||, one entry per iteration
};

/// Jacobi-preconditioned conjugate gradient from a zero initial guess running
/// exactly `iterations` steps (matching the fixed-step regime) unless
/// `early_exit_rel` > 0 and the relative residual drops below it.
template <class Op>
PcgResult pcg_solve(Op&& apply, const VecX& rhs, const VecX& precond,
                    int iterations, double early_exit_rel = 0.0) {
  if (iterations < 1) throw ConfigError("pcg_solve: iterations must be >= 1");
  PcgResult result;
  result.x = VecX::Zero(rhs.size());
  VecX r = rhs;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    result.residual_norms.assign(static_cast<std::size_t>(iterations), 0.0);
    return result;
  }
  VecX z = r.cwiseQuotient(precond);
  VecX p = z;
  double rz = r.dot(z);
  for (int it = 0; it < iterations; ++it) {
    const VecX q = apply(p);
    const double pq = p.dot(q);
    if (!std::isfinite(pq) || !std::isfinite(rz))
      throw NumericError("pcg_solve: non-finite values in iteration " + std::to_string(it));
    if (pq <= 0.0) {
      // Numerically singular direction; keep the current iterate.
      result.residual_norms.push_back(r.norm());
      break;
    }
    const double alpha = rz / pq;
    result.x += alpha * p;
    r -= alpha * q;
    const double rn = r.norm();
    result.residual_norms.push_back(rn);
    if (!std::isfinite(rn))
      throw NumericError("pcg_solve: residual diverged at iteration " + std::to_string(it));
    if (early_exit_rel > 0.0 && rn <= early_exit_rel * rhs_norm) break;
    z = r.cwiseQuotient(precond);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Single-frame IRLS / Gauss-Newton driver over the pyramid schedule. Each
// step: rasterize, refresh IRLS weights from the current residuals, assemble
// the normal system, run PCG, apply the update. The trace records the true
// Eq.3 energy after every step (iteration 0 is the pre-solve energy).

struct GnOptions {
  EnergyWeights weights;
  ActiveBlocks active = ActiveBlocks::tracking();
  double irls_epsilon = 1e-4;
  double pcg_early_exit = 0.0;
  bool step_halving = false;  // robustness experiments only; plain GN default
};

struct IterationRecord {
  int level = 0;
  int iteration = 0;
  EnergyValues energy;
  double update_norm = 0.0;
};

struct SolveResult {
  SceneParams params;
  std::vector<IterationRecord> trace;
  double last_update_norm = 0.0;

  double final_col() const { return trace.empty() ? 0.0 : trace.back().energy.col; }
};

/// Landmarks scaled to a pyramid level (positions scale, confidences do not).
inline std::vector<LandmarkObservation> scale_landmarks(
    const std::vector<LandmarkObservation>& landmarks, double scale) {
  std::vector<LandmarkObservation> out = landmarks;
  for (auto& lm : out) lm.position *= scale;
  return out;
}

inline SolveResult gauss_newton_irls(const FacePrior& prior,
                                     const std::vector<Frame>& pyramid,
                                     const std::vector<LandmarkObservation>& landmarks,
                                     const SolveSchedule& schedule,
                                     const SceneParams& initial,
                                     const GnOptions& options) {
  schedule.validate();
  const int max_level = schedule.max_level();
  if (static_cast<int>(pyramid.size()) < max_level)
    throw ConfigError("gauss_newton_irls: pyramid has fewer levels than the schedule");

  SolveResult result;
  result.params = initial;
  const BlockLayout layout = BlockLayout::make(prior, options.active);

  for (const auto& entry : schedule.entries) {
    const int pyr_idx = max_level - entry.level;
    const Frame& frame = pyramid[static_cast<std::size_t>(pyr_idx)];
    const double scale = std::pow(0.5, static_cast<double>(pyr_idx));
    const auto level_landmarks = scale_landmarks(landmarks, scale);

    auto level_params = [&](const SceneParams& p) {
      SceneParams lp = p;
      lp.kappa = p.kappa.scaled(scale);
      return lp;
    };

    RasterOutput raster = rasterize(prior, level_params(result.params),
                                    frame.width, frame.height);
    if (raster.visible.empty())
      throw NumericError("gauss_newton_irls: no visible pixels at level " +
                         std::to_string(entry.level));
    result.trace.push_back({entry.level, 0,
                            eval_energy_with_raster(prior, level_params(result.params),
                                                    raster, frame, level_landmarks,
                                                    options.weights),
                            0.0});

    for (int it = 1; it <= entry.gn_iterations; ++it) {
      const SceneParams lp = level_params(result.params);
      const FrozenStep step = build_frozen_step(prior, raster, frame, level_landmarks,
                                                options.weights, lp, options.irls_epsilon);
      const MatX jac = analytic_jacobian(step, lp, layout);
      const VecX res = residual(step, lp);
      NormalSystem sys(jac, res);
      const PcgResult pcg =
          pcg_solve([&](const VecX& x) { return sys.apply_JtJ(x); }, sys.rhs,
                    sys.preconditioner, entry.pcg_iterations, options.pcg_early_exit);

      SceneParams next = apply_update(result.params, layout, pcg.x, scale);
      RasterOutput next_raster =
          rasterize(prior, level_params(next), frame.width, frame.height);
      if (options.step_halving) {
        const double before = result.trace.back().energy.total;
        VecX half_step = pcg.x;
        for (int h = 0; h < 4 && !next_raster.visible.empty(); ++h) {
          const EnergyValues cand = eval_energy_with_raster(
              prior, level_params(next), next_raster, frame, level_landmarks,
              options.weights);
          if (cand.total <= before) break;
          half_step *= 0.5;
          next = apply_update(result.params, layout, half_step, scale);
          next_raster = rasterize(prior, level_params(next), frame.width, frame.height);
        }
      }
      if (next_raster.visible.empty())
        throw NumericError("gauss_newton_irls: update lost all visibility at level " +
                           std::to_string(entry.level));
      result.params = next;
      raster = std::move(next_raster);
      result.last_update_norm = pcg.x.norm();
      result.trace.push_back({entry.level, it,
                              eval_energy_with_raster(prior, level_params(result.params),
                                                      raster, frame, level_landmarks,
                                                      options.weights),
                              result.last_update_norm});
    }
  }
  return result;
}

/// Energy trace as CSV: iteration, level, E_total, E_col, E_lan, E_reg, |V|.
inline void write_trace_csv(const std::string& path,
                            const std::vector<IterationRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace: " + path);
  out << "iteration,level,e_total,e_col,e_lan,e_reg,n_visible\n";
  char buf[256];
  int row = 0;
  for (const auto& rec : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%d\n", row++,
                  rec.level, rec.energy.total, rec.energy.col, rec.energy.lan,
                  rec.energy.reg, rec.energy.n_visible);
    out << buf;
  }
}

}  // namespace f2f

#endif  // F2F_SOLVER_HPP_
