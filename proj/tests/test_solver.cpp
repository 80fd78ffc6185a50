#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "f2f/solver.hpp"
#include "test_helpers.hpp"

using namespace f2f;
using namespace f2ftest;

namespace {

// Independent dense solve oracle: Gaussian elimination with partial pivoting.
VecX gaussian_elimination(MatX a, VecX b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
    a.row(k).swap(a.row(piv));
    std::swap(b[k], b[piv]);
    for (Eigen::Index r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      a.row(r).tail(n - k) -= f * a.row(k).tail(n - k);
      b[r] -= f * b[k];
    }
  }
  VecX x(n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    double acc = b[k];
    for (Eigen::Index c = k + 1; c < n; ++c) acc -= a(k, c) * x[c];
    x[k] = acc / a(k, k);
  }
  return x;
}

struct TrackScene {
  FacePrior prior;
  SceneParams truth;
  std::vector<Frame> pyramid;
  std::vector<LandmarkObservation> landmarks;
};

TrackScene make_track_scene(std::uint64_t seed, int size = 64, bool zero_delta = true) {
  TrackScene s;
  s.prior = synth_prior(test_prior_cfg(seed));
  auto rng = std::mt19937_64(seed * 7 + 3);
  s.truth = random_scene(s.prior, rng, size, size);
  if (zero_delta) s.truth.delta.setZero();
  const RasterOutput raster = rasterize(s.prior, s.truth, size, size);
  REQUIRE(raster.visible.size() > 200);
  s.pyramid = build_pyramid(raster.color, 3);
  s.landmarks = project_landmarks(s.prior, s.truth);
  return s;
}

}  // namespace

TEST_CASE("pcg: identity operator converges in one step", "[solver]") {
  const VecX b = VecX::LinSpaced(5, 1.0, 5.0);
  const VecX ones = VecX::Ones(5);
  const auto r = pcg_solve([](const VecX& x) { return x; }, b, ones, 1);
  REQUIRE((r.x - b).norm() == 0.0);
  REQUIRE(r.residual_norms.size() == 1);
  REQUIRE(r.residual_norms[0] < 1e-14);
}

TEST_CASE("pcg: Jacobi preconditioner solves diagonal systems in one step", "[solver]") {
  MatX a = MatX::Zero(3, 3);
  a.diagonal() << 4.0, 0.5, 9.0;
  const VecX b(Vec3(1.0, -2.0, 3.0));
  const VecX precond = a.diagonal();
  const auto r = pcg_solve([&](const VecX& x) { return VecX(a * x); }, b, precond, 1);
  REQUIRE((r.x - VecX(Vec3(0.25, -4.0, 1.0 / 3.0))).norm() < 1e-14);
}

TEST_CASE("pcg matches a dense direct solve on random SPD systems", "[solver]") {
  auto rng = std::mt19937_64(123);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    MatX b(20, 20);
    for (Eigen::Index i = 0; i < 20; ++i)
      for (Eigen::Index j = 0; j < 20; ++j) b(i, j) = g(rng);
    const MatX a = b.transpose() * b + 20.0 * MatX::Identity(20, 20);
    VecX rhs(20);
    for (Eigen::Index i = 0; i < 20; ++i) rhs[i] = g(rng);
    const VecX direct = gaussian_elimination(a, rhs);
    const auto iter =
        pcg_solve([&](const VecX& x) { return VecX(a * x); }, rhs,
                  VecX(a.diagonal()), 20);
    REQUIRE((iter.x - direct).norm() <= 1e-8 * direct.norm());
  }
}

TEST_CASE("pcg rejects non-finite systems", "[solver]") {
  VecX rhs = VecX::Ones(3);
  rhs[1] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(
      pcg_solve([](const VecX& x) { return x; }, rhs, VecX::Ones(3), 2),
      NumericError);
}

TEST_CASE("two-matvec split equals explicit JtJ*x", "[solver]") {
  auto rng = std::mt19937_64(321);
  std::normal_distribution<double> g(0.0, 1.0);
  MatX j(40, 9);
  VecX f(40);
  for (Eigen::Index r = 0; r < 40; ++r) {
    f[r] = g(rng);
    for (Eigen::Index c = 0; c < 9; ++c) j(r, c) = g(rng);
  }
  NormalSystem sys(j, f);
  const MatX jtj = j.transpose() * j;
  for (int trial = 0; trial < 5; ++trial) {
    VecX x(9);
    for (Eigen::Index i = 0; i < 9; ++i) x[i] = g(rng);
    const VecX split = sys.apply_JtJ(x);
    const VecX dense = jtj * x;
    REQUIRE((split - dense).norm() <= 1e-10 * dense.norm());
  }
  // rhs and preconditioner contracts
  REQUIRE((sys.rhs + j.transpose() * f).norm() < 1e-12);
  for (Eigen::Index c = 0; c < 9; ++c)
    REQUIRE(sys.preconditioner[c] == Catch::Approx(j.col(c).squaredNorm()));
}

TEST_CASE("normal-equation rhs matches the FD gradient of the surrogate", "[solver]") {
  const TrackScene s = make_track_scene(20);
  SceneParams at = s.truth;
  at.pose = compose_increment(at.pose, Vec3(0.02, -0.015, 0.01), Vec3(0.01, 0.0, 0.02));
  const Frame& frame = s.pyramid[0];
  const RasterOutput raster = rasterize(s.prior, at, frame.width, frame.height);
  const FrozenStep step =
      build_frozen_step(s.prior, raster, frame, s.landmarks, EnergyWeights{}, at);
  const BlockLayout layout = BlockLayout::make(s.prior, ActiveBlocks::tracking());
  const MatX jac = analytic_jacobian(step, at, layout);
  const VecX res = residual(step, at);
  const VecX grad = jac.transpose() * res;

  for (int col = 0; col < layout.cols; ++col) {
    const double h = 1e-6;
    VecX e = VecX::Zero(layout.cols);
    e[col] = h;
    const double gp = 0.5 * residual(step, apply_update(at, layout, e)).squaredNorm();
    e[col] = -h;
    const double gm = 0.5 * residual(step, apply_update(at, layout, e)).squaredNorm();
    const double fd = (gp - gm) / (2.0 * h);
    REQUIRE(fd == Catch::Approx(grad[col]).epsilon(1e-3).margin(1e-9));
  }
}

TEST_CASE("gauss-newton at ground truth is stationary", "[solver]") {
  const TrackScene s = make_track_scene(21);
  GnOptions opt;
  opt.active = ActiveBlocks::tracking();
  const auto result = gauss_newton_irls(s.prior, s.pyramid, s.landmarks,
                                        SolveSchedule::tracking(), s.truth, opt);
  REQUIRE(result.last_update_norm < 1e-8);
  REQUIRE(result.trace.back().energy.col < 1e-14);
}

TEST_CASE("pose-only recovery from a 5 degree perturbation", "[solver][convergence]") {
  int converged = 0;
  const int trials = 3;
  for (int trial = 0; trial < trials; ++trial) {
    const TrackScene s = make_track_scene(30 + static_cast<std::uint64_t>(trial));
    auto rng = std::mt19937_64(900 + static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 axis(g(rng), g(rng), g(rng));
    axis.normalize();
    SceneParams start = s.truth;
    start.pose = compose_increment(start.pose, (5.0 * M_PI / 180.0) * axis, Vec3::Zero());

    GnOptions opt;
    opt.active = ActiveBlocks{false, false, false, false, true, false};
    const auto result = gauss_newton_irls(s.prior, s.pyramid, s.landmarks,
                                          SolveSchedule::tracking(), start, opt);
    const double initial = eval_energy(s.prior, start, s.pyramid[0], s.landmarks,
                                       EnergyWeights{})
                               .col;
    const double final_col =
        eval_energy(s.prior, result.params, s.pyramid[0], s.landmarks, EnergyWeights{}).col;
    INFO("trial " << trial << ": initial " << initial << " final " << final_col);
    if (final_col < 1e-6 * initial) ++converged;
  }
  REQUIRE(converged == trials);
}

TEST_CASE("energy trace is mostly monotone and halves", "[solver][convergence]") {
  int steps = 0, non_increasing = 0, runs_halved = 0, runs = 0;
  for (std::uint64_t seed : {40, 41, 42, 43}) {
    const TrackScene s = make_track_scene(seed);
    auto rng = std::mt19937_64(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    SceneParams start = s.truth;
    Vec3 axis(g(rng), g(rng), g(rng));
    axis.normalize();
    start.pose = compose_increment(start.pose, 0.05 * axis,
                                   Vec3(0.03 * g(rng), 0.03 * g(rng), 0.05 * g(rng)));
    start.delta.setZero();

    GnOptions opt;
    opt.active = ActiveBlocks::tracking();
    const auto result = gauss_newton_irls(s.prior, s.pyramid, s.landmarks,
                                          SolveSchedule::tracking(), start, opt);
    double prev = -1.0;
    int level = -1;
    for (const auto& rec : result.trace) {
      if (rec.level != level) {
        level = rec.level;
        prev = rec.energy.total;
        continue;
      }
      ++steps;
      if (rec.energy.total <= prev * (1.0 + 1e-12)) ++non_increasing;
      prev = rec.energy.total;
    }
    ++runs;
    if (result.trace.back().energy.total < 0.5 * result.trace.front().energy.total)
      ++runs_halved;
  }
  REQUIRE(non_increasing >= static_cast<int>(0.95 * steps));
  REQUIRE(runs_halved == runs);
}

TEST_CASE("solver runs are bit-deterministic", "[solver]") {
  const TrackScene s = make_track_scene(50);
  SceneParams start = s.truth;
  start.pose = compose_increment(start.pose, Vec3(0.03, -0.02, 0.04), Vec3(0.02, 0, 0));
  GnOptions opt;
  opt.active = ActiveBlocks::tracking();
  const auto a = gauss_newton_irls(s.prior, s.pyramid, s.landmarks,
                                   SolveSchedule::tracking(), start, opt);
  const auto b = gauss_newton_irls(s.prior, s.pyramid, s.landmarks,
                                   SolveSchedule::tracking(), start, opt);
  REQUIRE(a.params.delta == b.params.delta);
  REQUIRE(a.params.pose.rotation == b.params.pose.rotation);
  REQUIRE(a.params.pose.translation == b.params.pose.translation);
  REQUIRE(a.params.gamma.flatten() == b.params.gamma.flatten());
}

TEST_CASE("schedule presets and validation", "[solver]") {
  const SolveSchedule tracking = SolveSchedule::tracking();
  REQUIRE(tracking.entries.size() == 2);
  REQUIRE(tracking.entries[0].level == 2);
  REQUIRE(tracking.entries[0].gn_iterations == 1);
  REQUIRE(tracking.entries[1].level == 3);
  REQUIRE(tracking.entries[1].gn_iterations == 7);
  for (const auto& e : tracking.entries) REQUIRE(e.pcg_iterations == 4);

  const SolveSchedule bundling = SolveSchedule::bundling();
  REQUIRE(bundling.entries.size() == 3);
  REQUIRE(bundling.entries[0].gn_iterations == 25);
  REQUIRE(bundling.entries[1].gn_iterations == 5);
  REQUIRE(bundling.entries[2].gn_iterations == 1);

  SolveSchedule bad;
  bad.entries = {{3, 1, 4}, {2, 1, 4}};
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}
