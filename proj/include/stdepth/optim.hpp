#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stdepth/autodiff.hpp"
#include "stdepth/core.hpp"
#include "stdepth/losses.hpp"
#include "stdepth/rng.hpp"

namespace stdepth {

// Variable classes excluded from updates. Frozen classes enter the loss as
// constants and report zero gradients.
struct FrozenFlags {
  bool disp_l = false;
  bool disp_r = false;
  bool pose = false;
  bool intrinsics = false;
};

// Direct-optimization problem over a stereo-temporal quadruplet. The
// disparities are stored as log-disparities so positivity is structural.
struct Problem {
  ImageQuadruplet images;
  double baseline = 0.3;
  Grid<double> log_disp_l;
  Grid<double> log_disp_r;
  PoseSE3<double> pose;
  Intrinsics<double> intr;
  FrozenFlags frozen;
  LossWeights weights;
};

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  int steps = 1000;
  double lr_decay = 0.9;     // multiplicative
  int lr_decay_every = 100;  // steps between decays
  std::uint64_t seed = 0;
  double divergence_threshold = 1e6;
  double convergence_tol = 1e-6;
  int convergence_window = 50;
};

struct Gradients {
  Grid<double> log_disp_l;
  Grid<double> log_disp_r;
  std::array<double, 6> pose{};  // rot xyz then trans xyz
  std::array<double, 4> intr{};  // fx fy x0 y0
};

struct OptimReport {
  std::vector<LossBreakdown<double>> trace;  // loss before each executed step
  Grid<double> log_disp_l;
  Grid<double> log_disp_r;
  PoseSE3<double> pose;
  Intrinsics<double> intr;
  bool converged = false;
  bool diverged = false;
  int steps_run = 0;
  double wall_time_sec = 0.0;
};

namespace detail {

inline void check_problem(const Problem& p) {
  require(p.images.left_t.same_shape(p.images.right_t) &&
              p.images.left_t.same_shape(p.images.left_tp) &&
              p.images.left_t.same_shape(p.images.right_tp),
          "problem: quadruplet images must share one shape");
  require(p.log_disp_l.height() == p.images.left_t.height() &&
              p.log_disp_l.width() == p.images.left_t.width() &&
              p.log_disp_l.same_shape(p.log_disp_r) && p.log_disp_l.channels() == 1,
          "problem: log-disparity shape mismatch");
  require(p.baseline > 0.0, "problem: baseline must be positive");
  check_weights(p.weights);
  check_intrinsics(p.intr);
}

inline void check_finite(const LossBreakdown<double>& b) {
  const struct {
    const char* name;
    double v;
  } parts[] = {{"photo_left", b.photo_left},     {"photo_right", b.photo_right},
               {"temporal", b.temporal},         {"lr_consistency", b.lr_consistency},
               {"smooth_left", b.smooth_left},   {"smooth_right", b.smooth_right},
               {"total", b.total}};
  for (const auto& p : parts)
    if (!std::isfinite(p.v))
      throw NumericError(std::string("non-finite loss component: ") + p.name);
}

}  // namespace detail

// Loss at the problem's current variables, evaluated in plain doubles.
inline LossBreakdown<double> evaluate(const Problem& p) {
  detail::check_problem(p);
  SceneVariables<double> vars;
  vars.disp_l = Grid<double>(p.log_disp_l.height(), p.log_disp_l.width());
  vars.disp_r = Grid<double>(p.log_disp_r.height(), p.log_disp_r.width());
  for (std::size_t i = 0; i < p.log_disp_l.size(); ++i)
    vars.disp_l.data()[i] = std::exp(p.log_disp_l.data()[i]);
  for (std::size_t i = 0; i < p.log_disp_r.size(); ++i)
    vars.disp_r.data()[i] = std::exp(p.log_disp_r.data()[i]);
  vars.pose = p.pose;
  vars.intr = p.intr;
  const auto b = total_loss(p.images, vars, p.baseline, p.weights);
  detail::check_finite(b);
  return b;
}

// Reverse-mode gradients of the total loss with respect to every unfrozen
// scalar. The tape is a caller-provided workspace so repeated evaluations
// reuse its storage.
inline Gradients gradient(const Problem& p, ad::Tape& tape,
                          LossBreakdown<double>* loss_out = nullptr) {
  detail::check_problem(p);
  tape.clear();
  tape.reserve(330 * p.log_disp_l.size() + 4096);

  const int h = p.log_disp_l.height(), w = p.log_disp_l.width();
  const std::size_t npx = p.log_disp_l.size();

  // Leaves first, in a fixed order, so leaf index == flat parameter index.
  std::vector<std::int32_t> leaf_index;
  SceneVariables<ad::Var> vars;
  vars.disp_l = Grid<ad::Var>(h, w);
  vars.disp_r = Grid<ad::Var>(h, w);

  auto make_scalar = [&](double value, bool frozen) -> ad::Var {
    if (frozen) return ad::Var(value);
    ad::Var leaf = ad::Var::leaf(tape, value);
    leaf_index.push_back(leaf.index());
    return leaf;
  };

  using std::exp;
  std::vector<ad::Var> log_l(npx), log_r(npx);
  for (std::size_t i = 0; i < npx; ++i)
    log_l[i] = make_scalar(p.log_disp_l.data()[i], p.frozen.disp_l);
  for (std::size_t i = 0; i < npx; ++i)
    log_r[i] = make_scalar(p.log_disp_r.data()[i], p.frozen.disp_r);
  const ad::Var rot_x = make_scalar(p.pose.rot.x, p.frozen.pose);
  const ad::Var rot_y = make_scalar(p.pose.rot.y, p.frozen.pose);
  const ad::Var rot_z = make_scalar(p.pose.rot.z, p.frozen.pose);
  const ad::Var t_x = make_scalar(p.pose.trans.x, p.frozen.pose);
  const ad::Var t_y = make_scalar(p.pose.trans.y, p.frozen.pose);
  const ad::Var t_z = make_scalar(p.pose.trans.z, p.frozen.pose);
  const ad::Var fx = make_scalar(p.intr.fx, p.frozen.intrinsics);
  const ad::Var fy = make_scalar(p.intr.fy, p.frozen.intrinsics);
  const ad::Var x0 = make_scalar(p.intr.x0, p.frozen.intrinsics);
  const ad::Var y0 = make_scalar(p.intr.y0, p.frozen.intrinsics);

  for (std::size_t i = 0; i < npx; ++i) vars.disp_l.data()[i] = exp(log_l[i]);
  for (std::size_t i = 0; i < npx; ++i) vars.disp_r.data()[i] = exp(log_r[i]);
  vars.pose.rot = {rot_x, rot_y, rot_z};
  vars.pose.trans = {t_x, t_y, t_z};
  vars.intr = {fx, fy, x0, y0};

  const LossBreakdown<ad::Var> loss = total_loss(p.images, vars, p.baseline, p.weights);
  const LossBreakdown<double> values = breakdown_values(loss);
  detail::check_finite(values);
  if (loss_out) *loss_out = values;

  Gradients g;
  g.log_disp_l = Grid<double>(h, w, 1, 0.0);
  g.log_disp_r = Grid<double>(h, w, 1, 0.0);
  if (loss.total.is_const()) return g;  // every class frozen or all weights zero

  const std::vector<double> adj = tape.adjoints(loss.total.index());
  std::size_t cursor = 0;
  auto take = [&](bool frozen) -> double {
    if (frozen) return 0.0;
    return adj[leaf_index[cursor++]];
  };
  for (std::size_t i = 0; i < npx; ++i) g.log_disp_l.data()[i] = take(p.frozen.disp_l);
  for (std::size_t i = 0; i < npx; ++i) g.log_disp_r.data()[i] = take(p.frozen.disp_r);
  for (int i = 0; i < 6; ++i) g.pose[i] = take(p.frozen.pose);
  for (int i = 0; i < 4; ++i) g.intr[i] = take(p.frozen.intrinsics);
  return g;
}

inline Gradients gradient(const Problem& p) {
  ad::Tape tape;
  return gradient(p, tape);
}

// Bias-corrected Adam. One state per optimized parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& state, std::vector<double>& params,
                      const std::vector<double>& grads, const OptimConfig& cfg, double lr) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: size mismatch");
  require(cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1 && lr > 0,
          "adam_step: invalid configuration");
  state.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

namespace detail {

inline std::vector<double> flatten_variables(const Problem& p) {
  std::vector<double> out;
  out.reserve(2 * p.log_disp_l.size() + 10);
  out.insert(out.end(), p.log_disp_l.data(), p.log_disp_l.data() + p.log_disp_l.size());
  out.insert(out.end(), p.log_disp_r.data(), p.log_disp_r.data() + p.log_disp_r.size());
  for (double v : {p.pose.rot.x, p.pose.rot.y, p.pose.rot.z, p.pose.trans.x, p.pose.trans.y,
                   p.pose.trans.z, p.intr.fx, p.intr.fy, p.intr.x0, p.intr.y0})
    out.push_back(v);
  return out;
}

inline void unflatten_variables(const std::vector<double>& flat, Problem& p) {
  const std::size_t n = p.log_disp_l.size();
  for (std::size_t i = 0; i < n; ++i) p.log_disp_l.data()[i] = flat[i];
  for (std::size_t i = 0; i < n; ++i) p.log_disp_r.data()[i] = flat[n + i];
  const double* s = flat.data() + 2 * n;
  p.pose.rot = {s[0], s[1], s[2]};
  p.pose.trans = {s[3], s[4], s[5]};
  p.intr = {s[6], s[7], s[8], s[9]};
}

inline std::vector<double> flatten_gradients(const Gradients& g) {
  std::vector<double> out;
  out.reserve(2 * g.log_disp_l.size() + 10);
  out.insert(out.end(), g.log_disp_l.data(), g.log_disp_l.data() + g.log_disp_l.size());
  out.insert(out.end(), g.log_disp_r.data(), g.log_disp_r.data() + g.log_disp_r.size());
  out.insert(out.end(), g.pose.begin(), g.pose.end());
  out.insert(out.end(), g.intr.begin(), g.intr.end());
  return out;
}

}  // namespace detail

// Run Adam on the problem's unfrozen variables with a stepwise-decayed
// learning rate. Deterministic for a fixed problem and config. Divergence
// (non-finite or exploding loss) aborts with the partial trace retained.
inline OptimReport optimize(Problem problem, const OptimConfig& cfg) {
  require(cfg.steps >= 0 && cfg.lr > 0 && cfg.lr_decay > 0 && cfg.lr_decay_every > 0,
          "optimize: invalid configuration");
  const auto t_start = std::chrono::steady_clock::now();

  OptimReport report;
  report.trace.reserve(cfg.steps);
  ad::Tape tape;
  std::vector<double> params = detail::flatten_variables(problem);
  AdamState state(params.size());
  double lr = cfg.lr;

  for (int step = 0; step < cfg.steps; ++step) {
    if (step > 0 && step % cfg.lr_decay_every == 0) lr *= cfg.lr_decay;
    LossBreakdown<double> loss;
    Gradients grads;
    try {
      grads = gradient(problem, tape, &loss);
    } catch (const NumericError&) {
      report.diverged = true;
      break;
    }
    report.trace.push_back(loss);
    report.steps_run += 1;
    if (loss.total > cfg.divergence_threshold) {
      report.diverged = true;
      break;
    }
    adam_step(state, params, detail::flatten_gradients(grads), cfg, lr);
    detail::unflatten_variables(params, problem);
  }

  // Converged when the loss has stopped moving relative to a window back.
  if (!report.diverged && static_cast<int>(report.trace.size()) > cfg.convergence_window) {
    const double now = report.trace.back().total;
    const double then = report.trace[report.trace.size() - 1 - cfg.convergence_window].total;
    report.converged = std::abs(now - then) <= cfg.convergence_tol * std::max(std::abs(then), 1e-12);
  }

  report.log_disp_l = problem.log_disp_l;
  report.log_disp_r = problem.log_disp_r;
  report.pose = problem.pose;
  report.intr = problem.intr;
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// Neutral initialization: disparity of a fronto-parallel plane at
// init_depth (through the initial focal length), identity pose, intrinsics
// from the image size. The jitters add seeded offsets; they exist to probe
// how initialization scale and intrinsics priors propagate to the solution.
struct InitConfig {
  double init_depth = 10.0;          // meters
  double logdisp_jitter = 0.0;       // +/- range of a global log-disparity offset
  double intrinsics_jitter = 0.0;    // +/- relative range on focal lengths
  std::uint64_t seed = 0;
};

inline Problem make_problem(const ImageQuadruplet& images, double baseline,
                            const LossWeights& weights, const InitConfig& init) {
  require(init.init_depth > 0.0, "make_problem: init_depth must be positive");
  Problem p;
  p.images = images;
  p.baseline = baseline;
  p.weights = weights;

  const int h = images.left_t.height(), w = images.left_t.width();
  std::mt19937_64 rng(mix_seed(init.seed, 0x1717));
  const double jf = init.intrinsics_jitter;
  p.intr.fx = 0.8 * w * (1.0 + (jf > 0 ? uniform(rng, -jf, jf) : 0.0));
  p.intr.fy = 0.8 * w * (1.0 + (jf > 0 ? uniform(rng, -jf, jf) : 0.0));
  p.intr.x0 = w / 2.0;
  p.intr.y0 = h / 2.0;

  const double jd = init.logdisp_jitter;
  const double offset = jd > 0 ? uniform(rng, -jd, jd) : 0.0;
  const double log_d0 = std::log(baseline * p.intr.fx / init.init_depth) + offset;
  p.log_disp_l = Grid<double>(h, w, 1, log_d0);
  p.log_disp_r = Grid<double>(h, w, 1, log_d0);
  return p;
}

}  // namespace stdepth
