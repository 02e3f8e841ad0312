#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "stdepth/core.hpp"
#include "stdepth/geometry.hpp"
#include "stdepth/rng.hpp"

namespace stdepth::observability {

// Residuals of the pixel-space relations tying estimated intrinsics and
// motion to the true ones. The rotational conjugacy K R K^-1 pins K for a
// generic rotation; the translational product K t does not.
struct ConjugacyReport {
  double residual_rotation = 0.0;     // ||Kh Rh Kh^-1 - K R K^-1||_F
  double residual_translation = 0.0;  // ||Kh th - K t||
  double a_residual = 0.0;            // ||K^-1 Kh Kh^T K^-T - I||_F
  double kkt_residual = 0.0;          // ||Kh Kh^T - K K^T||_F
};

inline ConjugacyReport conjugacy_report(const Intrinsics<double>& k_true,
                                        const Intrinsics<double>& k_hat,
                                        const Vec3<double>& rot_true, const Vec3<double>& rot_hat,
                                        const Vec3<double>& t_true, const Vec3<double>& t_hat) {
  const Mat3<double> K = to_matrix(k_true);
  const Mat3<double> Kh = to_matrix(k_hat);
  const Mat3<double> Ki = inverse_matrix(k_true);
  const Mat3<double> Khi = inverse_matrix(k_hat);
  const Mat3<double> R = rotation_matrix(rot_true);
  const Mat3<double> Rh = rotation_matrix(rot_hat);

  ConjugacyReport rep;
  rep.residual_rotation = (Kh * Rh * Khi - K * R * Ki).frobenius_norm();
  rep.residual_translation = (Kh * t_hat - K * t_true).norm();
  const Mat3<double> A = Ki * Kh * Kh.transpose() * Ki.transpose();
  rep.a_residual = (A - Mat3<double>::identity()).frobenius_norm();
  rep.kkt_residual = (Kh * Kh.transpose() - K * K.transpose()).frobenius_norm();
  return rep;
}

// Focal-length tolerance admitted by a given amount of inter-frame
// rotation: delta_fx < 2 fx^2 / (w^2 ry) and delta_fy < 2 fy^2 / (h^2 rx).
// Zero rotation about an axis leaves the matching focal unbounded.
struct FocalTolerance {
  double delta_fx = std::numeric_limits<double>::infinity();
  double delta_fy = std::numeric_limits<double>::infinity();

  bool fx_unbounded() const { return !std::isfinite(delta_fx); }
  bool fy_unbounded() const { return !std::isfinite(delta_fy); }
};

inline FocalTolerance focal_tolerance(const Intrinsics<double>& k, double width, double height,
                                      double rx, double ry) {
  require(width > 0 && height > 0, "focal_tolerance: image size must be positive");
  check_intrinsics(k);
  FocalTolerance tol;
  if (ry != 0.0) tol.delta_fx = 2.0 * k.fx * k.fx / (width * width * std::abs(ry));
  if (rx != 0.0) tol.delta_fy = 2.0 * k.fy * k.fy / (height * height * std::abs(rx));
  return tol;
}

enum class UniquenessStatus { kPass, kFail, kNotIdentifiable, kInconclusive };

inline const char* to_string(UniquenessStatus s) {
  switch (s) {
    case UniquenessStatus::kPass: return "pass";
    case UniquenessStatus::kFail: return "fail";
    case UniquenessStatus::kNotIdentifiable: return "not-identifiable";
    case UniquenessStatus::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

struct UniquenessReport {
  UniquenessStatus status = UniquenessStatus::kInconclusive;
  int trials = 0;
  int converged_trials = 0;
  // Worst absolute parameter gap among converged minima, per parameter.
  double gap_fx = 0.0;
  double gap_fy = 0.0;
  double gap_x0 = 0.0;
  double gap_y0 = 0.0;
  double worst_k_gap = 0.0;  // euclidean over (fx, fy, x0, y0)
};

namespace detail {

struct ConjugacyProblem {
  Mat3<double> target;  // K R K^-1 of the true parameters

  // theta = (log fx, log fy, x0, y0, rx, ry, rz)
  Eigen::Matrix<double, 9, 1> residual(const Eigen::Matrix<double, 7, 1>& theta) const {
    const Intrinsics<double> k{std::exp(theta[0]), std::exp(theta[1]), theta[2], theta[3]};
    const Mat3<double> M =
        to_matrix(k) * rotation_matrix(Vec3<double>{theta[4], theta[5], theta[6]}) *
        inverse_matrix(k);
    Eigen::Matrix<double, 9, 1> r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r[3 * i + j] = M.m[i][j] - target.m[i][j];
    return r;
  }
};

// Truncated Gauss-Newton with a numeric Jacobian. The conjugacy residual
// can be rank-deficient (a focal length drops out entirely for degenerate
// rotation axes), so the step is built from the SVD pseudo-inverse with
// small singular values discarded; flat directions simply stay where they
// started. Backtracking guards the nonlinear region.
inline double minimize_conjugacy(const ConjugacyProblem& prob, Eigen::Matrix<double, 7, 1>& theta,
                                 int max_iters = 300) {
  auto cost = [&](const Eigen::Matrix<double, 7, 1>& t) { return prob.residual(t).squaredNorm(); };
  double current = cost(theta);
  for (int it = 0; it < max_iters && current >= 1e-28; ++it) {
    Eigen::Matrix<double, 9, 7> J;
    const Eigen::Matrix<double, 9, 1> r = prob.residual(theta);
    for (int p = 0; p < 7; ++p) {
      const double h = 1e-7 * std::max(1.0, std::abs(theta[p]));
      Eigen::Matrix<double, 7, 1> tp = theta, tm = theta;
      tp[p] += h;
      tm[p] -= h;
      J.col(p) = (prob.residual(tp) - prob.residual(tm)) / (2.0 * h);
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 9, 7>> svd(J,
                                                      Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-8 * sv[0];
    Eigen::Matrix<double, 7, 1> delta = Eigen::Matrix<double, 7, 1>::Zero();
    const Eigen::Matrix<double, 9, 1> utr = svd.matrixU().transpose() * r;
    for (int i = 0; i < 7; ++i)
      if (sv[i] > tol) delta -= svd.matrixV().col(i) * (utr[i] / sv[i]);

    // Keep single steps bounded; far from the solution the GN step can be
    // wild in the curved rotation coordinates.
    const double max_step = 2.0;
    if (delta.norm() > max_step) delta *= max_step / delta.norm();

    bool accepted = false;
    double scale = 1.0;
    for (int k = 0; k < 16; ++k, scale *= 0.5) {
      const Eigen::Matrix<double, 7, 1> candidate = theta + scale * delta;
      const double c = cost(candidate);
      if (c < current) {
        theta = candidate;
        current = c;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return std::sqrt(current);
}

}  // namespace detail

// Check numerically that the rotational conjugacy determines the
// intrinsics: minimize the conjugacy residual over (K_hat, R_hat) from
// random starts and test whether every converged minimum sits at K. An
// identity rotation satisfies the relation for any K, so it is reported
// as not identifiable rather than run.
inline UniquenessReport verify_uniqueness(const Intrinsics<double>& k_true,
                                          const Vec3<double>& rot_true, int trials,
                                          std::uint64_t seed) {
  check_intrinsics(k_true);
  require(trials > 0, "verify_uniqueness: trials must be positive");
  UniquenessReport rep;
  rep.trials = trials;
  if (rotation_angle(rot_true) < 1e-9) {
    rep.status = UniquenessStatus::kNotIdentifiable;
    return rep;
  }

  detail::ConjugacyProblem prob;
  prob.target = to_matrix(k_true) * rotation_matrix(rot_true) * inverse_matrix(k_true);

  constexpr double kConvergedResidual = 1e-8;
  const double k_norm = std::sqrt(k_true.fx * k_true.fx + k_true.fy * k_true.fy +
                                  k_true.x0 * k_true.x0 + k_true.y0 * k_true.y0);
  bool any_violation = false;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    Eigen::Matrix<double, 7, 1> theta;
    theta[0] = std::log(k_true.fx) + uniform(rng, std::log(0.5), std::log(2.0));
    theta[1] = std::log(k_true.fy) + uniform(rng, std::log(0.5), std::log(2.0));
    theta[2] = k_true.x0 + uniform(rng, -0.3, 0.3) * k_true.fx;
    theta[3] = k_true.y0 + uniform(rng, -0.3, 0.3) * k_true.fy;
    theta[4] = rot_true.x + uniform(rng, -0.3, 0.3);
    theta[5] = rot_true.y + uniform(rng, -0.3, 0.3);
    theta[6] = rot_true.z + uniform(rng, -0.3, 0.3);

    const double residual = detail::minimize_conjugacy(prob, theta);
    if (residual >= kConvergedResidual) continue;
    rep.converged_trials += 1;
    const double fx = std::exp(theta[0]), fy = std::exp(theta[1]);
    const double dfx = std::abs(fx - k_true.fx), dfy = std::abs(fy - k_true.fy);
    const double dx0 = std::abs(theta[2] - k_true.x0), dy0 = std::abs(theta[3] - k_true.y0);
    rep.gap_fx = std::max(rep.gap_fx, dfx);
    rep.gap_fy = std::max(rep.gap_fy, dfy);
    rep.gap_x0 = std::max(rep.gap_x0, dx0);
    rep.gap_y0 = std::max(rep.gap_y0, dy0);
    const double gap = std::sqrt(dfx * dfx + dfy * dfy + dx0 * dx0 + dy0 * dy0);
    rep.worst_k_gap = std::max(rep.worst_k_gap, gap);
    if (gap >= 1e-4 * k_norm) any_violation = true;
  }

  if (rep.converged_trials == 0)
    rep.status = UniquenessStatus::kInconclusive;
  else
    rep.status = any_violation ? UniquenessStatus::kFail : UniquenessStatus::kPass;
  return rep;
}

}  // namespace stdepth::observability
