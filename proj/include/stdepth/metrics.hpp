#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "stdepth/core.hpp"
#include "stdepth/geometry.hpp"

namespace stdepth {

// Depth error and accuracy statistics over the valid ground-truth pixels.
struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;  // fraction with max(pred/gt, gt/pred) < 1.25
  double delta2 = 0.0;  // ... < 1.25^2
  double delta3 = 0.0;  // ... < 1.25^3
};

namespace detail {

inline double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  auto mid = values.begin() + n / 2;
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(values.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Standard depth evaluation: pixels with 0 < gt <= cap participate;
// predictions are clamped into (1e-3, cap]. With median_scale the
// prediction is first rescaled by median(gt)/median(pred), which removes a
// global scale factor and nothing else.
inline DepthMetrics depth_metrics(const Grid<double>& pred, const Grid<double>& gt, double cap,
                                  bool median_scale = false) {
  require(pred.same_shape(gt) && pred.channels() == 1, "depth_metrics: shape mismatch");
  require(cap > 0.0, "depth_metrics: cap must be positive");

  std::vector<double> pred_v, gt_v;
  pred_v.reserve(gt.size());
  gt_v.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double g = gt.data()[i];
    if (g > 0.0 && g <= cap) {
      gt_v.push_back(g);
      pred_v.push_back(pred.data()[i]);
    }
  }
  if (gt_v.empty()) throw NumericError("depth_metrics: no valid ground-truth pixels");

  if (median_scale) {
    const double med_pred = detail::median_of(pred_v);
    if (!(med_pred > 0.0)) throw NumericError("depth_metrics: non-positive prediction median");
    const double scale = detail::median_of(gt_v) / med_pred;
    for (double& p : pred_v) p *= scale;
  }

  DepthMetrics m;
  const double n = static_cast<double>(gt_v.size());
  double se = 0.0, se_log = 0.0;
  for (std::size_t i = 0; i < gt_v.size(); ++i) {
    const double g = gt_v[i];
    const double p = std::min(std::max(pred_v[i], 1e-3), cap);
    const double diff = p - g;
    m.abs_rel += std::abs(diff) / g;
    m.sq_rel += diff * diff / g;
    se += diff * diff;
    const double dlog = std::log(p) - std::log(g);
    se_log += dlog * dlog;
    const double ratio = std::max(p / g, g / p);
    m.delta1 += ratio < 1.25;
    m.delta2 += ratio < 1.25 * 1.25;
    m.delta3 += ratio < 1.25 * 1.25 * 1.25;
  }
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(se / n);
  m.rmse_log = std::sqrt(se_log / n);
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  return m;
}

// World-frame pose sequence with strictly increasing timestamps.
struct Trajectory {
  std::vector<double> timestamps;
  std::vector<PoseSE3<double>> poses;

  std::size_t size() const { return poses.size(); }

  void validate() const {
    require(timestamps.size() == poses.size(), "trajectory: timestamp/pose count mismatch");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
      require(timestamps[i] > timestamps[i - 1], "trajectory: timestamps must strictly increase");
  }
};

struct AteResult {
  double t_ate = 0.0;  // RMS residual translation, meters
  double r_ate = 0.0;  // RMS residual rotation angle, radians
};

namespace detail {

// Closed-form least-squares rigid (optionally similarity) alignment of
// point set p onto q.
inline void align_points(const std::vector<Vec3<double>>& p, const std::vector<Vec3<double>>& q,
                         bool with_scale, Mat3<double>* R_out, Vec3<double>* t_out,
                         double* scale_out) {
  const std::size_t n = p.size();
  Eigen::Vector3d pm = Eigen::Vector3d::Zero(), qm = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    pm += Eigen::Vector3d(p[i].x, p[i].y, p[i].z);
    qm += Eigen::Vector3d(q[i].x, q[i].y, q[i].z);
  }
  pm /= static_cast<double>(n);
  qm /= static_cast<double>(n);

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  double p_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d dp = Eigen::Vector3d(p[i].x, p[i].y, p[i].z) - pm;
    const Eigen::Vector3d dq = Eigen::Vector3d(q[i].x, q[i].y, q[i].z) - qm;
    H += dq * dp.transpose();
    p_var += dp.squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixU() * D * svd.matrixV().transpose();

  double scale = 1.0;
  if (with_scale && p_var > 0.0)
    scale = (svd.singularValues().asDiagonal() * D).trace() / p_var;

  const Eigen::Vector3d t = qm - scale * R * pm;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) R_out->m[i][j] = R(i, j);
  *t_out = {t.x(), t.y(), t.z()};
  *scale_out = scale;
}

}  // namespace detail

// Absolute trajectory error: align the estimate onto the ground truth with
// the closed-form rigid transform minimizing the translational residuals,
// then take RMS translation norms and rotation angles of the per-frame
// residual poses. with_scale additionally fits a global scale (diagnostic;
// the default stays rigid since recovered trajectories claim metric scale).
inline AteResult ate(const Trajectory& pred, const Trajectory& gt, bool with_scale = false) {
  require(pred.size() == gt.size(), "ate: trajectory length mismatch");
  require(pred.size() >= 3, "ate: alignment requires at least 3 poses");
  pred.validate();
  gt.validate();

  const std::size_t n = pred.size();
  std::vector<Vec3<double>> p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = pred.poses[i].trans;
    q[i] = gt.poses[i].trans;
  }
  Mat3<double> Rs;
  Vec3<double> ts;
  double scale = 1.0;
  detail::align_points(p, q, with_scale, &Rs, &ts, &scale);

  double se_t = 0.0, se_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Residual pose Q_i^-1 * S * P_i.
    const Mat3<double> Rq = rotation_matrix(gt.poses[i].rot);
    const Mat3<double> Rp = rotation_matrix(pred.poses[i].rot);
    const Vec3<double> sp = Rs * (pred.poses[i].trans * scale) + ts;
    const Mat3<double> Rf = Rq.transpose() * (Rs * Rp);
    const Vec3<double> tf = Rq.transpose() * (sp - gt.poses[i].trans);
    se_t += tf.squared_norm();
    const double angle = rotation_angle(rotation_log(Rf));
    se_r += angle * angle;
  }
  return {std::sqrt(se_t / static_cast<double>(n)), std::sqrt(se_r / static_cast<double>(n))};
}

}  // namespace stdepth
