#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <random>

#include "stdepth/metrics.hpp"
#include "stdepth/rng.hpp"

using namespace stdepth;

namespace {

Grid<double> random_depth(int h, int w, std::uint64_t seed, double lo = 1.0, double hi = 50.0) {
  std::mt19937_64 rng(mix_seed(seed, 2));
  Grid<double> g(h, w);
  for (auto& x : g) x = uniform(rng, lo, hi);
  return g;
}

Trajectory random_trajectory(int n, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 3));
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    t.timestamps.push_back(i);
    PoseSE3<double> pose;
    pose.rot = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    pose.trans = {uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5)};
    t.poses.push_back(pose);
  }
  return t;
}

}  // namespace

TEST_CASE("depth metrics") {
  const Grid<double> gt = random_depth(16, 16, 1);
  SECTION("perfect prediction") {
    const DepthMetrics m = depth_metrics(gt, gt, 80.0);
    REQUIRE(m.abs_rel == 0.0);
    REQUIRE(m.sq_rel == 0.0);
    REQUIRE(m.rmse == 0.0);
    REQUIRE(m.rmse_log == 0.0);
    REQUIRE(m.delta1 == 1.0);
    REQUIRE(m.delta3 == 1.0);
  }
  SECTION("uniform 1.3x overestimate") {
    Grid<double> pred = gt;
    for (auto& x : pred) x *= 1.3;
    const DepthMetrics m = depth_metrics(pred, gt, 80.0);
    REQUIRE(m.abs_rel == Catch::Approx(0.3).margin(1e-9));
    REQUIRE(m.delta1 == 0.0);
    REQUIRE(m.delta2 == 1.0);
    REQUIRE(m.delta3 == 1.0);
  }
  SECTION("median scaling removes a uniform factor") {
    Grid<double> pred = gt;
    for (auto& x : pred) x *= 1.3;
    const DepthMetrics m = depth_metrics(pred, gt, 80.0, true);
    REQUIRE(m.abs_rel == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(m.rmse == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(m.delta1 == 1.0);
  }
  SECTION("pixels beyond the cap are excluded") {
    Grid<double> gt2 = gt;
    Grid<double> pred = gt;
    gt2.at(0, 0) = 120.0;   // beyond cap: must not count
    pred.at(0, 0) = 500.0;  // would dominate if included
    const DepthMetrics m = depth_metrics(pred, gt2, 80.0);
    REQUIRE(m.abs_rel == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("metrics are permutation invariant") {
    Grid<double> pred = gt;
    std::mt19937_64 rng(mix_seed(9, 4));
    for (auto& x : pred) x *= uniform(rng, 0.8, 1.25);
    const DepthMetrics a = depth_metrics(pred, gt, 80.0);
    // Reverse both rasters: same multiset of (pred, gt) pairs.
    Grid<double> pred_r(16, 16), gt_r(16, 16);
    for (int i = 0; i < 256; ++i) {
      pred_r.data()[i] = pred.data()[255 - i];
      gt_r.data()[i] = gt.data()[255 - i];
    }
    const DepthMetrics b = depth_metrics(pred_r, gt_r, 80.0);
    REQUIRE(a.abs_rel == Catch::Approx(b.abs_rel).margin(1e-15));
    REQUIRE(a.rmse == Catch::Approx(b.rmse).margin(1e-15));
    REQUIRE(a.delta2 == b.delta2);
  }
  SECTION("delta thresholds are monotone") {
    Grid<double> pred = gt;
    std::mt19937_64 rng(mix_seed(10, 4));
    for (auto& x : pred) x *= uniform(rng, 0.5, 2.0);
    const DepthMetrics m = depth_metrics(pred, gt, 80.0);
    REQUIRE(m.delta1 <= m.delta2);
    REQUIRE(m.delta2 <= m.delta3);
  }
  SECTION("all-invalid ground truth raises an error") {
    const Grid<double> zero(4, 4, 1, 0.0);
    REQUIRE_THROWS_AS(depth_metrics(zero, zero, 80.0), NumericError);
  }
}

TEST_CASE("absolute trajectory error") {
  SECTION("identical trajectories have zero error") {
    const Trajectory t = random_trajectory(12, 5);
    const AteResult r = ate(t, t);
    REQUIRE(r.t_ate == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(r.r_ate == Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("a global rigid offset is absorbed by the alignment") {
    const Trajectory gt = random_trajectory(15, 6);
    PoseSE3<double> offset;
    offset.rot = {0.4, -0.2, 0.6};
    offset.trans = {3.0, -1.0, 2.0};
    Trajectory pred = gt;
    for (auto& pose : pred.poses) pose = pose_compose(offset, pose);
    const AteResult r = ate(pred, gt);
    REQUIRE(r.t_ate == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(r.r_ate == Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("perturbed translations match an independent alignment oracle") {
    const Trajectory gt = random_trajectory(10, 7);
    Trajectory pred = gt;
    for (std::size_t i = 0; i < pred.poses.size(); ++i) {
      const int axis = static_cast<int>(i % 3);
      const double d = 0.1;
      if (axis == 0) pred.poses[i].trans.x += d;
      if (axis == 1) pred.poses[i].trans.y += d;
      if (axis == 2) pred.poses[i].trans.z += d;
    }
    const AteResult r = ate(pred, gt);

    // Oracle: Eigen's closed-form alignment plus a direct per-frame RMS.
    const std::size_t n = gt.size();
    Eigen::MatrixXd P(3, n), Q(3, n);
    for (std::size_t i = 0; i < n; ++i) {
      P.col(i) << pred.poses[i].trans.x, pred.poses[i].trans.y, pred.poses[i].trans.z;
      Q.col(i) << gt.poses[i].trans.x, gt.poses[i].trans.y, gt.poses[i].trans.z;
    }
    const Eigen::Matrix4d S = Eigen::umeyama(P, Q, false);
    double se = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d sp = S.topLeftCorner<3, 3>() * P.col(i) + S.topRightCorner<3, 1>();
      se += (sp - Q.col(i)).squaredNorm();  // rotation of Q preserves the norm
    }
    const double expected = std::sqrt(se / static_cast<double>(n));
    REQUIRE(r.t_ate == Catch::Approx(expected).epsilon(1e-9));
  }
  SECTION("rotational disturbances show up in the rotation error") {
    const Trajectory gt = random_trajectory(9, 8);
    Trajectory pred = gt;
    const double angle = 0.02;
    for (std::size_t i = 0; i < pred.poses.size(); ++i) {
      PoseSE3<double> wiggle;
      // Alternate the axis so no global rotation can absorb it.
      wiggle.rot = i % 2 == 0 ? Vec3<double>{angle, 0, 0} : Vec3<double>{0, -angle, 0};
      pred.poses[i] = pose_compose(pred.poses[i], wiggle);
    }
    const AteResult r = ate(pred, gt);
    REQUIRE(r.r_ate > 0.25 * angle);
    REQUIRE(r.r_ate < 2.0 * angle);
  }
  SECTION("with-scale alignment absorbs a uniform scale") {
    const Trajectory gt = random_trajectory(11, 9);
    Trajectory pred = gt;
    for (auto& pose : pred.poses) pose.trans = pose.trans * 2.5;
    const AteResult rigid = ate(pred, gt);
    const AteResult scaled = ate(pred, gt, true);
    REQUIRE(scaled.t_ate == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(rigid.t_ate > 1.0);
  }
  SECTION("preconditions") {
    const Trajectory a = random_trajectory(5, 10);
    const Trajectory b = random_trajectory(6, 11);
    REQUIRE_THROWS_AS(ate(a, b), ConfigError);
    const Trajectory c = random_trajectory(2, 12);
    REQUIRE_THROWS_AS(ate(c, c), ConfigError);
  }
}
