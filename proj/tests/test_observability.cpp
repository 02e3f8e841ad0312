#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "stdepth/observability.hpp"
#include "stdepth/rng.hpp"

using namespace stdepth;
using namespace stdepth::observability;

TEST_CASE("conjugacy residuals") {
  const Intrinsics<double> k{100, 100, 50, 50};
  const Vec3<double> rot{0.05, -0.1, 0.02};
  const Vec3<double> trans{0.3, -0.2, 0.5};
  SECTION("identical estimates give zero residuals") {
    const auto rep = conjugacy_report(k, k, rot, rot, trans, trans);
    REQUIRE(rep.residual_rotation == Catch::Approx(0.0).margin(1e-13));
    REQUIRE(rep.residual_translation == Catch::Approx(0.0).margin(1e-13));
    REQUIRE(rep.a_residual == Catch::Approx(0.0).margin(1e-13));
    REQUIRE(rep.kkt_residual == Catch::Approx(0.0).margin(1e-13));
  }
  SECTION("a wrong focal length shows in the rotation residual") {
    const Intrinsics<double> kh{110, 100, 50, 50};
    const Vec3<double> ry{0, 0.1, 0};
    const auto rep = conjugacy_report(k, kh, ry, ry, trans, trans);
    REQUIRE(rep.residual_rotation > 1e-4);
    // Independent arithmetic for the same norm.
    const Mat3<double> lhs =
        to_matrix(kh) * rotation_matrix(ry) * inverse_matrix(kh);
    const Mat3<double> rhs = to_matrix(k) * rotation_matrix(ry) * inverse_matrix(k);
    double sq = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double d = lhs.m[i][j] - rhs.m[i][j];
        sq += d * d;
      }
    REQUIRE(rep.residual_rotation == Catch::Approx(std::sqrt(sq)).epsilon(1e-12));
  }
  SECTION("translation products collide for scaled focal and translation") {
    // Kh th = K t despite Kh != K: the translational relation alone cannot
    // separate the two factors when tz = 0.
    const Intrinsics<double> kh{200, 100, 50, 50};
    const Vec3<double> t_true{1, 0, 0};
    const Vec3<double> t_hat{0.5, 0, 0};
    const auto rep = conjugacy_report(k, kh, rot, rot, t_true, t_hat);
    REQUIRE(rep.residual_translation == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(rep.kkt_residual > 1.0);
  }
}

TEST_CASE("structural identities of the intrinsics Gram matrix") {
  std::mt19937_64 rng(mix_seed(55, 0));
  SECTION("K K^T has the expected block layout") {
    for (int t = 0; t < 20; ++t) {
      const Intrinsics<double> k{uniform(rng, 20, 800), uniform(rng, 20, 800),
                                 uniform(rng, 0, 400), uniform(rng, 0, 300)};
      const Mat3<double> K = to_matrix(k);
      const Mat3<double> G = K * K.transpose();
      REQUIRE(G.m[0][0] == k.fx * k.fx + k.x0 * k.x0);
      REQUIRE(G.m[1][1] == k.fy * k.fy + k.y0 * k.y0);
      REQUIRE(G.m[0][1] == k.x0 * k.y0);
      REQUIRE(G.m[1][0] == k.x0 * k.y0);
      REQUIRE(G.m[0][2] == k.x0);
      REQUIRE(G.m[1][2] == k.y0);
      REQUIRE(G.m[2][0] == k.x0);
      REQUIRE(G.m[2][1] == k.y0);
      REQUIRE(G.m[2][2] == 1.0);
    }
  }
  SECTION("the A residual and the Gram residual bound each other") {
    for (int t = 0; t < 30; ++t) {
      const Intrinsics<double> k{uniform(rng, 50, 500), uniform(rng, 50, 500),
                                 uniform(rng, 10, 300), uniform(rng, 10, 200)};
      const Intrinsics<double> kh{uniform(rng, 50, 500), uniform(rng, 50, 500),
                                  uniform(rng, 10, 300), uniform(rng, 10, 200)};
      const Vec3<double> zero{};
      const auto rep = conjugacy_report(k, kh, zero, zero, zero, zero);
      // A - I = K^-1 (Kh Kh^T - K K^T) K^-T, so each residual bounds the
      // other through the Frobenius norms of K^-1 / K.
      const double ki = inverse_matrix(k).frobenius_norm();
      const double kf = to_matrix(k).frobenius_norm();
      REQUIRE(rep.a_residual <= ki * ki * rep.kkt_residual + 1e-9);
      REQUIRE(rep.kkt_residual <= kf * kf * rep.a_residual + 1e-9);
      REQUIRE((rep.a_residual < 1e-12) == (rep.kkt_residual < 1e-12 * kf * kf));
    }
  }
}

TEST_CASE("focal tolerance bound") {
  const Intrinsics<double> k{300, 300, 256, 128};
  SECTION("direct evaluation") {
    const auto tol = focal_tolerance(k, 512, 256, 0.0, 0.05);
    REQUIRE(tol.delta_fx == Catch::Approx(2.0 * 300 * 300 / (512.0 * 512.0 * 0.05)).epsilon(1e-12));
    REQUIRE(tol.delta_fx == Catch::Approx(13.7329).epsilon(1e-4));
    REQUIRE(tol.fy_unbounded());
  }
  SECTION("zero rotation leaves the focal unbounded") {
    const auto tol = focal_tolerance(k, 512, 256, 0.0, 0.0);
    REQUIRE(tol.fx_unbounded());
    REQUIRE(tol.fy_unbounded());
  }
  SECTION("doubling the focal quadruples the tolerance") {
    const auto t1 = focal_tolerance(k, 512, 256, 0.02, 0.05);
    const Intrinsics<double> k2{600, 600, 256, 128};
    const auto t2 = focal_tolerance(k2, 512, 256, 0.02, 0.05);
    REQUIRE(t2.delta_fx == Catch::Approx(4.0 * t1.delta_fx).epsilon(1e-12));
    REQUIRE(t2.delta_fy == Catch::Approx(4.0 * t1.delta_fy).epsilon(1e-12));
  }
}

TEST_CASE("uniqueness of intrinsics under conjugacy") {
  const Intrinsics<double> k{300, 280, 250, 130};
  SECTION("identity rotation is not identifiable") {
    const auto rep = verify_uniqueness(k, {0, 0, 0}, 5, 1);
    REQUIRE(rep.status == UniquenessStatus::kNotIdentifiable);
  }
  SECTION("a generic skew-axis rotation pins the intrinsics") {
    const Vec3<double> axis{0.11, 0.14, 0.08};  // ~0.2 rad skew axis
    const auto rep = verify_uniqueness(k, axis, 20, 2);
    INFO("converged " << rep.converged_trials << "/" << rep.trials << " worst gap "
                      << rep.worst_k_gap);
    REQUIRE(rep.status == UniquenessStatus::kPass);
    REQUIRE(rep.converged_trials > 0);
  }
  SECTION("rotation purely about x leaves fx free but pins fy") {
    const auto rep = verify_uniqueness(k, {0.2, 0, 0}, 20, 3);
    INFO("converged " << rep.converged_trials << " gap_fx " << rep.gap_fx << " gap_fy "
                      << rep.gap_fy);
    REQUIRE(rep.converged_trials > 0);
    REQUIRE(rep.status == UniquenessStatus::kFail);  // the family exists
    REQUIRE(rep.gap_fx > 1.0);                       // fx wanders freely
    REQUIRE(rep.gap_fy < 1e-3);                      // fy is determined
  }
}
