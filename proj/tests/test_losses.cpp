#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "stdepth/losses.hpp"
#include "stdepth/rng.hpp"

using namespace stdepth;

namespace {

Grid<double> random_image(int h, int w, std::uint64_t seed, int channels = 1) {
  std::mt19937_64 rng(mix_seed(seed, 1));
  Grid<double> img(h, w, channels);
  for (auto& x : img) x = uniform(rng, 0.0, 1.0);
  return img;
}

WarpedImage<double> full_mask(Grid<double> img) {
  Mask m(img.height(), img.width(), 1, 1);
  return {std::move(img), std::move(m)};
}

// Closed-form SSIM of two constant images: variances and covariance vanish,
// leaving (2 a b + C1) C2 / ((a^2 + b^2 + C1) C2).
double constant_ssim(double a, double b) {
  const double c1 = 1e-4;
  return (2 * a * b + c1) / (a * a + b * b + c1);
}

}  // namespace

TEST_CASE("ssim map") {
  SECTION("self-similarity is one everywhere") {
    const Grid<double> a = random_image(9, 13, 3);
    const Grid<double> map = ssim_map(a, a);
    for (const double s : map) REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("constant images match the closed form") {
    const Grid<double> a(6, 6, 1, 0.2), b(6, 6, 1, 0.8);
    const Grid<double> map = ssim_map(a, b);
    const double expected = constant_ssim(0.2, 0.8);
    for (const double s : map) REQUIRE(s == Catch::Approx(expected).epsilon(1e-12));
  }
  SECTION("values stay within [-1, 1]") {
    const Grid<double> a = random_image(12, 12, 4);
    Grid<double> b(12, 12);
    for (int i = 0; i < 144; ++i) b.data()[i] = 1.0 - a.data()[i];
    for (const double s : ssim_map(a, b)) {
      REQUIRE(s >= -1.0);
      REQUIRE(s <= 1.0);
    }
  }
  SECTION("shape mismatch is rejected") {
    REQUIRE_THROWS_AS(ssim_map(Grid<double>(3, 3), Grid<double>(3, 4)), ConfigError);
  }
}

TEST_CASE("photoconsistency loss") {
  SECTION("perfect reconstruction scores zero") {
    const Grid<double> img = random_image(8, 8, 5);
    REQUIRE(photoconsistency_loss(img, full_mask(img), 0.85) ==
            Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("pure L1 on opposite constants") {
    const Grid<double> zero(8, 8, 1, 0.0);
    const Grid<double> one(8, 8, 1, 1.0);
    REQUIRE(photoconsistency_loss(zero, full_mask(one), 0.0) ==
            Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("pure SSIM on opposite constants") {
    const Grid<double> zero(8, 8, 1, 0.0);
    const Grid<double> one(8, 8, 1, 1.0);
    const double expected = (1.0 - constant_ssim(0.0, 1.0)) / 2.0;
    REQUIRE(photoconsistency_loss(zero, full_mask(one), 1.0) ==
            Catch::Approx(expected).epsilon(1e-12));
  }
  SECTION("masked pixels do not participate") {
    const Grid<double> img = random_image(6, 6, 6);
    Grid<double> recon = img;
    Mask mask(6, 6, 1, 1);
    // Corrupt one pixel and mask it out; the loss must stay zero.
    recon.at(2, 3) = 5.0;
    mask.at(2, 3) = 0;
    const double loss = photoconsistency_loss(img, WarpedImage<double>{recon, mask}, 0.0);
    REQUIRE(loss == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("empty mask raises a numeric error") {
    const Grid<double> img = random_image(4, 4, 7);
    REQUIRE_THROWS_AS(
        photoconsistency_loss(img, WarpedImage<double>{img, Mask(4, 4, 1, 0)}, 0.85),
        NumericError);
  }
  SECTION("temporal loss shares the functional form") {
    const Grid<double> a = random_image(7, 7, 8);
    const auto recon = full_mask(random_image(7, 7, 9));
    REQUIRE(temporal_loss(a, recon, 0.85) == photoconsistency_loss(a, recon, 0.85));
  }
}

TEST_CASE("left-right consistency loss") {
  SECTION("zero disparities agree") {
    const Grid<double> d(8, 8, 1, 0.0);
    REQUIRE(lr_consistency_loss(d, d) == 0.0);
  }
  SECTION("equal constant disparities agree wherever sampled") {
    const Grid<double> d(8, 8, 1, 2.5);
    REQUIRE(lr_consistency_loss(d, d) == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("hand-evaluated constant mismatch") {
    const Grid<double> dl(4, 8, 1, 2.0);
    const Grid<double> dr(4, 8, 1, 0.0);
    REQUIRE(lr_consistency_loss(dl, dr) == Catch::Approx(2.0).margin(1e-12));
  }
}

TEST_CASE("smoothness loss") {
  SECTION("constant disparity is perfectly smooth") {
    const Grid<double> d(8, 8, 1, 3.0);
    REQUIRE(smoothness_loss(d, random_image(8, 8, 10)) == 0.0);
  }
  SECTION("unit ramp against a constant image") {
    Grid<double> d(8, 8);
    for (int v = 0; v < 8; ++v)
      for (int u = 0; u < 8; ++u) d.at(v, u) = static_cast<double>(u);
    const Grid<double> img(8, 8, 1, 0.5);
    REQUIRE(smoothness_loss(d, img) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("image gradients attenuate the penalty exponentially") {
    const int n = 8;
    Grid<double> d(n, n), img(n, n);
    const double g = 3.0;
    for (int v = 0; v < n; ++v)
      for (int u = 0; u < n; ++u) {
        d.at(v, u) = static_cast<double>(u);
        img.at(v, u) = g * u;
      }
    REQUIRE(smoothness_loss(d, img) == Catch::Approx(std::exp(-g)).epsilon(1e-12));
  }
}

TEST_CASE("total loss assembly") {
  const int h = 10, w = 12;
  ImageQuadruplet images{random_image(h, w, 20), random_image(h, w, 21),
                         random_image(h, w, 22), random_image(h, w, 23)};
  SceneVariables<double> vars;
  std::mt19937_64 rng(mix_seed(30, 0));
  vars.disp_l = Grid<double>(h, w);
  vars.disp_r = Grid<double>(h, w);
  for (auto& d : vars.disp_l) d = uniform(rng, 0.5, 3.0);
  for (auto& d : vars.disp_r) d = uniform(rng, 0.5, 3.0);
  vars.pose.rot = {0.01, -0.02, 0.004};
  vars.pose.trans = {0.05, 0.01, -0.2};
  vars.intr = {0.8 * w, 0.8 * w, w / 2.0, h / 2.0};

  SECTION("all-zero weights give a zero total") {
    LossWeights zero{0, 0, 0, 0, 0.85};
    const auto b = total_loss(images, vars, 0.3, zero);
    REQUIRE(b.total == 0.0);
  }
  SECTION("total equals the weighted sum of its components") {
    for (int trial = 0; trial < 5; ++trial) {
      LossWeights wts{uniform(rng, 0, 2), uniform(rng, 0, 2), uniform(rng, 0, 2),
                      uniform(rng, 0, 2), 0.85};
      const auto b = total_loss(images, vars, 0.3, wts);
      const double expected = wts.lambda_p * (b.photo_left + b.photo_right) +
                              wts.lambda_te * b.temporal + wts.lambda_lr * b.lr_consistency +
                              wts.lambda_r * (b.smooth_left + b.smooth_right);
      REQUIRE(std::abs(b.total - expected) <= 1e-12);
      REQUIRE(b.total >= 0.0);
    }
  }
  SECTION("components are individually nonnegative") {
    const auto b = total_loss(images, vars, 0.3, LossWeights{});
    for (double c : {b.photo_left, b.photo_right, b.temporal, b.lr_consistency, b.smooth_left,
                     b.smooth_right})
      REQUIRE(c >= 0.0);
  }
  SECTION("invalid weights are rejected") {
    LossWeights bad;
    bad.alpha = 1.5;
    REQUIRE_THROWS_AS(total_loss(images, vars, 0.3, bad), ConfigError);
    LossWeights neg;
    neg.lambda_p = -1;
    REQUIRE_THROWS_AS(total_loss(images, vars, 0.3, neg), ConfigError);
  }
}

TEST_CASE("color images average over channels") {
  const int h = 8, w = 8;
  const Grid<double> a = random_image(h, w, 40, 3);
  SECTION("ssim of identical color images is one") {
    for (const double s : ssim_map(a, a)) REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("L1 term averages the channel differences") {
    Grid<double> b = a;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) b.at(v, u, 0) += 0.3;  // shift one channel only
    const double loss = photoconsistency_loss(a, full_mask(b), 0.0);
    REQUIRE(loss == Catch::Approx(0.1).margin(1e-12));
  }
}
