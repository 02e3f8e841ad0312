#pragma once

#include <cmath>
#include <cstddef>

#include "stdepth/core.hpp"
#include "stdepth/geometry.hpp"
#include "stdepth/sampler.hpp"

namespace stdepth {

struct LossWeights {
  double lambda_p = 1.0;    // stereo photoconsistency
  double lambda_te = 1.0;   // temporal reconstruction
  double lambda_lr = 1.0;   // left-right disparity consistency
  double lambda_r = 0.1;    // disparity smoothness
  double alpha = 0.85;      // SSIM share inside the photometric term
};

inline void check_weights(const LossWeights& w) {
  require(w.lambda_p >= 0 && w.lambda_te >= 0 && w.lambda_lr >= 0 && w.lambda_r >= 0,
          "loss weights must be nonnegative");
  require(w.alpha >= 0.0 && w.alpha <= 1.0, "alpha must lie in [0,1]");
}

template <class T>
struct LossBreakdown {
  T total{};
  T photo_left{};
  T photo_right{};
  T temporal{};
  T lr_consistency{};
  T smooth_left{};
  T smooth_right{};
};

template <class T>
LossBreakdown<double> breakdown_values(const LossBreakdown<T>& b) {
  return {scalar_value(b.total),        scalar_value(b.photo_left),
          scalar_value(b.photo_right),  scalar_value(b.temporal),
          scalar_value(b.lr_consistency), scalar_value(b.smooth_left),
          scalar_value(b.smooth_right)};
}

// Free variables of the reconstruction objective. Disparities are in
// pixels; pose maps time-t coordinates into the adjacent frame.
template <class T>
struct SceneVariables {
  Grid<T> disp_l;
  Grid<T> disp_r;
  PoseSE3<T> pose;
  Intrinsics<T> intr;
};

namespace detail {

// 3x3 box sums restricted to valid pixels, plus the per-window valid count.
// Separable two-pass implementation; summation order is fixed so results
// are reproducible.
template <class T>
Grid<T> box_sum3(const Grid<T>& src) {
  const int h = src.height(), w = src.width();
  Grid<T> row(h, w), out(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      T s = src.at(v, u);
      if (u > 0) s += src.at(v, u - 1);
      if (u + 1 < w) s += src.at(v, u + 1);
      row.at(v, u) = s;
    }
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      T s = row.at(v, u);
      if (v > 0) s += row.at(v - 1, u);
      if (v + 1 < h) s += row.at(v + 1, u);
      out.at(v, u) = s;
    }
  return out;
}

inline Grid<double> box_count3(const Mask& mask) {
  Grid<double> m(mask.height(), mask.width());
  for (int v = 0; v < mask.height(); ++v)
    for (int u = 0; u < mask.width(); ++u) m.at(v, u) = mask.at(v, u) ? 1.0 : 0.0;
  return box_sum3(m);
}

constexpr double kSsimC1 = 0.01 * 0.01;  // on [0,1] intensities
constexpr double kSsimC2 = 0.03 * 0.03;

}  // namespace detail

// Per-pixel SSIM over a 3x3 window, averaged across channels. Windows use
// only valid in-bounds pixels; values at invalid centers are meaningless
// and must be ignored by the caller (they are never summed into losses).
template <class T>
Grid<T> ssim_map(const Grid<T>& a, const Grid<T>& b, const Mask* mask = nullptr) {
  require(a.same_shape(b), "ssim: shape mismatch");
  const int h = a.height(), w = a.width(), ch = a.channels();
  if (mask)
    require(mask->height() == h && mask->width() == w, "ssim: mask shape mismatch");

  Mask full;
  if (!mask) {
    full = Mask(h, w, 1, 1);
    mask = &full;
  }
  const Grid<double> count = detail::box_count3(*mask);

  Grid<T> result(h, w, 1, T(0));
  Grid<T> am(h, w), bm(h, w), a2(h, w), b2(h, w), ab(h, w);
  for (int c = 0; c < ch; ++c) {
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (mask->at(v, u)) {
          const T& av = a.at(v, u, c);
          const T& bv = b.at(v, u, c);
          am.at(v, u) = av;
          bm.at(v, u) = bv;
          a2.at(v, u) = av * av;
          b2.at(v, u) = bv * bv;
          ab.at(v, u) = av * bv;
        } else {
          am.at(v, u) = T(0);
          bm.at(v, u) = T(0);
          a2.at(v, u) = T(0);
          b2.at(v, u) = T(0);
          ab.at(v, u) = T(0);
        }
      }
    const Grid<T> sa = detail::box_sum3(am);
    const Grid<T> sb = detail::box_sum3(bm);
    const Grid<T> sa2 = detail::box_sum3(a2);
    const Grid<T> sb2 = detail::box_sum3(b2);
    const Grid<T> sab = detail::box_sum3(ab);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (!mask->at(v, u)) continue;
        const T n(count.at(v, u));
        const T mu_a = sa.at(v, u) / n;
        const T mu_b = sb.at(v, u) / n;
        const T var_a = sa2.at(v, u) / n - mu_a * mu_a;
        const T var_b = sb2.at(v, u) / n - mu_b * mu_b;
        const T cov = sab.at(v, u) / n - mu_a * mu_b;
        const T num = (T(2) * mu_a * mu_b + T(detail::kSsimC1)) *
                      (T(2) * cov + T(detail::kSsimC2));
        const T den = (mu_a * mu_a + mu_b * mu_b + T(detail::kSsimC1)) *
                      (var_a + var_b + T(detail::kSsimC2));
        result.at(v, u) += num / den;
      }
  }
  if (ch > 1) {
    const T inv_ch(1.0 / ch);
    for (auto& r : result) r = r * inv_ch;
  }
  return result;
}

// Photometric mismatch between a view and its reconstruction: a blend of
// the SSIM dissimilarity and the L1 intensity difference, averaged over
// the valid pixels of the reconstruction.
template <class T>
T photoconsistency_loss(const Grid<T>& target, const WarpedImage<T>& recon, double alpha) {
  require(target.same_shape(recon.image), "photoconsistency: shape mismatch");
  require(alpha >= 0.0 && alpha <= 1.0, "photoconsistency: alpha must lie in [0,1]");
  const std::size_t n = valid_count(recon.mask);
  if (n == 0) throw NumericError("photoconsistency: empty valid mask");

  const Grid<T> ssim = ssim_map(target, recon.image, &recon.mask);
  const int ch = target.channels();
  const T inv_ch(1.0 / ch);
  T sum(0);
  for (int v = 0; v < target.height(); ++v)
    for (int u = 0; u < target.width(); ++u) {
      if (!recon.mask.at(v, u)) continue;
      using std::abs;
      T l1(0);
      for (int c = 0; c < ch; ++c) l1 += abs(target.at(v, u, c) - recon.image.at(v, u, c));
      l1 = l1 * inv_ch;
      const T dssim = (T(1) - ssim.at(v, u)) * T(0.5);
      sum += T(alpha) * dssim + T(1.0 - alpha) * l1;
    }
  return sum / T(static_cast<double>(n));
}

// The temporal reconstruction term has the same photometric form; the
// caller supplies a reconstruction warped from the adjacent frame through
// depth, pose, and intrinsics.
template <class T>
T temporal_loss(const Grid<T>& target, const WarpedImage<T>& warped, double alpha) {
  return photoconsistency_loss(target, warped, alpha);
}

// Mutual consistency of the two disparity maps: each map is compared
// against the other sampled at the disparity-displaced position. Both
// directions share one normalization by the number of valid samples.
template <class T>
T lr_consistency_loss(const Grid<T>& disp_l, const Grid<T>& disp_r) {
  require(disp_l.same_shape(disp_r), "lr_consistency: shape mismatch");
  require(disp_l.channels() == 1, "lr_consistency: disparity must be single-channel");
  const int h = disp_l.height(), w = disp_l.width();
  using std::abs;
  T sum(0);
  std::size_t n = 0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const T su = T(static_cast<double>(u)) + disp_l.at(v, u);
      const auto tap = detail::make_tap<T>(su, T(static_cast<double>(v)), w, h);
      if (!tap.valid) continue;
      sum += abs(disp_l.at(v, u) - detail::sample_channel(disp_r, tap, 0));
      ++n;
    }
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const T su = T(static_cast<double>(u)) - disp_r.at(v, u);
      const auto tap = detail::make_tap<T>(su, T(static_cast<double>(v)), w, h);
      if (!tap.valid) continue;
      sum += abs(disp_r.at(v, u) - detail::sample_channel(disp_l, tap, 0));
      ++n;
    }
  if (n == 0) return T(0);
  return sum / T(static_cast<double>(n));
}

// Edge-aware disparity smoothness: forward differences of the disparity,
// downweighted where the image itself has gradients.
template <class T>
T smoothness_loss(const Grid<T>& disp, const Grid<T>& image) {
  require(disp.height() == image.height() && disp.width() == image.width(),
          "smoothness: shape mismatch");
  require(disp.channels() == 1, "smoothness: disparity must be single-channel");
  const int h = disp.height(), w = disp.width(), ch = image.channels();
  if (h < 2 || w < 2) return T(0);
  using std::abs;
  using std::exp;
  const T inv_ch(1.0 / ch);
  T sum(0);
  for (int v = 0; v + 1 < h; ++v)
    for (int u = 0; u + 1 < w; ++u) {
      T gx_i(0), gy_i(0);
      for (int c = 0; c < ch; ++c) {
        gx_i += abs(image.at(v, u + 1, c) - image.at(v, u, c));
        gy_i += abs(image.at(v + 1, u, c) - image.at(v, u, c));
      }
      const T gx_d = abs(disp.at(v, u + 1) - disp.at(v, u));
      const T gy_d = abs(disp.at(v + 1, u) - disp.at(v, u));
      sum += gx_d * exp(-(gx_i * inv_ch)) + gy_d * exp(-(gy_i * inv_ch));
    }
  return sum / T(static_cast<double>(h - 1) * (w - 1));
}

// The full objective: stereo photoconsistency both ways, the temporal
// reconstruction of the left view (through depth = baseline * fx / d),
// left-right disparity consistency, and smoothness of both disparities.
template <class T>
LossBreakdown<T> total_loss(const ImageQuadruplet& images, const SceneVariables<T>& vars,
                            double baseline, const LossWeights& w) {
  check_weights(w);
  require(baseline > 0.0, "total_loss: baseline must be positive");
  check_intrinsics(vars.intr);

  const Grid<T> left = grid_cast<T>(images.left_t);
  const Grid<T> right = grid_cast<T>(images.right_t);
  const Grid<T> left_tp = grid_cast<T>(images.left_tp);

  LossBreakdown<T> out;
  const WarpedImage<T> left_hat = warp_stereo(right, vars.disp_l, StereoDirection::kLeftFromRight);
  out.photo_left = photoconsistency_loss(left, left_hat, w.alpha);
  const WarpedImage<T> right_hat = warp_stereo(left, vars.disp_r, StereoDirection::kRightFromLeft);
  out.photo_right = photoconsistency_loss(right, right_hat, w.alpha);

  // Depth for the temporal warp comes from the left disparity and the
  // co-estimated horizontal focal length. Non-positive disparities give a
  // non-positive depth and are masked by the warp.
  Grid<T> depth(vars.disp_l.height(), vars.disp_l.width());
  const T bf = vars.intr.fx * T(baseline);
  for (int v = 0; v < depth.height(); ++v)
    for (int u = 0; u < depth.width(); ++u) {
      const T& d = vars.disp_l.at(v, u);
      depth.at(v, u) = scalar_value(d) > 0.0 ? bf / d : T(0);
    }
  const WarpedImage<T> left_t_hat = warp_temporal_image(left_tp, depth, vars.intr, vars.pose);
  out.temporal = temporal_loss(left, left_t_hat, w.alpha);

  out.lr_consistency = lr_consistency_loss(vars.disp_l, vars.disp_r);
  out.smooth_left = smoothness_loss(vars.disp_l, left);
  out.smooth_right = smoothness_loss(vars.disp_r, right);

  out.total = T(w.lambda_p) * (out.photo_left + out.photo_right) +
              T(w.lambda_te) * out.temporal + T(w.lambda_lr) * out.lr_consistency +
              T(w.lambda_r) * (out.smooth_left + out.smooth_right);
  return out;
}

}  // namespace stdepth
