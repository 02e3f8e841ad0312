#pragma once

#include <cmath>
#include <utility>

#include "stdepth/core.hpp"
#include "stdepth/geometry.hpp"

namespace stdepth {

// A reconstructed view plus its validity mask. Invalid pixels hold 0 and
// must not enter any loss.
template <class T>
struct WarpedImage {
  Grid<T> image;
  Mask mask;
};

enum class StereoDirection { kLeftFromRight, kRightFromLeft };

namespace detail {

// A sample is valid when the continuous coordinate lies within the source
// raster. The interpolation anchor is clamped to width-2 so that integer
// coordinates (including the last row/column) reproduce source pixels
// exactly with weights 0 and 1.
inline bool sample_anchor(double coord, int extent, int* anchor) {
  if (!(coord >= 0.0) || !(coord <= extent - 1.0)) return false;
  int a = static_cast<int>(std::floor(coord));
  if (a > extent - 2) a = extent - 2;
  if (a < 0) a = 0;  // extent == 1
  *anchor = a;
  return true;
}

template <class T>
struct BilinearTap {
  bool valid = false;
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  T wu{}, wv{};  // fractional offsets from (u0, v0)
};

template <class T>
BilinearTap<T> make_tap(const T& u, const T& v, int width, int height) {
  BilinearTap<T> tap;
  const double uv = scalar_value(u);
  const double vv = scalar_value(v);
  if (!std::isfinite(uv) || !std::isfinite(vv)) return tap;
  int u0 = 0, v0 = 0;
  if (!sample_anchor(uv, width, &u0) || !sample_anchor(vv, height, &v0)) return tap;
  tap.valid = true;
  tap.u0 = u0;
  tap.v0 = v0;
  tap.u1 = width > 1 ? u0 + 1 : u0;
  tap.v1 = height > 1 ? v0 + 1 : v0;
  tap.wu = u - T(static_cast<double>(u0));
  tap.wv = v - T(static_cast<double>(v0));
  return tap;
}

template <class T>
T sample_channel(const Grid<T>& src, const BilinearTap<T>& tap, int c) {
  const T one(1);
  const T& i00 = src.at(tap.v0, tap.u0, c);
  const T& i01 = src.at(tap.v0, tap.u1, c);
  const T& i10 = src.at(tap.v1, tap.u0, c);
  const T& i11 = src.at(tap.v1, tap.u1, c);
  const T top = (one - tap.wu) * i00 + tap.wu * i01;
  const T bottom = (one - tap.wu) * i10 + tap.wu * i11;
  return (one - tap.wv) * top + tap.wv * bottom;
}

}  // namespace detail

// Sample src at per-pixel continuous coordinates. Output shape follows
// coords; out-of-bounds samples are masked out, never clamped.
template <class T>
WarpedImage<T> bilinear_sample(const Grid<T>& src, const Grid<Pixel<T>>& coords) {
  require(coords.channels() == 1, "bilinear_sample: coords must be single-channel");
  WarpedImage<T> out{Grid<T>(coords.height(), coords.width(), src.channels()),
                     Mask(coords.height(), coords.width(), 1, 0)};
  for (int v = 0; v < coords.height(); ++v) {
    for (int u = 0; u < coords.width(); ++u) {
      const Pixel<T>& p = coords.at(v, u);
      const auto tap = detail::make_tap<T>(p.u, p.v, src.width(), src.height());
      if (!tap.valid) continue;
      out.mask.at(v, u) = 1;
      for (int c = 0; c < src.channels(); ++c)
        out.image.at(v, u, c) = detail::sample_channel(src, tap, c);
    }
  }
  return out;
}

// Reconstruct one stereo view from the other through a disparity map:
// left-from-right samples the source at u + d(u,v), right-from-left at
// u - d(u,v).
template <class T>
WarpedImage<T> warp_stereo(const Grid<T>& src, const Grid<T>& disp, StereoDirection direction) {
  require(disp.channels() == 1, "warp_stereo: disparity must be single-channel");
  require(src.height() == disp.height() && src.width() == disp.width(),
          "warp_stereo: image/disparity shape mismatch");
  const double sign = direction == StereoDirection::kLeftFromRight ? 1.0 : -1.0;
  WarpedImage<T> out{Grid<T>(disp.height(), disp.width(), src.channels()),
                     Mask(disp.height(), disp.width(), 1, 0)};
  for (int v = 0; v < disp.height(); ++v) {
    for (int u = 0; u < disp.width(); ++u) {
      const T su = T(static_cast<double>(u)) + T(sign) * disp.at(v, u);
      const T sv(static_cast<double>(v));
      const auto tap = detail::make_tap<T>(su, sv, src.width(), src.height());
      if (!tap.valid) continue;
      out.mask.at(v, u) = 1;
      for (int c = 0; c < src.channels(); ++c)
        out.image.at(v, u, c) = detail::sample_channel(src, tap, c);
    }
  }
  return out;
}

// Reconstruct the view at time t from a temporally adjacent source frame.
// depth is the per-pixel depth in the target frame; pose transforms target
// frame coordinates into the source frame. Pixels that project behind the
// source camera or outside it are masked out.
template <class T>
WarpedImage<T> warp_temporal_image(const Grid<T>& src, const Grid<T>& depth,
                                   const Intrinsics<T>& k, const PoseSE3<T>& pose) {
  require(depth.channels() == 1, "warp_temporal_image: depth must be single-channel");
  const Mat3<T> R = rotation_matrix(pose.rot);
  WarpedImage<T> out{Grid<T>(depth.height(), depth.width(), src.channels()),
                     Mask(depth.height(), depth.width(), 1, 0)};
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const T& z = depth.at(v, u);
      if (!(scalar_value(z) > 0.0)) continue;
      const Vec3<T> x = unproject(Pixel<T>{T(static_cast<double>(u)), T(static_cast<double>(v))},
                                  z, k);
      const Vec3<T> xw = R * x + pose.trans;
      if (!(scalar_value(xw.z) > 0.0)) continue;  // behind the source camera
      const T su = k.fx * xw.x / xw.z + k.x0;
      const T sv = k.fy * xw.y / xw.z + k.y0;
      const auto tap = detail::make_tap<T>(su, sv, src.width(), src.height());
      if (!tap.valid) continue;
      out.mask.at(v, u) = 1;
      for (int c = 0; c < src.channels(); ++c)
        out.image.at(v, u, c) = detail::sample_channel(src, tap, c);
    }
  }
  return out;
}

}  // namespace stdepth
