#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "stdepth/core.hpp"

namespace stdepth {

template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  Vec3() = default;
  Vec3(T x_, T y_, T z_) : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(const T& s) const { return {x * s, y * s, z * s}; }

  T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  T squared_norm() const { return dot(*this); }
  T norm() const {
    using std::sqrt;
    return sqrt(squared_norm());
  }
};

template <class T>
struct Mat3 {
  // Row-major.
  T m[3][3] = {{T(1), T(0), T(0)}, {T(0), T(1), T(0)}, {T(0), T(0), T(1)}};

  static Mat3 identity() { return Mat3{}; }
  static Mat3 zero() {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = T(0);
    return r;
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r = zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    return r;
  }

  Vec3<T> operator*(const Vec3<T>& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }

  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
    return r;
  }

  Mat3 transpose() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }

  T frobenius_norm() const {
    using std::sqrt;
    T s(0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += m[i][j] * m[i][j];
    return sqrt(s);
  }

  T trace() const { return m[0][0] + m[1][1] + m[2][2]; }
};

// Pinhole parameters in pixels; zero skew, no lens distortion.
template <class T>
struct Intrinsics {
  T fx{}, fy{}, x0{}, y0{};

  Intrinsics() = default;
  Intrinsics(T fx_, T fy_, T x0_, T y0_)
      : fx(std::move(fx_)), fy(std::move(fy_)), x0(std::move(x0_)), y0(std::move(y0_)) {}
};

// Rigid transform acting on point coordinates: X' = R(rot) * X + trans.
// rot is an axis-angle vector in radians.
template <class T>
struct PoseSE3 {
  Vec3<T> rot{T(0), T(0), T(0)};
  Vec3<T> trans{T(0), T(0), T(0)};
};

// Continuous pixel coordinates: u along columns (left to right), v along
// rows (top down).
template <class T>
struct Pixel {
  T u{}, v{};
};

template <class T>
void check_intrinsics(const Intrinsics<T>& k) {
  if (!(scalar_value(k.fx) > 0.0) || !(scalar_value(k.fy) > 0.0))
    throw ConfigError("invalid intrinsics: focal lengths must be positive");
}

template <class T>
Mat3<T> to_matrix(const Intrinsics<T>& k) {
  check_intrinsics(k);
  Mat3<T> K = Mat3<T>::zero();
  K.m[0][0] = k.fx;
  K.m[0][2] = k.x0;
  K.m[1][1] = k.fy;
  K.m[1][2] = k.y0;
  K.m[2][2] = T(1);
  return K;
}

template <class T>
Mat3<T> inverse_matrix(const Intrinsics<T>& k) {
  check_intrinsics(k);
  Mat3<T> Ki = Mat3<T>::zero();
  Ki.m[0][0] = T(1) / k.fx;
  Ki.m[0][2] = -k.x0 / k.fx;
  Ki.m[1][1] = T(1) / k.fy;
  Ki.m[1][2] = -k.y0 / k.fy;
  Ki.m[2][2] = T(1);
  return Ki;
}

// Back-project a pixel at depth z to a camera-frame point.
template <class T>
Vec3<T> unproject(const Pixel<T>& p, const T& z, const Intrinsics<T>& k) {
  if (!(scalar_value(z) > 0.0)) throw NumericError("unproject: depth must be positive");
  return {(p.u - k.x0) / k.fx * z, (p.v - k.y0) / k.fy * z, z};
}

// Project a camera-frame point; returns the pixel and its depth (the
// point's z component).
template <class T>
std::pair<Pixel<T>, T> project(const Vec3<T>& x, const Intrinsics<T>& k) {
  if (!(scalar_value(x.z) > 0.0)) throw NumericError("project: point behind camera");
  return {Pixel<T>{k.fx * x.x / x.z + k.x0, k.fy * x.y / x.z + k.y0}, x.z};
}

// Rotation matrix from an axis-angle vector (Rodrigues). Below a small
// angle the sin/cos coefficients switch to their series in theta^2, which
// keeps the expression smooth through rot = 0.
template <class T>
Mat3<T> rotation_matrix(const Vec3<T>& rot) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T theta2 = rot.squared_norm();
  T a, b;  // a = sin(t)/t, b = (1 - cos(t))/t^2
  if (scalar_value(theta2) < 1e-6) {
    a = T(1) - theta2 / T(6) + theta2 * theta2 / T(120);
    b = T(0.5) - theta2 / T(24) + theta2 * theta2 / T(720);
  } else {
    const T theta = sqrt(theta2);
    a = sin(theta) / theta;
    b = (T(1) - cos(theta)) / theta2;
  }
  const T &wx = rot.x, &wy = rot.y, &wz = rot.z;
  Mat3<T> R;
  R.m[0][0] = T(1) - b * (wy * wy + wz * wz);
  R.m[0][1] = b * wx * wy - a * wz;
  R.m[0][2] = b * wx * wz + a * wy;
  R.m[1][0] = b * wx * wy + a * wz;
  R.m[1][1] = T(1) - b * (wx * wx + wz * wz);
  R.m[1][2] = b * wy * wz - a * wx;
  R.m[2][0] = b * wx * wz - a * wy;
  R.m[2][1] = b * wy * wz + a * wx;
  R.m[2][2] = T(1) - b * (wx * wx + wy * wy);
  return R;
}

// Axis-angle vector of a rotation matrix (log map). Double-only: used for
// pose chaining and trajectory metrics, not on the differentiation path.
inline Vec3<double> rotation_log(const Mat3<double>& R) {
  const double cos_theta = std::min(1.0, std::max(-1.0, (R.trace() - 1.0) * 0.5));
  const double theta = std::acos(cos_theta);
  const Vec3<double> skew{R.m[2][1] - R.m[1][2], R.m[0][2] - R.m[2][0], R.m[1][0] - R.m[0][1]};
  if (theta < 1e-7) {
    return skew * 0.5;  // R ~ I + [w]x
  }
  if (theta > std::numbers::pi - 1e-5) {
    // Near pi the skew part vanishes; recover the axis from the diagonal.
    Vec3<double> axis;
    const double bxx = (R.m[0][0] + 1.0) * 0.5;
    const double byy = (R.m[1][1] + 1.0) * 0.5;
    const double bzz = (R.m[2][2] + 1.0) * 0.5;
    if (bxx >= byy && bxx >= bzz) {
      const double x = std::sqrt(std::max(0.0, bxx));
      axis = {x, (R.m[0][1] + R.m[1][0]) * 0.25 / x, (R.m[0][2] + R.m[2][0]) * 0.25 / x};
    } else if (byy >= bzz) {
      const double y = std::sqrt(std::max(0.0, byy));
      axis = {(R.m[0][1] + R.m[1][0]) * 0.25 / y, y, (R.m[1][2] + R.m[2][1]) * 0.25 / y};
    } else {
      const double z = std::sqrt(std::max(0.0, bzz));
      axis = {(R.m[0][2] + R.m[2][0]) * 0.25 / z, (R.m[1][2] + R.m[2][1]) * 0.25 / z, z};
    }
    // Fix the axis sign from the skew part (zero only at exactly pi).
    if (axis.dot(skew) < 0.0) axis = -axis;
    const double n = axis.norm();
    return axis * (theta / n);
  }
  return skew * (theta / (2.0 * std::sin(theta)));
}

// Rotation angle of an axis-angle vector, in radians.
inline double rotation_angle(const Vec3<double>& rot) { return rot.norm(); }

// Warp a pixel with known depth into an adjacent view. pose carries the
// coordinate transform from the pixel's frame to the target frame. A
// non-positive returned depth means the point landed behind the camera;
// the caller masks it out rather than failing.
template <class T>
std::pair<Pixel<T>, T> warp_temporal(const Pixel<T>& p, const T& z, const Intrinsics<T>& k,
                                     const PoseSE3<T>& pose) {
  const Vec3<T> x = unproject(p, z, k);
  const Mat3<T> R = rotation_matrix(pose.rot);
  const Vec3<T> xw = R * x + pose.trans;
  if (scalar_value(xw.z) == 0.0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {Pixel<T>{T(nan), T(nan)}, xw.z};
  }
  return {Pixel<T>{k.fx * xw.x / xw.z + k.x0, k.fy * xw.y / xw.z + k.y0}, xw.z};
}

// z * d = baseline * fx for rectified stereo.
template <class T>
T disparity_to_depth(const T& d, double baseline, const T& fx) {
  if (!(scalar_value(d) > 0.0)) throw NumericError("disparity_to_depth: disparity must be positive");
  require(baseline > 0.0, "disparity_to_depth: baseline must be positive");
  return fx * T(baseline) / d;
}

template <class T>
T depth_to_disparity(const T& z, double baseline, const T& fx) {
  if (!(scalar_value(z) > 0.0)) throw NumericError("depth_to_disparity: depth must be positive");
  require(baseline > 0.0, "depth_to_disparity: baseline must be positive");
  return fx * T(baseline) / z;
}

// compose(a, b) applies b first: X -> a(b(X)). Matches the product of the
// corresponding 4x4 homogeneous matrices.
inline PoseSE3<double> pose_compose(const PoseSE3<double>& a, const PoseSE3<double>& b) {
  const Mat3<double> Ra = rotation_matrix(a.rot);
  const Mat3<double> Rb = rotation_matrix(b.rot);
  PoseSE3<double> r;
  r.rot = rotation_log(Ra * Rb);
  r.trans = Ra * b.trans + a.trans;
  return r;
}

inline PoseSE3<double> pose_inverse(const PoseSE3<double>& a) {
  const Mat3<double> Rt = rotation_matrix(a.rot).transpose();
  PoseSE3<double> r;
  r.rot = rotation_log(Rt);
  r.trans = -(Rt * a.trans);
  return r;
}

}  // namespace stdepth
