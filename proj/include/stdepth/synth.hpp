#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "stdepth/core.hpp"
#include "stdepth/geometry.hpp"
#include "stdepth/rng.hpp"

namespace stdepth::synth {

// Band-limited procedural texture: a sum of 3D sinusoids evaluated at the
// surface point. Smooth everywhere, so bilinear resampling error stays far
// below the photometric tolerances, and seamless across plane boundaries
// when planes share a spec.
struct TextureSpec {
  int components = 6;
  double base = 0.55;
  double amplitude = 0.35;  // total swing, split across components
  double min_freq = 0.6;    // rad per meter
  double max_freq = 3.5;
  std::uint64_t seed = 1;
};

struct PlaneSpec {
  Vec3<double> normal;  // plane is {X : normal . X = offset}; need not be unit
  double offset = 0.0;
  TextureSpec texture;
};

struct SceneSpec {
  std::vector<PlaneSpec> planes;
  int width = 64;
  int height = 64;
  Intrinsics<double> intrinsics;
  double baseline = 0.3;
  PoseSE3<double> motion;  // coordinate transform from time t to t'
};

// Rendered quadruplet with exact ground truth.
struct Quadruplet {
  ImageQuadruplet images;
  Grid<double> gt_depth_l;
  Grid<double> gt_disp_l;
  Grid<double> gt_disp_r;
  PoseSE3<double> gt_pose;
  Intrinsics<double> gt_intrinsics;
  double baseline = 0.0;
};

class TextureField {
 public:
  explicit TextureField(const TextureSpec& spec) : base_(spec.base) {
    require(spec.components > 0, "texture: components must be positive");
    require(spec.base - spec.amplitude >= 0.0 && spec.base + spec.amplitude <= 1.0,
            "texture: base +/- amplitude must stay within [0,1]");
    std::mt19937_64 rng(mix_seed(spec.seed, 0x7e));
    const double amp = spec.amplitude / spec.components;
    waves_.reserve(spec.components);
    for (int i = 0; i < spec.components; ++i) {
      // Random direction by normalized cube sample; rejection keeps it
      // away from the degenerate zero vector.
      Vec3<double> dir;
      double n2 = 0.0;
      do {
        dir = {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
        n2 = dir.squared_norm();
      } while (n2 < 1e-4);
      const double freq = uniform(rng, spec.min_freq, spec.max_freq);
      const double scale = freq / std::sqrt(n2);
      waves_.push_back({dir * scale, uniform(rng, 0.0, 2.0 * 3.14159265358979323846), amp});
    }
  }

  double operator()(const Vec3<double>& x) const {
    double v = base_;
    for (const auto& w : waves_) v += w.amp * std::sin(w.k.dot(x) + w.phase);
    return v;
  }

 private:
  struct Wave {
    Vec3<double> k;
    double phase;
    double amp;
  };
  double base_;
  std::vector<Wave> waves_;
};

// Ray-cast every pixel against the scene's planes from a camera at `pose`
// (world-to-camera coordinate transform). Depth is analytic; the image is
// the texture of the nearest hit plane.
inline std::pair<Grid<double>, Grid<double>> render_view(const SceneSpec& spec,
                                                         const PoseSE3<double>& pose) {
  require(!spec.planes.empty(), "render_view: scene has no planes");
  check_intrinsics(spec.intrinsics);
  const Mat3<double> R = rotation_matrix(pose.rot);
  const Mat3<double> Rt = R.transpose();
  const Vec3<double> origin = -(Rt * pose.trans);  // camera center in world coordinates

  std::vector<TextureField> fields;
  fields.reserve(spec.planes.size());
  for (const auto& pl : spec.planes) fields.emplace_back(pl.texture);

  const auto& k = spec.intrinsics;
  Grid<double> image(spec.height, spec.width);
  Grid<double> depth(spec.height, spec.width);
  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      const Vec3<double> dir_cam{(u - k.x0) / k.fx, (v - k.y0) / k.fy, 1.0};
      const Vec3<double> dir = Rt * dir_cam;
      double best = std::numeric_limits<double>::infinity();
      int hit = -1;
      for (std::size_t i = 0; i < spec.planes.size(); ++i) {
        const auto& pl = spec.planes[i];
        const double denom = pl.normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double lambda = (pl.offset - pl.normal.dot(origin)) / denom;
        if (lambda > 1e-9 && lambda < best) {
          best = lambda;
          hit = static_cast<int>(i);
        }
      }
      if (hit < 0) throw NumericError("render_view: ray does not intersect the scene");
      // dir_cam has unit z, so the ray parameter is the camera-frame depth.
      depth.at(v, u) = best;
      image.at(v, u) = fields[hit](origin + dir * best);
    }
  }
  return {std::move(image), std::move(depth)};
}

// Render the stereo pair at t and at t'. The second stereo camera is
// related to the first by the coordinate transform X -> X + (baseline,0,0),
// which makes disparities nonnegative and left pixels match the other view
// at u + d.
inline Quadruplet make_quadruplet(const SceneSpec& spec) {
  require(spec.baseline > 0.0, "make_quadruplet: baseline must be positive");
  PoseSE3<double> stereo;
  stereo.trans = {spec.baseline, 0.0, 0.0};
  const PoseSE3<double> identity;

  Quadruplet q;
  auto [left_t, depth_l] = render_view(spec, identity);
  auto [right_t, depth_r] = render_view(spec, stereo);
  auto [left_tp, depth_lp] = render_view(spec, spec.motion);
  auto [right_tp, depth_rp] = render_view(spec, pose_compose(stereo, spec.motion));
  q.images = {std::move(left_t), std::move(right_t), std::move(left_tp), std::move(right_tp)};
  q.gt_depth_l = std::move(depth_l);
  q.gt_disp_l = Grid<double>(spec.height, spec.width);
  q.gt_disp_r = Grid<double>(spec.height, spec.width);
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      q.gt_disp_l.at(v, u) = depth_to_disparity(q.gt_depth_l.at(v, u), spec.baseline,
                                                spec.intrinsics.fx);
      q.gt_disp_r.at(v, u) = depth_to_disparity(depth_r.at(v, u), spec.baseline,
                                                spec.intrinsics.fx);
    }
  q.gt_pose = spec.motion;
  q.gt_intrinsics = spec.intrinsics;
  q.baseline = spec.baseline;
  return q;
}

inline std::vector<std::string> preset_names() {
  return {"plane", "slanted", "two-planes", "corridor"};
}

// Named scene presets. Intrinsics default to fx = fy = 0.8 * width with the
// principal point at the image center; textures derive from `seed`.
inline SceneSpec preset(std::string_view name, int width = 64, int height = 64,
                        std::uint64_t seed = 7) {
  require(width >= 8 && height >= 8, "preset: image too small");
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.intrinsics = {0.8 * width, 0.8 * width, width / 2.0, height / 2.0};
  spec.baseline = 0.3;
  spec.motion.trans = {0.04, 0.015, -0.25};
  spec.motion.rot = {0.005, 0.012, 0.003};

  TextureSpec tex;
  tex.seed = seed;

  if (name == "plane") {
    spec.planes.push_back({{0.0, 0.0, 1.0}, 5.0, tex});
  } else if (name == "slanted") {
    // Tilted mostly about the vertical axis; ~6 m at the image center.
    const Vec3<double> n{0.35, 0.12, 1.0};
    spec.planes.push_back({n, 6.0 * n.z, tex});
  } else if (name == "two-planes") {
    const Vec3<double> n{0.5, 0.0, 1.0};
    spec.planes.push_back({{0.0, 0.0, 1.0}, 9.0, tex});
    spec.planes.push_back({n, 7.0 * n.z, tex});
  } else if (name == "corridor") {
    // Four tilted planes (floor, ceiling, two walls) forming a closed
    // corridor; the tilt keeps every ray intersecting at finite depth.
    const double tilt = 0.18;
    spec.planes.push_back({{0.0, 1.0, tilt}, 1.5, tex});   // floor
    spec.planes.push_back({{0.0, -1.0, tilt}, 1.5, tex});  // ceiling
    spec.planes.push_back({{-1.0, 0.0, tilt}, 2.0, tex});  // left wall
    spec.planes.push_back({{1.0, 0.0, tilt}, 2.0, tex});   // right wall
  } else {
    throw ConfigError("unknown scene preset: " + std::string(name));
  }
  return spec;
}

}  // namespace stdepth::synth
