#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "stdepth/core.hpp"
#include "stdepth/io.hpp"
#include "stdepth/losses.hpp"
#include "stdepth/optim.hpp"

namespace stdepth {

// Complete description of a generation/optimization run. Serialized as
// flat `key = value` text; parsing then serializing is a fixed point, and
// a stored config re-run with its seed reproduces every output byte.
struct RunConfig {
  std::string scene = "slanted";
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;  // mandatory in files; no wall-clock seeding
  std::optional<double> baseline;
  std::optional<double> fx, fy, x0, y0;          // scene intrinsics overrides
  std::optional<Vec3<double>> motion_rot;        // scene motion overrides
  std::optional<Vec3<double>> motion_trans;
  LossWeights weights;
  OptimConfig optim;
  bool freeze_disp_l = false;
  bool freeze_disp_r = false;
  bool freeze_pose = false;
  bool freeze_intrinsics = false;
  std::string init_from = "default";  // "default" or "gt"
  double init_depth = 10.0;
  double init_logdisp_jitter = 0.0;
  double init_intrinsics_jitter = 0.0;
  std::optional<std::string> input_dir;  // read a generated quadruplet instead of rendering
  std::string out_dir = "out";
  bool export_png = true;
  double png_depth_scale = 256.0;  // PNG counts per meter of depth
  int threads = 1;
};

namespace detail {

inline std::string format_vec3(const Vec3<double>& v) {
  return format_double(v.x) + "," + format_double(v.y) + "," + format_double(v.z);
}

inline Vec3<double> parse_vec3(const std::string& s) {
  std::istringstream in(s);
  Vec3<double> v;
  char c1 = 0, c2 = 0;
  if (!(in >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',')
    throw ConfigError("expected three comma-separated numbers, got '" + s + "'");
  std::string rest;
  if (in >> rest) throw ConfigError("trailing characters in '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true/false, got '" + s + "'");
}

inline std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not an unsigned integer: '" + s + "'");
  }
}

inline int parse_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + s + "'");
  }
}

}  // namespace detail

inline std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream out;
  out << "scene = " << c.scene << "\n";
  out << "width = " << c.width << "\n";
  out << "height = " << c.height << "\n";
  out << "seed = " << c.seed << "\n";
  if (c.baseline) out << "baseline = " << format_double(*c.baseline) << "\n";
  if (c.fx) out << "fx = " << format_double(*c.fx) << "\n";
  if (c.fy) out << "fy = " << format_double(*c.fy) << "\n";
  if (c.x0) out << "x0 = " << format_double(*c.x0) << "\n";
  if (c.y0) out << "y0 = " << format_double(*c.y0) << "\n";
  if (c.motion_rot) out << "motion_rot = " << detail::format_vec3(*c.motion_rot) << "\n";
  if (c.motion_trans) out << "motion_trans = " << detail::format_vec3(*c.motion_trans) << "\n";
  out << "lambda_p = " << format_double(c.weights.lambda_p) << "\n";
  out << "lambda_te = " << format_double(c.weights.lambda_te) << "\n";
  out << "lambda_lr = " << format_double(c.weights.lambda_lr) << "\n";
  out << "lambda_r = " << format_double(c.weights.lambda_r) << "\n";
  out << "alpha = " << format_double(c.weights.alpha) << "\n";
  out << "lr = " << format_double(c.optim.lr) << "\n";
  out << "beta1 = " << format_double(c.optim.beta1) << "\n";
  out << "beta2 = " << format_double(c.optim.beta2) << "\n";
  out << "epsilon = " << format_double(c.optim.epsilon) << "\n";
  out << "steps = " << c.optim.steps << "\n";
  out << "lr_decay = " << format_double(c.optim.lr_decay) << "\n";
  out << "lr_decay_every = " << c.optim.lr_decay_every << "\n";
  out << "freeze_disp_l = " << (c.freeze_disp_l ? "true" : "false") << "\n";
  out << "freeze_disp_r = " << (c.freeze_disp_r ? "true" : "false") << "\n";
  out << "freeze_pose = " << (c.freeze_pose ? "true" : "false") << "\n";
  out << "freeze_intrinsics = " << (c.freeze_intrinsics ? "true" : "false") << "\n";
  out << "init_from = " << c.init_from << "\n";
  out << "init_depth = " << format_double(c.init_depth) << "\n";
  out << "init_logdisp_jitter = " << format_double(c.init_logdisp_jitter) << "\n";
  out << "init_intrinsics_jitter = " << format_double(c.init_intrinsics_jitter) << "\n";
  if (c.input_dir) out << "input_dir = " << *c.input_dir << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  out << "export_png = " << (c.export_png ? "true" : "false") << "\n";
  out << "png_depth_scale = " << format_double(c.png_depth_scale) << "\n";
  out << "threads = " << c.threads << "\n";
  return out.str();
}

inline RunConfig parse_run_config(const std::string& text) {
  auto kv = parse_key_values(text);
  RunConfig c;
  const auto take = [&kv](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("scene")) c.scene = *v;
  if (auto v = take("width")) c.width = detail::parse_int(*v);
  if (auto v = take("height")) c.height = detail::parse_int(*v);
  auto seed = take("seed");
  if (!seed) throw ConfigError("config: 'seed' is mandatory");
  c.seed = detail::parse_u64(*seed);
  if (auto v = take("baseline")) c.baseline = parse_double(*v);
  if (auto v = take("fx")) c.fx = parse_double(*v);
  if (auto v = take("fy")) c.fy = parse_double(*v);
  if (auto v = take("x0")) c.x0 = parse_double(*v);
  if (auto v = take("y0")) c.y0 = parse_double(*v);
  if (auto v = take("motion_rot")) c.motion_rot = detail::parse_vec3(*v);
  if (auto v = take("motion_trans")) c.motion_trans = detail::parse_vec3(*v);
  if (auto v = take("lambda_p")) c.weights.lambda_p = parse_double(*v);
  if (auto v = take("lambda_te")) c.weights.lambda_te = parse_double(*v);
  if (auto v = take("lambda_lr")) c.weights.lambda_lr = parse_double(*v);
  if (auto v = take("lambda_r")) c.weights.lambda_r = parse_double(*v);
  if (auto v = take("alpha")) c.weights.alpha = parse_double(*v);
  if (auto v = take("lr")) c.optim.lr = parse_double(*v);
  if (auto v = take("beta1")) c.optim.beta1 = parse_double(*v);
  if (auto v = take("beta2")) c.optim.beta2 = parse_double(*v);
  if (auto v = take("epsilon")) c.optim.epsilon = parse_double(*v);
  if (auto v = take("steps")) c.optim.steps = detail::parse_int(*v);
  if (auto v = take("lr_decay")) c.optim.lr_decay = parse_double(*v);
  if (auto v = take("lr_decay_every")) c.optim.lr_decay_every = detail::parse_int(*v);
  if (auto v = take("freeze_disp_l")) c.freeze_disp_l = detail::parse_bool(*v);
  if (auto v = take("freeze_disp_r")) c.freeze_disp_r = detail::parse_bool(*v);
  if (auto v = take("freeze_pose")) c.freeze_pose = detail::parse_bool(*v);
  if (auto v = take("freeze_intrinsics")) c.freeze_intrinsics = detail::parse_bool(*v);
  if (auto v = take("init_from")) {
    if (*v != "default" && *v != "gt") throw ConfigError("init_from must be 'default' or 'gt'");
    c.init_from = *v;
  }
  if (auto v = take("init_depth")) c.init_depth = parse_double(*v);
  if (auto v = take("init_logdisp_jitter")) c.init_logdisp_jitter = parse_double(*v);
  if (auto v = take("init_intrinsics_jitter")) c.init_intrinsics_jitter = parse_double(*v);
  if (auto v = take("input_dir")) c.input_dir = *v;
  if (auto v = take("out_dir")) c.out_dir = *v;
  if (auto v = take("export_png")) c.export_png = detail::parse_bool(*v);
  if (auto v = take("png_depth_scale")) c.png_depth_scale = parse_double(*v);
  if (auto v = take("threads")) c.threads = detail::parse_int(*v);

  if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");
  c.optim.seed = c.seed;
  require(c.threads >= 1, "config: threads must be >= 1");
  return c;
}

}  // namespace stdepth
