#pragma once

#include <zlib.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stdepth/core.hpp"
#include "stdepth/metrics.hpp"

namespace stdepth {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// PFM: float32 raster, little-endian (negative scale), rows written top-down.

inline void write_pfm(const std::string& path, const Grid<double>& grid) {
  require(grid.channels() == 1 || grid.channels() == 3, "write_pfm: 1 or 3 channels only");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << (grid.channels() == 1 ? "Pf" : "PF") << "\n"
      << grid.width() << " " << grid.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(grid.width()) * grid.channels());
  for (int v = 0; v < grid.height(); ++v) {
    std::size_t i = 0;
    for (int u = 0; u < grid.width(); ++u)
      for (int c = 0; c < grid.channels(); ++c) row[i++] = static_cast<float>(grid.at(v, u, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Grid<double> read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 || scale == 0.0)
    throw IoError("malformed PFM header: " + path);
  in.get();  // single whitespace separating header and data
  const int channels = magic == "Pf" ? 1 : 3;
  const bool swap = scale > 0.0;  // positive scale marks big-endian data

  Grid<double> grid(h, w, channels);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  for (int v = 0; v < h; ++v) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw IoError("truncated PFM data: " + path);
    std::size_t i = 0;
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < channels; ++c) {
        float f = row[i++];
        if (swap) {
          std::uint32_t bits;
          std::memcpy(&bits, &f, 4);
          bits = __builtin_bswap32(bits);
          std::memcpy(&f, &bits, 4);
        }
        grid.at(v, u, c) = static_cast<double>(f);
      }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// 16-bit grayscale PNG, for human-viewable previews. Values are multiplied
// by `scale` and clamped into [0, 65535].

namespace detail {

inline void png_chunk(std::string& out, const char type[4], const std::string& payload) {
  const auto be32 = [](std::uint32_t v) {
    std::string s(4, '\0');
    s[0] = static_cast<char>(v >> 24);
    s[1] = static_cast<char>(v >> 16);
    s[2] = static_cast<char>(v >> 8);
    s[3] = static_cast<char>(v);
    return s;
  };
  out += be32(static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const auto crc =
      ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  out += be32(static_cast<std::uint32_t>(crc));
}

}  // namespace detail

inline void write_png16(const std::string& path, const Grid<double>& grid, double scale) {
  require(grid.channels() == 1, "write_png16: single-channel only");
  const int w = grid.width(), h = grid.height();

  std::string raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 2 * w));
  for (int v = 0; v < h; ++v) {
    raw.push_back('\0');  // filter type none
    for (int u = 0; u < w; ++u) {
      double s = std::lround(grid.at(v, u) * scale);
      const auto q = static_cast<std::uint16_t>(std::min(65535.0, std::max(0.0, s)));
      raw.push_back(static_cast<char>(q >> 8));
      raw.push_back(static_cast<char>(q & 0xff));
    }
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> comp(comp_len);
  if (compress2(comp.data(), &comp_len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png compression failed");

  std::string ihdr;
  const auto be32 = [&ihdr](std::uint32_t v) {
    ihdr += static_cast<char>(v >> 24);
    ihdr += static_cast<char>(v >> 16);
    ihdr += static_cast<char>(v >> 8);
    ihdr += static_cast<char>(v);
  };
  be32(static_cast<std::uint32_t>(w));
  be32(static_cast<std::uint32_t>(h));
  ihdr += static_cast<char>(16);  // bit depth
  ihdr += '\0';                   // grayscale
  ihdr += '\0';                   // deflate
  ihdr += '\0';                   // adaptive filtering
  ihdr += '\0';                   // no interlace

  std::string png("\x89PNG\r\n\x1a\n", 8);
  detail::png_chunk(png, "IHDR", ihdr);
  detail::png_chunk(png, "IDAT", std::string(reinterpret_cast<char*>(comp.data()), comp_len));
  detail::png_chunk(png, "IEND", "");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(png.data(), static_cast<std::streamsize>(png.size()));
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Flat key = value configs; '#' starts a comment, keys may not repeat.

inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto trim = [](std::string s) {
    const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw ConfigError("config: duplicate key '" + key + "'");
  }
  return kv;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Trajectory files. Two per-line layouts, auto-detected by column count:
//   8 columns:  timestamp tx ty tz qx qy qz qw
//   12 columns: row-major 3x4 rigid transform [R | t] (timestamps become
//               the line index)

inline Trajectory parse_trajectory(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int columns = 0;
  double index = 0.0;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty()) continue;
    if (columns == 0) {
      if (vals.size() != 8 && vals.size() != 12)
        throw IoError("trajectory: unrecognized format (" + std::to_string(vals.size()) +
                      " columns; expected 8 or 12)");
      columns = static_cast<int>(vals.size());
    }
    if (static_cast<int>(vals.size()) != columns)
      throw IoError("trajectory: inconsistent column count");

    PoseSE3<double> pose;
    if (columns == 8) {
      traj.timestamps.push_back(vals[0]);
      pose.trans = {vals[1], vals[2], vals[3]};
      const double qx = vals[4], qy = vals[5], qz = vals[6], qw = vals[7];
      const double qn = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
      if (!(qn > 0.5)) throw IoError("trajectory: degenerate quaternion");
      const double s = (qw < 0 ? -1.0 : 1.0) / qn;
      const double vx = qx * s, vy = qy * s, vz = qz * s, w = qw * s;
      const double vn = std::sqrt(vx * vx + vy * vy + vz * vz);
      if (vn > 1e-12) {
        const double angle = 2.0 * std::atan2(vn, w);
        pose.rot = Vec3<double>{vx, vy, vz} * (angle / vn);
      }
    } else {
      traj.timestamps.push_back(index);
      Mat3<double> R;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R.m[i][j] = vals[4 * i + j];
      pose.trans = {vals[3], vals[7], vals[11]};
      const Mat3<double> err = R * R.transpose() - Mat3<double>::identity();
      if (err.frobenius_norm() > 1e-4) throw IoError("trajectory: row is not a rotation matrix");
      pose.rot = rotation_log(R);
    }
    traj.poses.push_back(pose);
    index += 1.0;
  }
  if (traj.poses.empty()) throw IoError("trajectory: no poses found");
  traj.validate();
  return traj;
}

inline Trajectory read_trajectory(const std::string& path) {
  try {
    return parse_trajectory(read_text_file(path));
  } catch (const Error& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace stdepth
