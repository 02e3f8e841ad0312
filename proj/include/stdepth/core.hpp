#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace stdepth {

// Errors carry the process exit code the CLI maps them to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, int exit_code) : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg, 2) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg, 3) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg, 4) {}
};

// Dense row-major raster of H x W cells with `channels` values per cell.
// Element type is generic so the same container holds intensities, autodiff
// variables, masks, or per-pixel coordinate records.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, const T& fill = T{})
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {
    if (height < 0 || width < 0 || channels < 1)
      throw ConfigError("Grid: invalid dimensions");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int v, int u, int c = 0) { return data_[index(v, u, c)]; }
  const T& at(int v, int u, int c = 0) const { return data_[index(v, u, c)]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  typename std::vector<T>::iterator begin() { return data_.begin(); }
  typename std::vector<T>::iterator end() { return data_.end(); }
  typename std::vector<T>::const_iterator begin() const { return data_.begin(); }
  typename std::vector<T>::const_iterator end() const { return data_.end(); }

 private:
  std::size_t index(int v, int u, int c) const {
    return (static_cast<std::size_t>(v) * width_ + u) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using ImageGrid = Grid<double>;
using Mask = Grid<std::uint8_t>;

inline std::size_t valid_count(const Mask& mask) {
  std::size_t n = 0;
  for (auto m : mask) n += (m != 0);
  return n;
}

// Plain value of a scalar; overloaded for autodiff types in their headers.
constexpr double scalar_value(double x) { return x; }
constexpr double scalar_value(float x) { return x; }

// Lift a double raster into any scalar type (autodiff constants carry no
// tape nodes, so this is free of graph growth).
template <class T>
Grid<T> grid_cast(const Grid<double>& src) {
  if constexpr (std::is_same_v<T, double>) {
    return src;
  } else {
    Grid<T> out(src.height(), src.width(), src.channels());
    const double* in = src.data();
    T* dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = T(in[i]);
    return out;
  }
}

// Stereo pair at time t plus the temporally adjacent pair at t'.
struct ImageQuadruplet {
  ImageGrid left_t;
  ImageGrid right_t;
  ImageGrid left_tp;
  ImageGrid right_tp;
};

void require(bool cond, const std::string& msg);

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace stdepth
