#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "stdepth/core.hpp"

namespace stdepth::ad {

// Wengert list for reverse-mode differentiation. Each node stores the local
// partial derivatives with respect to at most two parents; values live in
// the Var handles, not on the tape.
class Tape {
 public:
  struct Node {
    double da;
    double db;
    std::int32_t a;
    std::int32_t b;
  };

  std::int32_t leaf() {
    nodes_.push_back({0.0, 0.0, -1, -1});
    return last_index();
  }

  std::int32_t unary(std::int32_t a, double da) {
    nodes_.push_back({da, 0.0, a, -1});
    return last_index();
  }

  std::int32_t binary(std::int32_t a, std::int32_t b, double da, double db) {
    nodes_.push_back({da, db, a, b});
    return last_index();
  }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Adjoints of every node with respect to the node `from`, seeded with 1.
  std::vector<double> adjoints(std::int32_t from) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    assert(from >= 0 && static_cast<std::size_t>(from) < nodes_.size());
    adj[from] = 1.0;
    for (std::int32_t i = from; i >= 0; --i) {
      const double g = adj[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.a >= 0) adj[n.a] += n.da * g;
      if (n.b >= 0) adj[n.b] += n.db * g;
    }
    return adj;
  }

 private:
  std::int32_t last_index() const { return static_cast<std::int32_t>(nodes_.size()) - 1; }

  std::vector<Node> nodes_;
};

// Scalar tracked on a tape. Default-constructed or double-constructed Vars
// are constants and never touch a tape, so mixed Var/double expressions
// only record the differentiable part.
class Var {
 public:
  static constexpr std::int32_t kConst = -1;

  Var() = default;
  Var(double v) : v_(v) {}  // NOLINT: implicit by design, lets literals mix in
  Var(double v, std::int32_t index, Tape* tape) : v_(v), index_(index), tape_(tape) {}

  static Var leaf(Tape& tape, double v) { return Var(v, tape.leaf(), &tape); }

  double value() const { return v_; }
  std::int32_t index() const { return index_; }
  Tape* tape() const { return tape_; }
  bool is_const() const { return index_ == kConst; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double v_ = 0.0;
  std::int32_t index_ = kConst;
  Tape* tape_ = nullptr;
};

inline double scalar_value(const Var& x) { return x.value(); }

namespace detail {
inline Tape* common_tape(const Var& a, const Var& b) {
  Tape* t = a.tape() ? a.tape() : b.tape();
  assert(!(a.tape() && b.tape() && a.tape() != b.tape()));
  return t;
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  const double v = a.value() + b.value();
  if (a.is_const() && b.is_const()) return Var(v);
  Tape* t = detail::common_tape(a, b);
  if (a.is_const()) return Var(v, t->unary(b.index(), 1.0), t);
  if (b.is_const()) return Var(v, t->unary(a.index(), 1.0), t);
  return Var(v, t->binary(a.index(), b.index(), 1.0, 1.0), t);
}

inline Var operator-(const Var& a, const Var& b) {
  const double v = a.value() - b.value();
  if (a.is_const() && b.is_const()) return Var(v);
  Tape* t = detail::common_tape(a, b);
  if (a.is_const()) return Var(v, t->unary(b.index(), -1.0), t);
  if (b.is_const()) return Var(v, t->unary(a.index(), 1.0), t);
  return Var(v, t->binary(a.index(), b.index(), 1.0, -1.0), t);
}

inline Var operator*(const Var& a, const Var& b) {
  const double v = a.value() * b.value();
  if (a.is_const() && b.is_const()) return Var(v);
  Tape* t = detail::common_tape(a, b);
  if (a.is_const()) return Var(v, t->unary(b.index(), a.value()), t);
  if (b.is_const()) return Var(v, t->unary(a.index(), b.value()), t);
  return Var(v, t->binary(a.index(), b.index(), b.value(), a.value()), t);
}

inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  const double v = a.value() * inv;
  if (a.is_const() && b.is_const()) return Var(v);
  Tape* t = detail::common_tape(a, b);
  if (a.is_const()) return Var(v, t->unary(b.index(), -v * inv), t);
  if (b.is_const()) return Var(v, t->unary(a.index(), inv), t);
  return Var(v, t->binary(a.index(), b.index(), inv, -v * inv), t);
}

inline Var operator-(const Var& a) {
  if (a.is_const()) return Var(-a.value());
  return Var(-a.value(), a.tape()->unary(a.index(), -1.0), a.tape());
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

inline Var exp(const Var& a) {
  const double v = std::exp(a.value());
  if (a.is_const()) return Var(v);
  return Var(v, a.tape()->unary(a.index(), v), a.tape());
}

inline Var log(const Var& a) {
  const double v = std::log(a.value());
  if (a.is_const()) return Var(v);
  return Var(v, a.tape()->unary(a.index(), 1.0 / a.value()), a.tape());
}

inline Var sqrt(const Var& a) {
  const double v = std::sqrt(a.value());
  if (a.is_const()) return Var(v);
  return Var(v, a.tape()->unary(a.index(), 0.5 / v), a.tape());
}

inline Var abs(const Var& a) {
  if (a.is_const()) return Var(std::abs(a.value()));
  const double s = a.value() >= 0.0 ? 1.0 : -1.0;  // subgradient at 0
  return Var(std::abs(a.value()), a.tape()->unary(a.index(), s), a.tape());
}

inline Var sin(const Var& a) {
  if (a.is_const()) return Var(std::sin(a.value()));
  return Var(std::sin(a.value()), a.tape()->unary(a.index(), std::cos(a.value())), a.tape());
}

inline Var cos(const Var& a) {
  if (a.is_const()) return Var(std::cos(a.value()));
  return Var(std::cos(a.value()), a.tape()->unary(a.index(), -std::sin(a.value())), a.tape());
}

inline Var min(const Var& a, const Var& b) { return a.value() <= b.value() ? a : b; }
inline Var max(const Var& a, const Var& b) { return a.value() >= b.value() ? a : b; }

}  // namespace stdepth::ad
