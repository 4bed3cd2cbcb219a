#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bosegas {

/// Error categories. Each maps onto one CLI exit code.
enum class ErrorKind { input = 2, config = 2, budget = 3, structural = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }
  virtual const char* category() const noexcept = 0;

 private:
  ErrorKind kind_;
};

struct InputError : Error {
  explicit InputError(const std::string& w) : Error(ErrorKind::input, w) {}
  const char* category() const noexcept override { return "input"; }
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
  const char* category() const noexcept override { return "config"; }
};

struct BudgetError : Error {
  BudgetError(const std::string& w, double cost) : Error(ErrorKind::budget, w), cost_(cost) {}
  const char* category() const noexcept override { return "budget"; }
  double estimated_cost() const noexcept { return cost_; }

 private:
  double cost_;
};

/// Raised when a configuration violates a structural requirement
/// (permutation-wise, authorized, simple, finite cycles, ...).
struct StructuralError : Error {
  explicit StructuralError(const std::string& w) : Error(ErrorKind::structural, w) {}
  const char* category() const noexcept override { return "structural"; }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Energies live in R u {+inf}. NaN is never a valid energy.
inline double checked_energy(double e) {
  if (std::isnan(e)) throw InputError("energy evaluated to NaN");
  return e;
}

/// Sum of two energies in R u {+inf}; +inf absorbs.
inline double add_energy(double a, double b) {
  if (std::isinf(a) && a > 0) return kInfinity;
  if (std::isinf(b) && b > 0) return kInfinity;
  return checked_energy(a + b);
}

using Point = std::vector<double>;

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Exact left-to-right lexicographic comparison of coordinates.
inline bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

/// Closed axis-aligned box [lo, hi]; plays the role of a compact.
struct Box {
  Point lo;
  Point hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }

  /// Euclidean distance from x to the box (0 inside).
  double distance(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      double t = 0.0;
      if (x[i] < lo[i]) t = lo[i] - x[i];
      else if (x[i] > hi[i]) t = x[i] - hi[i];
      s += t * t;
    }
    return std::sqrt(s);
  }

  Box translated(std::span<const double> v) const {
    Box b = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      b.lo[i] += v[i];
      b.hi[i] += v[i];
    }
    return b;
  }

  static Box cube(int dim, double lo, double hi) {
    return Box{Point(static_cast<std::size_t>(dim), lo), Point(static_cast<std::size_t>(dim), hi)};
  }
};

/// Half-open observation window [-L/2, L/2)^d.
struct Window {
  int dim = 1;
  double side = 1.0;

  bool contains(std::span<const double> x) const {
    const double h = side / 2.0;
    for (double c : x)
      if (c < -h || c >= h) return false;
    return true;
  }
  double volume() const { return std::pow(side, dim); }
  Box closure() const { return Box::cube(dim, -side / 2.0, side / 2.0); }
};

/// Volume of the unit ball in R^d (c_0 = 1).
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

}  // namespace bosegas
