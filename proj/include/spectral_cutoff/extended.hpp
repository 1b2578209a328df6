#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "errors.hpp"

namespace spectral_cutoff {

/// Nonnegative extended real: a finite value or +infinity.
///
/// Distances and moments may legitimately be infinite, so infinity is carried
/// as a tag rather than as a floating-point sentinel.
class Extended {
 public:
  constexpr Extended() = default;
  constexpr Extended(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  static constexpr Extended infinity() {
    Extended e;
    e.infinite_ = true;
    return e;
  }

  constexpr bool is_infinite() const noexcept { return infinite_; }
  constexpr bool is_finite() const noexcept { return !infinite_; }

  double value() const {
    if (infinite_) throw Error("value() called on an infinite Extended");
    return value_;
  }

  /// Finite value, or std::numeric_limits<double>::infinity() for +inf.
  double to_double() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend Extended operator+(Extended a, Extended b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return Extended(a.value_ + b.value_);
  }

  /// Nonnegative weight times extended value; 0 * inf = 0.
  friend Extended operator*(double w, Extended a) {
    if (a.infinite_) return w == 0.0 ? Extended(0.0) : infinity();
    return Extended(w * a.value_);
  }

  friend bool operator==(const Extended& a, const Extended& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  friend std::ostream& operator<<(std::ostream& os, const Extended& e) {
    if (e.infinite_) return os << "inf";
    return os << e.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace spectral_cutoff
