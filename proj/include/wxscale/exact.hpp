#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "wxscale/error.hpp"

namespace wxscale {

__extension__ typedef unsigned __int128 uint128_t;

/// Unsigned 128-bit integer whose arithmetic throws Error(Overflow) instead of
/// wrapping. Used for every integer FLOP and compute formula so that counts are
/// exact and reproducible.
class Exact {
 public:
  constexpr Exact() = default;
  constexpr Exact(std::uint64_t v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  static constexpr Exact from_raw(uint128_t v) {
    Exact e;
    e.v_ = v;
    return e;
  }

  constexpr uint128_t raw() const { return v_; }

  friend Exact operator+(Exact a, Exact b) {
    uint128_t r;
    if (__builtin_add_overflow(a.v_, b.v_, &r)) throw Error(ErrorCode::Overflow, "128-bit addition overflow");
    return from_raw(r);
  }
  friend Exact operator*(Exact a, Exact b) {
    uint128_t r;
    if (__builtin_mul_overflow(a.v_, b.v_, &r)) throw Error(ErrorCode::Overflow, "128-bit multiplication overflow");
    return from_raw(r);
  }
  friend Exact operator-(Exact a, Exact b) {
    if (b.v_ > a.v_) throw Error(ErrorCode::Overflow, "128-bit subtraction underflow");
    return from_raw(a.v_ - b.v_);
  }
  // Integer division, truncating.
  friend Exact operator/(Exact a, Exact b) {
    if (b.v_ == 0) throw Error(ErrorCode::InvalidInput, "division by zero");
    return from_raw(a.v_ / b.v_);
  }
  friend Exact operator%(Exact a, Exact b) {
    if (b.v_ == 0) throw Error(ErrorCode::InvalidInput, "division by zero");
    return from_raw(a.v_ % b.v_);
  }
  Exact& operator+=(Exact o) { return *this = *this + o; }
  Exact& operator*=(Exact o) { return *this = *this * o; }

  friend constexpr bool operator==(Exact a, Exact b) { return a.v_ == b.v_; }
  friend constexpr std::strong_ordering operator<=>(Exact a, Exact b) {
    return a.v_ == b.v_ ? std::strong_ordering::equal
                        : (a.v_ < b.v_ ? std::strong_ordering::less : std::strong_ordering::greater);
  }

  bool fits_u64() const { return v_ <= UINT64_MAX; }
  std::uint64_t to_u64() const;
  long double to_long_double() const { return static_cast<long double>(v_); }
  double to_double() const { return static_cast<double>(v_); }

  std::string to_string() const;
  static Exact parse(const std::string& text);

 private:
  uint128_t v_ = 0;
};

// Ceiling division a/b for b > 0.
Exact ceil_div(Exact a, Exact b);

// Nearest integer to a non-negative real, halves rounded up. Throws Overflow
// if the value does not fit in 128 bits and InvalidInput if negative/non-finite.
Exact round_to_exact(long double value);

}  // namespace wxscale
