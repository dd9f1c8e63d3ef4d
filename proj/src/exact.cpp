#include "wxscale/exact.hpp"

#include <algorithm>
#include <cmath>

namespace wxscale {

std::uint64_t Exact::to_u64() const {
  if (!fits_u64()) throw Error(ErrorCode::Overflow, "value " + to_string() + " exceeds 64 bits");
  return static_cast<std::uint64_t>(v_);
}

std::string Exact::to_string() const {
  if (v_ == 0) return "0";
  std::string out;
  uint128_t v = v_;
  while (v != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Exact Exact::parse(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::InvalidInput, "empty integer");
  Exact out;
  for (char c : text) {
    if (c < '0' || c > '9') throw Error(ErrorCode::InvalidInput, "not a non-negative integer: '" + text + "'");
    out = out * Exact(10) + Exact(static_cast<std::uint64_t>(c - '0'));
  }
  return out;
}

Exact ceil_div(Exact a, Exact b) {
  Exact q = a / b;
  return (a % b == Exact(0)) ? q : q + Exact(1);
}

Exact round_to_exact(long double value) {
  if (!std::isfinite(value) || value < 0) {
    throw Error(ErrorCode::InvalidInput, "cannot round negative or non-finite value to a count");
  }
  long double r = std::floor(value + 0.5L);
  // 2^128
  constexpr long double limit = 340282366920938463463374607431768211456.0L;
  if (r >= limit) throw Error(ErrorCode::Overflow, "rounded value exceeds 128 bits");
  // Split into high/low 64-bit halves; long double holds 64 mantissa bits.
  constexpr long double two64 = 18446744073709551616.0L;
  long double hi = std::floor(r / two64);
  long double lo = r - hi * two64;
  uint128_t out = (static_cast<uint128_t>(static_cast<std::uint64_t>(hi)) << 64) |
                  static_cast<uint128_t>(static_cast<std::uint64_t>(lo));
  return Exact::from_raw(out);
}

}  // namespace wxscale
