#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

namespace chainmatch {

// Currency in integer minor units (cents). Persistence and equality tests
// stay exact; objective math converts to double at the call site.
struct Money {
  std::int64_t cents = 0;

  constexpr Money() = default;
  constexpr explicit Money(std::int64_t c) : cents(c) {}

  static Money from_dollars(double d) {
    return Money{static_cast<std::int64_t>(std::llround(d * 100.0))};
  }
  double dollars() const { return static_cast<double>(cents) / 100.0; }

  auto operator<=>(const Money&) const = default;

  Money operator+(Money o) const { return Money{cents + o.cents}; }
  Money operator-(Money o) const { return Money{cents - o.cents}; }
  Money& operator+=(Money o) {
    cents += o.cents;
    return *this;
  }
};

inline std::string to_string(Money m) {
  char buf[32];
  std::int64_t a = m.cents < 0 ? -m.cents : m.cents;
  std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", m.cents < 0 ? "-" : "",
                static_cast<long long>(a / 100), static_cast<long long>(a % 100));
  return buf;
}

}  // namespace chainmatch
