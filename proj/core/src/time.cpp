#include "dbo/time.hpp"

#include <cmath>

#include <fmt/format.h>

namespace dbo {

Duration Duration::from_us(double us) {
  if (!std::isfinite(us)) throw TimeError("non-finite microsecond value");
  const double ns = std::round(us * 1'000.0);
  if (std::fabs(ns) >= 9.2e18) throw TimeError("microsecond value out of range");
  return Duration(static_cast<std::int64_t>(ns));
}

std::string format_us(std::int64_t ns) {
  const bool negative = ns < 0;
  const std::uint64_t mag = negative ? 0 - static_cast<std::uint64_t>(ns) : static_cast<std::uint64_t>(ns);
  std::string out = fmt::format("{}{}", negative ? "-" : "", mag / 1'000);
  std::uint64_t frac = mag % 1'000;
  if (frac != 0) {
    std::string digits = fmt::format("{:03}", frac);
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.';
    out += digits;
  }
  return out;
}

}  // namespace dbo
