#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace dbo {

/// Raised when simulation-time arithmetic would overflow or go negative.
class TimeError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw TimeError("time arithmetic overflow");
  return out;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_sub_overflow(a, b, &out)) throw TimeError("time arithmetic overflow");
  return out;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw TimeError("time arithmetic overflow");
  return out;
}

}  // namespace detail

/// Signed span of simulation time in integer nanoseconds.
///
/// Durations may be negative as intermediate values (e.g. differences of
/// time points); time points themselves never are.
class Duration {
 public:
  constexpr Duration() = default;
  constexpr explicit Duration(std::int64_t ns) : ns_(ns) {}

  static constexpr Duration ns(std::int64_t v) { return Duration(v); }
  static Duration us(std::int64_t v) { return Duration(detail::checked_mul(v, 1'000)); }
  static Duration ms(std::int64_t v) { return Duration(detail::checked_mul(v, 1'000'000)); }
  static constexpr Duration zero() { return Duration(0); }
  static constexpr Duration max() { return Duration(std::numeric_limits<std::int64_t>::max()); }

  /// Converts a (possibly fractional) microsecond value, rounding to the
  /// nearest nanosecond.
  static Duration from_us(double us);

  constexpr std::int64_t count() const { return ns_; }
  constexpr double to_us() const { return static_cast<double>(ns_) / 1'000.0; }

  friend constexpr auto operator<=>(Duration, Duration) = default;

  friend Duration operator+(Duration a, Duration b) { return Duration(detail::checked_add(a.ns_, b.ns_)); }
  friend Duration operator-(Duration a, Duration b) { return Duration(detail::checked_sub(a.ns_, b.ns_)); }
  friend Duration operator*(Duration a, std::int64_t k) { return Duration(detail::checked_mul(a.ns_, k)); }
  friend Duration operator*(std::int64_t k, Duration a) { return a * k; }
  Duration& operator+=(Duration o) { return *this = *this + o; }
  Duration& operator-=(Duration o) { return *this = *this - o; }

 private:
  std::int64_t ns_ = 0;
};

/// Absolute simulation time since the start of a run, in nanoseconds.
class TimePoint {
 public:
  constexpr TimePoint() = default;
  explicit TimePoint(std::int64_t ns) : ns_(ns) {
    if (ns < 0) throw TimeError("negative time point");
  }

  static TimePoint ns(std::int64_t v) { return TimePoint(v); }
  static TimePoint us(std::int64_t v) { return TimePoint(detail::checked_mul(v, 1'000)); }
  static TimePoint from_us(double us) { return TimePoint(Duration::from_us(us).count()); }
  static constexpr TimePoint origin() { return TimePoint(); }

  constexpr std::int64_t count() const { return ns_; }
  constexpr Duration since_origin() const { return Duration(ns_); }
  constexpr double to_us() const { return static_cast<double>(ns_) / 1'000.0; }

  friend constexpr auto operator<=>(TimePoint, TimePoint) = default;

  friend TimePoint operator+(TimePoint t, Duration d) { return TimePoint(detail::checked_add(t.ns_, d.count())); }
  friend TimePoint operator-(TimePoint t, Duration d) { return TimePoint(detail::checked_sub(t.ns_, d.count())); }
  friend Duration operator-(TimePoint a, TimePoint b) { return Duration(detail::checked_sub(a.ns_, b.ns_)); }
  TimePoint& operator+=(Duration d) { return *this = *this + d; }

 private:
  std::int64_t ns_ = 0;
};

/// Formats nanoseconds as a decimal microsecond string with trailing zeros
/// trimmed ("62500" -> "62.5", "50000" -> "50").
std::string format_us(std::int64_t ns);

}  // namespace dbo
