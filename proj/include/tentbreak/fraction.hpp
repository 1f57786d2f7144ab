#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <system_error>

#include "tentbreak/error.hpp"

namespace tentbreak {

enum class BackendKind : std::uint8_t { fixed_point, binary64 };

/// Finite-precision arithmetic used for every map evaluation of a session.
///
/// fixed_point(L) stores a value v in [0,1] as the integer round(v * 2^L);
/// binary64 stores the IEEE-754 bit pattern of a double in [0,1].
struct Backend {
  BackendKind kind = BackendKind::fixed_point;
  int bits = 62;

  static constexpr int max_fixed_bits = 63;

  static constexpr Backend fixed(int L) {
    if (L < 1 || L > max_fixed_bits) {
      throw DomainError("fixed-point precision must be in [1, 63]");
    }
    return {BackendKind::fixed_point, L};
  }
  static constexpr Backend binary64() { return {BackendKind::binary64, 64}; }

  constexpr bool is_fixed() const { return kind == BackendKind::fixed_point; }

  /// Raw encoding of 1.0.
  constexpr std::uint64_t one_raw() const {
    return is_fixed() ? (std::uint64_t{1} << bits) : std::bit_cast<std::uint64_t>(1.0);
  }

  std::string name() const {
    return is_fixed() ? "fp" + std::to_string(bits) : std::string("f64");
  }

  /// Accepts "fp<L>", "fixed<L>", "f64" and "binary64".
  static Backend parse(std::string_view text) {
    if (text == "f64" || text == "binary64") return binary64();
    std::string_view digits;
    if (text.starts_with("fp")) {
      digits = text.substr(2);
    } else if (text.starts_with("fixed")) {
      digits = text.substr(5);
    } else {
      throw FormatError("unknown backend '" + std::string(text) + "'");
    }
    int L = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), L);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
      throw FormatError("bad fixed-point precision in '" + std::string(text) + "'");
    }
    return fixed(L);
  }

  friend constexpr bool operator==(const Backend&, const Backend&) = default;
};

namespace detail {

inline std::uint64_t parse_hex_u64(std::string_view digits, std::string_view context) {
  if (digits.starts_with("0x") || digits.starts_with("0X")) digits.remove_prefix(2);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
  if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw FormatError("bad hex value in '" + std::string(context) + "'");
  }
  return value;
}

inline std::string hex_u64(std::uint64_t value, int min_digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llx", min_digits, static_cast<unsigned long long>(value));
  return buf;
}

/// round(num * 2^L / den) with ties away from zero, computed exactly.
inline std::uint64_t scaled_ratio(std::uint64_t num, std::uint64_t den, int L) {
  if (L <= 31 && num <= (std::uint64_t{1} << 32)) {
    return ((num << L) + den / 2) / den;
  }
  const unsigned __int128 wide = (static_cast<unsigned __int128>(num) << L) + den / 2;
  return static_cast<std::uint64_t>(wide / den);
}

}  // namespace detail

/// A value in [0,1] under one arithmetic backend. Equality is exact state
/// equality, which is what orbit cycle detection relies on.
class Fraction {
 public:
  constexpr Fraction() = default;

  static Fraction zero(Backend backend) { return Fraction(backend, 0); }
  static Fraction one(Backend backend) { return Fraction(backend, backend.one_raw()); }

  static Fraction from_raw(Backend backend, std::uint64_t raw) {
    if (backend.is_fixed()) {
      if (raw > backend.one_raw()) throw DomainError("fixed-point raw value exceeds 1");
    } else {
      const double v = std::bit_cast<double>(raw);
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("binary64 value outside [0,1]");
      if (v == 0.0) raw = 0;  // drop negative zero
    }
    return Fraction(backend, raw);
  }

  static Fraction from_double(double v, Backend backend) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("fraction outside [0,1]");
    if (!backend.is_fixed()) return from_raw(backend, std::bit_cast<std::uint64_t>(v));
    const long double scaled = std::ldexp(static_cast<long double>(v), backend.bits);
    return Fraction(backend, static_cast<std::uint64_t>(std::llroundl(scaled)));
  }

  /// num/den rounded to nearest in the backend; requires num <= den.
  static Fraction from_ratio(std::uint64_t num, std::uint64_t den, Backend backend) {
    if (den == 0 || num > den) throw DomainError("ratio must lie in [0,1]");
    if (!backend.is_fixed()) {
      return from_raw(backend, std::bit_cast<std::uint64_t>(static_cast<double>(num) /
                                                            static_cast<double>(den)));
    }
    return Fraction(backend, detail::scaled_ratio(num, den, backend.bits));
  }

  /// Parses a plain decimal such as "0.123" exactly, then rounds once into
  /// the backend. At most 18 fractional digits.
  static Fraction from_decimal(std::string_view text, Backend backend) {
    if (!backend.is_fixed()) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError("bad decimal '" + std::string(text) + "'");
      }
      return from_double(v, backend);
    }
    const auto dot = text.find('.');
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if ((whole.empty() && frac.empty()) || frac.size() > 18 ||
        whole.find_first_not_of("0123456789") != std::string_view::npos ||
        frac.find_first_not_of("0123456789") != std::string_view::npos) {
      throw FormatError("bad decimal '" + std::string(text) + "'");
    }
    std::uint64_t den = 1;
    std::uint64_t num = 0;
    for (char c : frac) {
      num = num * 10 + static_cast<std::uint64_t>(c - '0');
      den *= 10;
    }
    const bool whole_is_zero = whole.find_first_not_of('0') == std::string_view::npos;
    const bool whole_is_one = !whole_is_zero && whole.find_first_not_of('0') == whole.size() - 1 &&
                              whole.back() == '1';
    if (whole_is_one && num == 0) return one(backend);
    if (!whole_is_zero) throw DomainError("fraction outside [0,1]: " + std::string(text));
    return from_ratio(num, den, backend);
  }

  /// "fp<L>:0x<hex>" or "f64:<16 hex digits>"; a bare decimal is read in `fallback`.
  static Fraction parse(std::string_view text, Backend fallback = Backend::fixed(62)) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) return from_decimal(text, fallback);
    const Backend backend = Backend::parse(text.substr(0, colon));
    return from_raw(backend, detail::parse_hex_u64(text.substr(colon + 1), text));
  }

  std::string to_string() const {
    if (backend_.is_fixed()) return backend_.name() + ":0x" + detail::hex_u64(raw_);
    return "f64:" + detail::hex_u64(raw_, 16);
  }

  double to_double() const {
    if (backend_.is_fixed()) return std::ldexp(static_cast<double>(raw_), -backend_.bits);
    return std::bit_cast<double>(raw_);
  }

  constexpr Backend backend() const { return backend_; }
  constexpr std::uint64_t raw() const { return raw_; }
  constexpr bool is_zero() const { return raw_ == 0; }
  constexpr bool is_one() const { return raw_ == backend_.one_raw(); }
  /// True for 0 and 1, the two states the extended map redirects to beta.
  constexpr bool is_boundary() const { return is_zero() || is_one(); }

  friend constexpr bool operator==(const Fraction&, const Fraction&) = default;

  /// Value order; both sides must share a backend.
  friend std::partial_ordering operator<=>(const Fraction& a, const Fraction& b) {
    if (a.backend_ != b.backend_) return std::partial_ordering::unordered;
    if (a.backend_.is_fixed()) return a.raw_ <=> b.raw_;
    return std::bit_cast<double>(a.raw_) <=> std::bit_cast<double>(b.raw_);
  }

 private:
  constexpr Fraction(Backend backend, std::uint64_t raw) : backend_(backend), raw_(raw) {}

  Backend backend_{};
  std::uint64_t raw_ = 0;
};

}  // namespace tentbreak
