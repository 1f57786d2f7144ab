#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tentbreak/cycle.hpp"
#include "tentbreak/error.hpp"
#include "tentbreak/fraction.hpp"

namespace tentbreak {

/// Control parameters of the extended tent map G_{alpha,beta}.
struct TentParams {
  Fraction alpha;
  Fraction beta;

  TentParams(Fraction a, Fraction b) : alpha(a), beta(b) {
    if (a.backend() != b.backend()) throw DomainError("alpha and beta use different backends");
    if (a.is_boundary()) throw DomainError("alpha must lie strictly inside (0,1)");
    if (b.is_boundary()) throw DomainError("beta must lie strictly inside (0,1)");
  }

  Backend backend() const { return alpha.backend(); }
};

namespace detail {

/// F_alpha on raw encodings. The comparison x <= alpha is exact; the
/// division rounds to nearest.
inline std::uint64_t skew_tent_raw(std::uint64_t x, std::uint64_t alpha, Backend backend) {
  if (backend.is_fixed()) {
    const std::uint64_t one = backend.one_raw();
    if (x <= alpha) return scaled_ratio(x, alpha, backend.bits);
    return scaled_ratio(one - x, one - alpha, backend.bits);
  }
  const double xd = std::bit_cast<double>(x);
  const double ad = std::bit_cast<double>(alpha);
  double y = xd <= ad ? xd / ad : (1.0 - xd) / (1.0 - ad);
  y = std::clamp(y, 0.0, 1.0);
  return y == 0.0 ? 0 : std::bit_cast<std::uint64_t>(y);
}

inline void require_same_backend(const Fraction& a, const Fraction& b) {
  if (a.backend() != b.backend()) throw DomainError("operands use different backends");
}

}  // namespace detail

/// F_alpha: x/alpha on [0, alpha], (1-x)/(1-alpha) on (alpha, 1].
inline Fraction skew_tent_step(Fraction x, Fraction alpha) {
  detail::require_same_backend(x, alpha);
  if (alpha.is_boundary()) throw DomainError("alpha must lie strictly inside (0,1)");
  return Fraction::from_raw(x.backend(), detail::skew_tent_raw(x.raw(), alpha.raw(), x.backend()));
}

/// G_{alpha,beta} working directly on raw encodings; this is the form the
/// orbit loops use.
class ExtendedTentMap {
 public:
  explicit ExtendedTentMap(const TentParams& p)
      : backend_(p.backend()), one_(p.backend().one_raw()), alpha_(p.alpha.raw()), beta_(p.beta.raw()) {}

  std::uint64_t operator()(std::uint64_t x) const {
    if (x == 0 || x == one_) return beta_;
    return detail::skew_tent_raw(x, alpha_, backend_);
  }

  Fraction operator()(const Fraction& x) const {
    if (x.backend() != backend_) throw DomainError("state uses a different backend than the map");
    return Fraction::from_raw(backend_, (*this)(x.raw()));
  }

  Backend backend() const { return backend_; }
  std::uint64_t one_raw() const { return one_; }

 private:
  Backend backend_;
  std::uint64_t one_;
  std::uint64_t alpha_;
  std::uint64_t beta_;
};

inline Fraction extended_step(Fraction x, const TentParams& p) {
  detail::require_same_backend(x, p.alpha);
  return ExtendedTentMap(p)(x);
}

/// Initial condition from a timestamp: F_gamma applied 4n times to
/// 10^floor(log10 t) / t.
inline Fraction derive_x0(std::uint64_t t, Fraction gamma, int n) {
  if (t == 0) throw DomainError("timestamp must be positive");
  if (gamma.is_boundary()) throw DomainError("gamma must lie strictly inside (0,1)");
  if (n < 1 || n > 16) throw DomainError("block parameter n must be in [1, 16]");
  std::uint64_t power = 1;
  while (power <= t / 10) power *= 10;
  Fraction x = Fraction::from_ratio(power, t, gamma.backend());
  for (int i = 0; i < 4 * n; ++i) x = skew_tent_step(x, gamma);
  return x;
}

/// Source of perturbation bits: every `interval`-th state has its least
/// significant bit flipped when `next_bit` returns true.
struct Perturbation {
  std::function<bool()> next_bit;
  std::uint64_t interval = 1;

  explicit operator bool() const { return static_cast<bool>(next_bit) && interval > 0; }
};

namespace detail {

inline std::uint64_t flip_lsb(std::uint64_t raw, Backend backend) {
  const std::uint64_t one = backend.one_raw();
  if (backend.is_fixed()) return raw == one ? one - 1 : raw ^ 1;
  if (raw == one) return std::bit_cast<std::uint64_t>(std::nextafter(1.0, 0.0));
  return raw ^ 1;
}

}  // namespace detail

/// Stateful walk along a digital orbit x_0, x_1, ... of G_{alpha,beta}.
class Orbit {
 public:
  Orbit(Fraction x0, const TentParams& p, Perturbation perturbation = {})
      : map_(p), state_(x0.raw()), perturbation_(std::move(perturbation)) {
    detail::require_same_backend(x0, p.alpha);
  }

  Fraction current() const { return Fraction::from_raw(map_.backend(), state_); }
  std::uint64_t current_raw() const { return state_; }
  std::uint64_t index() const { return index_; }

  Fraction advance() {
    state_ = map_(state_);
    ++index_;
    if (perturbation_ && index_ % perturbation_.interval == 0 && perturbation_.next_bit()) {
      state_ = detail::flip_lsb(state_, map_.backend());
    }
    return current();
  }

 private:
  ExtendedTentMap map_;
  std::uint64_t state_;
  std::uint64_t index_ = 0;
  Perturbation perturbation_;
};

/// [x_1, ..., x_count] with x_i = G(x_{i-1}).
inline std::vector<Fraction> iterate_orbit(Fraction x0, const TentParams& p, std::size_t count) {
  Orbit orbit(x0, p);
  std::vector<Fraction> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(orbit.advance());
  return out;
}

/// Index of the least significant set bit after the binary point
/// (0 for x = 1).
inline int binary_precision(Fraction x) {
  if (x.is_zero()) throw DomainError("binary precision of 0 is undefined");
  if (x.backend().is_fixed()) return x.backend().bits - std::countr_zero(x.raw());
  const double v = x.to_double();
  int exponent = 0;
  const double mantissa = std::frexp(v, &exponent);
  const auto digits = static_cast<std::uint64_t>(std::ldexp(mantissa, 64));
  return 64 - exponent - std::countr_zero(digits);
}

struct OrbitReport {
  bool conclusive = false;
  std::uint64_t transient_len = 0;
  std::uint64_t period = 0;
  /// First orbit index (x0 is index 0) whose state is exactly 0 or 1.
  std::optional<std::uint64_t> hit_boundary_at;
  std::vector<Fraction> samples;
};

/// Transient length and period of the orbit of x0 by exact state equality.
/// An orbit whose rho length exceeds `max_iter` is reported inconclusive.
inline OrbitReport analyze_orbit(Fraction x0, const TentParams& p, std::uint64_t max_iter,
                                 std::size_t sample_count = 64) {
  detail::require_same_backend(x0, p.alpha);
  const ExtendedTentMap map(p);
  OrbitReport report;

  std::uint64_t x = x0.raw();
  for (std::size_t i = 0; i < sample_count; ++i) {
    report.samples.push_back(Fraction::from_raw(p.backend(), x));
    x = map(x);
  }

  const auto cycle = find_cycle(x0.raw(), map, max_iter);
  const std::uint64_t scan = cycle ? cycle->rho_length() : max_iter;
  if (cycle) {
    report.conclusive = true;
    report.transient_len = cycle->transient;
    report.period = cycle->period;
  }
  x = x0.raw();
  for (std::uint64_t i = 0; i < scan; ++i) {
    if (x == 0 || x == map.one_raw()) {
      report.hit_boundary_at = i;
      break;
    }
    x = map(x);
  }
  return report;
}

/// Index i >= 1 of the first iterate x_i in {0, 1}, if any within max_iter.
inline std::optional<std::uint64_t> first_hit_boundary(Fraction x0, const TentParams& p,
                                                       std::uint64_t max_iter) {
  detail::require_same_backend(x0, p.alpha);
  const ExtendedTentMap map(p);
  const std::uint64_t one = map.one_raw();
  std::uint64_t x = x0.raw();
  for (std::uint64_t i = 1; i <= max_iter; ++i) {
    x = map(x);
    if (x == 0 || x == one) return i;
  }
  return std::nullopt;
}

}  // namespace tentbreak
