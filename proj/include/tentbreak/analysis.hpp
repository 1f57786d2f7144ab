#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tentbreak/attack.hpp"
#include "tentbreak/cipher.hpp"
#include "tentbreak/error.hpp"
#include "tentbreak/fraction.hpp"
#include "tentbreak/keystream.hpp"
#include "tentbreak/parallel.hpp"
#include "tentbreak/tentmap.hpp"

namespace tentbreak {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Exact numbers
// ---------------------------------------------------------------------------

/// The exact dyadic value held by a fraction.
inline Rational exact_value(const Fraction& x) {
  if (x.backend().is_fixed()) return Rational(BigInt(x.raw()), BigInt(1) << x.backend().bits);
  const double v = x.to_double();
  if (v == 0.0) return Rational(0);
  int exponent = 0;
  const double mantissa = std::frexp(v, &exponent);
  const auto digits = static_cast<std::uint64_t>(std::ldexp(mantissa, 64));
  const int shift = 64 - exponent;  // v = digits / 2^shift, shift > 0 for v <= 1
  return Rational(BigInt(digits), BigInt(1) << shift);
}

/// "0.01" -> 1/100, exactly.
inline Rational parse_decimal_rational(std::string_view text) {
  const auto dot = text.find('.');
  const std::string whole(text.substr(0, dot));
  const std::string frac = dot == std::string_view::npos ? std::string() : std::string(text.substr(dot + 1));
  if ((whole.empty() && frac.empty()) || whole.find_first_not_of("0123456789") != std::string::npos ||
      frac.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError("bad decimal '" + std::string(text) + "'");
  }
  BigInt num(whole.empty() ? "0" : whole);
  BigInt den = 1;
  for (char c : frac) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  return Rational(num, den);
}

inline double log2_big(const BigInt& x) {
  if (x <= 0) return -std::numeric_limits<double>::infinity();
  const unsigned top = boost::multiprecision::msb(x);
  if (top < 60) return std::log2(x.convert_to<double>());
  const unsigned shift = top - 59;
  return std::log2(static_cast<BigInt>(x >> shift).convert_to<double>()) + shift;
}

inline double log2_rational(const Rational& x) {
  return log2_big(boost::multiprecision::numerator(x)) - log2_big(boost::multiprecision::denominator(x));
}

inline BigInt big_binomial(unsigned m, unsigned k) {
  if (k > m) return 0;
  BigInt out = 1;
  for (unsigned i = 1; i <= k; ++i) out = out * (m - k + i) / i;
  return out;
}

inline Rational rational_pow(const Rational& base, unsigned e) {
  Rational out = 1;
  for (unsigned i = 0; i < e; ++i) out *= base;
  return out;
}

// ---------------------------------------------------------------------------
// Noise-vector distribution
// ---------------------------------------------------------------------------

struct Histogram {
  int n = 2;
  std::vector<std::uint64_t> counts;
  std::uint64_t samples = 0;
  /// Probability of a 0 bit under the independent-bit model, for the
  /// theoretical column.
  Rational zero_bit_probability{1, 2};

  double frequency(std::uint64_t value) const {
    return samples == 0 ? 0.0 : static_cast<double>(counts.at(value)) / static_cast<double>(samples);
  }
};

/// Counts `samples` consecutive noise vectors U_0, U_1, ...
inline Histogram sample_histogram(const TentParams& p, Fraction x0, int n, std::uint64_t samples,
                                  Extractor extractor = Extractor::standard, Perturbation perturbation = {}) {
  if (n < 1 || n > 4) throw DomainError("full histograms need n <= 4");
  Histogram h;
  h.n = n;
  h.counts.assign(std::size_t{1} << (4 * n), 0);
  h.zero_bit_probability = extractor == Extractor::standard ? exact_value(p.alpha) : Rational(1, 2);
  NoiseVectorStream stream(x0, p, n, extractor, std::move(perturbation));
  for (std::uint64_t s = 0; s < samples; ++s) ++h.counts[stream.next().bits()];
  h.samples = samples;
  return h;
}

/// Frequency of 1 bits among the first `bits` extracted bits.
inline double one_bit_frequency(const TentParams& p, Fraction x0, std::uint64_t bits, Extractor extractor) {
  NoiseVectorStream stream(x0, p, 1, extractor);
  std::uint64_t ones = 0;
  std::uint64_t seen = 0;
  while (seen < bits) {
    const Block b = stream.next();
    for (int k = 3; k >= 0 && seen < bits; --k, ++seen) ones += b.bit(k) ? 1 : 0;
  }
  return bits == 0 ? 0.0 : static_cast<double>(ones) / static_cast<double>(bits);
}

/// alpha^{N_0(a)} (1-alpha)^{4n-N_0(a)}, assuming independent bits.
inline Rational theoretical_prob(Block a, const Rational& alpha) {
  const int width = a.width();
  const int ones = std::popcount(a.bits());
  return rational_pow(alpha, static_cast<unsigned>(width - ones)) * rational_pow(1 - alpha, static_cast<unsigned>(ones));
}

/// Probability of one particular value with `ones` one-bits.
inline Rational class_value_prob(int ones, const Rational& alpha, int n) {
  return rational_pow(alpha, static_cast<unsigned>(4 * n - ones)) * rational_pow(1 - alpha, static_cast<unsigned>(ones));
}

/// H(i) = 2 * sum_{l<i} C(4n, l): candidates tried before class pair i.
inline BigInt class_offset_H(int i, int n) {
  if (i < 0 || i > 2 * n) throw DomainError("class pair index must be in [0, 2n]");
  BigInt h = 0;
  for (int l = 0; l < i; ++l) h += 2 * big_binomial(static_cast<unsigned>(4 * n), static_cast<unsigned>(l));
  return h;
}

struct GuessComplexity {
  Rational com;
  double log2_com = 0;
};

namespace detail {

inline void check_alpha(const Rational& alpha) {
  if (alpha <= 0 || alpha >= 1) throw DomainError("alpha must lie strictly inside (0,1)");
}

inline BigInt triangle(const BigInt& c) { return c * (c + 1) / 2; }

}  // namespace detail

/// Mean 1-based rank of the true noise vector under the paired guess order,
/// in closed form: within pair i, the C(4n,i) values with i one-bits are
/// tried at ranks H(i)+1..H(i)+C, then the values with i zero-bits.
inline GuessComplexity guess_complexity(const Rational& alpha, int n) {
  detail::check_alpha(alpha);
  if (n < 1 || n > 16) throw DomainError("block parameter n must be in [1, 16]");
  const unsigned width = static_cast<unsigned>(4 * n);
  Rational com = 0;
  for (int i = 0; i < 2 * n; ++i) {
    const BigInt c = big_binomial(width, static_cast<unsigned>(i));
    const BigInt h = class_offset_H(i, n);
    com += class_value_prob(i, alpha, n) * Rational(c * h + detail::triangle(c));
    com += class_value_prob(4 * n - i, alpha, n) * Rational(c * h + c * c + detail::triangle(c));
  }
  const BigInt c = big_binomial(width, static_cast<unsigned>(2 * n));
  com += class_value_prob(2 * n, alpha, n) * Rational(c * class_offset_H(2 * n, n) + detail::triangle(c));
  return {com, log2_rational(com)};
}

/// Uncorrected closed form, kept
/// for comparison: it adds H(i) once per class instead of once per value.
inline Rational guess_complexity_printed(const Rational& alpha, int n) {
  detail::check_alpha(alpha);
  const unsigned width = static_cast<unsigned>(4 * n);
  Rational com = 0;
  for (int i = 0; i < 2 * n; ++i) {
    const BigInt c = big_binomial(width, static_cast<unsigned>(i));
    const Rational h(class_offset_H(i, n));
    com += (class_value_prob(i, alpha, n) + class_value_prob(4 * n - i, alpha, n)) * (h + Rational(detail::triangle(c)));
    com += class_value_prob(4 * n - i, alpha, n) * Rational(c);
  }
  const BigInt c = big_binomial(width, static_cast<unsigned>(2 * n));
  com += class_value_prob(2 * n, alpha, n) * (Rational(class_offset_H(2 * n, n)) + Rational(detail::triangle(c)));
  return com;
}

/// Exact mean 1-based rank for any guess order, summed class by class.
inline Rational expected_rank(GuessOrder order, const Rational& alpha, int n) {
  detail::check_alpha(alpha);
  if (order == GuessOrder::natural) {
    // rank = value + 1 and every bit is 1 with probability 1-alpha
    return 1 + (1 - alpha) * Rational((BigInt(1) << (4 * n)) - 1);
  }
  Rational sum = 0;
  BigInt offset = 0;
  for (int ones : detail::class_popcounts(order, n)) {
    const BigInt c = big_binomial(static_cast<unsigned>(4 * n), static_cast<unsigned>(ones));
    sum += class_value_prob(ones, alpha, n) * Rational(c * offset + detail::triangle(c));
    offset += c;
  }
  return sum;
}

/// Mean 1-based rank of a random noise vector with independent bits
/// (P[bit = 0] = alpha) under `order`.
inline double mean_guess_rank_mc(double alpha, int n, GuessOrder order, std::size_t trials, std::uint64_t seed,
                                 unsigned workers = 1) {
  const CandidateOrder ranking(order, n);
  const auto ranks = run_trials<std::uint64_t>(trials, seed, workers, [&](std::mt19937_64& rng) {
    std::uint64_t v = 0;
    for (int b = 0; b < 4 * n; ++b) v = (v << 1) | (unit_double(rng) < alpha ? 0u : 1u);
    return ranking.rank(Block(v, n)) + 1;
  });
  long double total = 0;
  for (auto r : ranks) total += static_cast<long double>(r);
  return trials == 0 ? 0.0 : static_cast<double>(total / static_cast<long double>(trials));
}

struct CurvePoint {
  Rational alpha;
  double log2_com = 0;
};

using ComplexityCurve = std::vector<CurvePoint>;

/// log2 Com(alpha) on alpha = k/steps, k = 1..steps-1.
inline ComplexityCurve complexity_curve(int n, int steps = 100) {
  ComplexityCurve curve;
  for (int k = 1; k < steps; ++k) {
    const Rational alpha(k, steps);
    curve.push_back({alpha, guess_complexity(alpha, n).log2_com});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Influence of beta
// ---------------------------------------------------------------------------

struct BetaImpact {
  Rational p;                  ///< chance per iteration of hitting 0 or 1: 2/2^L
  BigInt expected_first_hit;   ///< 1/p
  Rational decryptable_bytes;  ///< leading bytes produced before beta matters: 1/(8p)
};

inline BetaImpact beta_impact(int L) {
  if (L < 2) throw DomainError("precision must be at least 2 bits");
  const BigInt hit = BigInt(1) << (L - 1);
  return {Rational(1, hit), hit, Rational(hit, 8)};
}

struct FirstHitCensus {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;  ///< no boundary state within max_iter
  double mean_hit = 0;       ///< over hits only
};

/// first_hit_boundary for `samples` x0 drawn uniformly from the raw states.
inline FirstHitCensus first_hit_census(const TentParams& p, std::size_t samples, std::uint64_t max_iter,
                                       std::uint64_t seed, unsigned workers = 1) {
  const Backend backend = p.backend();
  if (!backend.is_fixed()) throw DomainError("census needs a fixed-point backend");
  const auto hits = run_trials<std::optional<std::uint64_t>>(samples, seed, workers, [&](std::mt19937_64& rng) {
    const Fraction x0 = Fraction::from_raw(backend, uniform_below(rng, backend.one_raw() + 1));
    return first_hit_boundary(x0, p, max_iter);
  });
  FirstHitCensus census;
  long double total = 0;
  for (const auto& h : hits) {
    if (h) {
      ++census.hits;
      total += static_cast<long double>(*h);
    } else {
      ++census.misses;
    }
  }
  if (census.hits != 0) census.mean_hit = static_cast<double>(total / static_cast<long double>(census.hits));
  return census;
}

// ---------------------------------------------------------------------------
// Dynamical degradation
// ---------------------------------------------------------------------------

struct DegradationReport {
  OrbitReport orbit;
  int beta_precision = 0;
  int x0_precision = 0;  ///< 0 when x0 is 0
  bool period_law_holds = false;
  bool transient_bound_holds = false;

  bool flagged() const { return !orbit.conclusive || !period_law_holds || !transient_bound_holds; }
};

/// Orbit of G_{0.5,beta} from x0: checks period = n_beta + 1 and
/// transient <= n_x0 + 1.
inline DegradationReport degradation_report(Fraction beta, Fraction x0, std::uint64_t max_iter = std::uint64_t{1} << 20,
                                            std::size_t sample_count = 64) {
  const Backend backend = beta.backend();
  const TentParams p(Fraction::from_raw(backend, half_raw(backend)), beta);
  DegradationReport report;
  report.orbit = analyze_orbit(x0, p, max_iter, sample_count);
  report.beta_precision = binary_precision(beta);
  report.x0_precision = x0.is_zero() ? 0 : binary_precision(x0);
  report.period_law_holds = report.orbit.conclusive && report.orbit.period == static_cast<std::uint64_t>(report.beta_precision) + 1;
  report.transient_bound_holds =
      report.orbit.conclusive && report.orbit.transient_len <= static_cast<std::uint64_t>(report.x0_precision) + 1;
  return report;
}

struct CensusResult {
  double mean_rho = 0;
  std::uint64_t samples = 0;
  std::uint64_t inconclusive = 0;
};

/// Mean rho length (transient + period) of orbits from uniformly drawn x0.
inline CensusResult orbit_length_census(const TentParams& p, std::size_t samples, std::uint64_t seed,
                                        unsigned workers = 1, std::uint64_t max_iter = std::uint64_t{1} << 22) {
  const Backend backend = p.backend();
  if (!backend.is_fixed() || backend.bits > 24) throw DomainError("census needs a fixed-point backend with L <= 24");
  const ExtendedTentMap map(p);
  const auto lengths = run_trials<std::optional<std::uint64_t>>(samples, seed, workers, [&](std::mt19937_64& rng) {
    const std::uint64_t x0 = uniform_below(rng, backend.one_raw() + 1);
    const auto cycle = find_cycle(x0, map, max_iter);
    return cycle ? std::optional<std::uint64_t>(cycle->rho_length()) : std::nullopt;
  });
  CensusResult result;
  long double total = 0;
  for (const auto& len : lengths) {
    if (len) {
      total += static_cast<long double>(*len);
      ++result.samples;
    } else {
      ++result.inconclusive;
    }
  }
  if (result.samples != 0) result.mean_rho = static_cast<double>(total / static_cast<long double>(result.samples));
  return result;
}

/// Exact mean rho length over every state 0 .. 2^L.
inline Rational orbit_length_exhaustive(const TentParams& p) {
  const Backend backend = p.backend();
  if (!backend.is_fixed() || backend.bits > 16) throw DomainError("exhaustive census needs a fixed-point backend with L <= 16");
  const ExtendedTentMap map(p);
  BigInt total = 0;
  const std::uint64_t states = backend.one_raw() + 1;
  for (std::uint64_t x = 0; x < states; ++x) total += find_cycle_hashed(x, map, states)->rho_length();
  return Rational(total, BigInt(states));
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline std::string format_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string format_decimal(const Rational& v) {
  return format_decimal(v.convert_to<double>());
}

/// `value,count,frequency,theoretical`; header only when nothing was sampled.
inline std::string histogram_csv(const Histogram& h) {
  std::string out = "value,count,frequency,theoretical\n";
  if (h.samples == 0) return out;
  for (std::uint64_t v = 0; v < h.counts.size(); ++v) {
    out += std::to_string(v) + "," + std::to_string(h.counts[v]) + "," + format_decimal(h.frequency(v)) + "," +
           format_decimal(theoretical_prob(Block(v, h.n), h.zero_bit_probability)) + "\n";
  }
  return out;
}

inline std::string curve_csv(const ComplexityCurve& curve) {
  std::string out = "alpha,log2_com\n";
  for (const auto& point : curve) out += format_decimal(point.alpha) + "," + format_decimal(point.log2_com) + "\n";
  return out;
}

using Report = std::vector<std::pair<std::string, std::string>>;

inline std::string report_csv(const Report& report) {
  std::string out = "key,value\n";
  for (const auto& [key, value] : report) out += key + "," + value + "\n";
  return out;
}

inline void emit_csv(const std::string& content, const std::string& path) {
  try {
    write_text_file(path, content);
  } catch (const FormatError& e) {
    throw FormatError(std::string("CSV output: ") + e.what());
  }
}

}  // namespace tentbreak
