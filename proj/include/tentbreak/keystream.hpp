#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tentbreak/block.hpp"
#include "tentbreak/fraction.hpp"
#include "tentbreak/permutation.hpp"
#include "tentbreak/tentmap.hpp"

namespace tentbreak {

/// How orbit states become noise bits.
enum class Extractor : std::uint8_t {
  standard,  ///< u_i = 0 iff x_i <= alpha
  mended,    ///< u_i = 0 iff x_i <= 0.5
};

inline std::uint64_t half_raw(Backend backend) {
  return backend.is_fixed() ? std::uint64_t{1} << (backend.bits - 1) : std::bit_cast<std::uint64_t>(0.5);
}

namespace detail {

/// Raw encodings of non-negative values order the same way as the values,
/// for both backends, so thresholds compare raw words directly.
inline std::uint64_t threshold_raw(Extractor extractor, const Fraction& alpha) {
  return extractor == Extractor::standard ? alpha.raw() : half_raw(alpha.backend());
}

}  // namespace detail

/// u_i = 0 if x_i <= alpha else 1, for the first `count` orbit states.
inline std::vector<std::uint8_t> extract_bits(std::span<const Fraction> orbit, Fraction alpha, std::size_t count) {
  if (orbit.size() < count) throw LengthError("orbit shorter than requested bit count");
  std::vector<std::uint8_t> bits;
  bits.reserve(count);
  for (std::size_t i = 0; i < count; ++i) bits.push_back(orbit[i] <= alpha ? 0 : 1);
  return bits;
}

/// Balanced extractor: threshold fixed at 0.5 regardless of alpha.
inline std::vector<std::uint8_t> extract_bits_mended(std::span<const Fraction> orbit, std::size_t count) {
  if (orbit.size() < count) throw LengthError("orbit shorter than requested bit count");
  std::vector<std::uint8_t> bits;
  bits.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    bits.push_back(orbit[i].raw() <= half_raw(orbit[i].backend()) ? 0 : 1);
  }
  return bits;
}

/// Streams 4n-bit noise vectors U_0, U_1, ... off the orbit starting at x0.
/// U_j packs u_{4jn} .. u_{4jn+4n-1} with u_{4jn} as the most significant
/// bit; u_0 comes from x0 itself.
class NoiseVectorStream {
 public:
  NoiseVectorStream(Fraction x0, const TentParams& p, int n, Extractor extractor = Extractor::standard,
                    Perturbation perturbation = {})
      : orbit_(x0, p, std::move(perturbation)), threshold_(detail::threshold_raw(extractor, p.alpha)), n_(n) {
    if (n < 1 || n > Block::max_quarter_width) throw DomainError("block parameter n must be in [1, 16]");
  }

  Block next() {
    std::uint64_t value = 0;
    for (int k = 0; k < 4 * n_; ++k) {
      if (!first_) orbit_.advance();
      first_ = false;
      value = (value << 1) | (orbit_.current_raw() <= threshold_ ? 0u : 1u);
    }
    return Block(value, n_);
  }

 private:
  Orbit orbit_;
  std::uint64_t threshold_;
  int n_;
  bool first_ = true;
};

/// U_0 ... U_{j_max}.
inline std::vector<Block> build_noise_vectors(Fraction x0, const TentParams& p, int n, std::size_t j_max,
                                              Extractor extractor = Extractor::standard) {
  NoiseVectorStream stream(x0, p, n, extractor);
  std::vector<Block> out;
  out.reserve(j_max + 1);
  for (std::size_t j = 0; j <= j_max; ++j) out.push_back(stream.next());
  return out;
}

/// V_j = U_j xor K.
inline Block compute_Vj(Block uj, Block k) { return uj ^ k; }

}  // namespace tentbreak
