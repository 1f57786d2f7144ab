#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "tentbreak/tentbreak.hpp"

namespace tbtest {

using namespace tentbreak;

inline const Backend fp62 = Backend::fixed(62);
inline const Backend f64 = Backend::binary64();

inline Fraction dec(std::string_view text, Backend backend = fp62) { return Fraction::from_decimal(text, backend); }

inline TentParams params(std::string_view alpha, std::string_view beta, Backend backend = fp62) {
  return {dec(alpha, backend), dec(beta, backend)};
}

/// Uniform fraction strictly inside (0,1).
inline Fraction random_interior(std::mt19937_64& rng, Backend backend) {
  if (backend.is_fixed()) {
    return Fraction::from_raw(backend, 1 + uniform_below(rng, backend.one_raw() - 1));
  }
  double v = 0;
  while (v == 0.0) v = unit_double(rng);
  return Fraction::from_double(v, backend);
}

inline KeyMaterial random_key(std::mt19937_64& rng, int n, Backend backend = fp62) {
  return {random_interior(rng, backend), random_interior(rng, backend), random_interior(rng, backend),
          Block(rng() & Block::mask_for(n), n)};
}

inline std::uint64_t random_t(std::mt19937_64& rng) { return 1 + uniform_below(rng, 2'000'000'000); }

inline std::vector<Block> random_blocks(std::mt19937_64& rng, std::size_t count, int n) {
  std::vector<Block> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(rng() & Block::mask_for(n), n);
  return out;
}

}  // namespace tbtest
