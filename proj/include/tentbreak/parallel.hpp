#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace tentbreak {

/// Trials are grouped in fixed chunks; chunk c draws from mt19937_64 seeded
/// with (seed, c). Results depend on the seed only, not on `workers`.
inline constexpr std::size_t trial_chunk = 4096;

inline std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform integer in [0, bound) by rejection on raw engine output.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return rng();
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v = 0;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Runs fn(rng) for each of `trials` trials and returns the results in trial order.
template <class R, class Fn>
std::vector<R> run_trials(std::size_t trials, std::uint64_t seed, unsigned workers, Fn fn) {
  std::vector<R> results(trials);
  const std::size_t chunks = (trials + trial_chunk - 1) / trial_chunk;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      auto rng = chunk_rng(seed, c);
      const std::size_t end = std::min(trials, (c + 1) * trial_chunk);
      for (std::size_t i = c * trial_chunk; i < end; ++i) results[i] = fn(rng);
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
  if (workers == 1) {
    work();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  return results;
}

}  // namespace tentbreak
