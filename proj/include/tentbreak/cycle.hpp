#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>

namespace tentbreak {

/// Shape of an eventually periodic sequence x_0, x_1 = step(x_0), ...:
/// x_transient is the first state on the cycle, and the cycle has `period` states.
struct Cycle {
  std::uint64_t transient = 0;
  std::uint64_t period = 0;

  std::uint64_t rho_length() const { return transient + period; }
  friend bool operator==(const Cycle&, const Cycle&) = default;
};

/// Exact cycle detection with a hash map of visited states. Needs memory
/// proportional to transient + period; gives up after `max_steps` steps.
template <class State, class Step, class Hash = std::hash<State>>
std::optional<Cycle> find_cycle_hashed(State x0, Step&& step, std::uint64_t max_steps) {
  std::unordered_map<State, std::uint64_t, Hash> first_seen;
  State x = x0;
  for (std::uint64_t i = 0; i <= max_steps; ++i) {
    auto [it, inserted] = first_seen.try_emplace(x, i);
    if (!inserted) return Cycle{it->second, i - it->second};
    if (i == max_steps) break;
    x = step(x);
  }
  return std::nullopt;
}

/// Brent's two-pointer cycle detection, constant memory. The search phase is
/// allowed `4 * max_steps` step evaluations.
template <class State, class Step>
std::optional<Cycle> find_cycle_brent(State x0, Step&& step, std::uint64_t max_steps) {
  const std::uint64_t budget = 4 * max_steps + 4;
  std::uint64_t spent = 0;
  std::uint64_t power = 1;
  std::uint64_t period = 1;
  State tortoise = x0;
  State hare = step(x0);
  ++spent;
  while (!(tortoise == hare)) {
    if (power == period) {
      tortoise = hare;
      power *= 2;
      period = 0;
    }
    hare = step(hare);
    ++period;
    if (++spent > budget) return std::nullopt;
  }

  tortoise = x0;
  hare = x0;
  for (std::uint64_t i = 0; i < period; ++i) hare = step(hare);
  std::uint64_t transient = 0;
  while (!(tortoise == hare)) {
    tortoise = step(tortoise);
    hare = step(hare);
    ++transient;
  }
  return Cycle{transient, period};
}

/// Hash-map detection for short budgets, Brent beyond that.
template <class State, class Step>
std::optional<Cycle> find_cycle(State x0, Step&& step, std::uint64_t max_steps) {
  constexpr std::uint64_t hashed_limit = std::uint64_t{1} << 20;
  if (max_steps <= hashed_limit) return find_cycle_hashed(x0, step, max_steps);
  return find_cycle_brent(x0, step, max_steps);
}

}  // namespace tentbreak
