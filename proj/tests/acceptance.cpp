// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include "tentbreak/tentbreak.hpp"

using namespace tentbreak;

namespace {

const Backend fp62 = Backend::fixed(62);
const Backend f64 = Backend::binary64();

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s criterion %s: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Fraction dec(const char* text, Backend b = fp62) { return Fraction::from_decimal(text, b); }

Fraction random_interior(std::mt19937_64& rng, Backend b) {
  if (b.is_fixed()) return Fraction::from_raw(b, 1 + uniform_below(rng, b.one_raw() - 1));
  double v = 0;
  while (v == 0.0) v = unit_double(rng);
  return Fraction::from_double(v, b);
}

std::vector<Block> random_blocks(std::mt19937_64& rng, std::size_t count, int n) {
  std::vector<Block> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(rng() & Block::mask_for(n), n);
  return out;
}

struct Target {
  KeyMaterial key;
  std::uint64_t t;
};

std::vector<Target> random_targets(std::size_t count, int n, std::size_t r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Target> out;
  while (out.size() < count) {
    const KeyMaterial key{random_interior(rng, fp62), random_interior(rng, fp62), random_interior(rng, fp62),
                          Block(rng() & Block::mask_for(n), n)};
    const std::uint64_t t = 1 + uniform_below(rng, 2'000'000'000);
    if (Session::create(key, t, n, r).degenerate()) continue;
    out.push_back({key, t});
  }
  return out;
}

// 1 and 2: differential recovery of every f_j, chosen plaintext and chosen ciphertext.
void attack_criteria(const std::vector<Target>& targets) {
  const int n = 2;
  const std::size_t r = 8;
  const auto start = std::chrono::steady_clock::now();
  int exact = 0;
  bool budget_ok = true;
  std::vector<RecoveredState> cpa;
  for (const Target& target : targets) {
    const Session truth = Session::create(target.key, target.t, n, r);
    EncryptionOracle oracle(target.key, target.t, n, r);
    RecoveredState state = recover_all_f(oracle, r, n);
    budget_ok = budget_ok && oracle.query_count() == (4 * n + 1) * r;
    bool all = true;
    for (std::size_t j = 0; j < r; ++j) all = all && state.f[j]->value == truth.f(j);
    exact += all ? 1 : 0;
    cpa.push_back(std::move(state));
  }
  const double elapsed = seconds_since(start);
  report("1", exact == 100 && budget_ok && elapsed < 5.0,
         fmt("CPA exact in %.0f/100 sessions, %.3f s total, ", exact, elapsed) +
             (budget_ok ? "72 queries each" : "query budget differs from 72"));

  int agree = 0;
  bool equal_budget = true;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    DecryptionOracle oracle(targets[s].key, targets[s].t, n, r);
    const RecoveredState state = recover_all_f_cca(oracle, r, n);
    equal_budget = equal_budget && oracle.query_count() == (4 * n + 1) * r;
    bool all = true;
    for (std::size_t j = 0; j < r; ++j) all = all && state.f[j]->value == cpa[s].f[j]->value;
    agree += all ? 1 : 0;
  }
  report("2", agree == 100 && equal_budget,
         fmt("CCA-inverted permutations equal CPA ones in %.0f/100 sessions", agree) +
             (equal_budget ? ", equal query budget" : ", query budget differs"));
}

// 3: permutations, then noise from two known pairs, then a fresh ciphertext.
void keyless_criterion(const std::vector<Target>& targets) {
  const int n = 2;
  const std::size_t r = 8;
  std::mt19937_64 rng(303);
  int exact = 0;
  std::size_t ambiguous_blocks = 0;
  for (const Target& target : targets) {
    const Session truth = Session::create(target.key, target.t, n, r);
    EncryptionOracle oracle(target.key, target.t, n, r);
    RecoveredState state = recover_all_f(oracle, r, n);
    std::vector<KnownMessage> known;
    for (int k = 0; k < 2; ++k) {
      const Message plain{random_blocks(rng, r, n), target.t};
      known.push_back({plain, encrypt(truth, plain)});
    }
    const NoiseSolveReport solved = solve_noise(state, known);
    for (std::size_t c : solved.solution_counts) ambiguous_blocks += c > 1 ? 1 : 0;
    const Message fresh{random_blocks(rng, r, n), target.t};
    const auto out = keyless_decrypt(state, encrypt(truth, fresh));
    bool all = out.size() == r;
    for (std::size_t j = 0; all && j < r; ++j) all = out[j] && *out[j] == fresh.blocks[j];
    exact += all ? 1 : 0;
  }
  report("3", exact == 100,
         fmt("keyless decryption exact in %.0f/100 sessions (%.0f ambiguous blocks resolved by first solution)", exact,
             static_cast<double>(ambiguous_blocks)));
}

// 4: decrypt after encrypt is the identity.
void round_trip_criterion() {
  std::mt19937_64 rng(404);
  int ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Backend b = trial % 2 == 0 ? fp62 : f64;
    const int n = 1 + (trial / 2) % 2;
    const std::size_t r = 1 + uniform_below(rng, 32);
    const KeyMaterial key{random_interior(rng, b), random_interior(rng, b), random_interior(rng, b),
                          Block(rng() & Block::mask_for(n), n)};
    const Session s = Session::create(key, 1 + uniform_below(rng, 2'000'000'000), n, r);
    const Message plain{random_blocks(rng, 1 + uniform_below(rng, r), n), s.t()};
    ok += decrypt(s, encrypt(s, plain)) == plain ? 1 : 0;
  }
  report("4", ok == 500, fmt("round trip exact for %.0f/500 tuples (n in {1,2}, r <= 32, both backends)", ok));
}

// 5: small alpha concentrates the noise on the all-ones vector.
void histogram_criterion() {
  const TentParams p(dec("0.1", f64), dec("0.7", f64));
  const Histogram h = sample_histogram(p, dec("0.3", f64), 2, 1000);
  const auto low = std::count_if(h.counts.begin(), h.counts.end(), [&](std::uint64_t c) { return c < 10; });
  report("5", h.frequency(255) >= 0.40 && h.frequency(255) <= 0.60 && low >= 200,
         fmt("frequency(255) = %.3f, %.0f bins below 0.01", h.frequency(255), static_cast<double>(low)));
}

// 6: alpha = 0.5 collapses orbits and noise.
void degradation_criterion() {
  bool ok = true;
  std::string detail;
  for (Backend b : {f64, fp62}) {
    const TentParams p(dec("0.5", b), dec("0.4", b));
    const OrbitReport orbit = analyze_orbit(dec("0.123", b), p, 1 << 20);
    const auto expect = static_cast<std::uint64_t>(binary_precision(p.beta)) + 1;
    ok = ok && orbit.conclusive && orbit.period == expect;
    detail += b.name() + fmt(" period %.0f (expected %.0f); ", static_cast<double>(orbit.period), static_cast<double>(expect));
  }
  const Histogram h = sample_histogram(TentParams(dec("0.5", f64), dec("0.7", f64)), dec("0.3", f64), 2, 1000);
  const double combined = h.frequency(85) + h.frequency(170);
  ok = ok && combined >= 0.8;
  report("6", ok, detail + fmt("bins 85/170 = %.3f + %.3f = %.3f", h.frequency(85), h.frequency(170), combined));
}

// 7: exact guess complexity.
void complexity_criterion() {
  const auto start = std::chrono::steady_clock::now();
  bool midpoint = true;
  for (int n : {1, 2, 16}) {
    midpoint = midpoint && guess_complexity(Rational(1, 2), n).com == Rational((BigInt(1) << (4 * n)) + 1, 2);
  }
  bool monotone = true;
  const auto curve = complexity_curve(16);
  for (std::size_t k = 1; k < 49; ++k) monotone = monotone && curve[k].log2_com >= curve[k - 1].log2_com;
  double worst = 0;
  for (int k = 1; k <= 4; ++k) {
    const double exact = guess_complexity(Rational(k, 10), 1).com.convert_to<double>();
    const double mc = mean_guess_rank_mc(k / 10.0, 1, GuessOrder::paired, 100'000, 700 + static_cast<unsigned>(k));
    worst = std::max(worst, std::fabs(mc / exact - 1.0));
  }
  const double elapsed = seconds_since(start);
  report("7", midpoint && monotone && worst <= 0.02 && elapsed < 60.0,
         std::string("Com(0.5) midpoint ") + (midpoint ? "exact" : "WRONG") + ", monotone on 0.01..0.49 " +
             (monotone ? "yes" : "NO") +
             fmt(", log2 Com(0.01) = %.2f, worst Monte Carlo deviation %.2f%%, %.2f s", curve[0].log2_com, 100 * worst,
                 elapsed));
}

// 8: boundary hits.
void beta_criterion() {
  const BetaImpact b = beta_impact(30);
  const bool exact = b.p == Rational(1, BigInt(1) << 29) && b.expected_first_hit == (BigInt(1) << 29) &&
                     b.decryptable_bytes == Rational(BigInt(1) << 26);
  report("8a", exact, std::string("beta_impact(30) = (2^-29, 2^29, 2^26 bytes) ") + (exact ? "exactly" : "MISMATCH"));

  const Backend L16 = Backend::fixed(16);
  const TentParams p(dec("0.37", L16), dec("0.4", L16));
  const FirstHitCensus c = first_hit_census(p, 200, std::uint64_t{1} << 20, 808);
  const bool ok = c.hits == 200 && c.mean_hit >= 0x1p14 && c.mean_hit <= 0x1p16;
  report("8b", ok,
         fmt("L=16, 200 orbits: %.0f hit 0 or 1 within 2^20 steps, %.0f never did; mean over hits %.1f (target [16384, 65536])",
             static_cast<double>(c.hits), static_cast<double>(c.misses), c.mean_hit));
}

// 9: the independent-bit model is a distribution.
void normalization_criterion() {
  bool ok = true;
  for (int n : {1, 2}) {
    for (const char* a : {"0.01", "0.1", "0.37", "0.5", "0.73", "0.999"}) {
      Rational total = 0;
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << (4 * n)); ++v) {
        total += theoretical_prob(Block(v, n), parse_decimal_rational(a));
      }
      ok = ok && total == 1;
    }
  }
  report("9", ok, std::string("sum of Prob{U=a} over all a ") + (ok ? "is exactly 1" : "differs from 1") +
                      " for n in {1,2}, six alphas");
}

// 10: balanced extractor.
void mended_criterion() {
  const TentParams p(dec("0.1"), dec("0.7"));
  const double ones = one_bit_frequency(p, dec("0.3"), 32000, Extractor::mended);
  report("10a", ones >= 0.45 && ones <= 0.55, fmt("mended 1-bit frequency %.4f over 32000 bits", ones));
  const Histogram h = sample_histogram(p, dec("0.3"), 2, 32000, Extractor::mended);
  std::uint64_t top = 0;
  std::uint64_t argmax = 0;
  for (std::uint64_t v = 0; v < h.counts.size(); ++v) {
    if (h.counts[v] > top) {
      top = h.counts[v];
      argmax = v;
    }
  }
  report("10b", h.frequency(argmax) <= 0.05,
         fmt("mended n=2 histogram max bin %.0f at frequency %.4f (limit 0.05)", static_cast<double>(argmax),
             h.frequency(argmax)));
}

}  // namespace

int main() {
  const auto targets = random_targets(100, 2, 8, 101);
  attack_criteria(targets);
  keyless_criterion(targets);
  round_trip_criterion();
  histogram_criterion();
  degradation_criterion();
  complexity_criterion();
  beta_criterion();
  normalization_criterion();
  mended_criterion();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
