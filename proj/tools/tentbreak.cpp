#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tentbreak/tentbreak.hpp"

using namespace tentbreak;

namespace {

enum Exit : int { ok = 0, usage = 2, oracle_violation = 3, verification_failed = 4 };

struct Config {
  std::string backend;
  int n = 2;
  std::size_t r = 8;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out = "-";
};

std::uint64_t resolve_seed(const Config& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("TENTBREAK_SEED")) {
    return detail::parse_u64(detail::trim(env), "TENTBREAK_SEED");
  }
  return 0;
}

Backend resolve_backend(const Config& cfg, Backend fallback) {
  return cfg.backend.empty() ? fallback : Backend::parse(cfg.backend);
}

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  write_text_file(path, content);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  const std::string text = read_text_file(path);
  return {text.begin(), text.end()};
}

std::string bytes_as_string(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

Fraction random_fraction(std::mt19937_64& rng, Backend b, double lo, double hi) {
  while (true) {
    if (b.is_fixed()) {
      const auto low = static_cast<std::uint64_t>(std::ceil(std::ldexp(lo, b.bits)));
      const auto high = static_cast<std::uint64_t>(std::floor(std::ldexp(hi, b.bits)));
      const Fraction f = Fraction::from_raw(b, low + uniform_below(rng, high - low + 1));
      if (f.to_double() > lo && f.to_double() < hi && !f.is_boundary()) return f;
    } else {
      const double v = lo + (hi - lo) * unit_double(rng);
      if (v > lo && v < hi) return Fraction::from_double(v, b);
    }
  }
}

std::string yes_no(bool v) { return v ? "true" : "false"; }

// ---------------------------------------------------------------------------

struct KeygenArgs {
  std::string alpha;
  std::string beta;
  std::string gamma;
  bool allow_weak = false;
};

int cmd_keygen(const Config& cfg, const KeygenArgs& args) {
  const Backend b = resolve_backend(cfg, Backend::fixed(62));
  std::mt19937_64 rng = chunk_rng(resolve_seed(cfg), 0);
  KeyMaterial key{Fraction::zero(b), Fraction::zero(b), Fraction::zero(b), Block(0, cfg.n)};
  if (!args.alpha.empty()) {
    key.alpha = Fraction::parse(args.alpha, b);
  } else if (args.allow_weak) {
    key.alpha = random_fraction(rng, b, 0.0, 1.0);
  } else {
    do {
      key.alpha = random_fraction(rng, b, 0.49, 0.51);
    } while (key.alpha.raw() == half_raw(b));
  }
  key.beta = args.beta.empty() ? random_fraction(rng, b, 0.0, 1.0) : Fraction::parse(args.beta, b);
  key.gamma = args.gamma.empty() ? random_fraction(rng, b, 0.0, 1.0) : Fraction::parse(args.gamma, b);
  key.K = Block(rng() & Block::mask_for(cfg.n), cfg.n);
  key.validate();
  if (!key.alpha_in_recommended_range()) {
    std::fprintf(stderr, "warning: alpha = %.6f lies outside 0 < |alpha - 0.5| < 0.01; its noise vectors are biased\n",
                 key.alpha.to_double());
  }
  write_output(cfg.out, format_key_file(key));
  return ok;
}

// ---------------------------------------------------------------------------

struct CryptArgs {
  std::string key;
  std::string in;
  std::optional<std::uint64_t> t;
  std::string state;
};

KeyFile load_key(const Config& cfg, const std::string& path) {
  return parse_key_file(read_text_file(path), resolve_backend(cfg, Backend::fixed(62)));
}

int cmd_encrypt(const Config& cfg, const CryptArgs& args) {
  const KeyFile key = load_key(cfg, args.key);
  const auto blocks = bytes_to_blocks(read_bytes(args.in), key.n);
  const std::uint64_t t = args.t.value_or(static_cast<std::uint64_t>(std::time(nullptr)));
  const Session s = Session::create(key.key, t, key.n, std::max<std::size_t>(blocks.size(), 1));
  if (s.degenerate()) std::fprintf(stderr, "warning: t = %llu gives a degenerate initial condition\n", static_cast<unsigned long long>(t));
  write_output(cfg.out, format_ciphertext(encrypt(s, Message{blocks, t}), key.n));
  return ok;
}

int cmd_decrypt(const Config& cfg, const CryptArgs& args) {
  const CiphertextFile c = parse_ciphertext(read_text_file(args.in));
  if (!args.state.empty()) {
    const RecoveredState state = parse_state(read_text_file(args.state));
    if (state.n != c.n) throw DomainError("ciphertext has n=" + std::to_string(c.n) + " but the state has n=" + std::to_string(state.n));
    const auto out = keyless_decrypt(state, c.message);
    std::vector<Block> plain;
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (!out[j]) {
        std::fprintf(stderr, "block %zu and later are outside the recovered state\n", j + 1);
        return verification_failed;
      }
      plain.push_back(*out[j]);
    }
    write_output(cfg.out, bytes_as_string(blocks_to_bytes(plain)));
    return ok;
  }
  const KeyFile key = load_key(cfg, args.key);
  if (key.n != c.n) throw DomainError("ciphertext has n=" + std::to_string(c.n) + " but the key has n=" + std::to_string(key.n));
  const Session s = Session::create(key.key, c.message.t, key.n, std::max<std::size_t>(c.message.blocks.size(), 1));
  write_output(cfg.out, bytes_as_string(blocks_to_bytes(decrypt(s, c.message).blocks)));
  return ok;
}

// ---------------------------------------------------------------------------

struct AttackArgs {
  std::string mode = "cpa";
  std::string key;
  std::optional<std::uint64_t> t;
  bool drift = false;
  std::size_t known = 2;
  std::string report;
};

int cmd_attack(const Config& cfg, const AttackArgs& args) {
  const Backend b = resolve_backend(cfg, Backend::fixed(62));
  std::mt19937_64 rng = chunk_rng(resolve_seed(cfg), 1);
  KeyMaterial key;
  if (args.key.empty()) {
    key = {random_fraction(rng, b, 0.0, 1.0), random_fraction(rng, b, 0.0, 1.0), random_fraction(rng, b, 0.0, 1.0),
           Block(rng() & Block::mask_for(cfg.n), cfg.n)};
  } else {
    const KeyFile file = load_key(cfg, args.key);
    if (file.n != cfg.n) throw DomainError("key has n=" + std::to_string(file.n) + " but --n is " + std::to_string(cfg.n));
    key = file.key;
  }
  const std::uint64_t t = args.t.value_or(1 + uniform_below(rng, 2'000'000'000));
  const ClockMode clock = args.drift ? ClockMode::drifting : ClockMode::fixed;
  const Session truth = Session::create(key, t, cfg.n, cfg.r);

  Report report{{"mode", args.mode}, {"n", std::to_string(cfg.n)}, {"r", std::to_string(cfg.r)}, {"t", std::to_string(t)},
                {"clock", args.drift ? "drifting" : "fixed"}};
  auto finish = [&](const RecoveredState& state, int code) {
    write_output(cfg.out, format_state(state));
    const std::string csv = report_csv(report);
    if (args.report.empty()) {
      std::fputs(csv.c_str(), stderr);
    } else {
      emit_csv(csv, args.report);
    }
    return code;
  };
  auto f_exact = [&](const RecoveredState& state) {
    for (std::size_t j = 0; j < cfg.r; ++j) {
      if (!state.f[j] || !(state.f[j]->value == truth.f(j))) return false;
    }
    return true;
  };

  RecoveredState state;
  if (args.mode == "cca") {
    DecryptionOracle oracle(key, t, cfg.n, cfg.r, clock);
    state = recover_all_f_cca(oracle, cfg.r, cfg.n);
    report.emplace_back("queries", std::to_string(oracle.query_count()));
    EncryptionOracle twin(key, t, cfg.n, cfg.r, clock);
    const RecoveredState cpa = recover_all_f(twin, cfg.r, cfg.n);
    bool agree = true;
    for (std::size_t j = 0; j < cfg.r; ++j) agree = agree && cpa.f[j]->value == state.f[j]->value;
    report.emplace_back("cpa_agrees", yes_no(agree));
  } else {
    EncryptionOracle oracle(key, t, cfg.n, cfg.r, clock);
    state = recover_all_f(oracle, cfg.r, cfg.n);
    report.emplace_back("queries", std::to_string(oracle.query_count()));
  }
  const bool exact = f_exact(state);
  report.emplace_back("f_exact", yes_no(exact));
  if (!exact) return finish(state, verification_failed);
  if (args.mode != "full") return finish(state, ok);

  if (cfg.n > 4) throw DomainError("full attack solves noise vectors exhaustively and needs n <= 4");
  std::vector<KnownMessage> known;
  for (std::size_t k = 0; k < args.known; ++k) {
    Message plain{{}, t};
    for (std::size_t j = 0; j < cfg.r; ++j) plain.blocks.emplace_back(rng() & Block::mask_for(cfg.n), cfg.n);
    known.push_back({plain, encrypt(truth, plain)});
  }
  const NoiseSolveReport solved = solve_noise(state, known);
  std::string counts;
  for (std::size_t c : solved.solution_counts) counts += (counts.empty() ? "" : " ") + std::to_string(c);
  report.emplace_back("known_messages", std::to_string(args.known));
  report.emplace_back("solution_counts", counts);
  Message fresh{{}, t};
  for (std::size_t j = 0; j < cfg.r; ++j) fresh.blocks.emplace_back(rng() & Block::mask_for(cfg.n), cfg.n);
  const auto recovered = keyless_decrypt(state, encrypt(truth, fresh));
  std::size_t correct = 0;
  for (std::size_t j = 0; j < cfg.r; ++j) correct += recovered[j] && *recovered[j] == fresh.blocks[j] ? 1 : 0;
  report.emplace_back("decrypted_blocks_correct", std::to_string(correct) + "/" + std::to_string(cfg.r));
  report.emplace_back("keyless_decryption_exact", yes_no(correct == cfg.r));
  return finish(state, correct == cfg.r ? ok : verification_failed);
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string state;
  std::vector<std::string> plain;
  std::vector<std::string> cipher;
  std::string order = "natural";
};

GuessOrder parse_order(const std::string& s) {
  if (s == "natural") return GuessOrder::natural;
  if (s == "ascending") return GuessOrder::ascending_zeros;
  if (s == "paired") return GuessOrder::paired;
  throw DomainError("unknown guess order '" + s + "'");
}

int cmd_solve_u(const Config& cfg, const SolveArgs& args) {
  if (args.plain.size() != args.cipher.size() || args.plain.empty()) {
    throw DomainError("give the same positive number of --plain and --cipher files");
  }
  RecoveredState state = parse_state(read_text_file(args.state));
  std::vector<KnownMessage> known;
  for (std::size_t i = 0; i < args.plain.size(); ++i) {
    const CiphertextFile c = parse_ciphertext(read_text_file(args.cipher[i]));
    if (c.n != state.n) throw DomainError("ciphertext '" + args.cipher[i] + "' has a different n than the state");
    const Message p{bytes_to_blocks(read_bytes(args.plain[i]), state.n), c.message.t};
    if (p.blocks.size() != c.message.blocks.size()) throw LengthError("plaintext and ciphertext lengths differ");
    known.push_back({p, c.message});
  }
  const NoiseSolveReport solved = solve_noise(state, known, parse_order(args.order));
  write_output(cfg.out, format_state(state));
  std::string counts;
  for (std::size_t c : solved.solution_counts) counts += (counts.empty() ? "" : " ") + std::to_string(c);
  std::fputs(report_csv({{"solved_blocks", std::to_string(solved.solution_counts.size())}, {"solution_counts", counts},
                         {"coverage", std::to_string(state.coverage())}})
                 .c_str(),
             stderr);
  return ok;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string figure;
  std::string alpha;
  std::string beta;
  std::string x0;
  std::optional<std::uint64_t> samples;
  std::string extractor = "standard";
  std::vector<int> L;
  int steps = 100;
  std::optional<std::uint64_t> count;
};

int cmd_analyze(const Config& cfg, const AnalyzeArgs& args, bool n_given) {
  auto pick = [](const std::string& given, const char* fallback) { return given.empty() ? std::string(fallback) : given; };
  const std::uint64_t seed = resolve_seed(cfg);

  if (args.figure == "fig1") {
    const Backend b = resolve_backend(cfg, Backend::binary64());
    const TentParams p(Fraction::parse(pick(args.alpha, "0.1"), b), Fraction::parse(pick(args.beta, "0.7"), b));
    const Extractor e = args.extractor == "mended" ? Extractor::mended : Extractor::standard;
    if (args.extractor != "mended" && args.extractor != "standard") throw DomainError("extractor must be standard or mended");
    write_output(cfg.out, histogram_csv(sample_histogram(p, Fraction::parse(pick(args.x0, "0.3"), b), cfg.n,
                                                         args.samples.value_or(1000), e)));
    return ok;
  }
  if (args.figure == "fig2") {
    write_output(cfg.out, curve_csv(complexity_curve(n_given ? cfg.n : 16, args.steps)));
    return ok;
  }
  if (args.figure == "fig3") {
    const Backend b = resolve_backend(cfg, Backend::binary64());
    const Fraction beta = Fraction::parse(pick(args.beta, "0.4"), b);
    const Fraction x0 = Fraction::parse(pick(args.x0, "0.123"), b);
    if (!args.alpha.empty() && Fraction::parse(args.alpha, b).raw() != half_raw(b)) {
      throw DomainError("the degradation report is defined for alpha = 0.5 only");
    }
    const std::uint64_t count = args.count.value_or(64);
    const DegradationReport d = degradation_report(beta, x0, std::uint64_t{1} << 20, count);
    Report report{{"alpha", "0.5"},
                  {"beta", format_decimal(beta.to_double())},
                  {"x0", format_decimal(x0.to_double())},
                  {"backend", b.name()},
                  {"conclusive", yes_no(d.orbit.conclusive)},
                  {"transient", std::to_string(d.orbit.transient_len)},
                  {"period", std::to_string(d.orbit.period)},
                  {"beta_precision", std::to_string(d.beta_precision)},
                  {"x0_precision", std::to_string(d.x0_precision)},
                  {"period_law_holds", yes_no(d.period_law_holds)},
                  {"transient_bound_holds", yes_no(d.transient_bound_holds)}};
    for (std::size_t i = 0; i < d.orbit.samples.size(); ++i) {
      report.emplace_back("x_" + std::to_string(i), format_decimal(d.orbit.samples[i].to_double()));
    }
    write_output(cfg.out, report_csv(report));
    return d.flagged() ? verification_failed : ok;
  }
  if (args.figure == "beta") {
    Report report;
    for (int L : args.L.empty() ? std::vector<int>{30, 62} : args.L) {
      const BetaImpact impact = beta_impact(L);
      const std::string prefix = "L" + std::to_string(L) + "_";
      report.emplace_back(prefix + "p", "1/" + boost::multiprecision::denominator(impact.p).str());
      report.emplace_back(prefix + "expected_first_hit", impact.expected_first_hit.str());
      report.emplace_back(prefix + "decryptable_bytes", boost::multiprecision::numerator(impact.decryptable_bytes).str());
      if (args.samples && L <= 24) {
        const Backend b = Backend::fixed(L);
        const TentParams p(Fraction::parse(pick(args.alpha, "0.37"), b), Fraction::parse(pick(args.beta, "0.4"), b));
        const FirstHitCensus c = first_hit_census(p, *args.samples, std::uint64_t{1} << 20, seed, cfg.workers);
        report.emplace_back(prefix + "orbits_hitting_boundary", std::to_string(c.hits));
        report.emplace_back(prefix + "orbits_missing_boundary", std::to_string(c.misses));
        report.emplace_back(prefix + "mean_first_hit", format_decimal(c.mean_hit));
      }
    }
    write_output(cfg.out, report_csv(report));
    return ok;
  }
  if (args.figure == "census") {
    Report report;
    double previous = 0;
    int previous_L = 0;
    for (int L : args.L.empty() ? std::vector<int>{12, 16, 20} : args.L) {
      const Backend b = Backend::fixed(L);
      const TentParams p(Fraction::parse(pick(args.alpha, "0.37"), b), Fraction::parse(pick(args.beta, "0.5"), b));
      const CensusResult c = orbit_length_census(p, args.samples.value_or(500), seed, cfg.workers);
      const std::string prefix = "L" + std::to_string(L) + "_";
      report.emplace_back(prefix + "mean_rho", format_decimal(c.mean_rho));
      report.emplace_back(prefix + "inconclusive", std::to_string(c.inconclusive));
      if (previous > 0) {
        report.emplace_back("ratio_L" + std::to_string(L) + "_over_L" + std::to_string(previous_L),
                            format_decimal(c.mean_rho / previous));
      }
      previous = c.mean_rho;
      previous_L = L;
    }
    write_output(cfg.out, report_csv(report));
    return ok;
  }
  throw DomainError("unknown analysis '" + args.figure + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-variant chaotic block cipher: encryption, differential attacks and analyses"};
  app.require_subcommand(1);
  app.fallthrough();
  Config cfg;
  app.add_option("--backend", cfg.backend, "Arithmetic backend: fp<L> (1..63) or f64");
  auto* n_opt = app.add_option("--n", cfg.n, "Block parameter n (blocks are 4n bits)")->check(CLI::Range(1, 16));
  app.add_option("--r", cfg.r, "Number of blocks per session")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  app.add_option("--seed", cfg.seed, "Seed for every random choice (fallback: TENTBREAK_SEED, then 0)");
  app.add_option("--workers", cfg.workers, "Worker threads for sampling")->check(CLI::Range(1u, 256u));
  app.add_option("--out", cfg.out, "Output path, '-' for stdout");

  KeygenArgs keygen;
  auto* kg = app.add_subcommand("keygen", "Generate a key file");
  kg->add_option("--alpha", keygen.alpha, "Use this alpha instead of sampling 0 < |alpha-0.5| < 0.01");
  kg->add_option("--beta", keygen.beta, "Use this beta");
  kg->add_option("--gamma", keygen.gamma, "Use this gamma");
  kg->add_flag("--allow-weak", keygen.allow_weak, "Sample alpha from all of (0,1)");

  CryptArgs crypt;
  auto* enc = app.add_subcommand("encrypt", "Encrypt a file of raw bytes");
  enc->add_option("--key", crypt.key, "Key file")->required();
  enc->add_option("--in", crypt.in, "Plaintext file")->required();
  enc->add_option("--t", crypt.t, "Timestamp (default: current time)");

  auto* decr = app.add_subcommand("decrypt", "Decrypt a ciphertext file, with the key or a recovered state");
  decr->add_option("--in", crypt.in, "Ciphertext file")->required();
  auto* key_opt = decr->add_option("--key", crypt.key, "Key file");
  auto* state_opt = decr->add_option("--state", crypt.state, "Recovered state file (keyless decryption)");
  key_opt->excludes(state_opt);

  AttackArgs attack;
  auto* atk = app.add_subcommand("attack", "Run a differential attack against a locally hosted victim");
  atk->add_option("mode", attack.mode, "cpa, cca or full")->check(CLI::IsMember({"cpa", "cca", "full"}));
  atk->add_option("--key", attack.key, "Victim key file (default: random key from the seed)");
  atk->add_option("--t", attack.t, "Victim timestamp (default: random from the seed)");
  atk->add_flag("--drift", attack.drift, "Let the victim clock advance by one per query");
  atk->add_option("--known", attack.known, "Known plaintext messages for the full attack")->check(CLI::Range(1, 1000));
  atk->add_option("--report", attack.report, "Write the report CSV here instead of stderr");

  SolveArgs solve;
  auto* su = app.add_subcommand("solve-u", "Solve noise vectors from known plaintext/ciphertext files");
  su->add_option("--state", solve.state, "State file with recovered permutations")->required();
  su->add_option("--plain", solve.plain, "Known plaintext file (repeatable)")->required();
  su->add_option("--cipher", solve.cipher, "Matching ciphertext file (repeatable)")->required();
  su->add_option("--order", solve.order, "Candidate order: natural, ascending or paired")
      ->check(CLI::IsMember({"natural", "ascending", "paired"}));

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Emit analysis data as CSV");
  an->add_option("figure", analyze.figure, "fig1, fig2, fig3, beta or census")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "beta", "census"}));
  an->add_option("--alpha", analyze.alpha, "alpha");
  an->add_option("--beta", analyze.beta, "beta");
  an->add_option("--x0", analyze.x0, "initial condition");
  an->add_option("--samples", analyze.samples, "sample count");
  an->add_option("--extractor", analyze.extractor, "standard or mended")->check(CLI::IsMember({"standard", "mended"}));
  an->add_option("--L", analyze.L, "fixed-point precisions (beta, census)");
  an->add_option("--steps", analyze.steps, "alpha grid steps (fig2)")->check(CLI::Range(2, 100000));
  an->add_option("--count", analyze.count, "orbit states to list (fig3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*kg) return cmd_keygen(cfg, keygen);
    if (*enc) return cmd_encrypt(cfg, crypt);
    if (*decr) {
      if (crypt.key.empty() && crypt.state.empty()) throw DomainError("decrypt needs --key or --state");
      return cmd_decrypt(cfg, crypt);
    }
    if (*atk) return cmd_attack(cfg, attack);
    if (*su) return cmd_solve_u(cfg, solve);
    if (*an) return cmd_analyze(cfg, analyze, n_opt->count() > 0);
  } catch (const OracleModelViolation& e) {
    std::fprintf(stderr, "oracle model violation: %s\n", e.what());
    return oracle_violation;
  } catch (const InconsistentInput& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return verification_failed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return usage;
  }
  return usage;
}
