#pragma once

#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tentbreak/block.hpp"
#include "tentbreak/cipher.hpp"
#include "tentbreak/error.hpp"
#include "tentbreak/fraction.hpp"
#include "tentbreak/permutation.hpp"

namespace tentbreak {

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

enum class ClockMode : std::uint8_t {
  fixed,     ///< attacker pinned the timestamp: every query sees the same session
  drifting,  ///< query q runs under t + q, as an untampered clock would
};

namespace detail {

/// Hidden victim state shared by both oracle kinds. The session for a
/// query is fixed in `fixed` mode and re-derived per query otherwise.
class HiddenMachine {
 public:
  HiddenMachine(const KeyMaterial& key, std::uint64_t t, int n, std::size_t r, ClockMode clock,
                const QuarterPermTable& table)
      : key_(key), table_(table), t_(t), n_(n), r_(r), clock_(clock), session_(Session::create(key, t, n, r, table)) {}

  HiddenMachine(const HiddenMachine& other)
      : key_(other.key_), table_(other.table_), t_(other.t_), n_(other.n_), r_(other.r_), clock_(other.clock_),
        session_(other.session_), queries_(other.queries_.load()) {}

  template <class Op>
  Message run(std::span<const Block> blocks, Op&& op) {
    const std::size_t q = queries_.fetch_add(1);
    Message in{{blocks.begin(), blocks.end()}, t_};
    if (clock_ == ClockMode::fixed) return op(session_, in);
    const Session drifted = Session::create(key_, t_ + q, n_, r_, table_);
    return op(drifted, in);
  }

  std::size_t query_count() const { return queries_.load(); }
  std::uint64_t clock() const { return t_; }
  int n() const { return n_; }
  std::size_t r() const { return r_; }

 private:
  KeyMaterial key_;
  QuarterPermTable table_;
  std::uint64_t t_;
  int n_;
  std::size_t r_;
  ClockMode clock_;
  Session session_;
  std::atomic<std::size_t> queries_{0};
};

}  // namespace detail

/// Encryption machine whose clock the attacker controls. Reveals ciphertexts only.
class EncryptionOracle {
 public:
  EncryptionOracle(const KeyMaterial& key, std::uint64_t t, int n, std::size_t r, ClockMode clock = ClockMode::fixed,
                   const QuarterPermTable& table = QuarterPermTable::lexicographic())
      : machine_(key, t, n, r, clock, table) {}

  Message query(std::span<const Block> plaintext) {
    return machine_.run(plaintext, [](const Session& s, const Message& m) { return encrypt(s, m); });
  }

  std::size_t query_count() const { return machine_.query_count(); }
  std::uint64_t clock() const { return machine_.clock(); }

 private:
  detail::HiddenMachine machine_;
};

/// Decryption machine fed through a public channel the attacker controls.
class DecryptionOracle {
 public:
  DecryptionOracle(const KeyMaterial& key, std::uint64_t t, int n, std::size_t r, ClockMode clock = ClockMode::fixed,
                   const QuarterPermTable& table = QuarterPermTable::lexicographic())
      : machine_(key, t, n, r, clock, table) {}

  Message query(std::span<const Block> ciphertext) {
    return machine_.run(ciphertext, [](const Session& s, const Message& m) { return decrypt(s, m); });
  }

  std::size_t query_count() const { return machine_.query_count(); }
  std::uint64_t clock() const { return machine_.clock(); }

 private:
  detail::HiddenMachine machine_;
};

// ---------------------------------------------------------------------------
// Differential recovery of f_{j-1}
// ---------------------------------------------------------------------------

/// The 4n+1 chosen messages of length j: (P*, ..., P*) followed by the
/// variants whose last block is P* ^ 2^{l-1}, l = 1..4n.
inline std::vector<std::vector<Block>> gen_cpa_battery(std::size_t j, int n, Block p_star) {
  if (j < 1) throw DomainError("battery needs j >= 1");
  if (p_star.quarter_width() != n) throw DomainError("P* width does not match n");
  std::vector<std::vector<Block>> battery;
  battery.reserve(static_cast<std::size_t>(4 * n + 1));
  battery.emplace_back(j, p_star);
  for (int l = 1; l <= 4 * n; ++l) {
    std::vector<Block> m(j, p_star);
    m.back() = p_star ^ Block(std::uint64_t{1} << (l - 1), n);
    battery.push_back(std::move(m));
  }
  return battery;
}

namespace detail {

/// Reads a permutation off the single-bit responses of a battery. `differences[l-1]`
/// is the output difference of block j for input difference 2^{l-1}.
inline BitPermutation assemble_from_differences(std::span<const Block> differences, int n, std::size_t j,
                                                const char* what) {
  std::vector<int> dest;
  dest.reserve(differences.size());
  for (std::size_t l = 1; l <= differences.size(); ++l) {
    const std::uint64_t delta = differences[l - 1].bits();
    if (!std::has_single_bit(delta)) {
      throw OracleModelViolation(std::string(what) + " difference of block " + std::to_string(j) + " for bit " +
                                 std::to_string(l - 1) + " has weight " + std::to_string(std::popcount(delta)) +
                                 " (clock not fixed?)");
    }
    dest.push_back(std::countr_zero(delta));
  }
  try {
    return BitPermutation::from_dest(dest, n);
  } catch (const DomainError&) {
    throw OracleModelViolation(std::string(what) + " differences of block " + std::to_string(j) +
                               " do not form a bijection (clock not fixed?)");
  }
}

}  // namespace detail

/// f_{j-1} from 4n+1 chosen plaintexts of length j.
inline BitPermutation recover_fj_cpa(EncryptionOracle& oracle, std::size_t j, int n,
                                     std::optional<Block> p_star = std::nullopt) {
  const auto battery = gen_cpa_battery(j, n, p_star.value_or(Block(0, n)));
  const Block reference = oracle.query(battery.front()).blocks.at(j - 1);
  std::vector<Block> differences;
  differences.reserve(battery.size() - 1);
  for (std::size_t l = 1; l < battery.size(); ++l) {
    differences.push_back(oracle.query(battery[l]).blocks.at(j - 1) ^ reference);
  }
  return detail::assemble_from_differences(differences, n, j, "ciphertext");
}

/// f_{j-1}^{-1} from 4n+1 chosen ciphertexts of length j.
inline BitPermutation recover_finv_cca(DecryptionOracle& oracle, std::size_t j, int n,
                                       std::optional<Block> c_star = std::nullopt) {
  const auto battery = gen_cpa_battery(j, n, c_star.value_or(Block(0, n)));
  const Block reference = oracle.query(battery.front()).blocks.at(j - 1);
  std::vector<Block> differences;
  differences.reserve(battery.size() - 1);
  for (std::size_t l = 1; l < battery.size(); ++l) {
    differences.push_back(oracle.query(battery[l]).blocks.at(j - 1) ^ reference);
  }
  return detail::assemble_from_differences(differences, n, j, "plaintext");
}

// ---------------------------------------------------------------------------
// Recovered equivalent key
// ---------------------------------------------------------------------------

enum class Provenance : std::uint8_t { cpa, cca, solved, assumed };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::cpa: return "cpa";
    case Provenance::cca: return "cca";
    case Provenance::solved: return "solved";
    case Provenance::assumed: return "assumed";
  }
  return "?";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "cpa") return Provenance::cpa;
  if (s == "cca") return Provenance::cca;
  if (s == "solved") return Provenance::solved;
  if (s == "assumed") return Provenance::assumed;
  throw FormatError("unknown provenance tag '" + std::string(s) + "'");
}

template <class T>
struct Recovered {
  T value;
  Provenance source;
};

/// ({U_j}, {f_j}) as far as an attack has reconstructed it. Block 1 only
/// ever exposes the combined whitening W_1 = f_0(U_0 + U_2) ^ (U_1 + U_2),
/// because f_0 is XOR-linear; blocks j >= 2 use U_{j+1} itself.
struct RecoveredState {
  int n = 0;
  std::size_t r = 0;
  std::vector<std::optional<Recovered<BitPermutation>>> f;  ///< f[j] = f_j
  std::optional<Recovered<Block>> whitening;                ///< W_1
  std::vector<std::optional<Recovered<Block>>> u;           ///< u[k] = U_k, k <= r+1

  RecoveredState() = default;
  RecoveredState(int n_, std::size_t r_) : n(n_), r(r_), f(r_), u(r_ + 2) {}

  /// Number of leading blocks with both a permutation and a mask.
  std::size_t coverage() const {
    std::size_t j = 0;
    while (j < r && f[j] && (j == 0 ? whitening.has_value() : u[j + 2].has_value())) ++j;
    return j;
  }
};

inline RecoveredState recover_all_f(EncryptionOracle& oracle, std::size_t r, int n) {
  RecoveredState state(n, r);
  for (std::size_t j = 1; j <= r; ++j) state.f[j - 1] = Recovered<BitPermutation>{recover_fj_cpa(oracle, j, n), Provenance::cpa};
  return state;
}

inline RecoveredState recover_all_f_cca(DecryptionOracle& oracle, std::size_t r, int n) {
  RecoveredState state(n, r);
  for (std::size_t j = 1; j <= r; ++j) {
    state.f[j - 1] = Recovered<BitPermutation>{invert(recover_finv_cca(oracle, j, n)), Provenance::cca};
  }
  return state;
}

// ---------------------------------------------------------------------------
// Guess orders over 4n-bit candidates
// ---------------------------------------------------------------------------

enum class GuessOrder : std::uint8_t {
  natural,             ///< 0, 1, ..., 2^{4n}-1
  ascending_zeros,     ///< A_0, A_1, ..., A_{4n} (A_z: values with z zero bits)
  paired,              ///< A_{4n}, A_0, A_{4n-1}, A_1, ..., A_{2n}: zero-heavy class first in each pair
};

namespace detail {

inline const std::array<std::array<std::uint64_t, 65>, 65>& binomial_table() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, 65>, 65> c{};
    for (std::size_t m = 0; m <= 64; ++m) {
      c[m][0] = 1;
      for (std::size_t k = 1; k <= m; ++k) c[m][k] = c[m - 1][k - 1] + (k <= m - 1 ? c[m - 1][k] : 0);
    }
    return c;
  }();
  return table;
}

inline std::uint64_t binom(int m, int k) {
  if (k < 0 || k > m) return 0;
  return binomial_table()[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
}

/// Popcounts of the classes in visiting order.
inline std::vector<int> class_popcounts(GuessOrder order, int n) {
  const int width = 4 * n;
  std::vector<int> out;
  switch (order) {
    case GuessOrder::natural:
      break;
    case GuessOrder::ascending_zeros:
      for (int z = 0; z <= width; ++z) out.push_back(width - z);
      break;
    case GuessOrder::paired:
      for (int i = 0; i < 2 * n; ++i) {
        out.push_back(i);          // A_{4n-i}: 4n-i zero bits
        out.push_back(width - i);  // A_i
      }
      out.push_back(2 * n);
      break;
  }
  return out;
}

}  // namespace detail

/// Lazy enumeration of all 4n-bit values in a guess order. Within a class,
/// values come in ascending numeric order.
class CandidateOrder {
 public:
  CandidateOrder(GuessOrder order, int n) : order_(order), n_(n), classes_(detail::class_popcounts(order, n)) {
    if (n < 1 || n > Block::max_quarter_width) throw DomainError("block parameter n must be in [1, 16]");
    start_class();
  }

  GuessOrder order() const { return order_; }
  int quarter_width() const { return n_; }

  std::optional<Block> next() {
    if (done_) return std::nullopt;
    const Block out(current_, n_);
    advance();
    return out;
  }

  /// 0-based position of `value` in this order, without enumerating.
  std::uint64_t rank(Block value) const {
    if (order_ == GuessOrder::natural) return value.bits();
    const int k = std::popcount(value.bits());
    std::uint64_t offset = 0;
    for (int pc : classes_) {
      if (pc == k) break;
      offset += detail::binom(4 * n_, pc);
    }
    // colex index of the set-bit positions
    std::uint64_t index = 0;
    std::uint64_t bits = value.bits();
    for (int i = 1; bits != 0; ++i) {
      index += detail::binom(std::countr_zero(bits), i);
      bits &= bits - 1;
    }
    return offset + index;
  }

 private:
  void start_class() {
    if (order_ == GuessOrder::natural) {
      current_ = 0;
      return;
    }
    const int k = classes_[class_index_];
    current_ = k == 0 ? 0 : Block::mask_for(n_) >> (4 * n_ - k);
  }

  void advance() {
    const std::uint64_t mask = Block::mask_for(n_);
    if (order_ == GuessOrder::natural) {
      if (current_ == mask) {
        done_ = true;
      } else {
        ++current_;
      }
      return;
    }
    // Gosper's hack in 128 bits so a full 64-bit class terminates cleanly.
    const unsigned __int128 v = current_;
    bool class_done = v == 0 || current_ == mask;
    if (!class_done) {
      const unsigned __int128 t = v | (v - 1);
      const unsigned __int128 next = (t + 1) | (((~t & (t + 1)) - 1) >> (std::countr_zero(current_) + 1));
      if (next > mask) {
        class_done = true;
      } else {
        current_ = static_cast<std::uint64_t>(next);
      }
    }
    if (class_done) {
      if (++class_index_ == classes_.size()) {
        done_ = true;
      } else {
        start_class();
      }
    }
  }

  GuessOrder order_;
  int n_;
  std::vector<int> classes_;
  std::size_t class_index_ = 0;
  std::uint64_t current_ = 0;
  bool done_ = false;
};

/// Order that visits likely noise vectors first given an estimate of alpha:
/// paired classes when 0-bits dominate (alpha > 0.5), ascending 0-bit count
/// when 1-bits dominate, numeric order at exactly 0.5.
inline CandidateOrder prioritized_candidates(Fraction alpha_est, int n) {
  if (alpha_est.is_boundary()) throw DomainError("alpha estimate must lie strictly inside (0,1)");
  const std::uint64_t half = half_raw(alpha_est.backend());
  if (alpha_est.raw() > half) return CandidateOrder(GuessOrder::paired, n);
  if (alpha_est.raw() < half) return CandidateOrder(GuessOrder::ascending_zeros, n);
  return CandidateOrder(GuessOrder::natural, n);
}

// ---------------------------------------------------------------------------
// Solving for the noise vectors
// ---------------------------------------------------------------------------

/// One known block transition: (P_{j-1}, P_j) encrypted to (C_{j-1}, C_j).
struct KnownPair {
  Block prev_plain;
  Block plain;
  Block prev_cipher;
  Block cipher;
};

struct SolveOptions {
  std::uint64_t max_candidates = 0;  ///< 0: no limit
  std::size_t max_solutions = 0;     ///< 0: collect all
};

struct SolveResult {
  std::vector<Block> solutions;  ///< in enumeration order
  std::uint64_t examined = 0;
  bool exhausted = false;
};

/// x with C_j ^ (P_{j-1} + x) = f_{j-1}(P_j ^ (C_{j-1} + x)) for every pair.
inline bool satisfies_transition(const KnownPair& pair, const BitPermutation& f, Block x) {
  return (pair.cipher ^ add_mod(pair.prev_plain, x)) == f.apply(pair.plain ^ add_mod(pair.prev_cipher, x));
}

/// All candidates x = U_{j+1} consistent with every pair, by enumeration.
/// Exhaustive search is limited to n <= 4; larger blocks need an early exit.
inline SolveResult solve_Uj(std::span<const KnownPair> pairs, const BitPermutation& f, int n, CandidateOrder order,
                            SolveOptions options = {}) {
  if (pairs.empty()) throw DomainError("solver needs at least one known pair");
  if (f.quarter_width() != n || order.quarter_width() != n) throw DomainError("width mismatch in solver inputs");
  if (n > 4 && options.max_candidates == 0 && options.max_solutions == 0) {
    throw DomainError("exhaustive search is limited to n <= 4; set a candidate or solution budget");
  }
  SolveResult result;
  while (true) {
    if (options.max_candidates != 0 && result.examined == options.max_candidates) return result;
    const auto x = order.next();
    if (!x) break;
    ++result.examined;
    bool ok = true;
    for (const KnownPair& pair : pairs) {
      if (!satisfies_transition(pair, f, *x)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      result.solutions.push_back(*x);
      if (options.max_solutions != 0 && result.solutions.size() == options.max_solutions) return result;
    }
  }
  result.exhausted = true;
  if (result.solutions.empty()) throw InconsistentInput("no candidate satisfies every known pair");
  return result;
}

/// W_1 = C_1 ^ f_0(P_1); every pair must agree.
inline Block solve_whitening(std::span<const std::pair<Block, Block>> plain_cipher, const BitPermutation& f0) {
  if (plain_cipher.empty()) throw DomainError("whitening needs at least one known block");
  const Block w = plain_cipher.front().second ^ f0.apply(plain_cipher.front().first);
  for (const auto& [p, c] : plain_cipher) {
    if ((c ^ f0.apply(p)) != w) throw InconsistentInput("known first blocks disagree on the whitening");
  }
  return w;
}

struct KnownMessage {
  Message plain;
  Message cipher;
};

struct NoiseSolveReport {
  /// solution-set size per block j (index j-1); block 1 reports 1 for the whitening
  std::vector<std::size_t> solution_counts;
};

/// Fills W_1 and U_3.. from known plaintext/ciphertext messages, for every
/// block whose permutation is already recovered. Ambiguous blocks take the
/// first solution in `order`.
inline NoiseSolveReport solve_noise(RecoveredState& state, std::span<const KnownMessage> known,
                                    GuessOrder order = GuessOrder::natural) {
  NoiseSolveReport report;
  for (std::size_t j = 1; j <= state.r; ++j) {
    if (!state.f[j - 1]) break;
    const BitPermutation& f = state.f[j - 1]->value;
    if (j == 1) {
      std::vector<std::pair<Block, Block>> firsts;
      for (const auto& m : known) {
        if (!m.plain.blocks.empty()) firsts.emplace_back(m.plain.blocks[0], m.cipher.blocks.at(0));
      }
      if (firsts.empty()) break;
      state.whitening = Recovered<Block>{solve_whitening(firsts, f), Provenance::solved};
      report.solution_counts.push_back(1);
      continue;
    }
    std::vector<KnownPair> pairs;
    for (const auto& m : known) {
      if (m.plain.blocks.size() >= j) {
        pairs.push_back({m.plain.blocks[j - 2], m.plain.blocks[j - 1], m.cipher.blocks.at(j - 2), m.cipher.blocks.at(j - 1)});
      }
    }
    if (pairs.empty()) break;
    const SolveResult solved = solve_Uj(pairs, f, state.n, CandidateOrder(order, state.n));
    state.u[j + 1] = Recovered<Block>{solved.solutions.front(), Provenance::solved};
    report.solution_counts.push_back(solved.solutions.size());
  }
  return report;
}

/// Decryption run on the recovered equivalent key only. Blocks past the
/// recovered coverage come back empty.
inline std::vector<std::optional<Block>> keyless_decrypt(const RecoveredState& state, const Message& cipher) {
  std::vector<std::optional<Block>> out;
  out.reserve(cipher.blocks.size());
  std::optional<Block> prev_plain;
  for (std::size_t j = 1; j <= cipher.blocks.size(); ++j) {
    const Block& c = cipher.blocks[j - 1];
    std::optional<Block> p;
    if (j <= state.r && state.f[j - 1]) {
      const BitPermutation finv = state.f[j - 1]->value.inverse();
      if (j == 1 && state.whitening) {
        p = finv.apply(c ^ state.whitening->value);
      } else if (j >= 2 && prev_plain && state.u[j + 1]) {
        const Block& u = state.u[j + 1]->value;
        p = finv.apply(c ^ add_mod(*prev_plain, u)) ^ add_mod(cipher.blocks[j - 2], u);
      }
    }
    out.push_back(p);
    prev_plain = p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// State file: `YTSREC n=<int> r=<int>`, then `f<j>: i0 .. i_{4n-1} [tag]`,
// `W1: 0x.. [tag]`, `U<k>: 0x.. [tag]`.
// ---------------------------------------------------------------------------

inline std::string format_state(const RecoveredState& state) {
  std::string out = "YTSREC n=" + std::to_string(state.n) + " r=" + std::to_string(state.r) + "\n";
  for (std::size_t j = 0; j < state.f.size(); ++j) {
    if (state.f[j]) {
      out += "f" + std::to_string(j) + ": " + state.f[j]->value.to_string() + " [" + to_string(state.f[j]->source) + "]\n";
    }
  }
  if (state.whitening) {
    out += "W1: 0x" + state.whitening->value.to_hex() + " [" + to_string(state.whitening->source) + "]\n";
  }
  for (std::size_t k = 0; k < state.u.size(); ++k) {
    if (state.u[k]) {
      out += "U" + std::to_string(k) + ": 0x" + state.u[k]->value.to_hex() + " [" + to_string(state.u[k]->source) + "]\n";
    }
  }
  return out;
}

inline RecoveredState parse_state(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty state file");
  std::istringstream hf(header);
  std::string magic, n_field, r_field;
  if (!(hf >> magic >> n_field >> r_field) || magic != "YTSREC" || !n_field.starts_with("n=") ||
      !r_field.starts_with("r=")) {
    throw FormatError("bad state header '" + header + "'");
  }
  const int n = static_cast<int>(detail::parse_u64(std::string_view(n_field).substr(2), "n"));
  const std::size_t r = detail::parse_u64(std::string_view(r_field).substr(2), "r");
  if (n < 1 || n > Block::max_quarter_width || r < 1) throw FormatError("state n or r out of range");
  RecoveredState state(n, r);

  std::string line;
  while (std::getline(in, line)) {
    const std::string_view trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto colon = trimmed.find(':');
    const auto open = trimmed.rfind('[');
    const auto close = trimmed.rfind(']');
    if (colon == std::string_view::npos || open == std::string_view::npos || close != trimmed.size() - 1 ||
        open < colon) {
      throw FormatError("bad state line '" + line + "'");
    }
    const std::string_view label = trimmed.substr(0, colon);
    const std::string_view body = detail::trim(trimmed.substr(colon + 1, open - colon - 1));
    const Provenance tag = parse_provenance(trimmed.substr(open + 1, close - open - 1));
    if (label.size() < 2) throw FormatError("bad state label '" + std::string(label) + "'");
    if (label == "W1") {
      state.whitening = Recovered<Block>{Block(detail::parse_hex_u64(body, line), n), tag};
      continue;
    }
    const std::size_t index = detail::parse_u64(label.substr(1), "index");
    if (label.front() == 'f') {
      if (index >= r) throw FormatError("permutation index out of range in '" + line + "'");
      std::vector<int> dest;
      std::istringstream fields{std::string(body)};
      int d = 0;
      while (fields >> d) dest.push_back(d);
      if (!fields.eof()) throw FormatError("bad permutation in '" + line + "'");
      try {
        state.f[index] = Recovered<BitPermutation>{BitPermutation::from_dest(dest, n), tag};
      } catch (const DomainError& e) {
        throw FormatError(std::string(e.what()) + " in '" + line + "'");
      }
    } else if (label.front() == 'U') {
      if (index >= state.u.size()) throw FormatError("noise index out of range in '" + line + "'");
      state.u[index] = Recovered<Block>{Block(detail::parse_hex_u64(body, line), n), tag};
    } else {
      throw FormatError("bad state label '" + std::string(label) + "'");
    }
  }
  return state;
}

}  // namespace tentbreak
