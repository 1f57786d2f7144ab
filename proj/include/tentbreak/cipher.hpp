#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tentbreak/block.hpp"
#include "tentbreak/error.hpp"
#include "tentbreak/fraction.hpp"
#include "tentbreak/keystream.hpp"
#include "tentbreak/permutation.hpp"
#include "tentbreak/tentmap.hpp"

namespace tentbreak {

/// The claimed secret key (alpha, beta, gamma, K).
struct KeyMaterial {
  Fraction alpha;
  Fraction beta;
  Fraction gamma;
  Block K;

  void validate() const {
    for (const Fraction* f : {&alpha, &beta, &gamma}) {
      if (f->is_boundary()) throw DomainError("key fractions must lie strictly inside (0,1)");
      if (f->backend() != alpha.backend()) throw DomainError("key fractions use different backends");
    }
  }

  /// 0 < |alpha - 0.5| < 0.01. Outside this range the noise vectors are
  /// measurably non-uniform; such keys are still accepted.
  bool alpha_in_recommended_range() const {
    const double d = std::fabs(alpha.to_double() - 0.5);
    return alpha.raw() != half_raw(alpha.backend()) && d < 0.01;
  }

  Backend backend() const { return alpha.backend(); }
  TentParams tent_params() const { return {alpha, beta}; }
};

struct Message {
  std::vector<Block> blocks;
  std::uint64_t t = 0;

  friend bool operator==(const Message&, const Message&) = default;
};

/// Everything derived from (key, t, n, r): the noise vectors U_0..U_{r+1}
/// and the bit permutations f_0..f_{r-1} with their inverses.
class Session {
 public:
  static Session create(const KeyMaterial& key, std::uint64_t t, int n, std::size_t r,
                        const QuarterPermTable& table = QuarterPermTable::lexicographic()) {
    key.validate();
    return Session(key, t, derive_x0(t, key.gamma, n), n, r, table);
  }

  /// Bypasses the timestamp derivation; used to replay orbits from a chosen x0.
  static Session with_initial_condition(const KeyMaterial& key, Fraction x0, std::uint64_t t, int n, std::size_t r,
                                        const QuarterPermTable& table = QuarterPermTable::lexicographic()) {
    key.validate();
    if (x0.backend() != key.backend()) throw DomainError("x0 uses a different backend than the key");
    return Session(key, t, x0, n, r, table);
  }

  const KeyMaterial& key() const { return key_; }
  std::uint64_t t() const { return t_; }
  int n() const { return n_; }
  std::size_t r() const { return r_; }
  Fraction x0() const { return x0_; }
  /// x0 is 0 or 1, so the orbit starts at the beta redirect.
  bool degenerate() const { return x0_.is_boundary(); }

  std::span<const Block> noise() const { return noise_; }
  const Block& U(std::size_t j) const { return noise_.at(j); }
  const BitPermutation& f(std::size_t j) const { return forward_.at(j); }
  const BitPermutation& f_inverse(std::size_t j) const { return inverse_.at(j); }

 private:
  Session(const KeyMaterial& key, std::uint64_t t, Fraction x0, int n, std::size_t r, const QuarterPermTable& table)
      : key_(key), t_(t), n_(n), r_(r), x0_(x0) {
    if (n < 1 || n > Block::max_quarter_width) throw DomainError("block parameter n must be in [1, 16]");
    if (r < 1) throw DomainError("session needs r >= 1");
    if (key.K.quarter_width() != n) throw DomainError("sub-key K width does not match n");
    noise_ = build_noise_vectors(x0, key.tent_params(), n, r + 1);
    forward_.reserve(r);
    inverse_.reserve(r);
    for (std::size_t j = 0; j < r; ++j) {
      forward_.push_back(compose_fj(compute_Vj(noise_[j], key.K), table));
      inverse_.push_back(forward_.back().inverse());
    }
  }

  KeyMaterial key_;
  std::uint64_t t_;
  int n_;
  std::size_t r_;
  Fraction x0_;
  std::vector<Block> noise_;
  std::vector<BitPermutation> forward_;
  std::vector<BitPermutation> inverse_;
};

namespace detail {

inline void check_message(const Session& s, const Message& m) {
  if (m.blocks.size() > s.r()) throw LengthError("message has more blocks than the session covers");
  for (const Block& b : m.blocks) {
    if (b.quarter_width() != s.n()) throw DomainError("message block width does not match session n");
  }
}

}  // namespace detail

/// C_j = f_{j-1}(P_j ^ (C_{j-1} + U_{j+1})) ^ (P_{j-1} + U_{j+1}), C_0 = U_0, P_0 = U_1.
inline Message encrypt(const Session& s, const Message& plain) {
  detail::check_message(s, plain);
  Message out{{}, s.t()};
  out.blocks.reserve(plain.blocks.size());
  Block prev_c = s.U(0);
  Block prev_p = s.U(1);
  for (std::size_t j = 1; j <= plain.blocks.size(); ++j) {
    const Block& u = s.U(j + 1);
    const Block& p = plain.blocks[j - 1];
    const Block c = s.f(j - 1).apply(p ^ add_mod(prev_c, u)) ^ add_mod(prev_p, u);
    out.blocks.push_back(c);
    prev_c = c;
    prev_p = p;
  }
  return out;
}

/// P_j = f_{j-1}^{-1}(C_j ^ (P_{j-1} + U_{j+1})) ^ (C_{j-1} + U_{j+1}).
inline Message decrypt(const Session& s, const Message& cipher) {
  detail::check_message(s, cipher);
  Message out{{}, s.t()};
  out.blocks.reserve(cipher.blocks.size());
  Block prev_c = s.U(0);
  Block prev_p = s.U(1);
  for (std::size_t j = 1; j <= cipher.blocks.size(); ++j) {
    const Block& u = s.U(j + 1);
    const Block& c = cipher.blocks[j - 1];
    const Block p = s.f_inverse(j - 1).apply(c ^ add_mod(prev_p, u)) ^ add_mod(prev_c, u);
    out.blocks.push_back(p);
    prev_c = c;
    prev_p = p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << content;
  if (!out) throw FormatError("write failed for '" + path + "'");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

struct KeyFile {
  KeyMaterial key;
  int n = 2;
};

/// Lines `alpha=`, `beta=`, `gamma=`, `K=0x..`, `n=`. Fractions use the
/// "fp62:0x.." / "f64:.." serialization; bare decimals are read in `fallback`.
inline KeyFile parse_key_file(std::string_view text, Backend fallback = Backend::fixed(62)) {
  std::optional<Fraction> alpha, beta, gamma;
  std::optional<std::uint64_t> k;
  std::optional<int> n;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  while (std::getline(in, raw_line)) {
    const std::string_view line = detail::trim(raw_line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("bad key line '" + std::string(line) + "'");
    const std::string_view name = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (name == "alpha") {
      alpha = Fraction::parse(value, fallback);
    } else if (name == "beta") {
      beta = Fraction::parse(value, fallback);
    } else if (name == "gamma") {
      gamma = Fraction::parse(value, fallback);
    } else if (name == "K") {
      k = detail::parse_hex_u64(value, line);
    } else if (name == "n") {
      n = static_cast<int>(detail::parse_u64(value, "n"));
    } else {
      throw FormatError("unknown key field '" + std::string(name) + "'");
    }
  }
  if (!alpha || !beta || !gamma || !k || !n) throw FormatError("key file needs alpha, beta, gamma, K and n");
  KeyFile file{{*alpha, *beta, *gamma, Block(*k, *n)}, *n};
  file.key.validate();
  return file;
}

inline std::string format_key_file(const KeyMaterial& key) {
  return "alpha=" + key.alpha.to_string() + "\nbeta=" + key.beta.to_string() + "\ngamma=" + key.gamma.to_string() +
         "\nK=0x" + key.K.to_hex() + "\nn=" + std::to_string(key.K.quarter_width()) + "\n";
}

/// Header `YTS1 t=<int> n=<int> len=<int>`, then one hex block per line.
inline std::string format_ciphertext(const Message& m, int n) {
  std::string out = "YTS1 t=" + std::to_string(m.t) + " n=" + std::to_string(n) +
                    " len=" + std::to_string(m.blocks.size()) + "\n";
  for (const Block& b : m.blocks) out += b.to_hex() + "\n";
  return out;
}

struct CiphertextFile {
  Message message;
  int n = 0;
};

inline CiphertextFile parse_ciphertext(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty ciphertext file");
  std::istringstream fields(header);
  std::string magic, t_field, n_field, len_field;
  if (!(fields >> magic >> t_field >> n_field >> len_field) || magic != "YTS1" || !t_field.starts_with("t=") ||
      !n_field.starts_with("n=") || !len_field.starts_with("len=")) {
    throw FormatError("bad ciphertext header '" + header + "'");
  }
  CiphertextFile file;
  file.message.t = detail::parse_u64(std::string_view(t_field).substr(2), "t");
  file.n = static_cast<int>(detail::parse_u64(std::string_view(n_field).substr(2), "n"));
  const std::uint64_t len = detail::parse_u64(std::string_view(len_field).substr(4), "len");
  if (file.n < 1 || file.n > Block::max_quarter_width) throw FormatError("ciphertext n out of range");
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view hex = detail::trim(line);
    if (hex.empty()) continue;
    if (static_cast<int>(hex.size()) != file.n) throw FormatError("ciphertext block '" + line + "' is not n hex digits");
    file.message.blocks.push_back(Block::from_hex(hex, file.n));
  }
  if (file.message.blocks.size() != len) throw FormatError("ciphertext length does not match header");
  return file;
}

/// Splits bytes MSB-first into 4n-bit blocks; the bit length must be a
/// multiple of 4n.
inline std::vector<Block> bytes_to_blocks(std::span<const std::uint8_t> bytes, int n) {
  const std::size_t width = static_cast<std::size_t>(4 * n);
  const std::size_t total_bits = bytes.size() * 8;
  if (total_bits % width != 0) throw LengthError("input length is not a whole number of blocks");
  std::vector<Block> blocks;
  blocks.reserve(total_bits / width);
  std::uint64_t acc = 0;
  std::size_t have = 0;
  for (std::uint8_t byte : bytes) {
    for (int b = 7; b >= 0; --b) {
      acc = (acc << 1) | ((byte >> b) & 1u);
      if (++have == width) {
        blocks.emplace_back(acc, n);
        acc = 0;
        have = 0;
      }
    }
  }
  return blocks;
}

inline std::vector<std::uint8_t> blocks_to_bytes(std::span<const Block> blocks) {
  if (blocks.empty()) return {};
  const int width = blocks.front().width();
  if ((blocks.size() * static_cast<std::size_t>(width)) % 8 != 0) {
    throw LengthError("blocks do not fill a whole number of bytes");
  }
  std::vector<std::uint8_t> bytes;
  std::uint32_t acc = 0;
  int have = 0;
  for (const Block& block : blocks) {
    for (int b = width - 1; b >= 0; --b) {
      acc = (acc << 1) | (block.bit(b) ? 1u : 0u);
      if (++have == 8) {
        bytes.push_back(static_cast<std::uint8_t>(acc));
        acc = 0;
        have = 0;
      }
    }
  }
  return bytes;
}

}  // namespace tentbreak
