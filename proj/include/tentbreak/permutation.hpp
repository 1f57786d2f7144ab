#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tentbreak/block.hpp"
#include "tentbreak/error.hpp"

namespace tentbreak {

/// Bijection on the 4n bit positions of a block: input bit i lands on
/// output bit dest(i).
class BitPermutation {
 public:
  /// Identity on a 4-bit block.
  BitPermutation() {
    for (int i = 0; i < 4; ++i) dest_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  }

  static BitPermutation identity(int n) {
    BitPermutation p(n);
    for (int i = 0; i < p.width(); ++i) p.dest_[i] = static_cast<std::uint8_t>(i);
    return p;
  }

  /// Circular left shift by k positions over the full 4n-bit word.
  static BitPermutation rotate_left(int n, int k) {
    BitPermutation p(n);
    const int w = p.width();
    k = ((k % w) + w) % w;
    for (int i = 0; i < w; ++i) p.dest_[i] = static_cast<std::uint8_t>((i + k) % w);
    return p;
  }

  /// Throws unless `dest` is a bijection on {0, ..., 4n-1}.
  static BitPermutation from_dest(std::span<const int> dest, int n) {
    BitPermutation p(n);
    if (static_cast<int>(dest.size()) != p.width()) throw DomainError("permutation has wrong length");
    std::uint64_t seen = 0;
    for (int i = 0; i < p.width(); ++i) {
      const int d = dest[i];
      if (d < 0 || d >= p.width() || ((seen >> d) & 1) != 0) {
        throw DomainError("bit map is not a bijection");
      }
      seen |= std::uint64_t{1} << d;
      p.dest_[i] = static_cast<std::uint8_t>(d);
    }
    return p;
  }

  /// Permutation realised by a function already known to move single bits
  /// to single bits.
  template <class F>
  static BitPermutation from_function(int n, F&& f) {
    std::vector<int> dest(static_cast<std::size_t>(4 * n));
    for (int i = 0; i < 4 * n; ++i) {
      const std::uint64_t image = f(std::uint64_t{1} << i);
      if (!std::has_single_bit(image)) throw DomainError("function is not a bit permutation");
      dest[static_cast<std::size_t>(i)] = std::countr_zero(image);
    }
    return from_dest(dest, n);
  }

  int quarter_width() const { return n_; }
  int width() const { return 4 * n_; }
  int dest(int i) const { return dest_[static_cast<std::size_t>(i)]; }
  std::vector<int> dest_vector() const { return {dest_.begin(), dest_.begin() + width()}; }

  Block apply(Block x) const {
    if (x.quarter_width() != n_) throw DomainError("block width does not match permutation");
    std::uint64_t in = x.bits();
    std::uint64_t out = 0;
    while (in != 0) {
      const int i = std::countr_zero(in);
      out |= std::uint64_t{1} << dest_[static_cast<std::size_t>(i)];
      in &= in - 1;
    }
    return Block(out, n_);
  }

  BitPermutation inverse() const {
    BitPermutation p(n_);
    for (int i = 0; i < width(); ++i) p.dest_[dest_[static_cast<std::size_t>(i)]] = static_cast<std::uint8_t>(i);
    return p;
  }

  /// outer o inner: apply `inner` first.
  friend BitPermutation compose(const BitPermutation& outer, const BitPermutation& inner) {
    if (outer.n_ != inner.n_) throw DomainError("permutation width mismatch");
    BitPermutation p(inner.n_);
    for (int i = 0; i < inner.width(); ++i) {
      p.dest_[static_cast<std::size_t>(i)] = outer.dest_[inner.dest_[static_cast<std::size_t>(i)]];
    }
    return p;
  }

  std::string to_string() const {
    std::string out;
    for (int i = 0; i < width(); ++i) {
      if (i != 0) out += ' ';
      out += std::to_string(dest_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

  friend bool operator==(const BitPermutation& a, const BitPermutation& b) {
    return a.n_ == b.n_ && std::equal(a.dest_.begin(), a.dest_.begin() + a.width(), b.dest_.begin());
  }

 private:
  explicit BitPermutation(int n) : n_(n) {
    if (n < 1 || n > Block::max_quarter_width) throw DomainError("block parameter n must be in [1, 16]");
  }

  std::array<std::uint8_t, 64> dest_{};
  int n_ = 1;
};

inline Block apply(const BitPermutation& p, Block x) { return p.apply(x); }
inline BitPermutation invert(const BitPermutation& p) { return p.inverse(); }

/// One permutation of the quarter indices {1,2,3,4}: output quarter k is
/// input quarter order[k-1].
using QuarterOrder = std::array<std::uint8_t, 4>;

/// Maps each 4-bit value v to a permutation of the four quarters.
class QuarterPermTable {
 public:
  /// v-th permutation of {1,2,3,4} in lexicographic order, identity first.
  static QuarterPermTable lexicographic() {
    QuarterPermTable table;
    QuarterOrder order{1, 2, 3, 4};
    for (auto& entry : table.entries_) {
      entry = order;
      std::next_permutation(order.begin(), order.end());
    }
    return table;
  }

  static QuarterPermTable uniform(QuarterOrder order) {
    QuarterPermTable table;
    table.entries_.fill(validated(order));
    return table;
  }

  const QuarterOrder& operator[](unsigned v) const { return entries_.at(v); }

  /// 16 lines "v: p1 p2 p3 p4", v in 0..15, each v exactly once.
  static QuarterPermTable parse(std::string_view text) {
    QuarterPermTable table;
    std::array<bool, 16> seen{};
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream fields(line);
      unsigned v = 0;
      char colon = 0;
      std::array<int, 4> p{};
      if (!(fields >> v >> colon >> p[0] >> p[1] >> p[2] >> p[3]) || colon != ':' || v > 15 || seen[v]) {
        throw FormatError("bad quarter permutation line: '" + line + "'");
      }
      std::string rest;
      if (fields >> rest) throw FormatError("trailing data in quarter permutation line: '" + line + "'");
      QuarterOrder order{};
      for (int k = 0; k < 4; ++k) order[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(p[static_cast<std::size_t>(k)]);
      table.entries_[v] = validated(order);
      seen[v] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      throw FormatError("quarter permutation table needs 16 entries");
    }
    return table;
  }

  static QuarterPermTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open quarter permutation table '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
  }

  std::string to_string() const {
    std::string out;
    for (unsigned v = 0; v < 16; ++v) {
      out += std::to_string(v) + ":";
      for (auto q : entries_[v]) out += " " + std::to_string(q);
      out += '\n';
    }
    return out;
  }

  bool is_injective() const {
    for (std::size_t a = 0; a < 16; ++a) {
      for (std::size_t b = a + 1; b < 16; ++b) {
        if (entries_[a] == entries_[b]) return false;
      }
    }
    return true;
  }

  friend bool operator==(const QuarterPermTable&, const QuarterPermTable&) = default;

 private:
  QuarterPermTable() = default;

  static QuarterOrder validated(QuarterOrder order) {
    QuarterOrder sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != QuarterOrder{1, 2, 3, 4}) throw FormatError("entry is not a permutation of 1..4");
    return order;
  }

  std::array<QuarterOrder, 16> entries_{};
};

/// Rearranges the quarters (M_1, M_2, M_3, M_4) of a 4n-bit word.
inline std::uint64_t permute_quarters(std::uint64_t x, const QuarterOrder& order, int n) {
  const std::uint64_t quarter_mask = (std::uint64_t{1} << n) - 1;
  auto quarter = [&](int k) { return (x >> (n * (4 - k))) & quarter_mask; };
  std::uint64_t out = 0;
  for (int k = 1; k <= 4; ++k) out |= quarter(order[static_cast<std::size_t>(k - 1)]) << (n * (4 - k));
  return out;
}

inline std::uint64_t rotate_left_bits(std::uint64_t x, int k, int width) {
  const std::uint64_t mask = width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
  k %= width;
  if (k == 0) return x & mask;
  return ((x << k) | (x >> (width - k))) & mask;
}

/// f_{ji}: quarter permutation selected by the nibble v, then a 1-bit
/// circular left shift across the whole word.
inline BitPermutation build_fji(unsigned v, const QuarterPermTable& table, int n) {
  if (v > 15) throw DomainError("selector nibble must be < 16");
  const QuarterOrder& order = table[v];
  return BitPermutation::from_function(n, [&](std::uint64_t x) {
    return rotate_left_bits(permute_quarters(x, order, n), 1, 4 * n);
  });
}

/// Nibble i (1-based) of V_j, counted from the most significant end.
inline unsigned selector_nibble(Block vj, int i) {
  return static_cast<unsigned>((vj.bits() >> (4 * (vj.quarter_width() - i))) & 0xF);
}

/// f_j = f_{jn} o ... o f_{j1}.
inline BitPermutation compose_fj(Block vj, const QuarterPermTable& table) {
  const int n = vj.quarter_width();
  BitPermutation f = BitPermutation::identity(n);
  for (int i = 1; i <= n; ++i) f = compose(build_fji(selector_nibble(vj, i), table, n), f);
  return f;
}

}  // namespace tentbreak
