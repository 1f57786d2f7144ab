#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "tentbreak/error.hpp"
#include "tentbreak/fraction.hpp"

namespace tentbreak {

/// A 4n-bit word. Bit 0 is the least significant bit; the quarters
/// M_1..M_4 run from the most significant end.
class Block {
 public:
  static constexpr int max_quarter_width = 16;

  constexpr Block() = default;
  constexpr Block(std::uint64_t bits, int n) : bits_(bits), n_(n) {
    if (n < 1 || n > max_quarter_width) throw DomainError("block parameter n must be in [1, 16]");
    if ((bits & ~mask_for(n)) != 0) throw DomainError("block value exceeds 4n bits");
  }

  static constexpr std::uint64_t mask_for(int n) {
    return n >= 16 ? ~std::uint64_t{0} : (std::uint64_t{1} << (4 * n)) - 1;
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr int quarter_width() const { return n_; }
  constexpr int width() const { return 4 * n_; }
  constexpr std::uint64_t mask() const { return mask_for(n_); }
  constexpr bool bit(int i) const { return ((bits_ >> i) & 1) != 0; }

  friend constexpr Block operator^(Block a, Block b) {
    check_widths(a, b);
    return Block(a.bits_ ^ b.bits_, a.n_);
  }

  /// Addition modulo 2^{4n}.
  friend constexpr Block add_mod(Block a, Block b) {
    check_widths(a, b);
    return Block((a.bits_ + b.bits_) & a.mask(), a.n_);
  }

  /// n hex digits, zero padded.
  std::string to_hex() const { return detail::hex_u64(bits_, n_); }

  static Block from_hex(std::string_view text, int n) {
    return Block(detail::parse_hex_u64(text, text), n);
  }

  friend constexpr bool operator==(const Block&, const Block&) = default;
  friend constexpr auto operator<=>(const Block&, const Block&) = default;

 private:
  static constexpr void check_widths(const Block& a, const Block& b) {
    if (a.n_ != b.n_) throw DomainError("block width mismatch");
  }

  std::uint64_t bits_ = 0;
  int n_ = 1;
};

}  // namespace tentbreak
