#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support.hpp"

using namespace tbtest;

namespace {

// Quarter swap and rotation evaluated directly on integers, no tables.
std::uint64_t oracle_fji(std::uint64_t x, std::array<int, 4> w, int n) {
  const int width = 4 * n;
  const std::uint64_t qmask = (std::uint64_t{1} << n) - 1;
  std::uint64_t y = 0;
  for (int k = 0; k < 4; ++k) y = (y << n) | ((x >> (n * (3 - (w[k] - 1)))) & qmask);
  const std::uint64_t mask = Block::mask_for(n);
  return ((y << 1) | (y >> (width - 1))) & mask;
}

std::array<int, 4> lex_perm(unsigned v) {
  std::array<int, 4> p{1, 2, 3, 4};
  for (unsigned i = 0; i < v; ++i) std::next_permutation(p.begin(), p.end());
  return p;
}

std::uint64_t oracle_fj(std::uint64_t x, std::uint64_t vj, int n) {
  for (int i = 1; i <= n; ++i) x = oracle_fji(x, lex_perm(static_cast<unsigned>((vj >> (4 * (n - i))) & 0xF)), n);
  return x;
}

}  // namespace

TEST(ExtractBits, StandardThreshold) {
  const std::vector<Fraction> orbit = {dec("0.3"), dec("1"), dec("0.2"), dec("0.31")};
  EXPECT_EQ(extract_bits(orbit, dec("0.3"), 4), (std::vector<std::uint8_t>{0, 1, 0, 1}));
  EXPECT_THROW(extract_bits(orbit, dec("0.3"), 5), LengthError);
}

TEST(ExtractBits, MendedThreshold) {
  const std::vector<Fraction> orbit = {dec("0.5"), dec("0.75"), dec("0.25", f64), dec("0.5000001", f64)};
  EXPECT_EQ(extract_bits_mended(orbit, 4), (std::vector<std::uint8_t>{0, 1, 0, 1}));
}

TEST(NoiseVectors, HandIteratedFirstVector) {
  // alpha = 0.9: x0 = 0.95 -> 1, then x1 = 0.05/0.1 = 0.5 and x_k = 0.5/0.9^(k-1)
  // stays <= 0.9 until x7 = 0.9408 -> bits 1000 0001.
  const TentParams p = params("0.9", "0.7", f64);
  const auto u = build_noise_vectors(dec("0.95", f64), p, 2, 1);
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u[0].bits(), 0x81u);
  const auto fixed = build_noise_vectors(dec("0.95"), params("0.9", "0.7"), 2, 0);
  EXPECT_EQ(fixed[0].bits(), 0x81u);
}

TEST(NoiseVectors, MatchesBitwiseExtraction) {
  for (Backend b : {fp62, f64}) {
    const TentParams p = params("0.43", "0.7", b);
    const Fraction x0 = dec("0.37", b);
    const auto u = build_noise_vectors(x0, p, 3, 9);
    std::vector<Fraction> orbit{x0};
    const auto rest = iterate_orbit(x0, p, 12 * 10);
    orbit.insert(orbit.end(), rest.begin(), rest.end());
    const auto bits = extract_bits(orbit, p.alpha, 120);
    for (std::size_t j = 0; j < 10; ++j) {
      std::uint64_t v = 0;
      for (std::size_t k = 0; k < 12; ++k) v = (v << 1) | bits[12 * j + k];
      EXPECT_EQ(u[j].bits(), v);
    }
  }
}

TEST(NoiseVectors, SmallAlphaFavoursOnes) {
  const TentParams p = params("0.1", "0.7");
  const double ones = one_bit_frequency(p, dec("0.3"), 8000, Extractor::standard);
  EXPECT_GT(ones, 0.8);
}

TEST(NoiseVectors, BitBiasFollowsAlpha) {
  for (const char* a : {"0.1", "0.3", "0.49"}) {
    const TentParams p = params(a, "0.7", f64);
    const double zeros = 1.0 - one_bit_frequency(p, dec("0.3", f64), 32000, Extractor::standard);
    EXPECT_NEAR(zeros, p.alpha.to_double(), 0.03) << "alpha=" << a;
  }
}

TEST(NoiseVectors, MendedExtractorBalancesBits) {
  const double ones = one_bit_frequency(params("0.1", "0.7"), dec("0.3"), 32000, Extractor::mended);
  EXPECT_GE(ones, 0.45);
  EXPECT_LE(ones, 0.55);
}

TEST(NoiseVectors, HalfAlphaCollapsesOntoAlternatingPattern) {
  const Histogram h = sample_histogram(params("0.5", "0.7", f64), dec("0.3", f64), 2, 1000);
  // frozen binary64 counts; they agree with the published 0.412 and 0.418
  EXPECT_EQ(h.counts[85], 412u);
  EXPECT_EQ(h.counts[170], 418u);
  const Histogram g = sample_histogram(params("0.5", "0.4", f64), dec("0.123", f64), 2, 1000);
  EXPECT_EQ(g.counts[170], 993u);
}

TEST(Vj, XorWithSubKey) {
  EXPECT_EQ(compute_Vj(Block(0xA5, 2), Block(0xFF, 2)).bits(), 0x5Au);
  EXPECT_EQ(compute_Vj(Block(0x3C, 2), Block(0x00, 2)).bits(), 0x3Cu);
  EXPECT_THROW(compute_Vj(Block(0x3, 1), Block(0x3C, 2)), DomainError);
}

TEST(Block, HexAndArithmetic) {
  EXPECT_EQ(Block(0x5, 2).to_hex(), "05");
  EXPECT_EQ(Block::from_hex("a5", 2).bits(), 0xA5u);
  EXPECT_EQ(add_mod(Block(0xF0, 2), Block(0x20, 2)).bits(), 0x10u);
  EXPECT_EQ(Block(0xFFFF'FFFF'FFFF'FFFF, 16).to_hex().size(), 16u);
  EXPECT_THROW(Block(0x100, 2), DomainError);
  EXPECT_THROW(Block(0, 17), DomainError);
  EXPECT_THROW(Block::from_hex("zz", 2), FormatError);
}

TEST(QuarterTable, LexicographicDefault) {
  const auto t = QuarterPermTable::lexicographic();
  EXPECT_TRUE(t.is_injective());
  EXPECT_EQ(t[0], (QuarterOrder{1, 2, 3, 4}));
  EXPECT_EQ(t[1], (QuarterOrder{1, 2, 4, 3}));
  EXPECT_EQ(t[15], (QuarterOrder{3, 2, 4, 1}));
  EXPECT_EQ(QuarterPermTable::parse(t.to_string()), t);
  EXPECT_FALSE(QuarterPermTable::uniform({1, 2, 3, 4}).is_injective());
}

TEST(QuarterTable, RejectsMalformedFiles) {
  std::string text = QuarterPermTable::lexicographic().to_string();
  EXPECT_THROW(QuarterPermTable::parse(text.substr(0, text.rfind("15:"))), FormatError);
  EXPECT_THROW(QuarterPermTable::parse(text + "3: 1 2 3 4\n"), FormatError);
  std::string bad = text;
  bad.replace(bad.find("0: 1 2 3 4"), 10, "0: 1 1 3 4");
  EXPECT_THROW(QuarterPermTable::parse(bad), FormatError);
  EXPECT_THROW(QuarterPermTable::load("/nonexistent/table.txt"), FormatError);
}

TEST(BuildFji, IdentityOrderIsRotation) {
  const auto t = QuarterPermTable::lexicographic();
  const BitPermutation f = build_fji(0, t, 1);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(f.dest(i), (i + 1) % 4);
  EXPECT_EQ(build_fji(0, t, 3), BitPermutation::rotate_left(3, 1));
}

TEST(BuildFji, MatchesDirectEvaluationExhaustively) {
  const auto t = QuarterPermTable::lexicographic();
  for (int n : {1, 2}) {
    for (unsigned v = 0; v < 16; ++v) {
      const BitPermutation f = build_fji(v, t, n);
      for (std::uint64_t x = 0; x < (std::uint64_t{1} << (4 * n)); ++x) {
        ASSERT_EQ(f.apply(Block(x, n)).bits(), oracle_fji(x, lex_perm(v), n));
      }
    }
  }
  // w = (2,1,3,4) on the whole n = 2 domain
  const BitPermutation g = build_fji(0, QuarterPermTable::uniform({2, 1, 3, 4}), 2);
  for (std::uint64_t x = 0; x < 256; ++x) ASSERT_EQ(g.apply(Block(x, 2)).bits(), oracle_fji(x, {2, 1, 3, 4}, 2));
}

TEST(BuildFji, InverseUndoes) {
  const auto t = QuarterPermTable::lexicographic();
  for (unsigned v = 0; v < 16; ++v) {
    const BitPermutation f = build_fji(v, t, 2);
    const BitPermutation g = f.inverse();
    for (std::uint64_t x = 0; x < 256; ++x) ASSERT_EQ(g.apply(f.apply(Block(x, 2))).bits(), x);
  }
  EXPECT_THROW(build_fji(16, t, 2), DomainError);
}

TEST(ComposeFj, SingleNibbleIsFj1) {
  const auto t = QuarterPermTable::lexicographic();
  for (unsigned v = 0; v < 16; ++v) EXPECT_EQ(compose_fj(Block(v, 1), t), build_fji(v, t, 1));
}

TEST(ComposeFj, UniformIdentityIsRotationByN) {
  const auto t = QuarterPermTable::uniform({1, 2, 3, 4});
  EXPECT_EQ(compose_fj(Block(0x37, 2), t), BitPermutation::rotate_left(2, 2));
  EXPECT_EQ(compose_fj(Block(0xABCDEF, 6), t), BitPermutation::rotate_left(6, 6));
}

TEST(ComposeFj, MatchesDirectEvaluation) {
  const auto t = QuarterPermTable::lexicographic();
  for (std::uint64_t vj = 0; vj < 256; ++vj) {
    const BitPermutation f = compose_fj(Block(vj, 2), t);
    for (std::uint64_t x = 0; x < 256; ++x) ASSERT_EQ(f.apply(Block(x, 2)).bits(), oracle_fj(x, vj, 2));
  }
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(uniform_below(rng, 14));
    const std::uint64_t vj = rng() & Block::mask_for(n);
    const std::uint64_t x = rng() & Block::mask_for(n);
    EXPECT_EQ(compose_fj(Block(vj, n), t).apply(Block(x, n)).bits(), oracle_fj(x, vj, n)) << "n=" << n;
  }
}

TEST(BitPermutation, ApplyExamples) {
  EXPECT_EQ(BitPermutation::identity(2).apply(Block(0x5A, 2)).bits(), 0x5Au);
  const BitPermutation rot = BitPermutation::rotate_left(2, 1);
  EXPECT_EQ(rot.apply(Block(0x80, 2)).bits(), 0x01u);
  EXPECT_EQ(rot.apply(Block(0x01, 2)).bits(), 0x02u);
  const std::vector<int> dest = {3, 2, 1, 0};
  const BitPermutation rev = BitPermutation::from_dest(dest, 1);
  for (std::uint64_t x = 0; x < 16; ++x) {
    std::uint64_t expect = 0;
    for (int i = 0; i < 4; ++i) expect |= ((x >> i) & 1) << (3 - i);
    EXPECT_EQ(apply(rev, Block(x, 1)).bits(), expect);
  }
}

TEST(BitPermutation, InvertExamples) {
  EXPECT_EQ(invert(BitPermutation::identity(3)), BitPermutation::identity(3));
  EXPECT_EQ(invert(BitPermutation::rotate_left(2, 1)), BitPermutation::rotate_left(2, -1));
}

TEST(BitPermutation, BijectionAndSingleBitProperties) {
  std::mt19937_64 rng(29);
  const auto t = QuarterPermTable::lexicographic();
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 2;
    const BitPermutation f = compose_fj(Block(rng() & Block::mask_for(n), n), t);
    std::vector<bool> hit(std::size_t{1} << (4 * n), false);
    for (std::uint64_t x = 0; x < hit.size(); ++x) {
      const std::uint64_t y = f.apply(Block(x, n)).bits();
      ASSERT_FALSE(hit[y]);
      hit[y] = true;
      ASSERT_EQ(f.inverse().apply(Block(y, n)).bits(), x);
    }
    for (int i = 0; i < 4 * n; ++i) EXPECT_EQ(std::popcount(f.apply(Block(std::uint64_t{1} << i, n)).bits()), 1);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(uniform_below(rng, 14));
    const BitPermutation f = compose_fj(Block(rng() & Block::mask_for(n), n), t);
    const Block x(rng() & Block::mask_for(n), n);
    EXPECT_EQ(invert(f).apply(f.apply(x)), x);
    EXPECT_EQ(compose(invert(f), f), BitPermutation::identity(n));
  }
}

TEST(BitPermutation, RejectsNonBijections) {
  const std::vector<int> dup = {0, 0, 1, 2};
  EXPECT_THROW(BitPermutation::from_dest(dup, 1), DomainError);
  const std::vector<int> short_map = {0, 1, 2};
  EXPECT_THROW(BitPermutation::from_dest(short_map, 1), DomainError);
  EXPECT_THROW(BitPermutation::identity(1).apply(Block(0, 2)), DomainError);
}
