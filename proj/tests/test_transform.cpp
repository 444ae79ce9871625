#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "polarlab/transform.hpp"

using namespace polarlab;

namespace {

// u = x B_N G_N with B_N and G_N = F^{(x)n} built as explicit 0/1 matrices.
BitBlock matrix_transform(const BitBlock& x) {
  const std::size_t N = x.size();
  const int n = block_order(N);
  std::vector<std::vector<int>> g{{1}};
  while (g.size() < N) {
    const std::size_t s = g.size();
    std::vector<std::vector<int>> next(2 * s, std::vector<int>(2 * s, 0));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        next[i][j] = g[i][j];          // F = [[1,0],[1,1]]
        next[s + i][j] = g[i][j];
        next[s + i][s + j] = g[i][j];
      }
    g = next;
  }
  BitBlock xb(N);
  for (std::size_t j = 0; j < N; ++j) {
    std::size_t r = 0;
    for (int b = 0; b < n; ++b) r |= ((j >> b) & 1u) << (n - 1 - b);
    xb[r] = x[j];  // row j of B_N has its one in column r
  }
  BitBlock u(N, 0);
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t r = 0; r < N; ++r) u[c] ^= static_cast<Bit>(xb[r] & g[r][c]);
  return u;
}

BitBlock random_block(std::size_t N, std::mt19937_64& rng) {
  BitBlock x(N);
  for (auto& b : x) b = rng() & 1u;
  return x;
}

}  // namespace

TEST(Transform, FrozenVectors) {
  EXPECT_EQ(polar_encode(BitBlock{1, 1, 0, 1}), (BitBlock{1, 1, 0, 1}));
  EXPECT_EQ(polar_encode(BitBlock{1, 0, 1, 1, 0, 0, 1, 0}), (BitBlock{0, 1, 1, 1, 1, 0, 1, 0}));
  EXPECT_EQ(polar_encode(BitBlock{1, 0}), (BitBlock{1, 0}));
  EXPECT_EQ(polar_encode(BitBlock{0, 1}), (BitBlock{1, 1}));
  EXPECT_EQ(polar_encode(BitBlock{1}), (BitBlock{1}));
}

TEST(Transform, MatchesExplicitMatrices) {
  std::mt19937_64 rng(11);
  for (std::size_t N : {1u, 2u, 4u, 8u, 16u, 32u})
    for (int trial = 0; trial < 20; ++trial) {
      const BitBlock x = random_block(N, rng);
      EXPECT_EQ(polar_encode(x), matrix_transform(x)) << "N=" << N;
    }
}

TEST(Transform, IsAnInvolution) {
  std::mt19937_64 rng(5);
  for (std::size_t N : {2u, 64u, 1024u}) {
    const BitBlock x = random_block(N, rng);
    EXPECT_EQ(polar_inverse(polar_encode(x)), x);
  }
}

TEST(Transform, IsLinear) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const BitBlock a = random_block(64, rng), b = random_block(64, rng);
    BitBlock s(64);
    for (int j = 0; j < 64; ++j) s[j] = a[j] ^ b[j];
    const BitBlock ua = polar_encode(a), ub = polar_encode(b), us = polar_encode(s);
    for (int j = 0; j < 64; ++j) EXPECT_EQ(us[j], ua[j] ^ ub[j]);
  }
}

TEST(Transform, RejectsNonPowerOfTwo) {
  EXPECT_THROW(polar_encode(BitBlock{1, 0, 1}), Error);
  EXPECT_THROW(polar_encode(BitBlock{}), Error);
  EXPECT_THROW(block_order(12), Error);
}

TEST(Transform, WordEncodingAgreesWithBlocks) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const BitBlock x = random_block(16, rng);
    std::uint64_t w = 0;
    for (Bit b : x) w = (w << 1) | b;
    const BitBlock u = polar_encode(x);
    std::uint64_t wu = 0;
    for (Bit b : u) wu = (wu << 1) | b;
    EXPECT_EQ(polar_encode_word(w, 4), wu);
  }
}

TEST(Transform, BitReversal) {
  EXPECT_EQ(bit_reversal_perm(3), (std::vector<std::size_t>{0, 4, 2, 6, 1, 5, 3, 7}));
  EXPECT_EQ(bit_reversal_perm(0), (std::vector<std::size_t>{0}));
}

TEST(Transform, BranchPaths) {
  EXPECT_EQ(branch_path(1, 8), (BitBlock{0, 0, 0}));
  EXPECT_EQ(branch_path(6, 8), (BitBlock{1, 0, 1}));
  EXPECT_EQ(branch_path(8, 8), (BitBlock{1, 1, 1}));
  for (std::size_t i = 1; i <= 64; ++i) EXPECT_EQ(index_of_branch_path(branch_path(i, 64)), i);
  EXPECT_THROW(branch_path(0, 8), Error);
  EXPECT_THROW(branch_path(9, 8), Error);
}

TEST(Transform, ChildIndices) {
  const auto c = child_indices(3, 8);
  EXPECT_EQ(c.odd, 5u);
  EXPECT_EQ(c.even, 6u);
  EXPECT_THROW(child_indices(0, 8), Error);
}

// T = transform of a size-2N block; U, V transforms of its halves.
TEST(Transform, DeinterleaveRecoversHalfTransforms) {
  std::mt19937_64 rng(21);
  for (std::size_t N : {1u, 2u, 4u, 8u, 32u})
    for (int trial = 0; trial < 10; ++trial) {
      const BitBlock x = random_block(2 * N, rng);
      const BitBlock t = polar_encode(x);
      const BitBlock u = polar_encode(std::span<const Bit>(x).first(N));
      const BitBlock v = polar_encode(std::span<const Bit>(x).last(N));
      for (std::size_t k = 1; k <= N; ++k) {
        const auto [pu, pv] = deinterleave(std::span<const Bit>(t).first(2 * k));
        EXPECT_EQ(pu, BitBlock(u.begin(), u.begin() + k));
        EXPECT_EQ(pv, BitBlock(v.begin(), v.begin() + k));
      }
    }
  const BitBlock odd{1, 0, 1};
  EXPECT_THROW(deinterleave(odd), Error);
}
