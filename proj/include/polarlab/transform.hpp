#pragma once

// The polar transform u = x B_N G_N over GF(2) and the index bookkeeping
// shared by every profile. Public indices are 1-based; storage is 0-based.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "polarlab/error.hpp"

namespace polarlab {

using Bit = std::uint8_t;
using BitBlock = std::vector<Bit>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// log2 of a power of two; throws otherwise.
inline int block_order(std::size_t n) {
  if (!is_power_of_two(n)) throw Error("block length must be a power of two");
  int order = 0;
  while ((std::size_t{1} << order) < n) ++order;
  return order;
}

inline std::size_t reverse_bits(std::size_t j, int n) {
  std::size_t r = 0;
  for (int b = 0; b < n; ++b) r |= ((j >> b) & 1u) << (n - 1 - b);
  return r;
}

/// perm[j] = j with its n-bit binary expansion reversed.
inline std::vector<std::size_t> bit_reversal_perm(int n) {
  if (n < 0) throw Error("bit_reversal_perm: negative order");
  std::vector<std::size_t> perm(std::size_t{1} << n);
  for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = reverse_bits(j, n);
  return perm;
}

/// In-place x -> x B_N G_N. The permutation is applied first, then the
/// G_N butterflies (v_j = sum over i whose bits contain j's bits).
inline void polar_encode_inplace(std::span<Bit> x) {
  const int n = block_order(x.size());
  const std::size_t size = x.size();
  for (std::size_t j = 0; j < size; ++j) {
    const std::size_t r = reverse_bits(j, n);
    if (r > j) std::swap(x[j], x[r]);
  }
  for (std::size_t h = 1; h < size; h <<= 1)
    for (std::size_t i = 0; i < size; i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) x[j] ^= x[j + h];
}

inline BitBlock polar_encode(std::span<const Bit> x) {
  BitBlock u(x.begin(), x.end());
  polar_encode_inplace(u);
  return u;
}

/// B_N commutes with G_N and both are involutions over GF(2), so the
/// transform is its own inverse.
inline BitBlock polar_inverse(std::span<const Bit> u) { return polar_encode(u); }

/// Block encoding on an integer whose bit (N-1-t) holds x_{t+1}, i.e. x_1 is
/// the most significant bit. Used by the exact oracle's table indexing.
inline std::uint64_t polar_encode_word(std::uint64_t word, int n) {
  const std::size_t size = std::size_t{1} << n;
  Bit bits[64];
  for (std::size_t t = 0; t < size; ++t) bits[t] = (word >> (size - 1 - t)) & 1u;
  polar_encode_inplace(std::span<Bit>(bits, size));
  std::uint64_t out = 0;
  for (std::size_t t = 0; t < size; ++t) out |= std::uint64_t{bits[t]} << (size - 1 - t);
  return out;
}

struct ChildIndices {
  std::size_t odd;   // 2i-1: the minus (XOR) child
  std::size_t even;  // 2i: the plus (genie) child
};

/// Indices at size 2N whose conditional laws are the children of index i.
inline ChildIndices child_indices(std::size_t i, std::size_t N) {
  if (i < 1 || i > N) throw Error("child_indices: index out of range");
  return {2 * i - 1, 2 * i};
}

/// Branch path b_1..b_n with (b_1..b_n)_2 = i-1, b_1 most significant.
inline BitBlock branch_path(std::size_t i, std::size_t N) {
  const int n = block_order(N);
  if (i < 1 || i > N) throw Error("branch_path: index out of range");
  BitBlock b(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) b[static_cast<std::size_t>(k)] = ((i - 1) >> (n - 1 - k)) & 1u;
  return b;
}

inline std::size_t index_of_branch_path(std::span<const Bit> b) {
  std::size_t v = 0;
  for (Bit bit : b) v = (v << 1) | bit;
  return v + 1;
}

/// Splits a prefix t_1..t_{2k} of a size-2N transform into the first-half
/// prefix u_1..u_k and second-half prefix v_1..v_k, using t_{2j-1} = u_j+v_j
/// and t_{2j} = v_j.
inline std::pair<BitBlock, BitBlock> deinterleave(std::span<const Bit> t) {
  if (t.size() % 2 != 0) throw Error("deinterleave: odd prefix length");
  BitBlock u(t.size() / 2), v(t.size() / 2);
  for (std::size_t j = 0; j < u.size(); ++j) {
    v[j] = t[2 * j + 1];
    u[j] = t[2 * j] ^ t[2 * j + 1];
  }
  return {std::move(u), std::move(v)};
}

}  // namespace polarlab
