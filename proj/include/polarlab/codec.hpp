#pragma once

// Polar source coding of X with decoder side information Y.
//
// The encoder sends u_F, the transform bits on the high-entropy set F. The
// decoder runs SC and fills every other index with the most likely value.
//
// Block file layout (little endian):
//   "PLMEM001" | N u32 | |F| u32 | F as LEB128 deltas of 1-based indices |
//   payload bits packed LSB-first | CRC-32 of everything before it.

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarlab/error.hpp"
#include "polarlab/process.hpp"
#include "polarlab/profile.hpp"
#include "polarlab/random.hpp"
#include "polarlab/sctrellis.hpp"
#include "polarlab/transform.hpp"

namespace polarlab {

struct FrozenSet {
  enum class Design { budget, threshold, explicit_set };

  std::size_t N = 0;
  std::vector<std::size_t> indices;  // 1-based, sorted, unique
  Design design = Design::explicit_set;
  double parameter = 0;  // budget or threshold
  Method profile_method = Method::exact;

  bool contains(std::size_t i) const { return std::binary_search(indices.begin(), indices.end(), i); }
  std::vector<Bit> mask() const {
    std::vector<Bit> m(N, 0);
    for (std::size_t i : indices) m[i - 1] = 1;
    return m;
  }
};

inline FrozenSet make_frozen_set(std::size_t N, std::vector<std::size_t> indices) {
  block_order(N);
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw Error("frozen set: duplicate index");
  if (!indices.empty() && (indices.front() < 1 || indices.back() > N)) throw Error("frozen set: index out of range");
  FrozenSet f;
  f.N = N;
  f.indices = std::move(indices);
  return f;
}

/// F = the `budget` indices with the largest H; among equal H the smaller
/// index is taken first.
inline FrozenSet design_code_budget(const Profile& p, std::size_t budget) {
  if (budget > p.N) throw Error("design_code: budget exceeds block length");
  std::vector<std::size_t> order(p.N);
  std::iota(order.begin(), order.end(), std::size_t{1});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.H[a - 1] > p.H[b - 1]; });
  order.resize(budget);
  FrozenSet f = make_frozen_set(p.N, order);
  f.design = FrozenSet::Design::budget;
  f.parameter = static_cast<double>(budget);
  f.profile_method = p.method;
  return f;
}

/// F = {i : Z_i >= tau}.
inline FrozenSet design_code_threshold(const Profile& p, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error("design_code: threshold outside [0,1]");
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i <= p.N; ++i)
    if (p.Z[i - 1] >= tau) idx.push_back(i);
  FrozenSet f = make_frozen_set(p.N, idx);
  f.design = FrozenSet::Design::threshold;
  f.parameter = tau;
  f.profile_method = p.method;
  return f;
}

struct Budget {
  std::size_t size;
};
struct Threshold {
  double tau;
};

inline FrozenSet design_code(const Profile& p, Budget b) { return design_code_budget(p, b.size); }
inline FrozenSet design_code(const Profile& p, Threshold t) { return design_code_threshold(p, t.tau); }

/// Sum of Z over the indices the decoder must guess.
inline double z_sum_bound(const Profile& p, const FrozenSet& f) {
  if (p.N != f.N) throw Error("z_sum_bound: profile and frozen set lengths differ");
  double s = 0;
  for (std::size_t i = 1; i <= p.N; ++i)
    if (!f.contains(i)) s += p.Z[i - 1];
  return s;
}

inline BitBlock compress(std::span<const Bit> x, const FrozenSet& f) {
  if (x.size() != f.N) throw Error("compress: block length does not match the frozen set");
  const BitBlock u = polar_encode(x);
  BitBlock out;
  out.reserve(f.indices.size());
  for (std::size_t i : f.indices) out.push_back(u[i - 1]);
  return out;
}

/// SC reconstruction with a reusable engine.
class Decoder {
 public:
  Decoder(const EdgeKernel& k, const FrozenSet& f) : f_(f), mask_(f.mask()), engine_(k, f.N) {}

  /// nullopt when the transmitted bits and y are jointly impossible.
  std::optional<BitBlock> decompress(std::span<const Bit> bits, std::span<const int> y) {
    if (bits.size() != f_.indices.size()) throw Error("decompress: payload length does not match |F|");
    BitBlock u(f_.N, 0);
    std::size_t next = 0;
    bool failed = false;
    engine_.run(y, std::nullopt, [&](std::size_t i, const Posterior& p) -> Bit {
      if (failed || p.impossible()) {
        failed = true;
        return 0;
      }
      Bit b;
      if (mask_[i - 1]) {
        b = bits[next++];
        if ((b ? p.a1 : p.a0) <= 0) failed = true;
      } else {
        b = p.a1 > p.a0 ? 1 : 0;
      }
      u[i - 1] = b;
      return b;
    });
    if (failed) return std::nullopt;
    return polar_inverse(u);
  }

 private:
  FrozenSet f_;
  std::vector<Bit> mask_;
  SCEngine engine_;
};

inline std::optional<BitBlock> decompress(const EdgeKernel& k, std::span<const Bit> bits, std::span<const int> y,
                                          const FrozenSet& f) {
  Decoder d(k, f);
  return d.decompress(bits, y);
}

/// Wilson score interval half-width for `errors` out of `trials` at z.
inline double wilson_half_width(std::size_t errors, std::size_t trials, double z = 1.0) {
  if (trials == 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  return z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
}

struct CodecReport {
  std::size_t trials = 0;
  std::size_t block_errors = 0;
  std::size_t bit_errors = 0;
  std::size_t decode_failures = 0;  // counted within block_errors
  std::size_t frozen_size = 0;
  double z_sum_bound = 0;
  std::vector<Bit> trial_failed;  // per trial, in seed order

  double block_error_rate() const { return trials ? static_cast<double>(block_errors) / trials : 0.0; }
  double wilson() const { return wilson_half_width(block_errors, trials); }
};

/// Compresses and reconstructs `trials` independent sampled blocks. Trial j
/// uses derive_seed(seed, j), so runs with the same seed see the same blocks.
inline CodecReport evaluate(const EdgeKernel& k, const FrozenSet& f, const Profile& design, std::size_t trials,
                            std::uint64_t seed, unsigned workers = default_workers()) {
  if (trials < 1) throw Error("evaluate: need at least one trial");
  CodecReport rep;
  rep.trials = trials;
  rep.frozen_size = f.indices.size();
  rep.z_sum_bound = z_sum_bound(design, f);
  rep.trial_failed.assign(trials, 0);
  const auto pi = stationary_distribution(k).pi;
  constexpr std::size_t kChunk = 4;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<std::size_t> bit_err(chunks, 0), fails(chunks, 0);
  for_each_chunk(
      trials, kChunk,
      [&](std::size_t c, std::size_t begin, std::size_t end) {
        Decoder dec(k, f);
        for (std::size_t j = begin; j < end; ++j) {
          Rng rng(derive_seed(seed, j));
          const SamplePath path = sample_path(k, f.N, rng, pi);
          const BitBlock payload = compress(path.x, f);
          const auto xhat = dec.decompress(payload, path.y);
          if (!xhat) {
            ++fails[c];
            rep.trial_failed[j] = 1;
            continue;
          }
          std::size_t diff = 0;
          for (std::size_t t = 0; t < f.N; ++t) diff += (*xhat)[t] != path.x[t];
          bit_err[c] += diff;
          if (diff) rep.trial_failed[j] = 1;
        }
      },
      workers);
  for (std::size_t c = 0; c < chunks; ++c) {
    rep.bit_errors += bit_err[c];
    rep.decode_failures += fails[c];
  }
  rep.block_errors = static_cast<std::size_t>(std::count(rep.trial_failed.begin(), rep.trial_failed.end(), 1));
  return rep;
}

// ---------------------------------------------------------------------------
// Block file format

inline constexpr char kBlockMagic[8] = {'P', 'L', 'M', 'E', 'M', '0', '0', '1'};

inline std::uint32_t crc32_ieee(std::span<const std::uint8_t> data) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  c = ::crc32(c, data.data(), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(c);
}

namespace codec_detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

struct Reader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  std::uint8_t byte() {
    if (pos >= data.size()) throw Error("compressed block: truncated");
    return data[pos++];
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t{byte()} << (8 * b);
    return v;
  }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t b = byte();
      v |= std::uint64_t{b & 0x7fu} << shift;
      if (!(b & 0x80)) return v;
    }
    throw Error("compressed block: malformed varint");
  }
};

}  // namespace codec_detail

struct CompressedBlock {
  std::size_t N = 0;
  std::vector<std::size_t> frozen;  // 1-based
  BitBlock payload;
};

inline std::vector<std::uint8_t> serialize_block(const FrozenSet& f, std::span<const Bit> payload) {
  if (payload.size() != f.indices.size()) throw Error("serialize_block: payload length does not match |F|");
  std::vector<std::uint8_t> out(kBlockMagic, kBlockMagic + 8);
  codec_detail::put_u32(out, static_cast<std::uint32_t>(f.N));
  codec_detail::put_u32(out, static_cast<std::uint32_t>(f.indices.size()));
  std::size_t prev = 0;
  for (std::size_t i : f.indices) {
    codec_detail::put_varint(out, i - prev);
    prev = i;
  }
  std::vector<std::uint8_t> packed((payload.size() + 7) / 8, 0);
  for (std::size_t j = 0; j < payload.size(); ++j)
    if (payload[j]) packed[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  out.insert(out.end(), packed.begin(), packed.end());
  codec_detail::put_u32(out, crc32_ieee(out));
  return out;
}

inline CompressedBlock parse_block(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20) throw Error("compressed block: too short");
  if (!std::equal(kBlockMagic, kBlockMagic + 8, bytes.begin())) throw Error("compressed block: bad magic");
  const auto body = bytes.first(bytes.size() - 4);
  codec_detail::Reader tail{bytes.last(4)};
  if (tail.u32() != crc32_ieee(body)) throw Error("compressed block: CRC mismatch");
  codec_detail::Reader r{body, 8};
  CompressedBlock blk;
  blk.N = r.u32();
  const std::size_t count = r.u32();
  if (!is_power_of_two(blk.N) || count > blk.N) throw Error("compressed block: bad header");
  std::size_t prev = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const std::uint64_t delta = r.varint();
    if (delta == 0 || prev + delta > blk.N) throw Error("compressed block: bad index list");
    prev += delta;
    blk.frozen.push_back(prev);
  }
  if (body.size() - r.pos != (count + 7) / 8) throw Error("compressed block: payload size mismatch");
  for (std::size_t j = 0; j < count; ++j) blk.payload.push_back((body[r.pos + j / 8] >> (j % 8)) & 1u);
  return blk;
}

}  // namespace polarlab
