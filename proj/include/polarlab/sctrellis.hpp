#pragma once

// Successive cancellation over a finite-state trellis.
//
// A message covers a contiguous span of time steps and holds, for each value
// of the bit it speaks about, an m x m block indexed (entry state, exit
// state). The transform of a span of length 2L splits into the transform of
// the pairwise sums x_{2j-1} + x_{2j} (indices 1..L) and the transform of
// the even-position bits x_{2j} (indices L+1..2L), so adjacent messages
// combine with
//   minus: out[u] = sum_v left[u+v] * right[v]
//   plus:  out[v] = left[a+v] * right[v]      (a: decided pairwise sum)
// where * is the matrix product over the shared boundary state. Leaves are
// visited in natural index order.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "polarlab/error.hpp"
#include "polarlab/process.hpp"
#include "polarlab/profile.hpp"
#include "polarlab/random.hpp"
#include "polarlab/transform.hpp"

namespace polarlab {

namespace sc_detail {

/// Rescales the 2*m*m values at p so that the largest lies in [1/2, 1) and
/// returns the binary exponent removed. All-zero input returns 0.
inline std::int64_t renormalize(double* p, int m) {
  const int n = 2 * m * m;
  double mx = 0;
  for (int j = 0; j < n; ++j) mx = std::max(mx, p[j]);
  if (mx == 0) return 0;
  // Exponent e with mx in [2^(e-1), 2^e); frexp for subnormals.
  const auto bits = std::bit_cast<std::uint64_t>(mx);
  int e = static_cast<int>((bits >> 52) & 0x7ff) - 1022;
  if (e == -1022) std::frexp(mx, &e);
  if (e != 0) {
    const double f = std::ldexp(1.0, -e);
    for (int j = 0; j < n; ++j) p[j] *= f;
  }
  return e;
}

// out[w] += A[w ^ c] * B[w] style block products; M > 0 fixes the state
// count at compile time so the small cases unroll.
template <int M>
inline void block_madd(const double* A, const double* B, double* O, int m) {
  const int mm = M > 0 ? M : m;
  for (int s = 0; s < mm; ++s)
    for (int mid = 0; mid < mm; ++mid) {
      const double a = A[s * mm + mid];
      if (a == 0) continue;
      for (int t = 0; t < mm; ++t) O[s * mm + t] += a * B[mid * mm + t];
    }
}

template <int M>
inline void minus_impl(const double* L, const double* R, double* out, int m) {
  const int mm = m * m;
  std::fill(out, out + 2 * mm, 0.0);
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) block_madd<M>(L + (u ^ v) * mm, R + v * mm, out + u * mm, m);
}

template <int M>
inline void plus_impl(const double* L, const double* R, Bit a_bit, double* out, int m) {
  const int mm = m * m;
  std::fill(out, out + 2 * mm, 0.0);
  for (int v = 0; v < 2; ++v) block_madd<M>(L + (a_bit ^ v) * mm, R + v * mm, out + v * mm, m);
}

inline void minus_raw(const double* L, const double* R, double* out, int m) {
  switch (m) {
    case 1:
      out[0] = L[0] * R[0] + L[1] * R[1];
      out[1] = L[1] * R[0] + L[0] * R[1];
      return;
    case 2: return minus_impl<2>(L, R, out, m);
    case 4: return minus_impl<4>(L, R, out, m);
    default: return minus_impl<0>(L, R, out, m);
  }
}

inline void plus_raw(const double* L, const double* R, Bit a_bit, double* out, int m) {
  switch (m) {
    case 1:
      out[0] = L[a_bit] * R[0];
      out[1] = L[a_bit ^ 1] * R[1];
      return;
    case 2: return plus_impl<2>(L, R, a_bit, out, m);
    case 4: return plus_impl<4>(L, R, a_bit, out, m);
    default: return plus_impl<0>(L, R, a_bit, out, m);
  }
}

}  // namespace sc_detail

/// block[u] is m x m, row-major (entry, exit); the represented values are
/// block * 2^log_scale.
struct StateMessage {
  int m = 1;
  std::vector<double> data;  // 2 * m * m
  std::int64_t log_scale = 0;

  explicit StateMessage(int states = 1) : m(states), data(2 * static_cast<std::size_t>(states) * states, 0.0) {}

  double& at(int u, int s, int t) { return data[(static_cast<std::size_t>(u) * m + s) * m + t]; }
  double at(int u, int s, int t) const { return data[(static_cast<std::size_t>(u) * m + s) * m + t]; }
  bool impossible() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return v == 0; });
  }
  /// Entry value including the scale.
  double value(int u, int s, int t) const { return std::ldexp(at(u, s, t), static_cast<int>(log_scale)); }
};

inline StateMessage leaf_message(const EdgeKernel& k, int y) {
  if (y < 0 || y >= k.num_obs()) throw Error("leaf_message: observation out of range");
  StateMessage msg(k.num_states());
  for (const Edge& e : k.edges())
    if (e.y == y) msg.at(e.x, e.from, e.to) += e.p;
  msg.log_scale = sc_detail::renormalize(msg.data.data(), msg.m);
  return msg;
}

inline StateMessage combine_minus(const StateMessage& left, const StateMessage& right) {
  if (left.m != right.m) throw Error("combine_minus: state counts differ");
  StateMessage out(left.m);
  sc_detail::minus_raw(left.data.data(), right.data.data(), out.data.data(), left.m);
  out.log_scale = left.log_scale + right.log_scale + sc_detail::renormalize(out.data.data(), out.m);
  return out;
}

inline StateMessage combine_plus(const StateMessage& left, const StateMessage& right, Bit u_decided) {
  if (left.m != right.m) throw Error("combine_plus: state counts differ");
  if (u_decided > 1) throw Error("combine_plus: decided bit must be 0 or 1");
  StateMessage out(left.m);
  sc_detail::plus_raw(left.data.data(), right.data.data(), u_decided, out.data.data(), left.m);
  out.log_scale = left.log_scale + right.log_scale + sc_detail::renormalize(out.data.data(), out.m);
  return out;
}

/// Unnormalized posterior masses of U_i = 0 and U_i = 1 (common scale).
struct Posterior {
  double a0 = 0;
  double a1 = 0;

  bool impossible() const { return !(a0 + a1 > 0); }
  double p0() const { return a0 / (a0 + a1); }
  /// -log2 p(U_i = u); +inf when that value has zero mass.
  double minus_log2(Bit u) const {
    const double mine = u ? a1 : a0, other = u ? a0 : a1;
    if (mine <= 0) return std::numeric_limits<double>::infinity();
    return std::log1p(other / mine) / kLn2;
  }
  /// 2 sqrt(p0 p1).
  double bhattacharyya() const {
    const double t = a0 + a1;
    return std::min(1.0, 2.0 * std::sqrt(a0 / t) * std::sqrt(a1 / t));
  }
};

/// Reusable SC workspace for one kernel and block length. Not thread-safe;
/// use one engine per worker.
class SCEngine {
 public:
  SCEngine(const EdgeKernel& k, std::size_t N)
      : m_(k.num_states()), mm_(static_cast<std::size_t>(m_) * m_), N_(N), n_(block_order(N)) {
    pi_ = stationary_distribution(k).pi;
    leaves_.resize(static_cast<std::size_t>(k.num_obs()));
    for (int y = 0; y < k.num_obs(); ++y) {
      const StateMessage msg = leaf_message(k, y);
      leaves_[y] = {msg.data, msg.log_scale};
    }
    msgs_.resize(n_ + 1);
    scales_.resize(n_ + 1);
    for (int d = 0; d <= n_; ++d) {
      const std::size_t count = N_ >> d;
      msgs_[d].assign(count * 2 * mm_, 0.0);
      scales_[d].assign(count, 0);
    }
    bits_.assign(N_, 0);
    scratch_.assign(N_, 0);
  }

  int num_states() const { return m_; }
  std::size_t N() const { return N_; }
  std::span<const double> stationary() const { return pi_; }

  /// Runs SC over observations y. For each index i = 1..stop_after in order,
  /// calls decide(i, posterior) which returns the bit to commit. With
  /// given_state the law is conditioned on S_1 = given_state.
  template <class Decide>
  void run(std::span<const int> y, std::optional<int> given_state, Decide&& decide) {
    run(y, given_state, N_, decide);
  }

  template <class Decide>
  void run(std::span<const int> y, std::optional<int> given_state, std::size_t stop_after, Decide&& decide) {
    if (y.size() != N_) throw Error("SCEngine: observation length does not match N");
    if (given_state && (*given_state < 0 || *given_state >= m_)) throw Error("SCEngine: given state out of range");
    for (std::size_t t = 0; t < N_; ++t) {
      if (y[t] < 0 || static_cast<std::size_t>(y[t]) >= leaves_.size())
        throw Error("SCEngine: observation out of range");
      const auto& leaf = leaves_[y[t]];
      std::copy(leaf.first.begin(), leaf.first.end(), msgs_[0].begin() + t * 2 * mm_);
      scales_[0][t] = leaf.second;
    }
    if (given_state) {
      double* p = msgs_[0].data();
      for (int u = 0; u < 2; ++u)
        for (int s = 0; s < m_; ++s)
          for (int t = 0; t < m_; ++t)
            if (t != *given_state) p[(u * m_ + s) * m_ + t] = 0.0;
    }
    next_ = 1;
    stop_ = std::min(stop_after, N_);
    descend(0, 0, decide);
  }

  /// Posterior of U_i = 0 for every index along the true u (genie-aided).
  /// Entries are nullopt where the conditioning event has zero probability.
  std::vector<std::optional<double>> posteriors(std::span<const int> y, std::span<const Bit> u,
                                                std::optional<int> given_state = {}) {
    if (u.size() != N_) throw Error("SCEngine: decision length does not match N");
    std::vector<std::optional<double>> out(N_);
    run(y, given_state, [&](std::size_t i, const Posterior& p) {
      if (!p.impossible()) out[i - 1] = p.p0();
      return u[i - 1];
    });
    return out;
  }

 private:
  /// Decodes the subcode whose messages are at depth d, occupying positions
  /// [offset, offset + (N >> d)) of bits_. On return bits_ holds the
  /// subcode's x-domain values at those positions.
  template <class Decide>
  void descend(int d, std::size_t offset, Decide& decide) {
    const std::size_t count = N_ >> d;
    if (count == 1) {
      if (next_ > stop_) return;
      const double* M = msgs_[d].data();
      long double a[2] = {0, 0};
      for (int u = 0; u < 2; ++u)
        for (int s = 0; s < m_; ++s) {
          if (pi_[s] == 0) continue;
          long double row = 0;
          for (int t = 0; t < m_; ++t) row += M[(u * m_ + s) * m_ + t];
          a[u] += pi_[s] * row;
        }
      const Posterior post{static_cast<double>(a[0]), static_cast<double>(a[1])};
      const Bit b = static_cast<Bit>(decide(next_, post) ? 1 : 0);
      bits_[offset] = b;
      ++next_;
      return;
    }
    const std::size_t half = count / 2;
    const double* in = msgs_[d].data();
    const std::int64_t* in_scale = scales_[d].data();
    double* out = msgs_[d + 1].data();
    std::int64_t* out_scale = scales_[d + 1].data();
    const std::size_t stride = 2 * mm_;
    for (std::size_t j = 0; j < half; ++j) {
      sc_detail::minus_raw(in + 2 * j * stride, in + (2 * j + 1) * stride, out + j * stride, m_);
      out_scale[j] = in_scale[2 * j] + in_scale[2 * j + 1] + sc_detail::renormalize(out + j * stride, m_);
    }
    descend(d + 1, offset, decide);
    if (next_ > stop_) return;
    for (std::size_t j = 0; j < half; ++j) {
      sc_detail::plus_raw(in + 2 * j * stride, in + (2 * j + 1) * stride, bits_[offset + j], out + j * stride, m_);
      out_scale[j] = in_scale[2 * j] + in_scale[2 * j + 1] + sc_detail::renormalize(out + j * stride, m_);
    }
    descend(d + 1, offset + half, decide);
    // bits_[offset..+half) = pairwise sums a_j, bits_[offset+half..) = even bits b_j.
    for (std::size_t j = 0; j < half; ++j) {
      scratch_[2 * j] = bits_[offset + j] ^ bits_[offset + half + j];
      scratch_[2 * j + 1] = bits_[offset + half + j];
    }
    std::copy(scratch_.begin(), scratch_.begin() + count, bits_.begin() + offset);
  }

  int m_;
  std::size_t mm_;
  std::size_t N_;
  int n_;
  std::vector<double> pi_;
  std::vector<std::pair<std::vector<double>, std::int64_t>> leaves_;
  std::vector<std::vector<double>> msgs_;
  std::vector<std::vector<std::int64_t>> scales_;
  BitBlock bits_, scratch_;
  std::size_t next_ = 1, stop_ = 0;
};

/// p(U_i = 0 | u_1^{i-1}, y_1^N) for i = decisions.size() + 1.
inline std::optional<double> sc_posteriors(SCEngine& engine, std::span<const int> y, std::span<const Bit> decisions,
                                          std::optional<int> given_state = {}) {
  if (decisions.size() >= engine.N()) throw Error("sc_posteriors: decision prefix must be shorter than N");
  std::optional<double> result;
  const std::size_t target = decisions.size() + 1;
  engine.run(y, given_state, target, [&](std::size_t i, const Posterior& p) -> Bit {
    if (i == target) {
      if (!p.impossible()) result = p.p0();
      return 0;
    }
    return decisions[i - 1];
  });
  return result;
}

/// One-shot form of sc_posteriors that builds its own engine.
inline std::optional<double> sc_posterior(const EdgeKernel& k, std::span<const int> y,
                                          std::span<const Bit> decisions, std::optional<int> given_state = {}) {
  SCEngine engine(k, y.size());
  return sc_posteriors(engine, y, decisions, given_state);
}

/// Samples a path; with given_state, paths are redrawn until S_1 matches.
inline SamplePath sample_path_given(const EdgeKernel& k, std::size_t n, Rng& rng, std::span<const double> pi,
                                    std::optional<int> given_state) {
  for (;;) {
    SamplePath p = sample_path(k, n, rng, pi);
    if (!given_state || p.s[1] == *given_state) return p;
  }
}

/// Genie-aided Monte-Carlo profile. Per sample: draw a path, encode u, run
/// SC along the true u and accumulate -log2 p(u_i | past) and 2 sqrt(p0 p1).
/// Per-index H estimates are clipped to [0, 1].
inline Profile genie_profile_mc(const EdgeKernel& k, std::size_t N, std::size_t samples, std::uint64_t seed,
                                std::optional<int> given_state = {}, unsigned workers = default_workers()) {
  block_order(N);
  if (samples < 1) throw Error("genie_profile_mc: need at least one sample");
  const auto pi = stationary_distribution(k).pi;
  if (given_state && (*given_state < 0 || *given_state >= k.num_states() || pi[*given_state] <= 0))
    throw Error("genie_profile_mc: given state out of range or null");
  constexpr std::size_t kChunk = 32;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  // Per chunk: sums of H, H^2, Z, Z^2 per index.
  std::vector<std::vector<double>> acc(chunks);
  for_each_chunk(
      samples, kChunk,
      [&](std::size_t c, std::size_t begin, std::size_t end) {
        SCEngine engine(k, N);
        std::vector<double> local(4 * N, 0.0);
        for (std::size_t j = begin; j < end; ++j) {
          Rng rng(derive_seed(seed, j));
          const SamplePath path = sample_path_given(k, N, rng, pi, given_state);
          const BitBlock u = polar_encode(path.x);
          engine.run(path.y, given_state, [&](std::size_t i, const Posterior& p) {
            const Bit b = u[i - 1];
            if (p.impossible()) throw Error("genie_profile_mc: sampled path has zero probability");
            const double h = p.minus_log2(b);
            const double z = p.bhattacharyya();
            double* slot = &local[4 * (i - 1)];
            slot[0] += h;
            slot[1] += h * h;
            slot[2] += z;
            slot[3] += z * z;
            return b;
          });
        }
        acc[c] = std::move(local);
      },
      workers);
  std::vector<double> total(4 * N, 0.0);
  for (const auto& a : acc)
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += a[j];
  Profile prof(N, Method::monte_carlo);
  const double ns = static_cast<double>(samples);
  for (std::size_t i = 0; i < N; ++i) {
    const double* t = &total[4 * i];
    const double mh = t[0] / ns, mz = t[2] / ns;
    const double vh = samples > 1 ? std::max(0.0, (t[1] - ns * mh * mh) / (ns - 1)) : 0.0;
    const double vz = samples > 1 ? std::max(0.0, (t[3] - ns * mz * mz) / (ns - 1)) : 0.0;
    prof.H[i] = std::clamp(mh, 0.0, 1.0);
    prof.Z[i] = std::clamp(mz, 0.0, 1.0);
    prof.H_stderr[i] = std::sqrt(vh / ns);
    prof.Z_stderr[i] = std::sqrt(vz / ns);
  }
  return prof;
}

}  // namespace polarlab
