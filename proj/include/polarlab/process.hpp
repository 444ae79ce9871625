#pragma once

// Stationary finite-state processes (X_t, Y_t, S_t).
//
// Time convention: the edge leaving S_{t-1} emits (X_t, Y_t) and lands in
// S_t. S_0 is drawn from the stationary law. Every supported model class
// (i.i.d. pairs, Markov and hidden-Markov sources, finite-state channels
// driven by Markov inputs) is compiled into this single representation.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarlab/error.hpp"
#include "polarlab/info.hpp"
#include "polarlab/random.hpp"
#include "polarlab/transform.hpp"

namespace polarlab {

struct Edge {
  int from = 0;
  int to = 0;
  int x = 0;
  int y = 0;
  double p = 0.0;
};

class EdgeKernel {
 public:
  EdgeKernel(std::string name, int num_states, std::vector<std::string> obs_labels,
             const std::vector<Edge>& edges, bool periodic_ok = false,
             std::vector<std::string> state_labels = {})
      : name_(std::move(name)),
        m_(num_states),
        obs_labels_(std::move(obs_labels)),
        state_labels_(std::move(state_labels)),
        periodic_ok_(periodic_ok) {
    if (m_ < 1) throw Error("kernel needs at least one state");
    if (obs_labels_.empty()) obs_labels_ = {"-"};
    if (state_labels_.empty())
      for (int s = 0; s < m_; ++s) state_labels_.push_back(std::to_string(s));
    if (static_cast<int>(state_labels_.size()) != m_) throw Error("state label count mismatch");
    dense_.assign(static_cast<std::size_t>(m_) * m_ * 2 * num_obs(), 0.0);
    for (const Edge& e : edges) {
      if (e.from < 0 || e.from >= m_ || e.to < 0 || e.to >= m_)
        throw Error("edge state out of range");
      if (e.x != 0 && e.x != 1) throw Error("edge x must be 0 or 1");
      if (e.y < 0 || e.y >= num_obs()) throw Error("edge observation out of range");
      if (!std::isfinite(e.p) || e.p < 0) throw Error("edge probability must be >= 0");
      dense_[index(e.from, e.to, e.x, e.y)] += e.p;
    }
    for (int s = 0; s < m_; ++s) {
      double row = 0;
      for (int t = 0; t < m_; ++t)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < num_obs(); ++y) row += dense_[index(s, t, x, y)];
      if (std::abs(row - 1.0) > 1e-12)
        throw Error("kernel row for state " + state_labels_[s] + " sums to " +
                    std::to_string(row) + ", not 1");
    }
    for (int s = 0; s < m_; ++s) {
      offsets_.push_back(edges_.size());
      for (int t = 0; t < m_; ++t)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < num_obs(); ++y)
            if (const double p = dense_[index(s, t, x, y)]; p > 0) edges_.push_back({s, t, x, y, p});
    }
    offsets_.push_back(edges_.size());
    if (!periodic_ok_ && !irreducible())
      throw Error("kernel '" + name_ + "' is not irreducible (set periodic_ok to admit it)");
  }

  const std::string& name() const { return name_; }
  int num_states() const { return m_; }
  int num_obs() const { return static_cast<int>(obs_labels_.size()); }
  const std::vector<std::string>& obs_labels() const { return obs_labels_; }
  const std::vector<std::string>& state_labels() const { return state_labels_; }
  bool periodic_ok() const { return periodic_ok_; }

  /// Edges in canonical (from, to, x, y) order, zero-probability edges dropped.
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Edge> edges_from(int s) const {
    return std::span<const Edge>(edges_).subspan(offsets_[s], offsets_[s + 1] - offsets_[s]);
  }

  double prob(int s, int t, int x, int y) const { return dense_[index(s, t, x, y)]; }

  /// State-marginal transition matrix P(s, s').
  Eigen::MatrixXd state_transition() const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m_, m_);
    for (const Edge& e : edges_) P(e.from, e.to) += e.p;
    return P;
  }

  bool irreducible() const {
    for (int start = 0; start < m_; ++start) {
      std::vector<char> seen(m_, 0);
      std::vector<int> stack{start};
      seen[start] = 1;
      while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        for (const Edge& e : edges_from(s))
          if (!seen[e.to]) seen[e.to] = 1, stack.push_back(e.to);
      }
      if (std::count(seen.begin(), seen.end(), 1) != m_) return false;
    }
    return true;
  }

 private:
  std::size_t index(int s, int t, int x, int y) const {
    return ((static_cast<std::size_t>(s) * m_ + t) * 2 + x) * obs_labels_.size() + y;
  }

  std::string name_;
  int m_;
  std::vector<std::string> obs_labels_;
  std::vector<std::string> state_labels_;
  bool periodic_ok_;
  std::vector<double> dense_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
};

// ---------------------------------------------------------------------------
// Constructors

/// i.i.d. pairs with joint law p_xy[x * |obs| + y].
inline EdgeKernel make_iid(std::span<const double> p_xy, std::vector<std::string> obs_labels = {},
                           std::string name = "iid") {
  const std::size_t num_obs = obs_labels.empty() ? 1 : obs_labels.size();
  if (p_xy.size() != 2 * num_obs) throw Error("make_iid: joint law must have 2*|obs| entries");
  double total = 0;
  for (double p : p_xy) {
    if (!(p >= 0)) throw Error("make_iid: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error("make_iid: joint law does not sum to 1");
  std::vector<Edge> edges;
  for (int x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < num_obs; ++y)
      if (p_xy[x * num_obs + y] > 0)
        edges.push_back({0, 0, x, static_cast<int>(y), p_xy[x * num_obs + y]});
  return EdgeKernel(std::move(name), 1, std::move(obs_labels), edges);
}

/// Ber(p) source without side information.
inline EdgeKernel make_bernoulli(double p) {
  const double law[2] = {1 - p, p};
  return make_iid(law, {}, "iid:" + std::to_string(p));
}

/// Hidden-Markov source: edge s -> s' emits x with trans(s,s') * emit(s')[x].
/// No side information.
inline EdgeKernel make_hidden_markov(const std::vector<std::vector<double>>& trans,
                                     const std::vector<std::array<double, 2>>& emit,
                                     std::string name = "hmm", bool periodic_ok = false) {
  const std::size_t m = trans.size();
  if (m == 0 || emit.size() != m) throw Error("make_hidden_markov: dimension mismatch");
  std::vector<Edge> edges;
  for (std::size_t s = 0; s < m; ++s) {
    if (trans[s].size() != m) throw Error("make_hidden_markov: transition matrix not square");
    for (std::size_t t = 0; t < m; ++t)
      for (int x = 0; x < 2; ++x) {
        const double p = trans[s][t] * emit[t][x];
        if (trans[s][t] < 0 || emit[t][x] < 0) throw Error("make_hidden_markov: negative entry");
        if (p > 0) edges.push_back({static_cast<int>(s), static_cast<int>(t), x, 0, p});
      }
  }
  return EdgeKernel(std::move(name), static_cast<int>(m), {}, edges, periodic_ok);
}

/// Finite-state channel W(s', y | x, s), stored at ((s*2 + x)*C + s')*|Y| + y.
struct FiniteStateChannel {
  int num_states = 1;
  std::vector<std::string> obs_labels;
  std::vector<double> w;

  double operator()(int s, int x, int s2, int y) const {
    return w[((static_cast<std::size_t>(s) * 2 + x) * num_states + s2) * obs_labels.size() + y];
  }
};

/// Markov input law p(a', x | a), stored at (a*A + a')*2 + x.
struct MarkovInput {
  int num_states = 1;
  std::vector<double> q;

  double operator()(int a, int a2, int x) const {
    return q[(static_cast<std::size_t>(a) * num_states + a2) * 2 + x];
  }
};

inline MarkovInput iid_input(double p1 = 0.5) { return {1, {1 - p1, p1}}; }

/// First-order Markov input whose state is the previous symbol.
/// flip[a] is the probability that the next symbol differs from a.
inline MarkovInput first_order_input(double flip0, double flip1) {
  MarkovInput in{2, std::vector<double>(8, 0.0)};
  in.q[(0 * 2 + 0) * 2 + 0] = 1 - flip0;
  in.q[(0 * 2 + 1) * 2 + 1] = flip0;
  in.q[(1 * 2 + 1) * 2 + 1] = 1 - flip1;
  in.q[(1 * 2 + 0) * 2 + 0] = flip1;
  return in;
}

/// Binary symmetric channel whose crossover depends on the state it lands in.
inline FiniteStateChannel state_dependent_bsc(const std::vector<std::vector<double>>& trans,
                                              const std::vector<double>& crossover) {
  const int c = static_cast<int>(trans.size());
  if (c == 0 || static_cast<int>(crossover.size()) != c) throw Error("channel dimension mismatch");
  FiniteStateChannel ch{c, {"0", "1"}, std::vector<double>(static_cast<std::size_t>(c) * 2 * c * 2)};
  for (int s = 0; s < c; ++s) {
    if (static_cast<int>(trans[s].size()) != c) throw Error("channel transition not square");
    for (int x = 0; x < 2; ++x)
      for (int t = 0; t < c; ++t)
        for (int y = 0; y < 2; ++y)
          ch.w[((static_cast<std::size_t>(s) * 2 + x) * c + t) * 2 + y] =
              trans[s][t] * (y == x ? 1 - crossover[t] : crossover[t]);
  }
  return ch;
}

inline FiniteStateChannel gilbert_elliott_channel(double p_good, double p_bad, double g2b, double b2g) {
  return state_dependent_bsc({{1 - g2b, g2b}, {b2g, 1 - b2g}}, {p_good, p_bad});
}

/// Product-state kernel over (channel state c, input state a), index c*A + a.
inline EdgeKernel compose_channel_with_input(const FiniteStateChannel& channel,
                                             const MarkovInput& input, std::string name = "channel") {
  const int C = channel.num_states, A = input.num_states;
  const std::size_t Y = channel.obs_labels.size();
  if (C < 1 || A < 1 || Y == 0) throw Error("compose: empty alphabet");
  if (channel.w.size() != static_cast<std::size_t>(C) * 2 * C * Y)
    throw Error("compose: channel table does not match its state/observation alphabets");
  if (input.q.size() != static_cast<std::size_t>(A) * A * 2)
    throw Error("compose: input table does not match its state alphabet");
  for (int s = 0; s < C; ++s)
    for (int x = 0; x < 2; ++x) {
      double row = 0;
      for (int t = 0; t < C; ++t)
        for (std::size_t y = 0; y < Y; ++y) row += channel(s, x, t, static_cast<int>(y));
      if (std::abs(row - 1) > 1e-12) throw Error("compose: channel row not stochastic");
    }
  std::vector<Edge> edges;
  std::vector<std::string> labels;
  for (int c = 0; c < C; ++c)
    for (int a = 0; a < A; ++a) labels.push_back(std::to_string(c) + "/" + std::to_string(a));
  for (int c = 0; c < C; ++c)
    for (int a = 0; a < A; ++a)
      for (int c2 = 0; c2 < C; ++c2)
        for (int a2 = 0; a2 < A; ++a2)
          for (int x = 0; x < 2; ++x)
            for (std::size_t y = 0; y < Y; ++y) {
              const double p = input(a, a2, x) * channel(c, x, c2, static_cast<int>(y));
              if (p > 0) edges.push_back({c * A + a, c2 * A + a2, x, static_cast<int>(y), p});
            }
  return EdgeKernel(std::move(name), C * A, channel.obs_labels, edges, false, labels);
}

/// Period-4 source: deterministic cycle s -> s+1 mod 4; the edge into s'
/// emits Ber(1/2) when s' is 0 or 1 and the constant 0 otherwise. Started
/// in S_1 = s, X_1..X_8 follow the corresponding row of the B/0 pattern
/// (B B 0 0 ... for s = 0).
inline EdgeKernel make_periodic_bb00() {
  std::vector<Edge> edges;
  for (int s = 0; s < 4; ++s) {
    const int t = (s + 1) % 4;
    if (t <= 1) {
      edges.push_back({s, t, 0, 0, 0.5});
      edges.push_back({s, t, 1, 0, 0.5});
    } else {
      edges.push_back({s, t, 0, 0, 1.0});
    }
  }
  return EdgeKernel("bb00", 4, {}, edges, true);
}

// ---------------------------------------------------------------------------
// Stationary analysis and mixing

struct StationaryDistribution {
  std::vector<double> pi;
};

/// Solves pi P = pi with sum(pi) = 1 directly (periodic chains are fine).
inline StationaryDistribution stationary_distribution(const EdgeKernel& k) {
  const int m = k.num_states();
  const Eigen::MatrixXd P = k.state_transition();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(m, m);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-10);
  if (m > 1 && lu.rank() < m - 1)
    throw Error("state chain of '" + k.name() + "' is reducible: stationary law is not unique");
  A.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  Eigen::VectorXd pi = A.fullPivLu().solve(b);
  StationaryDistribution out;
  for (int s = 0; s < m; ++s) out.pi.push_back(std::max(0.0, pi(s)));
  const double total = std::accumulate(out.pi.begin(), out.pi.end(), 0.0);
  for (double& p : out.pi) p /= total;
  return out;
}

struct PsiDiagnostics {
  std::vector<int> k_values;
  std::vector<double> psi_bound;
};

/// State-bridging bounds psi_k <= max_{s,s'} P^k(s'|s) / pi(s') for lags
/// 0..max_lag. Events in the past and beyond lag k only interact through
/// the bridging states, which gives Pr(A,B) <= bound * Pr(A) Pr(B).
inline PsiDiagnostics psi_bounds(const EdgeKernel& k, int max_lag) {
  if (max_lag < 0) throw Error("psi bound: negative lag");
  const auto pi = stationary_distribution(k).pi;
  const int m = k.num_states();
  for (double p : pi)
    if (!(p > 0)) throw Error("psi bound: a state has zero stationary mass");
  const Eigen::MatrixXd P = k.state_transition();
  Eigen::MatrixXd Pk = Eigen::MatrixXd::Identity(m, m);
  PsiDiagnostics d;
  for (int lag = 0; lag <= max_lag; ++lag) {
    if (lag > 0) Pk = Pk * P;
    double bound = 0;
    for (int s = 0; s < m; ++s)
      for (int t = 0; t < m; ++t) bound = std::max(bound, Pk(s, t) / pi[t]);
    d.k_values.push_back(lag);
    d.psi_bound.push_back(bound);
  }
  return d;
}

inline double psi_k_bound(const EdgeKernel& k, int lag) { return psi_bounds(k, lag).psi_bound.back(); }

// ---------------------------------------------------------------------------
// Sampling and forward probabilities

struct SamplePath {
  std::vector<int> s;  // S_0..S_N
  BitBlock x;          // X_1..X_N
  std::vector<int> y;  // Y_1..Y_N
};

inline int sample_categorical(std::span<const double> weights, double u) {
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0) return static_cast<int>(i);
  return 0;
}

inline SamplePath sample_path(const EdgeKernel& k, std::size_t n, Rng& rng,
                              std::span<const double> pi) {
  SamplePath path;
  path.s.reserve(n + 1);
  path.x.reserve(n);
  path.y.reserve(n);
  int s = sample_categorical(pi, uniform01(rng));
  path.s.push_back(s);
  for (std::size_t t = 0; t < n; ++t) {
    const auto out = k.edges_from(s);
    const double u = uniform01(rng);
    double acc = 0;
    const Edge* chosen = &out.back();
    for (const Edge& e : out) {
      acc += e.p;
      if (u < acc) {
        chosen = &e;
        break;
      }
    }
    s = chosen->to;
    path.s.push_back(s);
    path.x.push_back(static_cast<Bit>(chosen->x));
    path.y.push_back(chosen->y);
  }
  return path;
}

/// Path of n steps with S_0 drawn from the stationary law.
inline SamplePath sample_path(const EdgeKernel& k, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error("sample_path: n must be >= 1");
  Rng rng(seed);
  const auto pi = stationary_distribution(k).pi;
  return sample_path(k, n, rng, pi);
}

struct ForwardLogProb {
  double joint;  // log2 p(x, y)
  double obs;    // log2 p(y)
};

/// Exact log2 p(x,y) and log2 p(y) by a renormalized forward recursion.
/// Impossible sequences give -infinity.
inline ForwardLogProb forward_prob(const EdgeKernel& k, std::span<const Bit> x, std::span<const int> y,
                                   std::span<const double> init) {
  if (x.size() != y.size()) throw Error("forward_prob: x and y lengths differ");
  const int m = k.num_states();
  std::vector<double> a(init.begin(), init.end()), b(init.begin(), init.end());
  std::vector<double> na(m), nb(m);
  double la = 0, lb = 0;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (x[t] > 1 || y[t] < 0 || y[t] >= k.num_obs()) throw Error("forward_prob: symbol out of range");
    std::fill(na.begin(), na.end(), 0.0);
    std::fill(nb.begin(), nb.end(), 0.0);
    for (int s = 0; s < m; ++s)
      for (const Edge& e : k.edges_from(s)) {
        if (e.y != y[t]) continue;
        nb[e.to] += b[s] * e.p;
        if (e.x == x[t]) na[e.to] += a[s] * e.p;
      }
    const double sa = std::accumulate(na.begin(), na.end(), 0.0);
    const double sb = std::accumulate(nb.begin(), nb.end(), 0.0);
    if (sb <= 0) return {neg_inf, neg_inf};
    if (sa <= 0) {
      la = neg_inf;
      std::fill(na.begin(), na.end(), 0.0);
    } else if (la != neg_inf) {
      la += std::log2(sa);
      for (double& v : na) v /= sa;
    }
    lb += std::log2(sb);
    for (double& v : nb) v /= sb;
    a.swap(na);
    b.swap(nb);
  }
  return {la, lb};
}

inline ForwardLogProb forward_prob(const EdgeKernel& k, std::span<const Bit> x, std::span<const int> y) {
  const auto pi = stationary_distribution(k).pi;
  return forward_prob(k, x, y, pi);
}

enum class Method { exact, monte_carlo };

inline const char* to_string(Method m) { return m == Method::exact ? "exact" : "mc"; }

struct EntropyRateEstimate {
  double value = 0;
  double std_error = 0;
  std::size_t n_used = 0;
  Method method = Method::exact;
};

/// Estimates (1/n) H(X_1^n | Y_1^n). Single-state kernels are evaluated
/// exactly from the single-letter law; otherwise the sample mean of
/// -(1/n) log2 p(x|y) over independent paths is returned.
inline EntropyRateEstimate entropy_rate_estimate(const EdgeKernel& k, std::size_t n, std::size_t samples,
                                                 std::uint64_t seed) {
  if (n < 1) throw Error("entropy_rate_estimate: n must be >= 1");
  if (k.num_states() == 1) {
    long double h = 0;
    for (int y = 0; y < k.num_obs(); ++y) h += slice_entropy(k.prob(0, 0, 0, y), k.prob(0, 0, 1, y));
    return {static_cast<double>(h), 0.0, n, Method::exact};
  }
  if (samples < 2) throw Error("entropy_rate_estimate: need at least 2 samples");
  const auto pi = stationary_distribution(k).pi;
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<double> sum(chunks, 0.0), sum2(chunks, 0.0);
  for_each_chunk(samples, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      Rng rng(derive_seed(seed, j));
      const SamplePath path = sample_path(k, n, rng, pi);
      const ForwardLogProb lp = forward_prob(k, path.x, path.y, pi);
      const double v = -(lp.joint - lp.obs) / static_cast<double>(n);
      sum[c] += v;
      sum2[c] += v * v;
    }
  });
  double s = 0, s2 = 0;
  for (std::size_t c = 0; c < chunks; ++c) s += sum[c], s2 += sum2[c];
  const double ns = static_cast<double>(samples);
  const double mean = s / ns;
  const double var = std::max(0.0, (s2 - ns * mean * mean) / (ns - 1));
  return {std::clamp(mean, 0.0, 1.0), std::sqrt(var / ns), n, Method::monte_carlo};
}

}  // namespace polarlab
