#pragma once

// Exact numeric checks of the one-step polarization inequalities for
// processes with memory.
//
// Notation for a pair of adjacent blocks of length N:
//   U = transform(X_1^N), V = transform(X_{N+1}^{2N}),
//   Q_i = (Y_1^N, U_1^{i-1}), R_i = (Y_{N+1}^{2N}, V_1^{i-1}).
// Given the boundary state S_N the two blocks are independent, so every
// joint law of (U_i, V_i, Q_i, R_i) is a sum over S_N of products of
// per-block transfer tables. Every residual is oriented so that a value
// >= -tolerance means the inequality holds.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polarlab/info.hpp"
#include "polarlab/random.hpp"
#include "polarlab/oracle.hpp"
#include "polarlab/process.hpp"

namespace polarlab::oracle {

struct CheckReport {
  std::string check_name;
  std::string kernel;
  std::size_t N = 0;
  std::vector<double> residuals;
  double tolerance = 1e-9;
  bool pass = true;

  CheckReport() = default;
  CheckReport(std::string name, std::string k, std::size_t n)
      : check_name(std::move(name)), kernel(std::move(k)), N(n) {}

  double min_residual() const {
    double m = std::numeric_limits<double>::infinity();
    for (double r : residuals) m = std::min(m, r);
    return m;
  }
  void finalize() {
    pass = true;
    for (double r : residuals)
      if (!(r >= -tolerance)) pass = false;
  }
};

inline nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json res = nlohmann::json::array();
  for (double v : r.residuals) res.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  const double mr = r.min_residual();
  return {{"check_name", r.check_name}, {"kernel", r.kernel},  {"N", r.N},
          {"residuals", res},           {"pass", r.pass},      {"tolerance", r.tolerance},
          {"min_residual", std::isfinite(mr) ? nlohmann::json(mr) : nlohmann::json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Block transfer tables

/// T[row][s_in][s_out] = Pr(block emits row, S_end = s_out | S_start = s_in),
/// with row = y_word * 2^N + x_word.
struct BlockTable {
  std::size_t N = 0;
  int m = 1;
  int num_obs = 1;
  std::vector<double> t;

  std::size_t rows() const { return t.size() / (static_cast<std::size_t>(m) * m); }
  const double* row(std::size_t r) const { return t.data() + r * m * m; }
  double* row(std::size_t r) { return t.data() + r * m * m; }
};

inline BlockTable block_table(const EdgeKernel& k, std::size_t N, std::size_t cap = kDefaultCap) {
  const int m = k.num_states(), Y = k.num_obs();
  const std::size_t rows = table_rows(Y, N);
  require_cap(rows == SIZE_MAX ? SIZE_MAX : rows * m * m, cap,
              "block table of " + k.name() + " at N=" + std::to_string(N));
  BlockTable bt{N, m, Y, std::vector<double>(rows * m * m, 0.0)};
  const std::size_t nx = std::size_t{1} << N;
  std::vector<std::vector<double>> mats(N + 1, std::vector<double>(static_cast<std::size_t>(m) * m, 0.0));
  for (int s = 0; s < m; ++s) mats[0][s * m + s] = 1.0;
  std::function<void(std::size_t, std::uint64_t, std::uint64_t)> visit = [&](std::size_t t, std::uint64_t xw,
                                                                            std::uint64_t yw) {
    if (t == N) {
      std::copy(mats[N].begin(), mats[N].end(), bt.row(yw * nx + xw));
      return;
    }
    for (int y = 0; y < Y; ++y)
      for (int x = 0; x < 2; ++x) {
        auto& next = mats[t + 1];
        std::fill(next.begin(), next.end(), 0.0);
        bool any = false;
        for (int mid = 0; mid < m; ++mid)
          for (const Edge& e : k.edges_from(mid)) {
            if (e.x != x || e.y != y) continue;
            for (int s = 0; s < m; ++s) {
              const double a = mats[t][s * m + mid];
              if (a != 0) {
                next[s * m + e.to] += a * e.p;
                any = true;
              }
            }
          }
        if (any) visit(t + 1, (xw << 1) | static_cast<unsigned>(x), yw * Y + y);
      }
  };
  visit(0, 0, 0);
  return bt;
}

/// Reindexes rows from x_word to u_word = transform(x_word).
inline BlockTable to_synthetic(const BlockTable& bt) {
  const int n = block_order(bt.N);
  const std::size_t nx = std::size_t{1} << bt.N, mm = static_cast<std::size_t>(bt.m) * bt.m;
  BlockTable out = bt;
  for (std::size_t r = 0; r < bt.rows(); ++r) {
    const std::size_t y = r / nx, x = r % nx;
    std::copy(bt.row(r), bt.row(r) + mm, out.row(y * nx + polar_encode_word(x, n)));
  }
  return out;
}

/// When every edge satisfies p(s,s',x,y) = p(s,s',1-x,1-y) over a binary
/// observation alphabet, Y is i.i.d. uniform and independent of the noise
/// process Z = X + Y, and every conditional quantity of the transform equals
/// that of the noise source without side information. Returns the noise
/// kernel in that case.
inline std::optional<EdgeKernel> additive_noise_equivalent(const EdgeKernel& k) {
  if (k.num_obs() != 2) return std::nullopt;
  const int m = k.num_states();
  std::vector<Edge> edges;
  for (int s = 0; s < m; ++s)
    for (int t = 0; t < m; ++t)
      for (int x = 0; x < 2; ++x) {
        if (std::abs(k.prob(s, t, x, 0) - k.prob(s, t, 1 - x, 1)) > 1e-15) return std::nullopt;
        const double p = 2 * k.prob(s, t, x, 0);
        if (p > 0) edges.push_back({s, t, x, 0, p});
      }
  return EdgeKernel(k.name() + "/noise", m, {}, edges, k.periodic_ok(), k.state_labels());
}

// ---------------------------------------------------------------------------
// Pair analysis

/// Exact one-step quantities for synthetic index i (1-based) of a pair of
/// adjacent blocks. All entropies in bits.
struct PairTerms {
  double H_u = 0;          // H(U_i | Q_i)
  double H_v = 0;          // H(V_i | R_i)
  double H_minus = 0;      // H(U_i + V_i | Q_i, R_i)
  double H_plus = 0;       // H(V_i | Q_i, R_i, U_i + V_i)
  double H_joint = 0;      // H(U_i, V_i | Q_i, R_i)
  double I_UR_Q = 0;       // I(U_i; R_i | Q_i)
  double I_VQ_R = 0;       // I(V_i; Q_i | R_i)
  double I_UV_QR = 0;      // I(U_i; V_i | Q_i, R_i)
  double I_cross = 0;     // I(U_i; V_i R_i V_{i+1}^N | Q_i)
  double H_minus_surrogate = 0;  // H(U~ + V~ | Q_i, R_i)
  double Z_u = 0, Z_minus = 0, Z_plus = 0;
  double Zhat_minus = 0, Zhat_plus = 0;  // on the product law of the two blocks
  double max_ratio = 0;                  // max p / p_product over the support
};

struct PairAnalysis {
  std::string kernel;
  std::size_t N = 0;
  double psi0 = 1;
  bool noise_reduced = false;
  std::vector<PairTerms> terms;
  double cross_sum = 0;
  double block_mutual_information = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Largest inner loop size of the pair analysis.
inline std::size_t pair_work(int num_obs, std::size_t N) {
  const long double y = std::pow(static_cast<long double>(num_obs), 2.0L * N);
  const long double a = y * std::pow(4.0L, static_cast<long double>(N - 1));
  const long double b = y * std::pow(2.0L, static_cast<long double>(2 * N - 1));
  const long double w = std::max(a, b);
  return w > 1.8e19L ? SIZE_MAX : static_cast<std::size_t>(w);
}

}  // namespace detail

inline PairAnalysis analyze_pair(const EdgeKernel& input, std::size_t N, std::size_t cap = kDefaultCap) {
  block_order(N);
  const double psi0 = psi_k_bound(input, 0);
  std::optional<EdgeKernel> reduced;
  if (detail::pair_work(input.num_obs(), N) > cap) {
    reduced = additive_noise_equivalent(input);
    if (!reduced)
      throw CapExceeded("pair analysis of " + input.name() + " at N=" + std::to_string(N) +
                        " exceeds the cap of " + std::to_string(cap));
  }
  const EdgeKernel& k = reduced ? *reduced : input;
  require_cap(detail::pair_work(k.num_obs(), N), cap, "pair analysis of " + k.name());

  const int m = k.num_states();
  const std::size_t mm = static_cast<std::size_t>(m) * m;
  const auto pi = stationary_distribution(k).pi;
  const BlockTable full = to_synthetic(block_table(k, N, cap));
  const std::size_t rows_full = full.rows();

  PairAnalysis out;
  out.kernel = input.name();
  out.N = N;
  out.psi0 = psi0;
  out.noise_reduced = reduced.has_value();
  out.terms.resize(N);

  // c[r][s1] = Pr(second block emits r | S_N = s1), a_full[r][s1] = Pr(first block emits r, S_N = s1).
  std::vector<double> c(rows_full * m, 0.0), a_full(rows_full * m, 0.0);
  for (std::size_t r = 0; r < rows_full; ++r)
    for (int s = 0; s < m; ++s)
      for (int s2 = 0; s2 < m; ++s2) {
        c[r * m + s] += full.row(r)[s * m + s2];
        a_full[r * m + s2] += pi[s] * full.row(r)[s * m + s2];
      }

  if (rows_full * rows_full <= cap) {
    std::vector<long double> p1(rows_full, 0), p2(rows_full, 0);
    for (std::size_t r = 0; r < rows_full; ++r)
      for (int s = 0; s < m; ++s) {
        p1[r] += a_full[r * m + s];
        p2[r] += pi[s] * c[r * m + s];
      }
    long double mi = 0;
    for (std::size_t r1 = 0; r1 < rows_full; ++r1) {
      if (p1[r1] <= 0) continue;
      for (std::size_t r2 = 0; r2 < rows_full; ++r2) {
        long double p = 0;
        for (int s = 0; s < m; ++s) p += static_cast<long double>(a_full[r1 * m + s]) * c[r2 * m + s];
        if (p > 0) mi += p * std::log2(p / (p1[r1] * p2[r2]));
      }
    }
    out.block_mutual_information = static_cast<double>(mi);
  }

  // Marginalize the synthetic suffix one index at a time, from i = N down.
  std::vector<double> level = full.t;
  for (std::size_t i = N; i >= 1; --i) {
    const std::size_t rows = level.size() / mm;  // (q, u) rows
    const std::size_t nq = rows / 2;
    std::vector<double> a(rows * m, 0.0), b(rows * m, 0.0);
    std::vector<long double> pu(rows, 0), pv(rows, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* T = level.data() + r * mm;
      for (int s = 0; s < m; ++s)
        for (int s2 = 0; s2 < m; ++s2) {
          a[r * m + s2] += pi[s] * T[s * m + s2];
          b[r * m + s] += T[s * m + s2];
        }
      for (int s = 0; s < m; ++s) {
        pu[r] += a[r * m + s];
        pv[r] += pi[s] * b[r * m + s];
      }
    }
    PairTerms& pt = out.terms[i - 1];
    long double H_u = 0, H_v = 0, Z_u = 0;
    for (std::size_t q = 0; q < nq; ++q) {
      H_u += slice_entropy(pu[2 * q], pu[2 * q + 1]);
      H_v += slice_entropy(pv[2 * q], pv[2 * q + 1]);
      Z_u += std::sqrt(pu[2 * q] * pu[2 * q + 1]);
    }
    long double H_joint = 0, H_minus = 0, H_plus = 0, H_uqr = 0, H_vqr = 0, H_sur = 0;
    long double Z_minus = 0, Z_plus = 0, Zh_minus = 0, Zh_plus = 0;
    double max_ratio = 0;
    for (std::size_t q = 0; q < nq; ++q) {
      const long double pq = pu[2 * q] + pu[2 * q + 1];
      if (pq <= 0) continue;
      for (std::size_t r = 0; r < nq; ++r) {
        const long double pr = pv[2 * r] + pv[2 * r + 1];
        if (pr <= 0) continue;
        long double p[2][2] = {{0, 0}, {0, 0}};
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v) {
            const double* au = &a[(2 * q + u) * m];
            const double* bv = &b[(2 * r + v) * m];
            for (int s = 0; s < m; ++s) p[u][v] += static_cast<long double>(au[s]) * bv[s];
          }
        const long double tot = p[0][0] + p[0][1] + p[1][0] + p[1][1];
        if (tot <= 0) continue;
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v)
            if (p[u][v] > 0) H_joint -= p[u][v] * std::log2(p[u][v] / tot);
        H_minus += slice_entropy(p[0][0] + p[1][1], p[0][1] + p[1][0]);
        H_plus += slice_entropy(p[0][0], p[1][1]) + slice_entropy(p[1][0], p[0][1]);
        H_uqr += slice_entropy(p[0][0] + p[0][1], p[1][0] + p[1][1]);
        H_vqr += slice_entropy(p[0][0] + p[1][0], p[0][1] + p[1][1]);
        Z_minus += 2 * std::sqrt((p[0][0] + p[1][1]) * (p[0][1] + p[1][0]));
        Z_plus += 2 * (std::sqrt(p[0][0] * p[1][1]) + std::sqrt(p[1][0] * p[0][1]));
        long double sur[2][2], hat[2][2];
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v) {
            sur[u][v] = (pu[2 * q + u] / pq) * (pv[2 * r + v] / pr) * tot;
            hat[u][v] = pu[2 * q + u] * pv[2 * r + v];
            if (p[u][v] > 0)
              max_ratio = std::max(max_ratio, hat[u][v] > 0 ? static_cast<double>(p[u][v] / hat[u][v])
                                                            : std::numeric_limits<double>::infinity());
          }
        H_sur += slice_entropy(sur[0][0] + sur[1][1], sur[0][1] + sur[1][0]);
        Zh_minus += 2 * std::sqrt((hat[0][0] + hat[1][1]) * (hat[0][1] + hat[1][0]));
        Zh_plus += 2 * (std::sqrt(hat[0][0] * hat[1][1]) + std::sqrt(hat[1][0] * hat[0][1]));
      }
    }
    // H(U_i | Q_i, Y_{N+1}^{2N}, V_1^N) for the mutual-information chain.
    long double H_u_full = 0;
    for (std::size_t q = 0; q < nq; ++q) {
      if (pu[2 * q] + pu[2 * q + 1] <= 0) continue;
      for (std::size_t r = 0; r < rows_full; ++r) {
        long double p0 = 0, p1 = 0;
        const double* cr = &c[r * m];
        for (int s = 0; s < m; ++s) {
          p0 += static_cast<long double>(a[(2 * q) * m + s]) * cr[s];
          p1 += static_cast<long double>(a[(2 * q + 1) * m + s]) * cr[s];
        }
        H_u_full += slice_entropy(p0, p1);
      }
    }
    pt.H_u = static_cast<double>(H_u);
    pt.H_v = static_cast<double>(H_v);
    pt.H_joint = static_cast<double>(H_joint);
    pt.H_minus = static_cast<double>(H_minus);
    pt.H_plus = static_cast<double>(H_plus);
    pt.I_UR_Q = static_cast<double>(H_u - H_uqr);
    pt.I_VQ_R = static_cast<double>(H_v - H_vqr);
    pt.I_UV_QR = static_cast<double>(H_uqr + H_vqr - H_joint);
    pt.I_cross = static_cast<double>(H_u - H_u_full);
    pt.H_minus_surrogate = static_cast<double>(H_sur);
    pt.Z_u = static_cast<double>(2 * Z_u);
    pt.Z_minus = static_cast<double>(Z_minus);
    pt.Z_plus = static_cast<double>(Z_plus);
    pt.Zhat_minus = static_cast<double>(Zh_minus);
    pt.Zhat_plus = static_cast<double>(Zh_plus);
    pt.max_ratio = max_ratio;

    if (i > 1) {
      std::vector<double> next(level.size() / 2, 0.0);
      for (std::size_t r = 0; r < rows / 2; ++r)
        for (std::size_t e = 0; e < mm; ++e) next[r * mm + e] = level[2 * r * mm + e] + level[(2 * r + 1) * mm + e];
      level.swap(next);
    }
  }
  long double sum = 0;
  for (const auto& t : out.terms) sum += t.I_cross;
  out.cross_sum = static_cast<double>(sum);
  return out;
}

// ---------------------------------------------------------------------------
// Checks built on the pair analysis

/// 2 H(U_i|Q_i) - [H(U_i+V_i|Q_i,R_i) + H(V_i|Q_i,R_i,U_i+V_i)] per index,
/// followed by the negated child-sum mismatch |H_minus + H_plus - H_joint|.
inline CheckReport supermartingale_check(const PairAnalysis& pa) {
  CheckReport r{"supermartingale", pa.kernel, pa.N};
  for (const auto& t : pa.terms) r.residuals.push_back(2 * t.H_u - (t.H_minus + t.H_plus));
  for (const auto& t : pa.terms) r.residuals.push_back(-std::abs(t.H_minus + t.H_plus - t.H_joint));
  r.finalize();
  return r;
}

/// Per-index mutual-information terms are nonnegative, their sum is at most
/// log2(psi_0), and each of I(U;R|Q), I(V;Q|R), I(U;V|QR) is nonnegative.
/// I(U;R|Q) and I(U;V|QR) are each dominated by the per-index term; I(V;Q|R)
/// is dominated by the mirrored term, which equals the sum by symmetry and
/// is bounded through the sum.
struct MutualInformationTerms {
  std::vector<double> terms;    // I(U_i; V_i R_i V_{i+1}^N | Q_i)
  std::vector<double> I_UR_Q;   // I(U_i; R_i | Q_i)
  std::vector<double> I_VQ_R;   // I(V_i; Q_i | R_i)
  std::vector<double> I_UV_QR;  // I(U_i; V_i | Q_i R_i)
  double sum = 0;
  double log2_psi0 = 0;
};

inline MutualInformationTerms lemma1_mi_terms(const EdgeKernel& k, std::size_t N, std::size_t cap = kDefaultCap) {
  const PairAnalysis pa = analyze_pair(k, N, cap);
  MutualInformationTerms out;
  for (const auto& t : pa.terms) {
    out.terms.push_back(t.I_cross);
    out.I_UR_Q.push_back(t.I_UR_Q);
    out.I_VQ_R.push_back(t.I_VQ_R);
    out.I_UV_QR.push_back(t.I_UV_QR);
  }
  out.sum = pa.cross_sum;
  out.log2_psi0 = std::log2(pa.psi0);
  return out;
}

inline CheckReport mutual_information_check(const PairAnalysis& pa) {
  CheckReport r{"mutual_information_sum", pa.kernel, pa.N};
  r.residuals.push_back(std::log2(pa.psi0) - pa.cross_sum);
  if (std::isfinite(pa.block_mutual_information)) {
    r.residuals.push_back(std::log2(pa.psi0) - pa.block_mutual_information);
    r.residuals.push_back(pa.block_mutual_information - pa.cross_sum);
  }
  for (const auto& t : pa.terms) {
    r.residuals.push_back(t.I_cross);
    r.residuals.push_back(t.I_UR_Q);
    r.residuals.push_back(t.I_VQ_R);
    r.residuals.push_back(t.I_UV_QR);
    r.residuals.push_back(t.I_cross - t.I_UR_Q);
    r.residuals.push_back(t.I_cross - t.I_UV_QR);
    r.residuals.push_back(t.I_cross - t.I_UR_Q - t.I_UV_QR);
    r.residuals.push_back(std::log2(pa.psi0) - t.I_VQ_R);
  }
  r.finalize();
  return r;
}

/// h2(sqrt(I ln 2)) when the argument is at most 1/2, else the trivial 1.
inline double surrogate_bound(double mutual_information) {
  const double arg = std::sqrt(std::max(0.0, mutual_information) * kLn2);
  return arg <= 0.5 ? h2(arg) : 1.0;
}

struct SurrogateGap {
  double gap;
  double bound;
};

inline SurrogateGap surrogate_gap(const PairAnalysis& pa, std::size_t i) {
  if (i < 1 || i > pa.N) throw Error("surrogate_gap: index out of range");
  const auto& t = pa.terms[i - 1];
  return {std::abs(t.H_minus_surrogate - t.H_minus), surrogate_bound(t.I_UV_QR)};
}

inline CheckReport surrogate_check(const PairAnalysis& pa) {
  CheckReport r{"surrogate_gap", pa.kernel, pa.N};
  for (std::size_t i = 1; i <= pa.N; ++i) {
    const auto g = surrogate_gap(pa, i);
    r.residuals.push_back(g.bound - g.gap);
  }
  r.finalize();
  return r;
}

/// Z^{b0} <= 2 psi0 Z^b and Z^{b1} <= psi0 (Z^b)^2 on the true law; the
/// memoryless bounds on the product law; and p <= psi0 * p_product.
inline CheckReport z_recursion_check(const PairAnalysis& pa) {
  CheckReport r{"z_recursion", pa.kernel, pa.N};
  for (const auto& t : pa.terms) {
    r.residuals.push_back(2 * pa.psi0 * t.Z_u - t.Z_minus);
    r.residuals.push_back(pa.psi0 * t.Z_u * t.Z_u - t.Z_plus);
    r.residuals.push_back(2 * t.Z_u - t.Zhat_minus);
    r.residuals.push_back(t.Z_u * t.Z_u - t.Zhat_plus);
    r.residuals.push_back(pa.psi0 * (1 + 1e-12) - t.max_ratio);
  }
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Profile-level checks

/// Z^2 <= H <= log2(1 + Z) per index.
inline CheckReport z_h_relations_check(const Profile& p, const std::string& kernel) {
  CheckReport r{"z_h_relations", kernel, p.N};
  for (std::size_t i = 0; i < p.N; ++i) {
    r.residuals.push_back(p.H[i] - p.Z[i] * p.Z[i]);
    r.residuals.push_back(std::log2(1 + p.Z[i]) - p.H[i]);
  }
  r.finalize();
  return r;
}

/// sum_i H_i = H(X_1^N | Y_1^N), as a negated absolute difference.
inline CheckReport chain_rule_check(const EdgeKernel& k, std::size_t N, std::size_t cap = kDefaultCap) {
  const JointLaw law = enumerate_joint(k, N, {}, cap);
  const Profile p = SyntheticLaw(law).profile();
  double s = 0;
  for (double h : p.H) s += h;
  CheckReport r{"chain_rule", k.name(), N};
  r.residuals.push_back(-std::abs(s - conditional_block_entropy(law)));
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Collusion bound for boolean block functions

struct NoStuckResult {
  double lhs = 0;  // 2 p_AB(0,1)
  double rhs = 0;  // p_A(0) (1 - psi_N p_A(0))
  double residual = 0;
  double p_a0 = 0;
  double p_ac00 = 0;
  double psi_N = 1;
};

/// f is a truth table over block rows (y_word * 2^N + x_word). A, B, C are
/// f applied to three consecutive blocks.
inline NoStuckResult nostuck_check(const EdgeKernel& k, std::size_t N, std::span<const std::uint8_t> f,
                                   std::size_t cap = kDefaultCap) {
  const BlockTable bt = block_table(k, N, cap);
  if (f.size() != bt.rows()) throw Error("nostuck_check: truth table size does not match block rows");
  const int m = k.num_states();
  const auto pi = stationary_distribution(k).pi;
  // F[a] is an m x m matrix.
  std::vector<long double> F[2] = {std::vector<long double>(m * m, 0), std::vector<long double>(m * m, 0)};
  for (std::size_t r = 0; r < bt.rows(); ++r)
    for (int e = 0; e < m * m; ++e) F[f[r] ? 1 : 0][e] += bt.row(r)[e];
  const Eigen::MatrixXd P = k.state_transition();
  Eigen::MatrixXd PN = Eigen::MatrixXd::Identity(m, m);
  for (std::size_t t = 0; t < N; ++t) PN = PN * P;
  std::vector<long double> f0_row(m, 0);  // Pr(f = 0 | block starts in s)
  for (int s = 0; s < m; ++s)
    for (int s2 = 0; s2 < m; ++s2) f0_row[s] += F[0][s * m + s2];
  long double pa0 = 0, pab01 = 0, pac00 = 0;
  for (int s0 = 0; s0 < m; ++s0)
    for (int s1 = 0; s1 < m; ++s1) {
      const long double w = pi[s0] * F[0][s0 * m + s1];
      if (w == 0) continue;
      pa0 += w;
      for (int s2 = 0; s2 < m; ++s2) {
        pab01 += w * F[1][s1 * m + s2];
        pac00 += w * PN(s1, s2) * f0_row[s2];
      }
    }
  NoStuckResult out;
  out.psi_N = psi_k_bound(k, static_cast<int>(N));
  out.p_a0 = static_cast<double>(pa0);
  out.p_ac00 = static_cast<double>(pac00);
  out.lhs = static_cast<double>(2 * pab01);
  out.rhs = static_cast<double>(pa0 * (1 - out.psi_N * pa0));
  out.residual = out.lhs - out.rhs;
  return out;
}

// ---------------------------------------------------------------------------
// Scalar inequalities

inline void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(what) + ": argument outside [0,1]");
}

/// (2/ln2) (b(1-b)|1-2a| + a(1-a)|1-2b|)^2, a lower bound on
/// h2(a*b) - (h2(a) + h2(b))/2 for independent A ~ Ber(a), B ~ Ber(b).
inline double xor_gain_bound(double alpha, double beta) {
  require_unit(alpha, "xor_gain_bound");
  require_unit(beta, "xor_gain_bound");
  const double l1 = beta * (1 - beta) * std::abs(1 - 2 * alpha) + alpha * (1 - alpha) * std::abs(1 - 2 * beta);
  return 2.0 / kLn2 * l1 * l1;
}

inline double xor_gain_actual(double alpha, double beta) {
  return h2(binary_convolution(alpha, beta)) - 0.5 * (h2(alpha) + h2(beta));
}

/// h2(|b - a|) - |h2(b) - h2(a)|.
inline double h2_diff_check(double alpha, double beta) {
  require_unit(alpha, "h2_diff_check");
  require_unit(beta, "h2_diff_check");
  return h2(std::abs(beta - alpha)) - std::abs(h2(beta) - h2(alpha));
}

struct DeltaXi {
  double sigma;
  double Delta;
};

/// sigma = min{h2^{-1}(xi), 1/2 - h2^{-1}(1 - xi)}, Delta = (2/ln2) sigma^4 (1-sigma)^2.
inline DeltaXi delta_xi(double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw Error("delta_xi: xi must lie in (0,1)");
  const double sigma = std::min(h2_inverse(xi), 0.5 - h2_inverse(1 - xi));
  return {sigma, 2.0 / kLn2 * std::pow(sigma, 4) * std::pow(1 - sigma, 2)};
}

/// Grid sweep of the XOR-gain inequality over alpha, beta in {0, 0.05, ..., 1}.
inline CheckReport xor_gain_grid_check() {
  CheckReport r{"xor_gain", "-", 0};
  r.tolerance = 1e-12;
  for (int a = 0; a <= 20; ++a)
    for (int b = 0; b <= 20; ++b) {
      const double alpha = a * 0.05, beta = b * 0.05;
      r.residuals.push_back(xor_gain_actual(alpha, beta) - xor_gain_bound(alpha, beta));
    }
  r.finalize();
  return r;
}

/// Sweep of |h2(b) - h2(a)| <= h2(|b - a|) on random pairs plus a grid.
inline CheckReport h2_diff_sweep_check(std::size_t pairs, std::uint64_t seed) {
  CheckReport r{"h2_difference", "-", 0};
  r.tolerance = 1e-12;
  Rng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pairs; ++j) worst = std::min(worst, h2_diff_check(uniform01(rng), uniform01(rng)));
  for (int a = 0; a <= 100; ++a)
    for (int b = 0; b <= 100; ++b) worst = std::min(worst, h2_diff_check(a / 100.0, b / 100.0));
  r.residuals.push_back(worst);
  r.finalize();
  return r;
}

/// Delta(xi) > 0 on a grid over (0,1).
inline CheckReport delta_positivity_check() {
  CheckReport r{"delta_positive", "-", 0};
  r.tolerance = 0;
  for (int j = 1; j < 100; ++j) r.residuals.push_back(delta_xi(j / 100.0).Delta > 0 ? 0.0 : -1.0);
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Period-4 source structure at N = 8

/// The eight structural properties of U_1^6 per initial state at N = 8.
/// Residuals are negated deviations; the tolerance is 1e-12.
inline CheckReport table2_checks() {
  const EdgeKernel k = make_periodic_bb00();
  CheckReport r{"period4_structure", k.name(), 8};
  r.tolerance = 1e-12;
  std::vector<std::vector<double>> u6(4);  // law of u_1..u_6 (word, u_1 MSB) per s1
  for (int s = 0; s < 4; ++s) u6[s] = SyntheticLaw(enumerate_joint(k, 8, s)).level(6);
  auto bit = [](std::size_t w, int idx) { return static_cast<int>((w >> (6 - idx)) & 1u); };
  auto prob_of = [&](int s, auto pred) {
    long double p = 0;
    for (std::size_t w = 0; w < 64; ++w)
      if (pred(w)) p += u6[s][w];
    return static_cast<double>(p);
  };
  // s1 = 0: U4 = 0 almost surely.
  r.residuals.push_back(-prob_of(0, [&](std::size_t w) { return bit(w, 4) == 1; }));
  // s1 = 0: U6 independent of U_1^5 and H(U6) = 1.
  {
    long double h6 = 0, h15 = 0, h16 = 0, p6[2] = {0, 0};
    for (std::size_t w5 = 0; w5 < 32; ++w5) {
      const long double a = u6[0][2 * w5], b = u6[0][2 * w5 + 1];
      h16 += plogp(a) + plogp(b);
      h15 += plogp(a + b);
      p6[0] += a;
      p6[1] += b;
    }
    h6 = plogp(p6[0]) + plogp(p6[1]);
    const double mi = static_cast<double>(h6 + h15 - h16);
    r.residuals.push_back(-std::max(std::abs(mi), std::abs(static_cast<double>(h6) - 1.0)));
  }
  // s1 = 1: U5 = U3, U6 = U4, (U2, U4) i.i.d. Ber(1/2).
  r.residuals.push_back(-prob_of(1, [&](std::size_t w) { return bit(w, 5) != bit(w, 3); }));
  r.residuals.push_back(-prob_of(1, [&](std::size_t w) { return bit(w, 6) != bit(w, 4); }));
  {
    double dev = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        dev = std::max(dev, std::abs(prob_of(1, [&](std::size_t w) { return bit(w, 2) == a && bit(w, 4) == b; }) -
                                     0.25));
    r.residuals.push_back(-dev);
  }
  // s1 = 2: U4 = U2.
  r.residuals.push_back(-prob_of(2, [&](std::size_t w) { return bit(w, 4) != bit(w, 2); }));
  // s1 = 3: U5 = U1 + U3, U6 = U2 + U4.
  r.residuals.push_back(-prob_of(3, [&](std::size_t w) { return bit(w, 5) != (bit(w, 1) ^ bit(w, 3)); }));
  r.residuals.push_back(-prob_of(3, [&](std::size_t w) { return bit(w, 6) != (bit(w, 2) ^ bit(w, 4)); }));
  r.finalize();
  return r;
}

}  // namespace polarlab::oracle
