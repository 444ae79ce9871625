#pragma once

// Exact small-N computations by explicit enumeration of (x_1^N, y_1^N).
//
// Table rows are indexed y_word * 2^N + x_word, where x_word holds x_1 in
// its most significant bit and y_word is the base-|Y| number y_1 y_2 ... y_N.
// Sums are accumulated in long double; 0 log 0 = 0.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polarlab/error.hpp"
#include "polarlab/info.hpp"
#include "polarlab/process.hpp"
#include "polarlab/profile.hpp"
#include "polarlab/transform.hpp"

namespace polarlab::oracle {

inline constexpr std::size_t kDefaultCap = std::size_t{1} << 24;

/// |Y|^N * 2^N, saturating at SIZE_MAX.
inline std::size_t table_rows(int num_obs, std::size_t N) {
  long double rows = std::pow(2.0L * num_obs, static_cast<long double>(N));
  return rows > 1.8e19L ? SIZE_MAX : static_cast<std::size_t>(rows);
}

inline void require_cap(std::size_t entries, std::size_t cap, const std::string& what) {
  if (entries > cap)
    throw CapExceeded(what + " needs " + std::to_string(entries) + " table entries, above the cap of " +
                      std::to_string(cap));
}

struct JointLaw {
  std::size_t N = 0;
  int num_obs = 1;
  std::vector<double> table;

  std::size_t num_x() const { return std::size_t{1} << N; }
  double at(std::uint64_t x_word, std::uint64_t y_word) const { return table[y_word * num_x() + x_word]; }
};

/// Depth-first enumeration of all (x, y) blocks carrying a forward vector.
/// `init` weights S_0; when given_state is set only paths with S_1 equal to
/// it survive and the result is renormalized.
inline JointLaw enumerate_joint(const EdgeKernel& k, std::size_t N, std::optional<int> given_state = {},
                                std::size_t cap = kDefaultCap) {
  if (N < 1 || N > 40) throw Error("enumerate_joint: unsupported block length");
  require_cap(table_rows(k.num_obs(), N), cap, "joint law of " + k.name() + " at N=" + std::to_string(N));
  if (given_state && (*given_state < 0 || *given_state >= k.num_states()))
    throw Error("enumerate_joint: given state out of range");
  const int m = k.num_states();
  const int Y = k.num_obs();
  JointLaw law{N, Y, std::vector<double>(table_rows(Y, N), 0.0)};
  const auto pi = stationary_distribution(k).pi;
  std::vector<std::vector<double>> alpha(N + 1, std::vector<double>(m, 0.0));
  alpha[0] = pi;
  std::function<void(std::size_t, std::uint64_t, std::uint64_t)> visit =
      [&](std::size_t t, std::uint64_t x_word, std::uint64_t y_word) {
        if (t == N) {
          long double p = 0;
          for (double a : alpha[N]) p += a;
          law.table[y_word * law.num_x() + x_word] = static_cast<double>(p);
          return;
        }
        for (int y = 0; y < Y; ++y)
          for (int x = 0; x < 2; ++x) {
            auto& next = alpha[t + 1];
            std::fill(next.begin(), next.end(), 0.0);
            bool any = false;
            for (int s = 0; s < m; ++s) {
              if (alpha[t][s] == 0) continue;
              for (const Edge& e : k.edges_from(s))
                if (e.x == x && e.y == y && (t > 0 || !given_state || e.to == *given_state)) {
                  next[e.to] += alpha[t][s] * e.p;
                  any = true;
                }
            }
            if (any) visit(t + 1, (x_word << 1) | static_cast<unsigned>(x), y_word * Y + y);
          }
      };
  visit(0, 0, 0);
  if (given_state) {
    long double total = 0;
    for (double p : law.table) total += p;
    if (total <= 0) throw Error("enumerate_joint: conditioning state has zero probability");
    for (double& p : law.table) p = static_cast<double>(p / total);
  }
  return law;
}

/// H(X_1^N | Y_1^N) in bits.
inline double conditional_block_entropy(const JointLaw& law) {
  long double hxy = 0, hy = 0;
  const std::size_t nx = law.num_x();
  for (std::size_t y = 0; y * nx < law.table.size(); ++y) {
    long double py = 0;
    for (std::size_t x = 0; x < nx; ++x) {
      const long double p = law.table[y * nx + x];
      hxy += plogp(p);
      py += p;
    }
    hy += plogp(py);
  }
  return static_cast<double>(hxy - hy);
}

/// The law of (Y_1^N, U_1^N) with every prefix marginal precomputed:
/// level(i) is indexed y_word * 2^i + (u_1..u_i as a word).
class SyntheticLaw {
 public:
  explicit SyntheticLaw(const JointLaw& law) : N_(law.N), num_obs_(law.num_obs) {
    const int n = block_order(N_);
    const std::size_t nx = law.num_x();
    levels_.resize(N_ + 1);
    auto& top = levels_[N_];
    top.assign(law.table.size(), 0.0);
    for (std::size_t row = 0; row < law.table.size(); ++row) {
      const std::size_t y = row / nx, x = row % nx;
      top[y * nx + polar_encode_word(x, n)] = law.table[row];
    }
    for (std::size_t i = N_; i-- > 0;) {
      const auto& up = levels_[i + 1];
      auto& cur = levels_[i];
      cur.resize(up.size() / 2);
      for (std::size_t r = 0; r < cur.size(); ++r) cur[r] = up[2 * r] + up[2 * r + 1];
    }
  }

  std::size_t N() const { return N_; }
  int num_obs() const { return num_obs_; }
  const std::vector<double>& level(std::size_t i) const { return levels_[i]; }

  /// Exact H and Z for every synthetic index.
  Profile profile() const {
    Profile p(N_, Method::exact);
    for (std::size_t i = 1; i <= N_; ++i) {
      const auto& lv = levels_[i];
      long double h = 0, z = 0;
      for (std::size_t r = 0; r < lv.size(); r += 2) {
        h += slice_entropy(lv[r], lv[r + 1]);
        z += std::sqrt(static_cast<long double>(lv[r]) * lv[r + 1]);
      }
      p.H[i - 1] = std::clamp(static_cast<double>(h), 0.0, 1.0);
      p.Z[i - 1] = std::clamp(static_cast<double>(2 * z), 0.0, 1.0);
    }
    return p;
  }

  /// p(U_i = 0 | u_1^{i-1}, y); nullopt when the conditioning event is null.
  std::optional<double> posterior(std::uint64_t y_word, std::span<const Bit> u, std::size_t i) const {
    std::uint64_t prefix = 0;
    for (std::size_t j = 0; j + 1 < i; ++j) prefix = (prefix << 1) | u[j];
    const auto& lv = levels_[i];
    const std::size_t base = (y_word << i) + (prefix << 1);
    const long double a = lv[base], b = lv[base + 1];
    if (a + b <= 0) return std::nullopt;
    return static_cast<double>(a / (a + b));
  }

 private:
  std::size_t N_;
  int num_obs_;
  std::vector<std::vector<double>> levels_;
};

/// Exact H(U_i | U_1^{i-1} Y_1^N) and Z(U_i | U_1^{i-1} Y_1^N), optionally
/// conditioned on the state S_1.
inline Profile exact_profile(const EdgeKernel& k, std::size_t N, std::optional<int> given_state = {},
                             std::size_t cap = kDefaultCap) {
  block_order(N);
  return SyntheticLaw(enumerate_joint(k, N, given_state, cap)).profile();
}

/// H(S_1 | U_1^{prefix_len}) for a kernel without side information.
inline double state_equivocation(const EdgeKernel& k, std::size_t N, std::size_t prefix_len,
                                 std::size_t cap = kDefaultCap) {
  if (k.num_obs() != 1) throw Error("state_equivocation: kernel has side information");
  if (prefix_len > N) throw Error("state_equivocation: prefix longer than block");
  const auto pi = stationary_distribution(k).pi;
  std::vector<long double> marginal(std::size_t{1} << prefix_len, 0.0L);
  long double h_joint = 0;
  for (int s = 0; s < k.num_states(); ++s) {
    if (pi[s] <= 0) continue;
    const SyntheticLaw law(enumerate_joint(k, N, s, cap));
    const auto& lv = law.level(prefix_len);
    for (std::size_t r = 0; r < lv.size(); ++r) {
      const long double p = pi[s] * static_cast<long double>(lv[r]);
      h_joint += plogp(p);
      marginal[r] += p;
    }
  }
  long double h_u = 0;
  for (long double p : marginal) h_u += plogp(p);
  return static_cast<double>(h_joint - h_u);
}

}  // namespace polarlab::oracle
