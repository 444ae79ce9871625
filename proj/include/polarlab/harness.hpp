#pragma once

// Experiment drivers behind the polarlab CLI.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "polarlab/codec.hpp"
#include "polarlab/error.hpp"
#include "polarlab/oracle.hpp"
#include "polarlab/oracle_checks.hpp"
#include "polarlab/process.hpp"
#include "polarlab/process_io.hpp"
#include "polarlab/profile.hpp"
#include "polarlab/sctrellis.hpp"

namespace polarlab {

struct ExperimentConfig {
  std::string process = "hmm2";
  std::size_t N = 1024;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  double beta = 0.3;
  bool exact = false;
  std::optional<int> given_state;
  unsigned workers = default_workers();

  void validate() const {
    if (!is_power_of_two(N)) throw Error("config: N must be a power of two");
    if (!(epsilon > 0 && epsilon < 0.5)) throw Error("config: epsilon must lie in (0, 1/2)");
    if (!(beta > 0 && beta < 0.5)) throw Error("config: beta must lie in (0, 1/2)");
    if (samples < 1) throw Error("config: samples must be positive");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"process", c.process}, {"N", c.N},         {"samples", c.samples}, {"seed", c.seed},
                   {"epsilon", c.epsilon}, {"beta", c.beta},   {"exact", c.exact}};
  j["given_state"] = c.given_state ? nlohmann::json(*c.given_state) : nlohmann::json(nullptr);
  return j;
}

struct PolarizationSummary {
  double frac_high = 0;
  double frac_low = 0;
  double frac_fastZ = 0;
  double rate_estimate = 0;
  double rate_stderr = 0;
};

/// Counts from a profile alone: H > 1 - eps, H < eps, Z < 2^{-N^beta}.
inline PolarizationSummary summarize(const Profile& p, double epsilon, double beta, double rate,
                                     double rate_stderr = 0) {
  PolarizationSummary s;
  const double zcut = std::exp2(-std::pow(static_cast<double>(p.N), beta));
  std::size_t hi = 0, lo = 0, fz = 0;
  for (std::size_t i = 0; i < p.N; ++i) {
    hi += p.H[i] > 1 - epsilon;
    lo += p.H[i] < epsilon;
    fz += p.Z[i] < zcut;
  }
  const double n = static_cast<double>(p.N);
  s.frac_high = hi / n;
  s.frac_low = lo / n;
  s.frac_fastZ = fz / n;
  s.rate_estimate = rate;
  s.rate_stderr = rate_stderr;
  return s;
}

inline nlohmann::json to_json(const PolarizationSummary& s) {
  return {{"frac_high", s.frac_high},         {"frac_low", s.frac_low},
          {"frac_fastZ", s.frac_fastZ},       {"rate_estimate", s.rate_estimate},
          {"rate_stderr", s.rate_stderr}};
}

struct PolarizationResult {
  Profile profile;
  PolarizationSummary summary;
  std::vector<std::string> warnings;
};

/// Exact profile when cfg.exact, genie-aided Monte Carlo otherwise.
inline Profile compute_profile(const EdgeKernel& k, const ExperimentConfig& cfg) {
  if (cfg.exact) return oracle::exact_profile(k, cfg.N, cfg.given_state);
  return genie_profile_mc(k, cfg.N, cfg.samples, cfg.seed, cfg.given_state, cfg.workers);
}

inline PolarizationResult run_polarize(const EdgeKernel& k, const ExperimentConfig& cfg) {
  cfg.validate();
  PolarizationResult r;
  if (k.periodic_ok()) r.warnings.push_back(k.name() + " is periodic: polarization is not expected");
  r.profile = compute_profile(k, cfg);
  double rate = 0, se = 0;
  if (cfg.exact) {
    rate = r.profile.mean_H();
  } else {
    const auto est = entropy_rate_estimate(k, cfg.N, std::max<std::size_t>(cfg.samples, 2), cfg.seed);
    rate = est.value;
    se = est.std_error;
  }
  r.summary = summarize(r.profile, cfg.epsilon, cfg.beta, rate, se);
  return r;
}

inline PolarizationResult run_fastpolar(const EdgeKernel& k, const ExperimentConfig& cfg) {
  return run_polarize(k, cfg);
}

// ---------------------------------------------------------------------------
// Period-4 source

/// Guesses S_1 of the period-4 source from the five-bit prefixes of its
/// size-8 sub-blocks.
inline int guess_initial_state(std::span<const std::array<Bit, 5>> blocks) {
  if (blocks.empty()) throw Error("guess_initial_state: no blocks");
  auto all = [&](auto pred) { return std::all_of(blocks.begin(), blocks.end(), pred); };
  if (all([](const auto& b) { return b[3] == 0; })) return 0;
  if (all([](const auto& b) { return b[1] == b[3]; })) return 2;
  if (all([](const auto& b) { return b[4] == b[2]; })) return 1;
  return 3;
}

/// Splits a prefix u_1^{L} of a size-N transform, L >= 5N/8, into the first
/// five transform bits of each consecutive size-8 sub-block of x.
inline std::vector<std::array<Bit, 5>> extract_subblock_prefixes(std::span<const Bit> prefix, std::size_t N) {
  block_order(N);
  if (N < 8) throw Error("extract_subblock_prefixes: N must be at least 8");
  if (8 * prefix.size() < 5 * N) throw Error("extract_subblock_prefixes: prefix shorter than 5N/8");
  if (prefix.size() > N) throw Error("extract_subblock_prefixes: prefix longer than N");
  if (N == 8) {
    std::array<Bit, 5> b{};
    std::copy(prefix.begin(), prefix.begin() + 5, b.begin());
    return {b};
  }
  // Keep an even number of bits, at least 5N/8 rounded up to even.
  std::size_t len = (5 * N / 8 + 1) & ~std::size_t{1};
  len = std::min(len, prefix.size() & ~std::size_t{1});
  const auto [u, v] = deinterleave(prefix.first(len));
  auto first = extract_subblock_prefixes(u, N / 2);
  auto second = extract_subblock_prefixes(v, N / 2);
  first.insert(first.end(), second.begin(), second.end());
  return first;
}

/// h2(pe) + pe log2 3.
inline double fano_check(double pe) {
  if (!(pe >= 0 && pe <= 1)) throw Error("fano_check: pe outside [0,1]");
  return h2(pe) + pe * std::log2(3.0);
}

struct PhaseWindowReport {
  bool pass = true;
  // rows of (N, s1, i, H)
  std::vector<std::array<double, 4>> window;
};

/// Exact conditional profiles at each N: on (5N/8, 6N/8], H_i is 0 when
/// s1 in {1,3} and 1 otherwise, within tol.
inline PhaseWindowReport phase_window_check(std::span<const std::size_t> Ns, double tol = 1e-9) {
  const EdgeKernel k = make_periodic_bb00();
  PhaseWindowReport r;
  for (std::size_t N : Ns) {
    if (N < 8) throw Error("phase_window_check: N must be at least 8");
    for (int s = 0; s < 4; ++s) {
      const Profile p = oracle::exact_profile(k, N, s);
      const double expect = (s == 1 || s == 3) ? 0.0 : 1.0;
      for (std::size_t i = 5 * N / 8 + 1; i <= 6 * N / 8; ++i) {
        r.window.push_back({static_cast<double>(N), static_cast<double>(s), static_cast<double>(i), p.H[i - 1]});
        if (std::abs(p.H[i - 1] - expect) > tol) r.pass = false;
      }
    }
  }
  return r;
}

struct StateGuessReport {
  std::size_t N = 0;
  std::size_t prefix_len = 0;
  std::size_t samples = 0;
  std::size_t misdecodes = 0;
  double pe = 0;
  double pe_sigma = 0;         // from the add-one smoothed rate
  double equivocation = 0;     // estimate of H(S_1 | U_1^{prefix_len})
  double equivocation_stderr = 0;
  double fano_bound = 0;       // fano_check(min(1, pe + 3 sigma))
  bool pass = false;
};

/// Samples paths of the period-4 source, guesses S_1 from the prefix
/// u_1^{5N/8} and estimates H(S_1 | U_1^{5N/8}) from exact per-path state
/// posteriors computed by four state-conditioned SC passes.
inline StateGuessReport state_guess_experiment(std::size_t N, std::size_t samples, std::uint64_t seed,
                                               unsigned workers = default_workers()) {
  if (N < 8 || !is_power_of_two(N)) throw Error("state_guess_experiment: N must be a power of two >= 8");
  if (samples < 1) throw Error("state_guess_experiment: need samples");
  const EdgeKernel k = make_periodic_bb00();
  const auto pi = stationary_distribution(k).pi;
  StateGuessReport r;
  r.N = N;
  r.samples = samples;
  r.prefix_len = 5 * N / 8;
  constexpr std::size_t kChunk = 16;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::size_t> errs(chunks, 0);
  std::vector<double> hs(chunks, 0), hs2(chunks, 0);
  for_each_chunk(
      samples, kChunk,
      [&](std::size_t c, std::size_t begin, std::size_t end) {
        SCEngine engine(k, N);
        for (std::size_t j = begin; j < end; ++j) {
          Rng rng(derive_seed(seed, j));
          const SamplePath path = sample_path(k, N, rng, pi);
          const BitBlock u = polar_encode(path.x);
          const auto prefix = std::span<const Bit>(u).first(r.prefix_len);
          const auto blocks = extract_subblock_prefixes(prefix, N);
          if (guess_initial_state(blocks) != path.s[1]) ++errs[c];
          // log2 p(u_1^L | S_1 = s) for each s.
          std::array<double, 4> logp{};
          for (int s = 0; s < 4; ++s) {
            double acc = 0;
            engine.run(path.y, s, r.prefix_len, [&](std::size_t i, const Posterior& p) {
              acc -= p.impossible() ? std::numeric_limits<double>::infinity() : p.minus_log2(u[i - 1]);
              return u[i - 1];
            });
            logp[s] = acc;
          }
          double mx = -std::numeric_limits<double>::infinity();
          for (int s = 0; s < 4; ++s)
            if (pi[s] > 0) mx = std::max(mx, logp[s] + std::log2(pi[s]));
          std::array<double, 4> w{};
          double tot = 0;
          for (int s = 0; s < 4; ++s) {
            w[s] = pi[s] > 0 ? std::exp2(logp[s] + std::log2(pi[s]) - mx) : 0.0;
            tot += w[s];
          }
          double h = 0;
          for (int s = 0; s < 4; ++s) h += static_cast<double>(plogp(w[s] / tot));
          hs[c] += h;
          hs2[c] += h * h;
        }
      },
      workers);
  double h = 0, h2s = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    r.misdecodes += errs[c];
    h += hs[c];
    h2s += hs2[c];
  }
  const double n = static_cast<double>(samples);
  r.pe = r.misdecodes / n;
  const double smoothed = (r.misdecodes + 1.0) / (n + 2.0);
  r.pe_sigma = std::sqrt(smoothed * (1 - smoothed) / n);
  r.equivocation = h / n;
  r.equivocation_stderr = samples > 1 ? std::sqrt(std::max(0.0, (h2s - n * r.equivocation * r.equivocation) / (n - 1)) / n) : 0.0;
  r.fano_bound = fano_check(std::min(1.0, r.pe + 3 * r.pe_sigma));
  r.pass = r.equivocation <= r.fano_bound;
  return r;
}

struct PeriodicReport {
  PhaseWindowReport phase_window;
  double identity_lhs = 0;  // H(U_6 | U_1^5) at N = 8
  double identity_rhs = 0;  // 1/2 + H(S_1|U_1^5) - H(S_1|U_1^6)
  bool identity_pass = false;
  std::vector<std::size_t> mc_N;
  std::vector<double> mc_max_deviation;  // max over the window of |H_i - 1/2|
  std::vector<Profile> mc_profiles;
  bool deviation_decreasing = false;
  StateGuessReport state_guess;
  bool pass = false;
};

/// Window deviation max_{i in (5N/8, 6N/8]} |H_i - 1/2|.
inline double window_deviation(const Profile& p) {
  double d = 0;
  for (std::size_t i = 5 * p.N / 8 + 1; i <= 6 * p.N / 8; ++i) d = std::max(d, std::abs(p.H[i - 1] - 0.5));
  return d;
}

inline PeriodicReport run_periodic(const EdgeKernel& k, const ExperimentConfig& cfg,
                                   std::vector<std::size_t> mc_sizes = {64, 256}) {
  if (k.name() != "bb00") throw Error("periodic experiment requires the bb00 process");
  PeriodicReport r;
  const std::size_t exact_sizes[] = {8, 16};
  r.phase_window = phase_window_check(exact_sizes);
  r.identity_lhs = oracle::exact_profile(k, 8).H[5];
  r.identity_rhs = 0.5 + oracle::state_equivocation(k, 8, 5) - oracle::state_equivocation(k, 8, 6);
  r.identity_pass = std::abs(r.identity_lhs - r.identity_rhs) <= 1e-9;
  for (std::size_t N : mc_sizes) {
    Profile p = genie_profile_mc(k, N, cfg.samples, cfg.seed, std::nullopt, cfg.workers);
    r.mc_N.push_back(N);
    r.mc_max_deviation.push_back(window_deviation(p));
    r.mc_profiles.push_back(std::move(p));
  }
  r.deviation_decreasing = true;
  for (std::size_t j = 1; j < r.mc_max_deviation.size(); ++j)
    if (!(r.mc_max_deviation[j] < r.mc_max_deviation[j - 1])) r.deviation_decreasing = false;
  r.state_guess = state_guess_experiment(std::max<std::size_t>(cfg.N, 8), std::min<std::size_t>(cfg.samples, 2000),
                                         cfg.seed, cfg.workers);
  r.pass = r.phase_window.pass && r.identity_pass && r.deviation_decreasing && r.state_guess.pass;
  return r;
}

// ---------------------------------------------------------------------------
// Mixing diagnostics

struct MixingReport {
  PsiDiagnostics psi;
  bool mixing = false;  // bound at the largest lag within 1e-3 of 1
};

inline MixingReport run_mixing(const EdgeKernel& k, int max_lag = 200) {
  MixingReport r;
  r.psi = psi_bounds(k, max_lag);
  r.mixing = r.psi.psi_bound.back() <= 1.001;
  return r;
}

inline void write_mixing_csv(std::ostream& out, const PsiDiagnostics& d) {
  out << "k,psi_bound\n";
  for (std::size_t j = 0; j < d.k_values.size(); ++j) out << d.k_values[j] << ',' << format_double(d.psi_bound[j]) << '\n';
}

// ---------------------------------------------------------------------------
// Inequality suite

inline const std::vector<std::string>& default_check_presets() {
  static const std::vector<std::string> p{"iid:0.5", "iid:0.11", "hmm2", "ge", "bb00"};
  return p;
}

struct SuiteReport {
  std::vector<oracle::CheckReport> checks;
  bool pass = true;
};

inline nlohmann::json to_json(const SuiteReport& s) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : s.checks) checks.push_back(oracle::to_json(c));
  return {{"pass", s.pass}, {"checks", checks}};
}

/// Collusion-bound residuals for `functions` random truth tables at N: both
/// 2 p_AB(0,1) - p_A(0)(1 - psi_N p_A(0)) and psi_N p_A(0)^2 - p_AC(0,0).
inline oracle::CheckReport nostuck_suite(const EdgeKernel& k, std::size_t N, std::size_t functions,
                                         std::uint64_t seed) {
  oracle::CheckReport r{"no_stuck", k.name(), N};
  const std::size_t rows = oracle::table_rows(k.num_obs(), N);
  Rng rng(seed);
  std::vector<std::uint8_t> f(rows);
  for (std::size_t j = 0; j < functions; ++j) {
    const double bias = uniform01(rng);
    for (auto& b : f) b = uniform01(rng) < bias;
    const auto res = oracle::nostuck_check(k, N, f);
    r.residuals.push_back(res.residual);
    r.residuals.push_back(res.psi_N * res.p_a0 * res.p_a0 - res.p_ac00);
  }
  r.finalize();
  return r;
}

inline SuiteReport run_check_suite(const std::vector<std::string>& presets, const std::vector<std::size_t>& Ns,
                                   std::uint64_t seed = 1, std::size_t functions = 50) {
  SuiteReport s;
  auto add = [&](oracle::CheckReport c) {
    s.pass = s.pass && c.pass;
    s.checks.push_back(std::move(c));
  };
  for (const auto& name : presets) {
    const EdgeKernel k = load_process(name);
    for (std::size_t N : Ns) {
      const auto pa = oracle::analyze_pair(k, N);
      add(oracle::supermartingale_check(pa));
      add(oracle::mutual_information_check(pa));
      add(oracle::surrogate_check(pa));
      add(oracle::z_recursion_check(pa));
      add(oracle::z_h_relations_check(oracle::exact_profile(k, N), k.name()));
      add(oracle::chain_rule_check(k, N));
      add(nostuck_suite(k, N, functions, derive_seed(seed, N)));
    }
  }
  add(oracle::xor_gain_grid_check());
  add(oracle::h2_diff_sweep_check(10000, seed));
  add(oracle::delta_positivity_check());
  add(oracle::table2_checks());
  return s;
}

}  // namespace polarlab
