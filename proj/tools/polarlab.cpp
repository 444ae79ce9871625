// polarlab command-line front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 check violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "polarlab/polarlab.hpp"

namespace {

using namespace polarlab;

struct Options {
  std::string command;
  std::string process = "hmm2";
  std::size_t n = 0;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  double beta = 0.3;
  int given_state = -1;
  bool exact = false;
  std::string out;
  // codec
  double margin = 0.15;
  std::size_t trials = 200;
  std::string block_out;
  // mixing
  int max_lag = 200;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open output file " + path);
  f << text;
}

ExperimentConfig config_from(const Options& o, std::size_t default_n) {
  ExperimentConfig c;
  c.process = o.process;
  c.N = o.n ? o.n : default_n;
  c.samples = o.samples;
  c.seed = o.seed;
  c.epsilon = o.epsilon;
  c.beta = o.beta;
  c.exact = o.exact;
  if (o.given_state >= 0) c.given_state = o.given_state;
  c.validate();
  return c;
}

int cmd_profile(const Options& o) {
  const EdgeKernel k = load_process(o.process);
  const ExperimentConfig cfg = config_from(o, 1024);
  const PolarizationResult r = run_polarize(k, cfg);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream csv;
  write_profile_csv(csv, r.profile);
  emit(o.out, csv.str());
  nlohmann::json j{{"config", to_json(cfg)}, {"summary", to_json(r.summary)}};
  if (o.command == "fastpolar") j["z_threshold"] = std::exp2(-std::pow(static_cast<double>(cfg.N), cfg.beta));
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_periodic(const Options& o, bool process_given) {
  const EdgeKernel k = load_process(process_given ? o.process : "bb00");
  ExperimentConfig cfg = config_from(o, 256);
  cfg.process = k.name();
  const PeriodicReport r = run_periodic(k, cfg);
  nlohmann::json phase_window = nlohmann::json::array();
  for (const auto& w : r.phase_window.window)
    phase_window.push_back({{"N", static_cast<int>(w[0])}, {"s1", static_cast<int>(w[1])}, {"index", static_cast<int>(w[2])},
                      {"H", w[3]}});
  nlohmann::json mc = nlohmann::json::array();
  for (std::size_t j = 0; j < r.mc_N.size(); ++j)
    mc.push_back({{"N", r.mc_N[j]}, {"max_window_deviation", r.mc_max_deviation[j]}});
  const auto& g = r.state_guess;
  nlohmann::json j{
      {"config", to_json(cfg)},
      {"phase_window", {{"pass", r.phase_window.pass}, {"window", phase_window}}},
      {"identity", {{"lhs", r.identity_lhs}, {"rhs", r.identity_rhs}, {"pass", r.identity_pass}}},
      {"monte_carlo", {{"runs", mc}, {"decreasing", r.deviation_decreasing}}},
      {"state_guess",
       {{"N", g.N}, {"prefix_len", g.prefix_len}, {"samples", g.samples}, {"misdecodes", g.misdecodes},
        {"pe", g.pe}, {"pe_sigma", g.pe_sigma}, {"equivocation", g.equivocation},
        {"equivocation_stderr", g.equivocation_stderr}, {"fano_bound", g.fano_bound}, {"pass", g.pass}}},
      {"pass", r.pass}};
  emit(o.out, j.dump(2) + "\n");
  return r.pass ? 0 : 2;
}

int cmd_mixing(const Options& o) {
  const EdgeKernel k = load_process(o.process);
  const MixingReport r = run_mixing(k, o.max_lag);
  std::ostringstream csv;
  write_mixing_csv(csv, r.psi);
  emit(o.out, csv.str());
  std::cout << nlohmann::json{{"process", k.name()},
                              {"psi0", r.psi.psi_bound.front()},
                              {"psi_last", r.psi.psi_bound.back()},
                              {"mixing", r.mixing}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_check(const Options& o, bool process_given) {
  std::vector<std::string> presets = process_given ? std::vector<std::string>{o.process} : default_check_presets();
  std::vector<std::size_t> Ns = o.n ? std::vector<std::size_t>{o.n} : std::vector<std::size_t>{2, 4, 8};
  for (std::size_t N : Ns)
    if (!is_power_of_two(N)) throw Error("config: N must be a power of two");
  const SuiteReport r = run_check_suite(presets, Ns, o.seed);
  emit(o.out, to_json(r).dump(2) + "\n");
  for (const auto& c : r.checks)
    if (!c.pass) std::cerr << "violation: " << c.check_name << " on " << c.kernel << " N=" << c.N << '\n';
  return r.pass ? 0 : 2;
}

int cmd_codec(const Options& o) {
  const EdgeKernel k = load_process(o.process);
  const ExperimentConfig cfg = config_from(o, 1024);
  const Profile design = compute_profile(k, cfg);
  const double rate = cfg.exact ? design.mean_H() : entropy_rate_estimate(k, cfg.N, cfg.samples, cfg.seed).value;
  const auto budget = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(cfg.N), std::ceil(static_cast<double>(cfg.N) * (rate + o.margin))));
  const FrozenSet f = design_code_budget(design, budget);
  const CodecReport rep = evaluate(k, f, design, o.trials, derive_seed(cfg.seed, 0x636f646563ULL));
  const double limit = rep.z_sum_bound + 3 * rep.wilson();
  const bool pass = rep.block_error_rate() <= limit;
  if (!o.block_out.empty()) {
    const SamplePath path = sample_path(k, cfg.N, cfg.seed);
    const auto bytes = serialize_block(f, compress(path.x, f));
    std::ofstream bf(o.block_out, std::ios::binary);
    if (!bf) throw Error("cannot open output file " + o.block_out);
    bf.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  nlohmann::json j{{"config", to_json(cfg)},
                   {"rate_estimate", rate},
                   {"frozen_size", rep.frozen_size},
                   {"trials", rep.trials},
                   {"block_errors", rep.block_errors},
                   {"bit_errors", rep.bit_errors},
                   {"decode_failures", rep.decode_failures},
                   {"block_error_rate", rep.block_error_rate()},
                   {"wilson_half_width", rep.wilson()},
                   {"z_sum_bound", rep.z_sum_bound},
                   {"pass", pass}};
  emit(o.out, j.dump(2) + "\n");
  return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Polarization experiments for binary processes with memory"};
  app.require_subcommand(1, 1);
  bool process_given = false;
  const std::pair<const char*, const char*> commands[] = {
      {"profile", "H and Z profile with the entropy-threshold summary"},
      {"fastpolar", "profile plus the fraction of indices with Z below 2^(-N^beta)"},
      {"periodic", "period-4 experiments: exact window profiles, Monte-Carlo drift, state guessing"},
      {"mixing", "psi_k bounds and the mixing flag"},
      {"check", "exact inequality suite (exit 2 on a violation)"},
      {"codec", "design a frozen set and measure block errors"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    auto* proc = sub->add_option("--process", o.process, "process file or preset");
    sub->add_option("--n", o.n, "block length (power of two)");
    sub->add_option("--samples", o.samples, "Monte-Carlo samples");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--epsilon", o.epsilon, "entropy threshold");
    sub->add_option("--beta", o.beta, "Bhattacharyya exponent");
    sub->add_option("--given-state", o.given_state, "condition on S_1");
    sub->add_flag("--exact", o.exact, "use the exact oracle");
    sub->add_option("--out", o.out, "output path (default stdout)");
    if (std::string(name) == "codec") {
      sub->add_option("--margin", o.margin, "rate margin over the entropy estimate");
      sub->add_option("--trials", o.trials, "codec trials");
      sub->add_option("--block-out", o.block_out, "write one compressed block here");
    }
    if (std::string(name) == "mixing") sub->add_option("--max-lag", o.max_lag, "largest lag");
    sub->callback([&o, sub, proc, &process_given] {
      o.command = sub->get_name();
      process_given = proc->count() > 0;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (o.command == "profile" || o.command == "fastpolar") return cmd_profile(o);
    if (o.command == "periodic") return cmd_periodic(o, process_given);
    if (o.command == "mixing") return cmd_mixing(o);
    if (o.command == "check") return cmd_check(o, process_given);
    if (o.command == "codec") return cmd_codec(o);
  } catch (const polarlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
