#include <gtest/gtest.h>

#include <array>
#include <random>
#include <sstream>

#include "polarlab/harness.hpp"

using namespace polarlab;

namespace {

std::array<Bit, 5> prefix5(const BitBlock& u) { return {u[0], u[1], u[2], u[3], u[4]}; }

BitBlock random_block(std::size_t N, std::mt19937_64& rng) {
  BitBlock x(N);
  for (auto& b : x) b = rng() & 1u;
  return x;
}

}  // namespace

TEST(Config, Validation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.N = 12;
  EXPECT_THROW(c.validate(), Error);
  c.N = 16;
  c.epsilon = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c.epsilon = 0.1;
  c.beta = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Summary, FromProfile) {
  Profile p(4);
  p.H = {0.95, 0.5, 0.05, 0.0};
  p.Z = {1.0, 0.6, 0.1, 0.0};
  const auto s = summarize(p, 0.1, 0.3, 0.4);
  EXPECT_DOUBLE_EQ(s.frac_high, 0.25);
  EXPECT_DOUBLE_EQ(s.frac_low, 0.5);
  // 2^{-4^0.3} = 0.3496...
  EXPECT_DOUBLE_EQ(s.frac_fastZ, 0.5);
  EXPECT_DOUBLE_EQ(s.rate_estimate, 0.4);
}

TEST(Summary, FairCoin) {
  ExperimentConfig c;
  c.process = "iid:0.5";
  c.N = 256;
  c.samples = 20;
  const auto r = run_polarize(make_preset(c.process), c);
  EXPECT_DOUBLE_EQ(r.summary.frac_high, 1.0);
  EXPECT_DOUBLE_EQ(r.summary.frac_low, 0.0);
  EXPECT_DOUBLE_EQ(r.summary.frac_fastZ, 0.0);
  EXPECT_DOUBLE_EQ(r.summary.rate_estimate, 1.0);
}

TEST(Summary, DeterministicSourceIsFast) {
  ExperimentConfig c;
  c.N = 64;
  c.samples = 5;
  c.beta = 0.45;
  const auto r = run_fastpolar(make_bernoulli(0.0), c);
  EXPECT_DOUBLE_EQ(r.summary.frac_fastZ, 1.0);
  EXPECT_DOUBLE_EQ(r.summary.frac_low, 1.0);
}

TEST(Summary, PeriodicWarns) {
  ExperimentConfig c;
  c.N = 8;
  c.exact = true;
  const auto r = run_polarize(make_periodic_bb00(), c);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_NEAR(r.summary.rate_estimate, 5.5 / 8, 1e-12);
}

TEST(Summary, ReproducibleFromCsv) {
  ExperimentConfig c;
  c.N = 128;
  c.samples = 200;
  c.seed = 3;
  const EdgeKernel k = make_hmm2();
  const auto r = run_polarize(k, c);
  std::stringstream a, b;
  write_profile_csv(a, r.profile);
  const auto again = run_polarize(k, c);
  write_profile_csv(b, again.profile);
  EXPECT_EQ(a.str(), b.str());
  const Profile back = read_profile_csv(a);
  const auto s = summarize(back, c.epsilon, c.beta, r.summary.rate_estimate);
  EXPECT_EQ(s.frac_high, r.summary.frac_high);
  EXPECT_EQ(s.frac_low, r.summary.frac_low);
  EXPECT_EQ(s.frac_fastZ, r.summary.frac_fastZ);
}

TEST(Csv, SchemaAndErrors) {
  Profile p(2, Method::monte_carlo);
  p.H = {0.25, 1.0 / 3};
  std::stringstream ss;
  write_profile_csv(ss, p);
  EXPECT_EQ(ss.str(),
            "index,branch_path,H,H_stderr,Z,Z_stderr,method\n"
            "1,0,0.25,0,0,0,mc\n"
            "2,1,0.33333333333333331,0,0,0,mc\n");
  std::stringstream bad("index,H\n1,0.5\n");
  EXPECT_THROW(read_profile_csv(bad), Error);
}

TEST(StateGuess, RuleBranches) {
  using B = std::array<Bit, 5>;
  EXPECT_EQ(guess_initial_state(std::vector<B>{{1, 1, 0, 0, 1}, {0, 0, 1, 0, 0}}), 0);
  EXPECT_EQ(guess_initial_state(std::vector<B>{{0, 1, 0, 1, 1}, {1, 0, 1, 0, 0}}), 2);
  EXPECT_EQ(guess_initial_state(std::vector<B>{{0, 0, 1, 1, 1}, {0, 1, 0, 0, 0}}), 1);
  EXPECT_EQ(guess_initial_state(std::vector<B>{{0, 0, 0, 1, 1}}), 3);  // U4=1, U2=0, U5 != U3
  EXPECT_THROW(guess_initial_state(std::vector<B>{}), Error);
}

TEST(StateGuess, PrefixesMatchDirectEncodes) {
  std::mt19937_64 rng(4);
  for (std::size_t N : {8u, 16u, 64u, 256u})
    for (int trial = 0; trial < 10; ++trial) {
      const BitBlock x = random_block(N, rng);
      const BitBlock u = polar_encode(x);
      const auto got = extract_subblock_prefixes(std::span<const Bit>(u).first(5 * N / 8), N);
      ASSERT_EQ(got.size(), N / 8);
      for (std::size_t b = 0; b < N / 8; ++b) {
        const BitBlock sub = polar_encode(std::span<const Bit>(x).subspan(8 * b, 8));
        EXPECT_EQ(got[b], prefix5(sub)) << "N=" << N << " block " << b;
      }
    }
  const BitBlock u(16, 0);
  EXPECT_THROW(extract_subblock_prefixes(std::span<const Bit>(u).first(9), 16), Error);
  EXPECT_THROW(extract_subblock_prefixes(u, 4), Error);
}

TEST(StateGuess, N8IsIdentity) {
  const BitBlock u{1, 0, 1, 1, 0, 1, 1, 1};
  const auto got = extract_subblock_prefixes(std::span<const Bit>(u).first(5), 8);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0], (std::array<Bit, 5>{1, 0, 1, 1, 0}));
}

// With all N/8 sub-blocks agreeing on the phase, the rule recovers S_1
// except on rare coincidences.
TEST(StateGuess, RecoversStateAtModerateN) {
  const StateGuessReport r = state_guess_experiment(128, 400, 2, 1);
  EXPECT_LE(r.pe, 0.02);
  EXPECT_LE(r.equivocation, r.fano_bound);
  EXPECT_GE(r.equivocation, 0.0);
}

TEST(Fano, Values) {
  EXPECT_EQ(fano_check(0.0), 0.0);
  EXPECT_NEAR(fano_check(0.01), 0.09664276090312274, 1e-15);
  EXPECT_NEAR(fano_check(0.5), 1 + 0.5 * std::log2(3.0), 1e-15);
  EXPECT_THROW(fano_check(1.1), Error);
}

TEST(Periodic, PhaseWindowExact) {
  const std::size_t Ns[] = {8, 16};
  const PhaseWindowReport r = phase_window_check(Ns, 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.window.size(), 4u * (1 + 2));
}

TEST(Periodic, WrongKernelRejected) {
  ExperimentConfig c;
  EXPECT_THROW(run_periodic(make_hmm2(), c), Error);
}

TEST(Mixing, Diagnostics) {
  const auto bb = run_mixing(make_periodic_bb00(), 200);
  EXPECT_FALSE(bb.mixing);
  for (double v : bb.psi.psi_bound) EXPECT_NEAR(v, 4.0, 1e-12);
  const auto hmm = run_mixing(make_hmm2(), 200);
  EXPECT_TRUE(hmm.mixing);
  EXPECT_LE(hmm.psi.psi_bound[200], 1.001);
  const auto iid = run_mixing(make_bernoulli(0.2), 50);
  EXPECT_TRUE(iid.mixing);
  for (double v : iid.psi.psi_bound) EXPECT_DOUBLE_EQ(v, 1.0);
  std::stringstream ss;
  write_mixing_csv(ss, iid.psi);
  EXPECT_EQ(ss.str().substr(0, 18), "k,psi_bound\n0,1\n1,");
}

TEST(Suite, SmallRunPasses) {
  const SuiteReport r = run_check_suite({"hmm2", "bb00"}, {2, 4}, 1, 10);
  EXPECT_TRUE(r.pass);
  const auto j = to_json(r);
  EXPECT_TRUE(j["pass"].get<bool>());
  for (const auto& c : j["checks"]) EXPECT_TRUE(c.contains("min_residual"));
}

TEST(Suite, FaultyKernelIsValidationError) {
  EXPECT_THROW(kernel_from_json(nlohmann::json::parse(
                   R"({"states":["a","b"],"edges":[{"from":"a","to":"b","x":0,"p":0.7},{"from":"b","to":"a","x":1,"p":1}]})")),
               Error);
}
