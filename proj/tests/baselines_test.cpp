#include "bamc/baselines.hpp"
#include "bamc/models.hpp"
#include "bamc/summary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

using namespace bamc;

TEST(Temperature, ClosedForms) {
  EXPECT_DOUBLE_EQ(temperature({ScheduleKind::exponential, 1.0, 0.9}, 2), 0.81);
  EXPECT_DOUBLE_EQ(temperature({ScheduleKind::lundy_mees, 1.0, 0.1}, 1), 1.0 / 1.1);
  EXPECT_EQ(temperature({ScheduleKind::exponential, 2.5, 0.8}, 0), 2.5);
  EXPECT_EQ(temperature({ScheduleKind::lundy_mees, 2.5, 0.3}, 0), 2.5);
}

TEST(Temperature, LundyMeesMatchesRecurrence) {
  for (double rate : {0.05, 0.8, 0.95, 3.0}) {
    const Schedule s{ScheduleKind::lundy_mees, 1.0, rate};
    double t = 1.0;
    for (std::size_t k = 0; k <= 4000; ++k) {
      ASSERT_NEAR(temperature(s, k), t, 1e-12 * t) << rate << ' ' << k;
      t = t / (1.0 + rate * t);
    }
  }
}

TEST(Temperature, StrictlyDecreasingAndPositive) {
  for (const Schedule s : {Schedule{ScheduleKind::exponential, 1.0, 0.95}, Schedule{ScheduleKind::exponential, 3.0, 0.8},
                           Schedule{ScheduleKind::lundy_mees, 1.0, 0.8}, Schedule{ScheduleKind::lundy_mees, 0.5, 0.01}}) {
    double prev = temperature(s, 0);
    for (std::size_t t = 1; t < 3000; ++t) {
      const double cur = temperature(s, t);
      ASSERT_GT(cur, 0.0);
      ASSERT_LT(cur, prev);
      prev = cur;
    }
  }
}

TEST(Temperature, InvalidSchedulesThrow) {
  EXPECT_THROW(temperature({ScheduleKind::exponential, 1.0, 1.0}, 1), std::invalid_argument);
  EXPECT_THROW(temperature({ScheduleKind::exponential, 1.0, 0.0}, 1), std::invalid_argument);
  EXPECT_THROW(temperature({ScheduleKind::lundy_mees, 1.0, 0.0}, 1), std::invalid_argument);
  EXPECT_THROW(temperature({ScheduleKind::lundy_mees, 0.0, 0.5}, 1), std::invalid_argument);
}

TEST(Acceptance, Limits) {
  EXPECT_EQ(acceptance_probability(-3.0, -3.0, 0.0), 1.0);
  EXPECT_EQ(acceptance_probability(-3.0, -2.0, 0.0), 1.0);
  EXPECT_NEAR(acceptance_probability(-3.0, -4.0, 0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(acceptance_probability(-3.0, -4.0, 0.5), std::exp(-0.5), 1e-15);
  EXPECT_EQ(acceptance_probability(-3.0, kNegInf, 0.0), 0.0);
  EXPECT_EQ(acceptance_probability(kNegInf, -3.0, 0.0), 1.0);
  EXPECT_LT(acceptance_probability(-3.0, -3.1, 0.0, 1e-3), 1e-40);
  EXPECT_EQ(acceptance_probability(-3.0, -3.1, 0.0, 1e-6), 0.0);
  EXPECT_EQ(acceptance_probability(-3.0, -2.9, 0.0, 1e-6), 1.0);
}

TEST(Proposal, RecomputesConsistently) {
  const Program p = hmm16_program(generate_hmm_spec(3, 4, 8));
  Rng rng(5);
  Trace current = run_program(p, prior_guide(rng));
  for (int i = 0; i < 500; ++i) {
    Proposal prop = propose_single_site(p, current, rng);
    ASSERT_NEAR(trace_log_weight(prop.trace, observation_terms(prop.trace)), prop.trace.log_weight, 1e-9);
    ASSERT_LT(prop.site, current.size());
    for (std::size_t j = 0; j < prop.site; ++j) ASSERT_EQ(prop.trace.entries[j].value, current.entries[j].value);
    if (i % 2 == 0) current = std::move(prop.trace);
  }
}

TEST(Proposal, IndependentSitesCorrectionIsTheSiteDensityRatio) {
  // Only the proposal site is ever redrawn here.
  Program p([]() -> Execution {
    for (int i = 0; i < 4; ++i) co_await sample(Distribution::normal(0.0, 1.0));
  });
  Rng rng(6);
  const Trace current = run_program(p, prior_guide(rng));
  for (int i = 0; i < 100; ++i) {
    const Proposal prop = propose_single_site(p, current, rng);
    EXPECT_NEAR(prop.log_correction,
                current.entries[prop.site].dist.log_density(current.entries[prop.site].value) -
                    prop.trace.entries[prop.site].dist.log_density(prop.trace.entries[prop.site].value),
                1e-12);
  }
}

namespace {

// Posterior over all paths of a small HMM by enumeration.
std::map<std::vector<std::int64_t>, double> exact_posterior(const FixedHmm& hmm) {
  std::map<std::vector<std::int64_t>, double> post;
  const std::size_t k = hmm.n_hidden(), n = hmm.observations.size();
  std::vector<std::int64_t> path(n, 0);
  double z = 0.0;
  for (;;) {
    double lw = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const auto s = static_cast<std::size_t>(path[t]);
      lw += std::log(t == 0 ? hmm.initial[s] : hmm.transition[static_cast<std::size_t>(path[t - 1])][s]);
      lw += std::log(hmm.emission[s][static_cast<std::size_t>(hmm.observations[t])]);
    }
    post[path] = std::exp(lw);
    z += std::exp(lw);
    std::size_t i = n;
    while (i > 0 && path[i - 1] == static_cast<std::int64_t>(k) - 1) path[--i] = 0;
    if (i == 0) break;
    ++path[i - 1];
  }
  for (auto& [_, w] : post) w /= z;
  return post;
}

}  // namespace

TEST(MhChain, SamplesTheExactPosteriorOfASmallHmm) {
  FixedHmm hmm{{0.6, 0.4}, {{0.7, 0.3}, {0.2, 0.8}}, {{0.9, 0.1}, {0.3, 0.7}}, {0, 1, 1}};
  const auto post = exact_posterior(hmm);
  Rng rng(11);
  AnnealedChain chain(hmm_program(hmm), rng);
  std::map<std::vector<std::int64_t>, double> freq;
  const int burn = 1000, n = 200000;
  for (int i = 0; i < burn + n; ++i) {
    chain.step();
    if (i < burn) continue;
    std::vector<std::int64_t> path;
    for (const auto& e : chain.current().entries) path.push_back(as_integer(e.value));
    freq[path] += 1.0 / n;
  }
  for (const auto& [path, p] : post) EXPECT_NEAR(freq[path], p, 0.01);
}

// The number of choices depends on the first one, so the stale/fresh terms of
// the correction matter: without them the chain is biased.
TEST(MhChain, SamplesTheExactPosteriorOfAVariableStructureProgram) {
  Program p([]() -> Execution {
    const auto k = as_integer(co_await sample(Distribution::categorical({0.3, 0.7})));
    double sum = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) sum += as_real(co_await sample(Distribution::normal(0.0, 1.0)));
    co_await observe(Distribution::normal(sum, 0.5), 1.5);
  });
  // Marginal likelihood of y = 1.5 given k: Normal(0, sqrt(k + 1 + 0.25)).
  auto marginal = [](double var) { return std::exp(-1.5 * 1.5 / (2 * var)) / std::sqrt(2 * std::numbers::pi * var); };
  const double w0 = 0.3 * marginal(1.25), w1 = 0.7 * marginal(2.25);
  const double p1 = w1 / (w0 + w1);

  Rng rng(12);
  AnnealedChain chain(p, rng);
  const int burn = 1000, n = 200000;
  double k1 = 0.0;
  for (int i = 0; i < burn + n; ++i) {
    chain.step();
    if (i >= burn) k1 += as_integer(chain.current().entries[0].value) == 1 ? 1.0 : 0.0;
  }
  EXPECT_NEAR(k1 / n, p1, 0.015);
}

TEST(MhChain, DeterministicProgramNeverMoves) {
  Program p([]() -> Execution { co_await sample(Distribution::categorical({1.0})); });
  Rng rng(1);
  const SearchReport r = mh_map_search(p, 100, rng);
  ASSERT_EQ(r.estimates.size(), 1u);
  EXPECT_EQ(r.estimates[0].log_weight, 0.0);
}

TEST(MhChain, ZeroIterationsThrows) {
  Rng rng(1);
  const Program p = hmm_program(default_tiny_hmm());
  EXPECT_THROW(mh_map_search(p, 0, rng), std::invalid_argument);
  EXPECT_THROW(sa_search(p, Schedule{}, 0, rng), std::invalid_argument);
}

TEST(MhChain, ReplayIsDeterministic) {
  const Program p = hmm_program(default_tiny_hmm());
  Rng a(4), b(4);
  AnnealedChain ca(p, a, Schedule{ScheduleKind::lundy_mees, 1.0, 0.9}), cb(p, b, Schedule{ScheduleKind::lundy_mees, 1.0, 0.9});
  for (int i = 0; i < 2000; ++i) {
    ASSERT_EQ(ca.step(), cb.step());
    ASSERT_EQ(ca.accepted(), cb.accepted());
  }
}

TEST(Annealing, UnitTemperatureMatchesMh) {
  // The first proposal of any schedule runs at T = t0 = 1.
  const Program p = hmm_program(default_tiny_hmm());
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng a(seed), b(seed);
    AnnealedChain mh(p, a);
    AnnealedChain sa(p, b, Schedule{ScheduleKind::exponential, 1.0, 0.5});
    mh.step();
    sa.step();
    mh.step();
    sa.step();
    ASSERT_EQ(mh.accepted(), sa.accepted()) << seed;
    ASSERT_EQ(mh.current().log_weight, sa.current().log_weight);
  }
}

TEST(Annealing, AnytimeInvariantsHold) {
  for (const ScheduleKind kind : {ScheduleKind::exponential, ScheduleKind::lundy_mees}) {
    Rng rng(9);
    const SearchReport r = sa_search(gmm_program(default_mixture()), Schedule{kind, 1.0, 0.9}, 2000, rng);
    double max_seen = kNegInf;
    for (const auto& it : r.iterations) max_seen = std::max(max_seen, it.log_weight);
    for (std::size_t i = 1; i < r.estimates.size(); ++i)
      EXPECT_GT(r.estimates[i].log_weight, r.estimates[i - 1].log_weight);
    EXPECT_EQ(r.best_log_weight(), max_seen);
  }
}

TEST(Annealing, BestRateReachesTinyHmmMap) {
  const Program p = tiny_hmm_program(default_tiny_hmm());
  const double oracle = brute_force_map(p).second;
  for (const ScheduleKind kind : {ScheduleKind::exponential, ScheduleKind::lundy_mees}) {
    double best_median = kNegInf;
    for (double rate : {0.8, 0.85, 0.9, 0.95}) {
      std::vector<double> finals;
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        finals.push_back(sa_search(p, Schedule{kind, 1.0, rate}, 4000, rng).best_log_weight());
      }
      best_median = std::max(best_median, quantile(finals, 0.5));
    }
    EXPECT_NEAR(best_median, oracle, 1e-9) << schedule_name(kind);
  }
}
