#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "bamc/program.hpp"
#include "bamc/search.hpp"
#include "bamc/trace.hpp"

namespace bamc {

enum class ScheduleKind { exponential, lundy_mees };

/// Annealing schedule. Exponential: T_t = t0 * rate^t with rate in (0, 1).
/// Lundy-Mees: T_{t+1} = T_t / (1 + rate * T_t) with rate > 0.
struct Schedule {
  ScheduleKind kind = ScheduleKind::exponential;
  double t0 = 1.0;
  double rate = 0.9;

  void validate() const {
    if (!(t0 > 0.0) || !std::isfinite(t0)) throw std::invalid_argument("schedule: t0 must be positive");
    if (kind == ScheduleKind::exponential && !(rate > 0.0 && rate < 1.0))
      throw std::invalid_argument("schedule: exponential rate must lie in (0, 1)");
    if (kind == ScheduleKind::lundy_mees && (!(rate > 0.0) || !std::isfinite(rate)))
      throw std::invalid_argument("schedule: lundy-mees rate must be positive");
  }
};

inline std::string_view schedule_name(ScheduleKind kind) {
  return kind == ScheduleKind::exponential ? "exponential" : "lundy-mees";
}

/// Temperature after `t` cooling steps. The Lundy-Mees recurrence has the
/// closed form 1/T_t = 1/t0 + t * rate, which is what is evaluated here.
inline double temperature(const Schedule& schedule, std::size_t t) {
  schedule.validate();
  const double steps = static_cast<double>(t);
  if (schedule.kind == ScheduleKind::exponential) return schedule.t0 * std::pow(schedule.rate, steps);
  return schedule.t0 / (1.0 + steps * schedule.rate * schedule.t0);
}

/// min(1, exp(delta / temperature + correction)) with the -inf cases pinned:
/// a -inf proposal is never accepted, a proposal leaving a -inf state always is.
inline double acceptance_probability(double current_log_weight, double proposed_log_weight, double log_correction,
                                     double temp = 1.0) {
  if (proposed_log_weight == kNegInf) return 0.0;
  if (current_log_weight == kNegInf) return 1.0;
  const double log_alpha = (proposed_log_weight - current_log_weight) / temp + log_correction;
  if (std::isnan(log_alpha)) return 0.0;
  return log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
}

struct Proposal {
  Trace trace;
  /// log q(old | new) - log q(new | old).
  double log_correction = 0.0;
  std::size_t site = 0;
};

/// Single-site proposal: redraw one uniformly chosen choice from its prior
/// and re-execute. Earlier choices are replayed; later ones are reused when
/// the address still matches and the old value stays in support, and drawn
/// fresh otherwise.
inline Proposal propose_single_site(const Program& program, const Trace& current, Rng& rng,
                                    SignaturePolicy policy = SignaturePolicy::structural) {
  Proposal p;
  if (current.entries.empty()) {
    p.trace = run_program(program, [](const Address&, const Distribution& d) -> Value {
      throw ProtocolError("program drew a choice it did not draw before: " + d.describe());
    }, {}, policy);
    return p;
  }

  const std::size_t n_old = current.entries.size();
  p.site = std::uniform_int_distribution<std::size_t>(0, n_old - 1)(rng);
  std::vector<bool> reused(n_old, false);
  double fresh_log_q = 0.0;

  auto guide = [&](const Address& a, const Distribution& d) -> Value {
    const std::size_t i = a.position;
    if (i < n_old && i != p.site) {
      const auto& old = current.entries[i];
      if (old.address == a && d.log_density(old.value) != kNegInf) {
        reused[i] = true;
        return old.value;
      }
    }
    Value v = d.sample(rng);
    fresh_log_q += d.log_density(v);
    return v;
  };
  p.trace = run_program(program, guide, {}, policy);

  double stale_log_q = 0.0;
  for (std::size_t i = 0; i < n_old; ++i)
    if (!reused[i]) stale_log_q += current.entries[i].dist.log_density(current.entries[i].value);

  p.log_correction = std::log(static_cast<double>(n_old)) -
                     std::log(static_cast<double>(std::max<std::size_t>(p.trace.entries.size(), 1))) +
                     stale_log_q - fresh_log_q;
  return p;
}

/// Metropolis-Hastings chain on traces, optionally annealed. Iteration 1
/// evaluates a prior-sampled trace; every later iteration evaluates one
/// proposal, which is offered as a MAP candidate whether or not the chain
/// accepts it.
class AnnealedChain {
 public:
  AnnealedChain(Program program, Rng& rng, std::optional<Schedule> schedule = std::nullopt,
                SignaturePolicy policy = SignaturePolicy::structural)
      : program_(std::move(program)), rng_(rng), schedule_(schedule), policy_(policy) {
    if (schedule_) schedule_->validate();
  }

  double step() {
    try {
      if (!started_) {
        current_ = run_program(program_, prior_guide(rng_), {}, policy_);
        started_ = true;
        tracker_.offer(current_);
        return current_.log_weight;
      }
      Proposal p = propose_single_site(program_, current_, rng_, policy_);
      const double temp = schedule_ ? temperature(*schedule_, proposals_) : 1.0;
      const double alpha = acceptance_probability(current_.log_weight, p.trace.log_weight, p.log_correction, temp);
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      ++proposals_;
      tracker_.offer(p.trace);
      const double lw = p.trace.log_weight;
      if (u < alpha) {
        current_ = std::move(p.trace);
        ++accepted_;
      }
      return lw;
    } catch (const ExecutionError& e) {
      throw SearchError(e.what(), tracker_.report());
    }
  }

  const Trace& current() const noexcept { return current_; }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t proposals() const noexcept { return proposals_; }
  const SearchReport& report() const noexcept { return tracker_.report(); }
  SearchReport take_report() { return tracker_.take(); }

 private:
  Program program_;
  Rng& rng_;
  std::optional<Schedule> schedule_;
  SignaturePolicy policy_;
  bool started_ = false;
  Trace current_;
  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;
  AnytimeTracker tracker_;
};

inline SearchReport mh_map_search(const Program& program, std::size_t iterations, Rng& rng) {
  if (iterations == 0) throw std::invalid_argument("mh_map_search: iterations must be at least 1");
  AnnealedChain chain(program, rng);
  for (std::size_t i = 0; i < iterations; ++i) chain.step();
  return chain.take_report();
}

inline SearchReport sa_search(const Program& program, const Schedule& schedule, std::size_t iterations, Rng& rng) {
  if (iterations == 0) throw std::invalid_argument("sa_search: iterations must be at least 1");
  AnnealedChain chain(program, rng, schedule);
  for (std::size_t i = 0; i < iterations; ++i) chain.step();
  return chain.take_report();
}

}  // namespace bamc
