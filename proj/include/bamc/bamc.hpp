#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <utility>

#include "bamc/orpm.hpp"
#include "bamc/program.hpp"
#include "bamc/search.hpp"
#include "bamc/trace.hpp"

namespace bamc {

struct BamcOptions {
  SignaturePolicy signature = SignaturePolicy::structural;
};

/// Credits every choice of `trace` with its log-weight-to-go: the final
/// log-weight minus the snapshot taken right after the choice's own
/// log-density was added. Entries are visited last to first. Traces with a
/// non-finite final log-weight leave the store untouched.
inline void attribute_rewards(const Trace& trace, double final_log_weight, BeliefStore& store) {
  if (!std::isfinite(final_log_weight)) return;
  for (std::size_t i = trace.entries.size(); i-- > 0;) {
    const auto& e = trace.entries[i];
    store.at(e.address).record(e.value, final_log_weight - e.prefix_log_weight);
  }
}

/// Bayesian ascent Monte Carlo. Each step runs the program once with ORPM
/// choosing every value, offers the trace as a MAP candidate, then feeds the
/// rewards back into the belief store.
class BamcSearch {
 public:
  BamcSearch(Program program, Rng& rng, BamcOptions options = {})
      : program_(std::move(program)), rng_(rng), options_(options) {}

  /// Runs one iteration; returns its log-weight.
  double step() {
    auto guide = [this](const Address& a, const Distribution& d) {
      SelectionPoint& point = store_.at(a);
      return select_value(point, d, fallback_variance(point), rng_).value;
    };
    Trace trace;
    try {
      trace = run_program(program_, guide, {}, options_.signature);
    } catch (const std::exception& e) {
      throw SearchError(e.what(), tracker_.report());
    }
    tracker_.offer(trace);
    attribute_rewards(trace, trace.log_weight, store_);
    return trace.log_weight;
  }

  const BeliefStore& beliefs() const noexcept { return store_; }
  const SearchReport& report() const noexcept { return tracker_.report(); }
  SearchReport take_report() { return tracker_.take(); }

 private:
  Program program_;
  Rng& rng_;
  BamcOptions options_;
  BeliefStore store_;
  AnytimeTracker tracker_;
};

inline SearchReport bamc_search(const Program& program, std::size_t iterations, Rng& rng, BamcOptions options = {}) {
  if (iterations == 0) throw std::invalid_argument("bamc_search: iterations must be at least 1");
  BamcSearch search(program, rng, options);
  for (std::size_t i = 0; i < iterations; ++i) search.step();
  return search.take_report();
}

}  // namespace bamc
