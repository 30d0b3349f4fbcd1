#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "bamc/trace.hpp"

namespace bamc {

/// A trace whose log-weight beat every earlier sample of the run.
struct MapEstimate {
  Trace trace;
  double log_weight = kNegInf;
  std::size_t iteration = 0;
  double elapsed_ms = 0.0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double log_weight = kNegInf;
  bool is_new_map = false;
  double elapsed_ms = 0.0;
};

struct SearchReport {
  std::vector<IterationRecord> iterations;
  std::vector<MapEstimate> estimates;

  double best_log_weight() const noexcept { return estimates.empty() ? kNegInf : estimates.back().log_weight; }
};

/// Raised when a program run fails mid-search; holds everything recorded so far.
class SearchError : public std::runtime_error {
 public:
  SearchError(const std::string& what, SearchReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const SearchReport& partial_report() const noexcept { return partial_; }

 private:
  SearchReport partial_;
};

/// Shared anytime bookkeeping: every searcher feeds each evaluated trace
/// through offer() in iteration order.
class AnytimeTracker {
 public:
  AnytimeTracker() : start_(std::chrono::steady_clock::now()) {}

  /// Returns true when `trace` became the new MAP estimate. Traces with
  /// log-weight -inf never qualify.
  bool offer(const Trace& trace) {
    const std::size_t iteration = report_.iterations.size() + 1;
    const double elapsed = elapsed_ms();
    const bool improved = trace.log_weight > max_log_weight_;
    if (improved) {
      max_log_weight_ = trace.log_weight;
      report_.estimates.push_back({trace, trace.log_weight, iteration, elapsed});
    }
    report_.iterations.push_back({iteration, trace.log_weight, improved, elapsed});
    return improved;
  }

  double max_log_weight() const noexcept { return max_log_weight_; }
  std::size_t iterations() const noexcept { return report_.iterations.size(); }
  const SearchReport& report() const noexcept { return report_; }
  SearchReport take() { return std::move(report_); }

 private:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

  std::chrono::steady_clock::time_point start_;
  double max_log_weight_ = kNegInf;
  SearchReport report_;
};

}  // namespace bamc
