#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bamc/distribution.hpp"
#include "bamc/program.hpp"

namespace bamc {

/// How a random-choice site is fingerprinted beyond its position.
enum class SignaturePolicy {
  /// Kind plus support shape (category count, vector length, integer bounds).
  structural,
  /// Kind plus every parameter rounded to 12 significant digits.
  parametric,
};

/// Identifies a random choice: its ordinal within the run and a fingerprint
/// of the distribution it was drawn from.
struct Address {
  std::size_t position = 0;
  std::uint64_t signature = 0;

  friend auto operator<=>(const Address&, const Address&) = default;
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline std::uint64_t signature(const Distribution& dist, SignaturePolicy policy) {
  std::uint64_t h = detail::fnv1a(0xcbf29ce484222325ULL, kind_name(dist.kind()));
  const auto params = dist.parameters();
  char buf[40];
  if (policy == SignaturePolicy::parametric) {
    for (double p : params) {
      std::snprintf(buf, sizeof buf, "|%.11e", p);
      h = detail::fnv1a(h, buf);
    }
    return h;
  }
  switch (dist.kind()) {
    case Kind::categorical:
    case Kind::dirichlet:
      std::snprintf(buf, sizeof buf, "|n=%zu", params.size());
      h = detail::fnv1a(h, buf);
      break;
    case Kind::uniform_discrete:
      std::snprintf(buf, sizeof buf, "|%.0f..%.0f", params[0], params[1]);
      h = detail::fnv1a(h, buf);
      break;
    default:
      break;
  }
  return h;
}

inline Address make_address(std::size_t position, const Distribution& dist, SignaturePolicy policy) {
  return {position, signature(dist, policy)};
}

struct TraceEntry {
  Address address;
  Distribution dist;
  Value value;
  /// Accumulated log-weight immediately after this choice's own log-density
  /// was added.
  double prefix_log_weight = 0.0;
};

struct ObservationRecord {
  /// Number of trace entries that preceded the observation.
  std::size_t after_entries = 0;
  double log_term = 0.0;
};

struct Trace {
  std::vector<TraceEntry> entries;
  std::vector<ObservationRecord> observations;
  double log_weight = 0.0;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

/// Log-weight terms contributed by the observations of a run, in order.
inline std::vector<double> observation_terms(const Trace& trace) {
  std::vector<double> terms;
  terms.reserve(trace.observations.size());
  for (const auto& obs : trace.observations) terms.push_back(obs.log_term);
  return terms;
}

/// Recomputes the unnormalized log-probability of a trace: every choice's
/// log-density plus the supplied observation terms.
inline double trace_log_weight(const Trace& trace, std::span<const double> observation_terms) {
  double total = 0.0;
  for (const auto& e : trace.entries) total += e.dist.log_density(e.value);
  for (double t : observation_terms) total += t;
  return total;
}

/// Raised by run_program. Carries the partial trace and, when a guide chose
/// badly, the address it chose at. Program-raised exceptions are nested.
class ExecutionError : public std::runtime_error {
 public:
  ExecutionError(const std::string& what, std::optional<Address> address, Trace partial)
      : std::runtime_error(what), address_(address), partial_(std::move(partial)) {}

  const std::optional<Address>& address() const noexcept { return address_; }
  const Trace& partial_trace() const noexcept { return partial_; }

 private:
  std::optional<Address> address_;
  Trace partial_;
};

using Guide = std::function<Value(const Address&, const Distribution&)>;
using OutputSink = std::function<void(const Value&)>;

/// Executes one run of `program`, answering every sample request with the
/// guide's choice, and accumulates the trace log-weight.
inline Trace run_program(const Program& program, const Guide& guide, const OutputSink& sink = {},
                         SignaturePolicy policy = SignaturePolicy::structural) {
  Trace trace;
  double log_weight = 0.0;
  Execution run = program.start();
  std::optional<Value> reply;

  auto fail = [&](const std::string& what, std::optional<Address> where) {
    trace.log_weight = log_weight;
    return ExecutionError(what, where, trace);
  };

  for (;;) {
    Checkpoint cp{Done{}};
    try {
      cp = run.step(std::move(reply));
    } catch (const std::exception& e) {
      std::throw_with_nested(fail(std::string("program raised: ") + e.what(), std::nullopt));
    }
    reply.reset();

    if (auto* req = std::get_if<SampleRequest>(&cp)) {
      const Address address = make_address(trace.entries.size(), req->dist, policy);
      Value x = guide(address, req->dist);
      double lp = kNegInf;
      try {
        lp = req->dist.log_density(x);
      } catch (const ValueTypeError& e) {
        throw fail(std::string("guide returned a value of the wrong type: ") + e.what(), address);
      }
      if (lp == kNegInf) {
        throw fail("guide returned " + to_string(x) + " outside the support of " + req->dist.describe(), address);
      }
      log_weight += lp;
      trace.entries.push_back({address, req->dist, x, log_weight});
      reply = std::move(x);
    } else if (auto* obs = std::get_if<Observation>(&cp)) {
      double lp = kNegInf;
      try {
        lp = obs->dist.log_density(obs->value);
      } catch (const ValueTypeError& e) {
        throw fail(std::string("observation of the wrong type: ") + e.what(), std::nullopt);
      }
      log_weight += lp;
      trace.observations.push_back({trace.entries.size(), lp});
    } else if (auto* out = std::get_if<Output>(&cp)) {
      if (sink) sink(out->value);
    } else {
      break;
    }
  }
  trace.log_weight = log_weight;
  return trace;
}

/// Guide that draws every choice from its prior.
inline Guide prior_guide(Rng& rng) {
  return [&rng](const Address&, const Distribution& d) { return d.sample(rng); };
}

/// Guide that replays a fixed value sequence by position.
inline Guide replay_guide(std::vector<Value> values) {
  return [values = std::move(values)](const Address& a, const Distribution&) -> Value {
    if (a.position >= values.size()) throw std::out_of_range("replay guide exhausted");
    return values[a.position];
  };
}

}  // namespace bamc
