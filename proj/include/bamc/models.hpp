#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bamc/distribution.hpp"
#include "bamc/program.hpp"
#include "bamc/trace.hpp"

namespace bamc {

using Matrix = std::vector<std::vector<double>>;

class UnsupportedModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_stochastic(const std::vector<double>& row, std::size_t width, const char* what) {
  if (row.size() != width) throw std::invalid_argument(std::string(what) + ": row has the wrong width");
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument(std::string(what) + ": negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

inline void require_stochastic(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.size() != rows) throw std::invalid_argument(std::string(what) + ": wrong number of rows");
  for (const auto& row : m) require_stochastic(row, cols, what);
}

}  // namespace detail

/// A hidden Markov model with every parameter known.
struct FixedHmm {
  std::vector<double> initial;
  Matrix transition;
  Matrix emission;
  std::vector<std::int64_t> observations;

  std::size_t n_hidden() const noexcept { return initial.size(); }
  std::size_t n_symbols() const noexcept { return emission.empty() ? 0 : emission.front().size(); }

  void validate() const {
    const std::size_t k = n_hidden();
    if (k == 0) throw std::invalid_argument("hmm: no hidden states");
    detail::require_stochastic(initial, k, "hmm initial");
    detail::require_stochastic(transition, k, k, "hmm transition");
    detail::require_stochastic(emission, k, n_symbols(), "hmm emission");
    for (auto y : observations)
      if (y < 0 || y >= static_cast<std::int64_t>(n_symbols()))
        throw std::invalid_argument("hmm: observation symbol out of range");
  }
};

/// HMM with known emissions and unknown, Dirichlet-distributed transition
/// rows. `truth_*` hold the parameters that generated `observations`.
struct HmmSpec {
  std::size_t n_hidden = 0;
  std::size_t n_obs_symbols = 0;
  std::vector<std::int64_t> observations;
  Matrix emission_matrix;
  Matrix transition_prior;
  std::vector<double> initial;
  Matrix truth_transition;

  void validate() const {
    if (n_hidden == 0 || n_obs_symbols == 0) throw std::invalid_argument("hmm spec: empty state space");
    detail::require_stochastic(initial, n_hidden, "hmm spec initial");
    detail::require_stochastic(emission_matrix, n_hidden, n_obs_symbols, "hmm spec emission");
    if (transition_prior.size() != n_hidden) throw std::invalid_argument("hmm spec: transition prior rows");
    for (const auto& row : transition_prior) {
      if (row.size() != n_hidden) throw std::invalid_argument("hmm spec: transition prior width");
      for (double a : row)
        if (!(a > 0.0)) throw std::invalid_argument("hmm spec: transition prior must be positive");
    }
    if (!truth_transition.empty()) detail::require_stochastic(truth_transition, n_hidden, n_hidden, "hmm spec truth");
    for (auto y : observations)
      if (y < 0 || y >= static_cast<std::int64_t>(n_obs_symbols))
        throw std::invalid_argument("hmm spec: observation symbol out of range");
  }

  FixedHmm with_transitions(Matrix transition) const {
    return {initial, std::move(transition), emission_matrix, observations};
  }
};

struct MixtureSpec {
  std::size_t n_components = 1;
  std::vector<double> data;
  std::vector<double> component_prior;
  /// (mean, sd) of the normal prior on each component mean.
  std::vector<std::pair<double, double>> mean_prior;
  double noise_sd = 1.0;

  void validate() const {
    if (n_components == 0) throw std::invalid_argument("mixture: need at least one component");
    if (data.empty()) throw std::invalid_argument("mixture: no data");
    if (!(noise_sd > 0.0)) throw std::invalid_argument("mixture: noise_sd must be positive");
    detail::require_stochastic(component_prior, n_components, "mixture component prior");
    if (mean_prior.size() != n_components) throw std::invalid_argument("mixture: mean prior per component");
  }
};

namespace detail {

inline Execution hmm_path(FixedHmm hmm) {
  std::int64_t state = 0;
  for (std::size_t t = 0; t < hmm.observations.size(); ++t) {
    const auto& probs = t == 0 ? hmm.initial : hmm.transition[static_cast<std::size_t>(state)];
    state = as_integer(co_await sample(Distribution::categorical(probs)));
    co_await observe(Distribution::categorical(hmm.emission[static_cast<std::size_t>(state)]),
                     hmm.observations[t]);
  }
}

inline Execution hmm_unknown_transitions(HmmSpec spec) {
  Matrix rows;
  rows.reserve(spec.n_hidden);
  for (std::size_t k = 0; k < spec.n_hidden; ++k)
    rows.push_back(as_vector(co_await sample(Distribution::dirichlet(spec.transition_prior[k]))));
  std::int64_t state = 0;
  for (std::size_t t = 0; t < spec.observations.size(); ++t) {
    const auto& probs = t == 0 ? spec.initial : rows[static_cast<std::size_t>(state)];
    state = as_integer(co_await sample(Distribution::categorical(probs)));
    co_await observe(Distribution::categorical(spec.emission_matrix[static_cast<std::size_t>(state)]),
                     spec.observations[t]);
  }
}

inline Execution gaussian_mixture(MixtureSpec spec) {
  std::vector<double> means;
  means.reserve(spec.n_components);
  for (const auto& [m, s] : spec.mean_prior) means.push_back(as_real(co_await sample(Distribution::normal(m, s))));
  const auto assign = Distribution::categorical(spec.component_prior);
  for (double x : spec.data) {
    const auto z = static_cast<std::size_t>(as_integer(co_await sample(assign)));
    co_await observe(Distribution::normal(means[z], spec.noise_sd), x);
  }
}

}  // namespace detail

/// Fixed-parameter HMM whose hidden path is sampled step by step. Limited to
/// instances small enough to enumerate (at most 1e5 paths).
inline Program tiny_hmm_program(FixedHmm hmm) {
  hmm.validate();
  const double paths = std::pow(static_cast<double>(hmm.n_hidden()), static_cast<double>(hmm.observations.size()));
  if (paths > 1e5) throw std::invalid_argument("tiny_hmm_program: model is not enumerable");
  return Program([hmm = std::move(hmm)] { return detail::hmm_path(hmm); });
}

/// Fixed-parameter HMM of any size.
inline Program hmm_program(FixedHmm hmm) {
  hmm.validate();
  return Program([hmm = std::move(hmm)] { return detail::hmm_path(hmm); });
}

/// HMM that first samples every transition row from its Dirichlet prior,
/// then the hidden path, observing each symbol.
inline Program hmm16_program(HmmSpec spec) {
  spec.validate();
  return Program([spec = std::move(spec)] { return detail::hmm_unknown_transitions(spec); });
}

/// Gaussian mixture: continuous component means, discrete assignments.
inline Program gmm_program(MixtureSpec spec) {
  spec.validate();
  return Program([spec = std::move(spec)] { return detail::gaussian_mixture(spec); });
}

/// The 3-state, 5-step HMM used for exact-oracle checks.
inline FixedHmm default_tiny_hmm() {
  return {
      {0.5, 0.3, 0.2},
      {{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}},
      {{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.2, 0.3, 0.5}},
      {0, 2, 1, 1, 2},
  };
}

/// Three well-separated clusters of four points each.
inline MixtureSpec default_mixture() {
  MixtureSpec spec;
  spec.n_components = 3;
  spec.data = {-4.3, -3.8, -4.1, -3.6, 0.2, -0.3, 0.4, 0.1, 4.4, 3.9, 4.2, 3.7};
  spec.component_prior = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  spec.mean_prior = {{0.0, 5.0}, {0.0, 5.0}, {0.0, 5.0}};
  spec.noise_sd = 0.5;
  return spec;
}

/// Exhaustive MAP search over programs whose choices are all finite discrete.
/// Traces are visited in lexicographic order of their value sequences, so
/// ties resolve to the lexicographically smallest.
inline std::pair<Trace, double> brute_force_map(const Program& program, std::size_t max_traces = 1000000) {
  std::vector<std::int64_t> prefix;
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;  // (min, max) per position
  Trace best;
  double best_lw = kNegInf;
  bool have_best = false;
  std::size_t visited = 0;

  for (;;) {
    if (++visited > max_traces) throw std::invalid_argument("brute_force_map: too many traces");
    ranges.resize(prefix.size());
    auto guide = [&](const Address& a, const Distribution& d) -> Value {
      const std::size_t n = d.support_size();
      if (!d.is_discrete() || n == 0) throw UnsupportedModelError("brute_force_map: non-finite choice " + d.describe());
      const std::int64_t lo = d.support_min();
      const std::int64_t hi = lo + static_cast<std::int64_t>(n) - 1;
      if (a.position < prefix.size()) {
        ranges[a.position] = {lo, hi};
        return prefix[a.position];
      }
      prefix.push_back(lo);
      ranges.push_back({lo, hi});
      return lo;
    };
    Trace t;
    try {
      t = run_program(program, guide);
      prefix.resize(t.entries.size());
    } catch (const ExecutionError& e) {
      if (!e.address()) throw;
      // The guide hit a zero-probability value; the trace is impossible.
      t = e.partial_trace();
      t.log_weight = kNegInf;
      prefix.resize(e.address()->position + 1);
    }
    if (!have_best || t.log_weight > best_lw) {
      best = t;
      best_lw = t.log_weight;
      have_best = true;
    }
    while (!prefix.empty() && prefix.back() >= ranges[prefix.size() - 1].second) prefix.pop_back();
    if (prefix.empty()) break;
    ++prefix.back();
  }
  return {best, best_lw};
}

/// Max-product dynamic program over a fixed-parameter HMM.
inline std::pair<std::vector<std::int64_t>, double> viterbi_oracle(const FixedHmm& hmm) {
  hmm.validate();
  const std::size_t k = hmm.n_hidden();
  const std::size_t steps = hmm.observations.size();
  if (steps == 0) return {{}, 0.0};

  auto lg = [](double p) { return std::log(p); };
  std::vector<double> score(k);
  std::vector<std::vector<std::size_t>> back(steps, std::vector<std::size_t>(k, 0));
  const auto y0 = static_cast<std::size_t>(hmm.observations[0]);
  for (std::size_t s = 0; s < k; ++s) score[s] = lg(hmm.initial[s]) + lg(hmm.emission[s][y0]);

  std::vector<double> next(k);
  for (std::size_t t = 1; t < steps; ++t) {
    const auto y = static_cast<std::size_t>(hmm.observations[t]);
    for (std::size_t s = 0; s < k; ++s) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < k; ++r) {
        const double cand = score[r] + lg(hmm.transition[r][s]);
        if (cand > best) {
          best = cand;
          arg = r;
        }
      }
      next[s] = best + lg(hmm.emission[s][y]);
      back[t][s] = arg;
    }
    score.swap(next);
  }

  std::size_t last = 0;
  for (std::size_t s = 1; s < k; ++s)
    if (score[s] > score[last]) last = s;
  std::vector<std::int64_t> path(steps);
  path[steps - 1] = static_cast<std::int64_t>(last);
  for (std::size_t t = steps - 1; t > 0; --t) {
    last = back[t][last];
    path[t - 1] = static_cast<std::int64_t>(last);
  }
  return {path, score[static_cast<std::size_t>(path[steps - 1])]};
}

// Plain-text HMM spec format. '#' starts a comment. Sections, in any order:
//
//   n_hidden <K>
//   n_obs_symbols <M>
//   initial            followed by K numbers
//   emission           followed by K rows of M numbers
//   transition_prior   followed by K rows of K numbers
//   truth_transition   followed by K rows of K numbers (optional)
//   observations <T>   followed by T integer symbols

namespace detail {

inline std::vector<double> read_numbers(std::istream& in, std::size_t n, const std::string& section) {
  std::vector<double> xs(n);
  for (auto& x : xs)
    if (!(in >> x)) throw std::runtime_error("hmm spec: truncated section '" + section + "'");
  return xs;
}

inline Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols, const std::string& section) {
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) m.push_back(read_numbers(in, cols, section));
  return m;
}

}  // namespace detail

inline HmmSpec parse_hmm_spec(std::istream& raw) {
  std::stringstream in;
  for (std::string line; std::getline(raw, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    in << line << '\n';
  }
  HmmSpec spec;
  for (std::string key; in >> key;) {
    if (key == "n_hidden") {
      in >> spec.n_hidden;
    } else if (key == "n_obs_symbols") {
      in >> spec.n_obs_symbols;
    } else if (key == "initial") {
      spec.initial = detail::read_numbers(in, spec.n_hidden, key);
    } else if (key == "emission") {
      spec.emission_matrix = detail::read_matrix(in, spec.n_hidden, spec.n_obs_symbols, key);
    } else if (key == "transition_prior") {
      spec.transition_prior = detail::read_matrix(in, spec.n_hidden, spec.n_hidden, key);
    } else if (key == "truth_transition") {
      spec.truth_transition = detail::read_matrix(in, spec.n_hidden, spec.n_hidden, key);
    } else if (key == "observations") {
      std::size_t t = 0;
      if (!(in >> t)) throw std::runtime_error("hmm spec: observations needs a length");
      for (double y : detail::read_numbers(in, t, key)) spec.observations.push_back(static_cast<std::int64_t>(y));
    } else {
      throw std::runtime_error("hmm spec: unknown section '" + key + "'");
    }
    if (in.fail()) throw std::runtime_error("hmm spec: malformed section '" + key + "'");
  }
  spec.validate();
  return spec;
}

inline HmmSpec load_hmm_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hmm spec " + path);
  return parse_hmm_spec(in);
}

inline void write_hmm_spec(std::ostream& out, const HmmSpec& spec) {
  auto row = [&out](const std::vector<double>& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? " " : "") << to_string(Value{xs[i]});
    out << '\n';
  };
  out << "n_hidden " << spec.n_hidden << '\n' << "n_obs_symbols " << spec.n_obs_symbols << '\n';
  out << "initial\n";
  row(spec.initial);
  out << "emission\n";
  for (const auto& r : spec.emission_matrix) row(r);
  out << "transition_prior\n";
  for (const auto& r : spec.transition_prior) row(r);
  if (!spec.truth_transition.empty()) {
    out << "truth_transition\n";
    for (const auto& r : spec.truth_transition) row(r);
  }
  out << "observations " << spec.observations.size() << '\n';
  for (std::size_t t = 0; t < spec.observations.size(); ++t)
    out << spec.observations[t] << ((t + 1) % 25 == 0 || t + 1 == spec.observations.size() ? '\n' : ' ');
}

/// Seeded ground-truth HMM: uniform initial state, transition rows drawn
/// from Dirichlet(truth_concentration), emissions with `diagonal` mass on the
/// matching symbol and the rest spread evenly. The model's prior on
/// transition rows is Dirichlet(all ones).
inline HmmSpec generate_hmm_spec(std::uint64_t seed, std::size_t n_states = 16, std::size_t length = 50,
                                 double diagonal = 0.7, double truth_concentration = 0.5) {
  Rng rng(seed);
  HmmSpec spec;
  spec.n_hidden = n_states;
  spec.n_obs_symbols = n_states;
  spec.initial.assign(n_states, 1.0 / static_cast<double>(n_states));
  const double off = (1.0 - diagonal) / static_cast<double>(n_states - 1);
  for (std::size_t k = 0; k < n_states; ++k) {
    std::vector<double> e(n_states, off);
    e[k] = diagonal;
    spec.emission_matrix.push_back(e);
    spec.transition_prior.push_back(std::vector<double>(n_states, 1.0));
  }
  const auto row_prior = Distribution::dirichlet(std::vector<double>(n_states, truth_concentration));
  for (std::size_t k = 0; k < n_states; ++k) spec.truth_transition.push_back(as_vector(row_prior.sample(rng)));

  auto state = as_integer(Distribution::categorical(spec.initial).sample(rng));
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) state = as_integer(Distribution::categorical(spec.truth_transition[static_cast<std::size_t>(state)]).sample(rng));
    spec.observations.push_back(
        as_integer(Distribution::categorical(spec.emission_matrix[static_cast<std::size_t>(state)]).sample(rng)));
  }
  spec.validate();
  return spec;
}

}  // namespace bamc
