#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bamc {

/// Deterministic generator injected into every stochastic operation.
using Rng = std::mt19937_64;

/// A sampled or observed value: integer for discrete kinds, real for
/// continuous scalar kinds, real vector for dirichlet.
using Value = std::variant<std::int64_t, double, std::vector<double>>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ValueTypeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Kind {
  categorical,
  uniform_discrete,
  poisson,
  normal,
  uniform_continuous,
  gamma,
  beta,
  dirichlet,
};

inline std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::categorical: return "categorical";
    case Kind::uniform_discrete: return "uniform-discrete";
    case Kind::poisson: return "poisson";
    case Kind::normal: return "normal";
    case Kind::uniform_continuous: return "uniform-continuous";
    case Kind::gamma: return "gamma";
    case Kind::beta: return "beta";
    case Kind::dirichlet: return "dirichlet";
  }
  return "unknown";
}

inline std::int64_t as_integer(const Value& v) {
  if (const auto* p = std::get_if<std::int64_t>(&v)) return *p;
  throw ValueTypeError("expected an integer value");
}

inline double as_real(const Value& v) {
  if (const auto* p = std::get_if<double>(&v)) return *p;
  throw ValueTypeError("expected a real value");
}

inline const std::vector<double>& as_vector(const Value& v) {
  if (const auto* p = std::get_if<std::vector<double>>(&v)) return *p;
  throw ValueTypeError("expected a real-vector value");
}

inline std::string to_string(const Value& v) {
  char buf[32];
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* r = std::get_if<double>(&v)) {
    std::snprintf(buf, sizeof buf, "%.17g", *r);
    return buf;
  }
  std::string out = "[";
  const auto& xs = std::get<std::vector<double>>(v);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out + "]";
}

/// A distribution drawn from the closed set of kinds the engine supports.
/// Parameters are validated at construction, so every live instance is valid.
///
/// Parameter layout per kind:
///   categorical         p_0 .. p_{K-1}
///   uniform-discrete    lo, hi (inclusive integer bounds)
///   poisson             rate
///   normal              mean, sd
///   uniform-continuous  lo, hi
///   gamma               shape, rate
///   beta                alpha, beta
///   dirichlet           alpha_0 .. alpha_{K-1}
class Distribution {
 public:
  static Distribution categorical(std::vector<double> probs) {
    if (probs.empty()) throw ParameterError("categorical: empty probability vector");
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) throw ParameterError("categorical: negative or non-finite probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ParameterError("categorical: probabilities must sum to 1");
    return Distribution(Kind::categorical, std::move(probs));
  }

  static Distribution uniform_discrete(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ParameterError("uniform-discrete: hi < lo");
    return Distribution(Kind::uniform_discrete, {static_cast<double>(lo), static_cast<double>(hi)});
  }

  static Distribution poisson(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("poisson: rate must be positive");
    return Distribution(Kind::poisson, {rate});
  }

  static Distribution normal(double mean, double sd) {
    if (!std::isfinite(mean)) throw ParameterError("normal: non-finite mean");
    if (!(sd > 0.0) || !std::isfinite(sd)) throw ParameterError("normal: sd must be positive");
    return Distribution(Kind::normal, {mean, sd});
  }

  static Distribution uniform_continuous(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw ParameterError("uniform-continuous: need finite lo < hi");
    return Distribution(Kind::uniform_continuous, {lo, hi});
  }

  static Distribution gamma(double shape, double rate) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw ParameterError("gamma: shape must be positive");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("gamma: rate must be positive");
    return Distribution(Kind::gamma, {shape, rate});
  }

  static Distribution beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw ParameterError("beta: shapes must be positive");
    return Distribution(Kind::beta, {a, b});
  }

  static Distribution dirichlet(std::vector<double> alpha) {
    if (alpha.size() < 2) throw ParameterError("dirichlet: need at least two components");
    for (double a : alpha)
      if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("dirichlet: concentrations must be positive");
    return Distribution(Kind::dirichlet, std::move(alpha));
  }

  Kind kind() const noexcept { return kind_; }
  std::span<const double> parameters() const noexcept { return params_; }

  bool is_discrete() const noexcept {
    return kind_ == Kind::categorical || kind_ == Kind::uniform_discrete || kind_ == Kind::poisson;
  }

  /// Number of support points for finite discrete kinds, 0 otherwise.
  std::size_t support_size() const noexcept {
    if (kind_ == Kind::categorical) return params_.size();
    if (kind_ == Kind::uniform_discrete) return static_cast<std::size_t>(params_[1] - params_[0]) + 1;
    return 0;
  }

  /// Smallest support point for finite discrete kinds.
  std::int64_t support_min() const noexcept {
    return kind_ == Kind::uniform_discrete ? static_cast<std::int64_t>(params_[0]) : 0;
  }

  /// Exact log pmf/pdf in nats; -inf outside the support.
  double log_density(const Value& value) const {
    switch (kind_) {
      case Kind::categorical: {
        const std::int64_t k = integer_arg(value);
        if (k < 0 || k >= static_cast<std::int64_t>(params_.size())) return kNegInf;
        return std::log(params_[static_cast<std::size_t>(k)]);
      }
      case Kind::uniform_discrete: {
        const std::int64_t k = integer_arg(value);
        const auto lo = static_cast<std::int64_t>(params_[0]);
        const auto hi = static_cast<std::int64_t>(params_[1]);
        if (k < lo || k > hi) return kNegInf;
        return -std::log(static_cast<double>(hi - lo + 1));
      }
      case Kind::poisson: {
        const std::int64_t k = integer_arg(value);
        if (k < 0) return kNegInf;
        const double rate = params_[0];
        return static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0);
      }
      case Kind::normal: {
        const double x = real_arg(value);
        if (!std::isfinite(x)) return kNegInf;
        const double z = (x - params_[0]) / params_[1];
        return -0.5 * z * z - std::log(params_[1]) - 0.5 * std::log(2.0 * std::numbers::pi);
      }
      case Kind::uniform_continuous: {
        const double x = real_arg(value);
        if (!(x >= params_[0] && x <= params_[1])) return kNegInf;
        return -std::log(params_[1] - params_[0]);
      }
      case Kind::gamma: {
        const double x = real_arg(value);
        if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
        const double shape = params_[0];
        const double rate = params_[1];
        return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
      }
      case Kind::beta: {
        const double x = real_arg(value);
        if (!(x > 0.0 && x < 1.0)) return kNegInf;
        const double a = params_[0];
        const double b = params_[1];
        return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
               (b - 1.0) * std::log1p(-x);
      }
      case Kind::dirichlet: {
        const auto* xs = std::get_if<std::vector<double>>(&value);
        if (xs == nullptr) throw ValueTypeError("dirichlet expects a real-vector value");
        if (xs->size() != params_.size()) return kNegInf;
        double sum = 0.0;
        for (double x : *xs) {
          if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
          sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9) return kNegInf;
        double alpha_sum = 0.0;
        double lp = 0.0;
        for (std::size_t i = 0; i < params_.size(); ++i) {
          alpha_sum += params_[i];
          lp += (params_[i] - 1.0) * std::log((*xs)[i]) - std::lgamma(params_[i]);
        }
        return lp + std::lgamma(alpha_sum);
      }
    }
    return kNegInf;
  }

  Value sample(Rng& rng) const {
    switch (kind_) {
      case Kind::categorical: {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < params_.size(); ++i) {
          if (params_[i] <= 0.0) continue;
          last_positive = i;
          acc += params_[i];
          if (u < acc) return static_cast<std::int64_t>(i);
        }
        return static_cast<std::int64_t>(last_positive);
      }
      case Kind::uniform_discrete:
        return std::uniform_int_distribution<std::int64_t>(static_cast<std::int64_t>(params_[0]),
                                                           static_cast<std::int64_t>(params_[1]))(rng);
      case Kind::poisson:
        return std::poisson_distribution<std::int64_t>(params_[0])(rng);
      case Kind::normal:
        return std::normal_distribution<double>(params_[0], params_[1])(rng);
      case Kind::uniform_continuous:
        return std::uniform_real_distribution<double>(params_[0], params_[1])(rng);
      case Kind::gamma:
        return std::gamma_distribution<double>(params_[0], 1.0 / params_[1])(rng);
      case Kind::beta: {
        const double x = std::gamma_distribution<double>(params_[0], 1.0)(rng);
        const double y = std::gamma_distribution<double>(params_[1], 1.0)(rng);
        return x / (x + y);
      }
      case Kind::dirichlet: {
        std::vector<double> xs(params_.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          xs[i] = std::gamma_distribution<double>(params_[i], 1.0)(rng);
          sum += xs[i];
        }
        for (double& x : xs) x /= sum;
        return xs;
      }
    }
    throw ParameterError("unknown distribution kind");
  }

  std::string describe() const {
    std::string out(kind_name(kind_));
    out += '(';
    char buf[32];
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6g", params_[i]);
      if (i) out += ", ";
      out += buf;
    }
    return out + ')';
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  Distribution(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

  std::int64_t integer_arg(const Value& v) const {
    if (const auto* p = std::get_if<std::int64_t>(&v)) return *p;
    throw ValueTypeError(std::string(kind_name(kind_)) + " expects an integer value");
  }

  double real_arg(const Value& v) const {
    if (const auto* p = std::get_if<double>(&v)) return *p;
    throw ValueTypeError(std::string(kind_name(kind_)) + " expects a real value");
  }

  Kind kind_;
  std::vector<double> params_;
};

inline double log_density(const Distribution& dist, const Value& value) { return dist.log_density(value); }

}  // namespace bamc
