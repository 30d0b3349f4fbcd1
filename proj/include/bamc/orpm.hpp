#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bamc/distribution.hpp"
#include "bamc/trace.hpp"

namespace bamc {

class UpdateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Running count, mean and sum of squared deviations of observed rewards.
struct RewardStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  /// Unbiased sample variance; 0 for fewer than two rewards.
  double variance() const noexcept { return n >= 2 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

/// Welford single-pass update.
inline RewardStats update_stats(RewardStats stats, double reward) {
  if (!std::isfinite(reward)) throw UpdateError("non-finite reward " + std::to_string(reward));
  stats.n += 1;
  const double delta = reward - stats.mean;
  stats.mean += delta / static_cast<double>(stats.n);
  stats.m2 += delta * (reward - stats.mean);
  return stats;
}

namespace detail {

inline double belief_variance(const RewardStats& stats, double fallback_var) {
  return stats.n >= 2 ? stats.variance() : fallback_var;
}

inline double draw_normal(double mean, double var, Rng& rng) {
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  return mean + std::sqrt(var) * z;
}

}  // namespace detail

/// One draw from the reward belief Normal(mean, var). A single reward leaves
/// the sample variance undefined and `fallback_var` stands in. Identical
/// rewards make the draw exactly the mean.
inline double draw_reward_belief(const RewardStats& stats, double fallback_var, Rng& rng) {
  return detail::draw_normal(stats.mean, detail::belief_variance(stats, fallback_var), rng);
}

/// One draw from the mean-reward belief Normal(mean, var / n).
inline double draw_mean_belief(const RewardStats& stats, double fallback_var, Rng& rng) {
  const double var = detail::belief_variance(stats, fallback_var) / static_cast<double>(stats.n);
  return detail::draw_normal(stats.mean, var, rng);
}

struct Choice {
  Value value;
  /// Empty until the first reward arrives (uninformative prior belief).
  std::optional<RewardStats> stats;
};

/// Belief table of one random-choice site.
struct SelectionPoint {
  Address address;
  std::vector<Choice> choices;
  RewardStats aggregate;

  Choice* find(const Value& v) {
    for (auto& c : choices)
      if (c.value == v) return &c;
    return nullptr;
  }
  const Choice* find(const Value& v) const {
    for (const auto& c : choices)
      if (c.value == v) return &c;
    return nullptr;
  }

  /// Records one reward for `v`, creating the choice if it is unknown.
  void record(const Value& v, double reward) {
    Choice* c = find(v);
    if (c == nullptr) {
      choices.push_back({v, std::nullopt});
      c = &choices.back();
    }
    c->stats = update_stats(c->stats.value_or(RewardStats{}), reward);
    aggregate = update_stats(aggregate, reward);
  }
};

/// Variance for choices holding a single reward: the point-wide sample
/// variance when it is defined and positive, 1.0 otherwise.
inline double fallback_variance(const SelectionPoint& point) {
  const double v = point.aggregate.variance();
  return point.aggregate.n >= 2 && v > 0.0 ? v : 1.0;
}

struct Selection {
  Value value;
  /// True when the random-choice slot won and the value was drawn from the
  /// choice distribution rather than re-selected from the table.
  bool is_new = false;
};

/// Open randomized probability matching over the choices of `point`.
///
/// A first Thompson pass over the full reward beliefs picks whose mean belief
/// supplies the bar the random-choice slot must beat. A second pass over the
/// mean beliefs then selects a choice; ties go to existing choices. When the
/// random-choice slot wins, a fresh value is drawn from `dist` and appended
/// unless an identical value is already tabled. Choices still holding their
/// prior belief take part in neither pass.
///
/// Until the point has seen two different rewards it has no scale of its
/// own, and a choice with repeated identical rewards is treated like one
/// holding a single reward. Otherwise such a choice would shut out the
/// random-choice slot for good.
inline Selection select_value(SelectionPoint& point, const Distribution& dist, double fallback_var, Rng& rng) {
  const Choice* best_choice = nullptr;
  const bool flat = !(point.aggregate.variance() > 0.0);
  auto beliefs = [&](const RewardStats& s) {
    if (!flat || s.n < 2) return s;
    RewardStats single = s;
    single.n = 1;
    return single;
  };

  const RewardStats* best_belief = nullptr;
  double best_reward = kNegInf;
  for (const auto& c : point.choices) {
    if (!c.stats) continue;
    const double r = draw_reward_belief(beliefs(*c.stats), fallback_var, rng);
    if (r >= best_reward) {
      best_reward = r;
      best_belief = &*c.stats;
    }
  }

  if (best_belief != nullptr) {
    best_reward = draw_mean_belief(beliefs(*best_belief), fallback_var, rng);
    for (const auto& c : point.choices) {
      if (!c.stats) continue;
      const double r = draw_mean_belief(beliefs(*c.stats), fallback_var, rng);
      if (r >= best_reward) {
        best_reward = r;
        best_choice = &c;
      }
    }
  }

  if (best_choice != nullptr) return {best_choice->value, false};

  Value fresh = dist.sample(rng);
  if (point.find(fresh) == nullptr) point.choices.push_back({fresh, std::nullopt});
  return {std::move(fresh), true};
}

/// Selection points keyed by address, confined to one search.
class BeliefStore {
 public:
  const SelectionPoint* find(const Address& a) const {
    auto it = points_.find(a);
    return it == points_.end() ? nullptr : &it->second;
  }

  SelectionPoint& at(const Address& a) {
    auto [it, inserted] = points_.try_emplace(a);
    if (inserted) it->second.address = a;
    return it->second;
  }

  std::size_t size() const noexcept { return points_.size(); }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  std::map<Address, SelectionPoint> points_;
};

}  // namespace bamc
