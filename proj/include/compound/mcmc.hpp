#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "compound/aggregate.hpp"
#include "compound/rng.hpp"

namespace compound {

struct McmcConfig {
  long steps = 100000;
  long burn_in = 10000;  // steps discarded before averaging
  double p_toggle = 0.3;     // add/remove one support
  double p_swap = 0.2;       // replace one support, bandwidth kept
  double p_bandwidth = 0.5;  // move one bandwidth by +-1, clamped
  std::uint64_t seed = 0;
};

inline void validate_mcmc_config(const McmcConfig& cfg) {
  if (cfg.steps <= 0) throw ParameterError("mcmc: steps must be > 0");
  if (cfg.burn_in < 0) throw ParameterError("mcmc: burn-in must be >= 0");
  if (cfg.burn_in >= cfg.steps)
    throw ParameterError("mcmc: burn-in " + std::to_string(cfg.burn_in) +
                         " leaves no steps out of " + std::to_string(cfg.steps));
  if (cfg.p_toggle < 0 || cfg.p_swap < 0 || cfg.p_bandwidth < 0 ||
      std::abs(cfg.p_toggle + cfg.p_swap + cfg.p_bandwidth - 1.0) > 1e-9)
    throw ParameterError("mcmc: move probabilities must be nonnegative and sum to 1");
}

struct McmcResult {
  CoefficientMap estimate;  // average projection estimate over kept states
  std::map<Candidate, long, CandidateLess> visits;
  long kept_steps = 0;
  double acceptance_rate = 0.0;
};

namespace detail {

// Uniform draw from the nonempty supports of size <= s_max, without
// materializing the list: pick the size by its exact weight C(d, l), then a
// uniform subset of that size.
class SupportSampler {
 public:
  SupportSampler(int d, int s_max) : d_(d) {
    double total = 0.0;
    for (int l = 1; l <= s_max; ++l) {
      total += to_double(binomial_exact(d, l));
      cum_.push_back(total);
    }
    if (cum_.empty()) throw ParameterError("mcmc: s must be >= 1 for support moves");
  }

  double count() const { return cum_.back(); }

  std::vector<int> draw(Rng& rng) const {
    double u = rng.uniform() * cum_.back();
    int size = 1;
    while (size <= static_cast<int>(cum_.size()) && u > cum_[size - 1]) ++size;
    size = std::min<int>(size, static_cast<int>(cum_.size()));
    // Floyd's subset sampling: uniform among subsets of the given size.
    std::vector<int> picked;
    for (int j = d_ - size + 1; j <= d_; ++j) {
      int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j))) + 1;
      bool seen = false;
      for (int x : picked) seen |= (x == t);
      picked.push_back(seen ? j : t);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
  }

 private:
  int d_;
  std::vector<double> cum_;  // cumulative counts by size
};

inline bool has_support(const Candidate& c, const std::vector<int>& v, int* pos = nullptr) {
  const auto& sup = c.structure.supports;
  auto it = std::lower_bound(sup.begin(), sup.end(), v);
  if (it != sup.end() && *it == v) {
    if (pos) *pos = static_cast<int>(it - sup.begin());
    return true;
  }
  return false;
}

inline Candidate with_support_added(const Candidate& c, const std::vector<int>& v, int t) {
  Candidate out = c;
  auto it = std::lower_bound(out.structure.supports.begin(), out.structure.supports.end(), v);
  int pos = static_cast<int>(it - out.structure.supports.begin());
  out.structure.supports.insert(it, v);
  out.bandwidths.insert(out.bandwidths.begin() + pos, t);
  return out;
}

inline Candidate with_support_removed(const Candidate& c, int pos) {
  Candidate out = c;
  out.structure.supports.erase(out.structure.supports.begin() + pos);
  out.bandwidths.erase(out.bandwidths.begin() + pos);
  return out;
}

}  // namespace detail

// Metropolis-Hastings over candidates, targeting exactly the un-normalized
// aggregation weights.  The returned estimate is the visit-weighted average
// of the per-candidate projection estimates, i.e. the chain average.
inline McmcResult mcmc_aggregate(const SequenceObservation& obs, int s_max, FamilyRule rule,
                                 const McmcConfig& cfg) {
  validate_mcmc_config(cfg);
  if (s_max < 0 || s_max > obs.d) throw ParameterError("mcmc: s must be in [0,d]");
  PriorContext prior(obs.d, obs.cutoff + 1);
  // s_max = 0 leaves the constant candidate alone: every move is impossible
  // and the chain never leaves its start state.
  std::optional<detail::SupportSampler> sampler;
  if (s_max >= 1) sampler.emplace(obs.d, s_max);
  Rng rng(cfg.seed);
  const int grid = obs.cutoff + 1;
  const double log_grid = std::log(static_cast<double>(grid));

  Candidate cur = Candidate::constant(obs.d);
  double cur_lw = log_weight_unnormalized(obs, cur, prior);
  McmcResult res;
  long accepted = 0;

  auto try_accept = [&](const Candidate& prop, double log_q_ratio) {
    double prop_lw = log_weight_unnormalized(obs, prop, prior);
    double log_alpha = prop_lw - cur_lw + log_q_ratio;
    if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha) {
      cur = prop;
      cur_lw = prop_lw;
      ++accepted;
    }
  };

  for (long step = 0; step < cfg.steps; ++step) {
    double u = rng.uniform();
    if (u < cfg.p_toggle && sampler) {
      std::vector<int> v = sampler->draw(rng);
      int pos = -1;
      if (detail::has_support(cur, v, &pos)) {
        // Removal; the reverse move must also draw the lost bandwidth.
        try_accept(detail::with_support_removed(cur, pos), -log_grid);
      } else {
        int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(grid)));
        Candidate prop = detail::with_support_added(cur, v, t);
        if (family_rule_ok(rule, prop.structure.supports)) try_accept(prop, log_grid);
      }
    } else if (u < cfg.p_toggle + cfg.p_swap && u >= cfg.p_toggle) {
      if (cur.m() >= 1 && sampler) {
        int l = static_cast<int>(rng.below(static_cast<std::uint64_t>(cur.m())));
        std::vector<int> v = sampler->draw(rng);
        if (!detail::has_support(cur, v)) {
          int t = cur.bandwidths[l];
          Candidate prop = detail::with_support_added(detail::with_support_removed(cur, l), v, t);
          if (family_rule_ok(rule, prop.structure.supports)) try_accept(prop, 0.0);
        } else if (cur.structure.supports[l] == v) {
          ++accepted;  // proposing the current state always passes
        }
      }
    } else {
      if (cur.m() >= 1) {
        int l = static_cast<int>(rng.below(static_cast<std::uint64_t>(cur.m())));
        int delta = rng.uniform() < 0.5 ? -1 : 1;
        int t = std::clamp(cur.bandwidths[l] + delta, 0, obs.cutoff);
        if (t == cur.bandwidths[l]) {
          ++accepted;  // clamped at the boundary: a self-loop
        } else {
          Candidate prop = cur;
          prop.bandwidths[l] = t;
          try_accept(prop, 0.0);
        }
      }
    }
    if (step >= cfg.burn_in) ++res.visits[cur];
  }

  res.kept_steps = cfg.steps - cfg.burn_in;
  res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.steps);

  CoefficientMap avg(obs.d);
  for (const auto& [cand, n] : res.visits) {
    double w = static_cast<double>(n) / static_cast<double>(res.kept_steps);
    for (const MultiIndex& j : filter_indices(cand)) {
      auto it = obs.values.find(j);
      if (it != obs.values.end()) avg.add(j, w * it->second);
    }
  }
  // Every state keeps the zero index, so its visit-weighted average is Y_0
  // exactly; write it directly instead of through the rounded weights.
  avg.set(MultiIndex::zero(obs.d), obs.at(MultiIndex::zero(obs.d)));
  res.estimate = std::move(avg);
  return res;
}

}  // namespace compound
