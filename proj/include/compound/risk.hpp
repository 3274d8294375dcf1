#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "compound/compound_model.hpp"
#include "compound/sequence_model.hpp"

namespace compound {

// Numerically stable order-independent reduction; used for every Monte
// Carlo mean so threading cannot change the result.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

// Squared-error loss between an estimate and the truth as coefficient maps,
// plus whatever truth energy was never observable.
inline double mise(const CoefficientMap& estimate, const CoefficientMap& truth, double tail_energy) {
  if (tail_energy < 0) throw ParameterError("mise: tail energy must be >= 0");
  return distance_sq(estimate, truth) + tail_energy;
}

struct RiskReport {
  double epsilon = 0.0;
  int replicates = 0;
  double mean_mise = 0.0;
  double stderr_mise = 0.0;
  double tail_energy = 0.0;
};

using Estimator = std::function<CoefficientMap(const SequenceObservation&)>;

inline bool index_in_box(const MultiIndex& j, const IndexBox& box) {
  if (j.linf() > box.cutoff) return false;
  if (box.restriction && !j.support_within(*box.restriction)) return false;
  return true;
}

// Monte Carlo risk of an estimator at a fixed truth.  Replicate r observes
// with seed derive_seed(seed, r), so the replicate set is reproducible and
// independent of the thread count; the reduction is pairwise over the
// replicate-indexed vector for the same reason.
inline RiskReport mc_risk(const CoefficientMap& truth, const Estimator& estimator, double epsilon,
                          const IndexBox& box, int replicates, std::uint64_t seed, int threads = 1) {
  check_noise_level(epsilon);
  if (replicates < 2) throw ParameterError("mc_risk: need at least 2 replicates");
  if (threads < 1) throw ParameterError("mc_risk: thread count must be >= 1");

  CoefficientMap truth_in(truth.dim);
  double tail = 0.0;
  for (const auto& [j, v] : truth.values) {
    if (index_in_box(j, box)) truth_in.set(j, v);
    else tail += v * v;
  }

  std::vector<double> losses(replicates, 0.0);
  auto run_range = [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      SequenceObservation obs = observe(truth, epsilon, box, derive_seed(seed, r));
      losses[r] = mise(estimator(obs), truth_in, tail);
    }
  };
  int workers = std::min(threads, replicates);
  if (workers == 1) {
    run_range(0, replicates);
  } else {
    std::vector<std::thread> pool;
    int chunk = (replicates + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      int b = w * chunk;
      int e = std::min(replicates, b + chunk);
      if (b < e) pool.emplace_back(run_range, b, e);
    }
    for (auto& t : pool) t.join();
  }

  double mean = pairwise_sum(losses) / replicates;
  std::vector<double> sq(replicates);
  for (int r = 0; r < replicates; ++r) sq[r] = (losses[r] - mean) * (losses[r] - mean);
  double var = pairwise_sum(sq) / (replicates - 1);

  RiskReport rep;
  rep.epsilon = epsilon;
  rep.replicates = replicates;
  rep.mean_mise = mean;
  rep.stderr_mise = std::sqrt(var / replicates);
  rep.tail_energy = tail;
  return rep;
}

inline RiskReport mc_risk(const CompoundFunction& model, const Estimator& estimator, double epsilon,
                          const IndexBox& box, int replicates, std::uint64_t seed, int threads = 1) {
  return mc_risk(model.flatten(), estimator, epsilon, box, replicates, seed, threads);
}

enum class RateBranch { bias, structure, clamp };

inline const char* to_string(RateBranch b) {
  switch (b) {
    case RateBranch::bias: return "bias";
    case RateBranch::structure: return "structure";
    case RateBranch::clamp: return "clamp";
  }
  return "?";
}

struct RateValue {
  double value = 0.0;
  double bias_term = 0.0;
  double structure_term = 0.0;
  RateBranch branch = RateBranch::bias;
  bool log_clamped = false;  // d/(s m^{1/s}) <= 1, structure log floored at 0
};

// Theoretical risk level
//   max{ m L^{s/(2b+s)} eps^{4b/(2b+s)},  m s eps^2 log(d/(s m^{1/s})) } ^ L.
inline RateValue theoretical_rate(double beta, double L, double epsilon, int s, int m, int d) {
  check_noise_level(epsilon);
  if (beta <= 0) throw ParameterError("theoretical_rate: beta must be > 0");
  if (L <= 0) throw ParameterError("theoretical_rate: L must be > 0");
  if (d < 1 || s < 1 || s > d || m < 1)
    throw ParameterError("theoretical_rate: need d >= 1, 1 <= s <= d, m >= 1");
  RateValue out;
  double den = 2.0 * beta + s;
  out.bias_term = m * std::pow(L, s / den) * std::pow(epsilon, 4.0 * beta / den);
  double arg = d / (s * std::pow(static_cast<double>(m), 1.0 / s));
  double lg = std::log(arg);
  if (lg <= 0.0) {
    lg = 0.0;
    out.log_clamped = true;
  }
  out.structure_term = m * s * epsilon * epsilon * lg;
  double raw = std::max(out.bias_term, out.structure_term);
  if (L <= raw) {
    out.value = L;
    out.branch = RateBranch::clamp;
  } else {
    out.value = raw;
    out.branch = out.bias_term >= out.structure_term ? RateBranch::bias : RateBranch::structure;
  }
  return out;
}

// Exponent 4 beta / (2 beta + s) of the bias branch in eps.
inline double bias_branch_exponent(double beta, int s) {
  if (beta <= 0 || s < 1) throw ParameterError("bias_branch_exponent: need beta > 0, s >= 1");
  return 4.0 * beta / (2.0 * beta + s);
}

// Risk bound for tensor-class aggregation with per-coordinate levels
// bounded by k:
//   m eps^2 { (2k+1)^s + 4 log(2 eps^-2) + 4 s log(2 e^3 d / (s m^{1/s})) }.
inline double theorem2_bound(int k, int s, int m, int d, double epsilon) {
  check_noise_level(epsilon);
  if (k < 0) throw ParameterError("theorem2_bound: k must be >= 0");
  if (d < 1 || s < 1 || s > d || m < 0)
    throw ParameterError("theorem2_bound: need d >= 1, 1 <= s <= d, m >= 0");
  double e2 = epsilon * epsilon;
  if (!(static_cast<double>(k) < 1.0 / e2))
    throw ParameterError("theorem2_bound: precondition k < epsilon^-2 violated (k=" +
                         std::to_string(k) + ", epsilon^-2=" + format_double(1.0 / e2) + ")");
  if (m == 0) return 0.0;
  double main = std::pow(2.0 * k + 1.0, static_cast<double>(s));
  double tail = 4.0 * std::log(2.0 / e2);
  double comb = 4.0 * s *
                std::log(2.0 * std::exp(3.0) * d / (s * std::pow(static_cast<double>(m), 1.0 / s)));
  return m * e2 * (main + tail + comb);
}

struct RateFit {
  double slope = 0.0;      // d log(risk) / d log(eps)
  double intercept = 0.0;  // log(risk) at log(eps) = 0
  double r_squared = 0.0;
  double target_exponent = 0.0;
};

// Log-log least squares of risk against eps.
inline RateFit rate_fit(const std::vector<double>& epsilons, const std::vector<double>& risks,
                        double target_exponent) {
  if (epsilons.size() != risks.size()) throw ParameterError("rate_fit: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    check_noise_level(epsilons[i]);
    if (!(risks[i] > 0.0))
      throw ParameterError("rate_fit: risks must be strictly positive to take logs");
    xs.push_back(std::log(epsilons[i]));
    ys.push_back(std::log(risks[i]));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 4)
    throw ParameterError("rate_fit: need at least 4 distinct noise levels, got " +
                         std::to_string(distinct.size()));
  double n = static_cast<double>(xs.size());
  double mx = pairwise_sum(xs) / n;
  double my = pairwise_sum(ys) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.target_exponent = target_exponent;
  return fit;
}

}  // namespace compound
