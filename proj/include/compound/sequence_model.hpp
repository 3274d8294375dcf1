#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "compound/coefficient_map.hpp"
#include "compound/errors.hpp"
#include "compound/io.hpp"
#include "compound/multiindex.hpp"
#include "compound/rng.hpp"

namespace compound {

// Gaussian sequence observation Y_j = theta_j + epsilon * xi_j on a
// truncated index box.  The truncation is explicit: everything outside the
// box is unobserved and must be charged as tail energy by risk accounting.
struct SequenceObservation {
  int d = 0;
  double epsilon = 0.0;
  int cutoff = 0;
  std::uint64_t seed = 0;
  std::map<MultiIndex, double> values;

  double at(const MultiIndex& j) const {
    auto it = values.find(j);
    if (it == values.end())
      throw ParameterError("observation: index " + to_string(j) + " is outside the observed box");
    return it->second;
  }

  double total_energy() const {
    double s = 0.0;
    for (const auto& [j, y] : values) s += y * y;
    return s;
  }
};

inline void check_noise_level(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ParameterError("noise level must satisfy 0 < epsilon < 1, got " + format_double(epsilon));
}

// Noise is drawn per index from the counter generator, so two observations
// with the same seed agree wherever their boxes overlap.
inline SequenceObservation observe(const CoefficientMap& f, double epsilon, const IndexBox& box,
                                   std::uint64_t seed) {
  check_noise_level(epsilon);
  SequenceObservation obs;
  obs.d = box.d;
  obs.epsilon = epsilon;
  obs.cutoff = box.cutoff;
  obs.seed = seed;
  for (const MultiIndex& j : enumerate_indices(box))
    obs.values.emplace(j, f.get(j) + epsilon * gaussian_for_index(seed, j));
  return obs;
}

// Same model with caller-supplied noise; used by tests to inject xi == 0.
inline SequenceObservation observe_with_noise(const CoefficientMap& f, double epsilon,
                                              const IndexBox& box,
                                              const std::function<double(const MultiIndex&)>& xi) {
  check_noise_level(epsilon);
  SequenceObservation obs;
  obs.d = box.d;
  obs.epsilon = epsilon;
  obs.cutoff = box.cutoff;
  obs.seed = 0;
  for (const MultiIndex& j : enumerate_indices(box))
    obs.values.emplace(j, f.get(j) + epsilon * xi(j));
  return obs;
}

// KL divergence between the measures generated by f and g at the same noise
// level: (1/2) epsilon^{-2} ||f - g||_2^2.
inline double kl_divergence(const CoefficientMap& f, const CoefficientMap& g, double epsilon) {
  check_noise_level(epsilon);
  return 0.5 * distance_sq(f, g) / (epsilon * epsilon);
}

// Observation CSV: metadata comment, then j_1..j_d,y rows in index order.
inline void write_observation(std::ostream& os, const SequenceObservation& obs) {
  os << "# epsilon=" << format_double(obs.epsilon) << ", cutoff=" << obs.cutoff
     << ", seed=" << obs.seed << "\n";
  for (int i = 1; i <= obs.d; ++i) os << "j_" << i << ",";
  os << "y\n";
  for (const auto& [j, y] : obs.values) {
    for (int e : j.entries) os << e << ",";
    os << format_double(y) << "\n";
  }
}

inline void write_observation(const std::filesystem::path& path, const SequenceObservation& obs) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  write_observation(os, obs);
}

inline SequenceObservation read_observation(std::istream& is) {
  std::string meta;
  if (!std::getline(is, meta) || meta.rfind("# ", 0) != 0)
    throw FormatError("observation csv: missing metadata comment line");
  SequenceObservation obs;
  bool have_eps = false, have_cutoff = false, have_seed = false;
  for (const std::string& raw : split(meta.substr(2), ',')) {
    auto kv = split(trim(raw), '=');
    if (kv.size() != 2) throw FormatError("observation csv: malformed metadata field '" + raw + "'");
    const std::string key = trim(kv[0]), val = trim(kv[1]);
    if (key == "epsilon") { obs.epsilon = parse_double(val); have_eps = true; }
    else if (key == "cutoff") { obs.cutoff = static_cast<int>(parse_long(val)); have_cutoff = true; }
    else if (key == "seed") { obs.seed = static_cast<std::uint64_t>(std::stoull(val)); have_seed = true; }
    else throw FormatError("observation csv: unknown metadata key '" + key + "'");
  }
  if (!have_eps || !have_cutoff || !have_seed)
    throw FormatError("observation csv: metadata must carry epsilon, cutoff and seed");
  CoefficientMap body = read_coefficients(is);
  obs.d = body.dim;
  obs.values = std::move(body.values);
  return obs;
}

inline SequenceObservation read_observation(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path.string());
  return read_observation(is);
}

}  // namespace compound
