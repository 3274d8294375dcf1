// compound-minimax: batch front door for the compound-model toolkit.
// Subcommands: simulate, estimate, benchmark, verify-bounds.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "compound/aggregate.hpp"
#include "compound/bounds.hpp"
#include "compound/compound_model.hpp"
#include "compound/io.hpp"
#include "compound/mcmc.hpp"
#include "compound/risk.hpp"
#include "compound/sequence_model.hpp"
#include "compound/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace compound;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitCheckFailure = 4;

struct Options {
  int d = 2;
  int s = 1;
  int m = 1;
  double beta = 1.0;
  double L = 1.0;
  double epsilon = 0.2;
  std::vector<double> eps_grid;
  int cutoff = 6;
  int replicates = 200;
  std::string mode = "exact";
  long steps = 100000;
  long burn_in = 10000;
  std::uint64_t seed = 0;
  std::string out = "out";
  int threads = 1;
  std::string family_rule = "disjoint";
  std::string observation;  // estimate input; defaults to <out>/observation.csv
};

json options_json(const Options& o) {
  json j;
  j["d"] = o.d;
  j["s"] = o.s;
  j["m"] = o.m;
  j["beta"] = o.beta;
  j["L"] = o.L;
  j["epsilon"] = o.epsilon;
  j["eps_grid"] = o.eps_grid;
  j["cutoff"] = o.cutoff;
  j["replicates"] = o.replicates;
  j["mode"] = o.mode;
  j["steps"] = o.steps;
  j["burn_in"] = o.burn_in;
  j["seed"] = o.seed;
  j["out"] = o.out;
  j["threads"] = o.threads;
  j["family_rule"] = o.family_rule;
  j["observation"] = o.observation;
  return j;
}

json precondition_row(const std::string& name, double lhs, double rhs, bool satisfied,
                      bool fatal) {
  json j;
  j["name"] = name;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["satisfied"] = satisfied;
  j["fatal"] = fatal;
  return j;
}

// Smoothness/noise coupling required by the aggregation risk theory:
//   L > eps^2 (log(e eps^{-2}))^{(2 beta + s)/s}.
// Violations are recorded, not enforced; the estimators remain well defined.
json smoothness_coupling_row(double L, double beta, int s, double epsilon) {
  double e2 = epsilon * epsilon;
  double rhs = e2 * std::pow(std::log(std::exp(1.0) / e2), (2.0 * beta + s) / s);
  return precondition_row("smoothness-noise-coupling", L, rhs, L > rhs, false);
}

void write_manifest(const fs::path& dir, const std::string& command, const Options& o,
                    const json& preconditions, const json& notes) {
  json m;
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = options_json(o);
  m["preconditions"] = preconditions;
  m["notes"] = notes;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::vector<int>> consecutive_supports(int d, int s, int m) {
  if (static_cast<long>(m) * s > d)
    throw ParameterError("model layout: m*s = " + std::to_string(m * s) +
                         " coordinates needed but d = " + std::to_string(d));
  std::vector<std::vector<int>> supports;
  for (int l = 0; l < m; ++l) {
    std::vector<int> v;
    for (int i = 1; i <= s; ++i) v.push_back(l * s + i);
    supports.push_back(std::move(v));
  }
  return supports;
}

void common_validate(const Options& o) {
  if (o.d < 1) throw ParameterError("d must be >= 1");
  if (o.s < 1 || o.s > o.d) throw ParameterError("s must satisfy 1 <= s <= d");
  if (o.m < 0) throw ParameterError("m must be >= 0");
  if (o.beta <= 0) throw ParameterError("beta must be > 0");
  if (o.L <= 0) throw ParameterError("L must be > 0");
  if (o.cutoff < 1) throw ParameterError("cutoff must be >= 1");
  if (o.threads < 1) throw ParameterError("threads must be >= 1");
  parse_family_rule(o.family_rule);
}

std::string vector_key(const std::vector<int>& t) {
  if (t.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ";";
    out += std::to_string(t[i]);
  }
  return out;
}

void write_ensemble_csv(const fs::path& path, const WeightedEnsemble& ens) {
  std::ostringstream os;
  os << "candidate_id,m,s_max,t_vector,log_weight\n";
  for (std::size_t i = 0; i < ens.candidates.size(); ++i) {
    const Candidate& c = ens.candidates[i];
    os << i << "," << c.m() << "," << c.stratum() << "," << vector_key(c.bandwidths) << ","
       << format_double(ens.log_weights[i]) << "\n";
  }
  write_file(path, os.str());
}

void write_chain_csv(const fs::path& path, const McmcResult& res) {
  std::ostringstream os;
  os << "candidate_id,m,s_max,t_vector,visits,frequency\n";
  std::size_t id = 0;
  for (const auto& [c, n] : res.visits) {
    os << id++ << "," << c.m() << "," << c.stratum() << "," << vector_key(c.bandwidths) << ","
       << n << "," << format_double(static_cast<double>(n) / res.kept_steps) << "\n";
  }
  write_file(path, os.str());
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o) {
  common_validate(o);
  check_noise_level(o.epsilon);
  FamilyRule rule = parse_family_rule(o.family_rule);

  Structure st = Structure::empty(o.d);
  std::vector<CoefficientMap> atoms;
  if (o.m > 0) {
    auto supports = consecutive_supports(o.d, o.s, o.m);
    st = make_structure(o.d, o.s, supports, rule);
    for (int l = 0; l < o.m; ++l) {
      SobolevBall ball(supports[l], o.beta, o.L);
      Rng rng(derive_seed(o.seed, 1000 + l));
      atoms.push_back(sample_sobolev_atom(o.d, ball, o.cutoff, rng, 1.0));
    }
  }
  CompoundFunction model = compose(0.0, st, atoms);
  SequenceObservation obs = observe(model.flatten(), o.epsilon, IndexBox(o.d, o.cutoff), o.seed);

  fs::create_directories(o.out);
  fs::path dir(o.out);
  write_file(dir / "model_structure.txt", serialize_structure(st));
  write_file(dir / "model_mean.txt", format_double(model.mean) + "\n");
  for (int l = 0; l < o.m; ++l)
    write_coefficients(dir / ("model_atom_" + std::to_string(l + 1) + ".csv"), atoms[l]);
  write_observation(dir / "observation.csv", obs);

  // Sobolev certificates: per-atom smoothness form against the budget L.
  for (int l = 0; l < o.m; ++l) {
    double form = atoms[l].sobolev_form(o.beta);
    std::cout << "atom " << (l + 1) << ": support " << vector_key(st.supports[l])
              << " sobolev_form=" << format_double(form) << " budget=" << format_double(o.L)
              << (form <= o.L * (1.0 + 1e-9) ? " ok" : " VIOLATION") << "\n";
  }
  if (o.m > 0)
    std::cout << "norm compatibility ratio: " << format_double(verify_norm_compatibility(model))
              << "\n";

  json pre = json::array();
  pre.push_back(precondition_row("noise-level", o.epsilon, 1.0, true, true));
  pre.push_back(smoothness_coupling_row(o.L, o.beta, o.s, o.epsilon));
  pre.push_back(precondition_row("filter-range", o.cutoff, 1.0 / (o.epsilon * o.epsilon),
                                 o.cutoff < 1.0 / (o.epsilon * o.epsilon), false));
  if (o.m > 0) {
    double arg = o.d / (o.s * std::pow(static_cast<double>(o.m), 1.0 / o.s));
    pre.push_back(precondition_row("structure-log-argument", arg, 1.0, arg > 1.0, false));
  }
  json notes = json::array();
  notes.push_back("advisory preconditions are diagnostic; simulation proceeds regardless");
  write_manifest(dir, "simulate", o, pre, notes);
  std::cout << "wrote " << (3 + o.m) << " files + manifest to " << o.out << "\n";
  return kExitOk;
}

int cmd_estimate(const Options& o) {
  common_validate(o);
  fs::path dir(o.out);
  fs::path obs_path = o.observation.empty() ? dir / "observation.csv" : fs::path(o.observation);
  SequenceObservation obs = read_observation(obs_path);
  FamilyRule rule = parse_family_rule(o.family_rule);
  if (o.s > obs.d)
    throw ParameterError("s = " + std::to_string(o.s) + " exceeds the observation dimension " +
                         std::to_string(obs.d));
  fs::create_directories(o.out);

  json pre = json::array();
  pre.push_back(precondition_row("noise-level", obs.epsilon, 1.0, true, true));
  json notes = json::array();

  if (o.mode == "exact") {
    std::vector<Candidate> cands = enumerate_candidates(obs.d, o.s, obs.cutoff, rule);
    AggregateResult res = exact_aggregate(obs, cands);
    write_coefficients(dir / "estimate.csv", res.estimate);
    write_ensemble_csv(dir / "ensemble.csv", res.ensemble);
    notes.push_back("exact mode: " + std::to_string(cands.size()) + " candidates");
    std::cout << "aggregated " << cands.size() << " candidates over " << obs.values.size()
              << " observed coefficients\n";
  } else if (o.mode == "mcmc") {
    McmcConfig cfg;
    cfg.steps = o.steps;
    cfg.burn_in = o.burn_in;
    cfg.seed = o.seed;
    validate_mcmc_config(cfg);
    McmcResult res = mcmc_aggregate(obs, o.s, rule, cfg);
    write_coefficients(dir / "estimate.csv", res.estimate);
    write_chain_csv(dir / "chain.csv", res);
    notes.push_back("mcmc mode: acceptance_rate=" + format_double(res.acceptance_rate) +
                    " kept_steps=" + std::to_string(res.kept_steps) + " distinct_states=" +
                    std::to_string(res.visits.size()));
    std::cout << "chain of " << o.steps << " steps, acceptance rate "
              << format_double(res.acceptance_rate) << ", " << res.visits.size()
              << " distinct states\n";
  } else {
    throw ParameterError("mode must be 'exact' or 'mcmc', got '" + o.mode + "'");
  }
  write_manifest(dir, "estimate", o, pre, notes);
  return kExitOk;
}

int cmd_benchmark(const Options& o) {
  common_validate(o);
  if (o.m < 1) throw ParameterError("benchmark: m must be >= 1");
  std::vector<double> grid = o.eps_grid;
  if (grid.empty()) grid = {0.3, 0.2, 0.15, 0.1, 0.07};
  for (double e : grid) check_noise_level(e);
  {
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.size() < 4)
      throw ParameterError("benchmark: need at least 4 distinct grid points for the rate fit");
  }
  FamilyRule rule = parse_family_rule(o.family_rule);
  fs::create_directories(o.out);
  fs::path dir(o.out);

  json pre = json::array();
  json notes = json::array();
  double arg = o.d / (o.s * std::pow(static_cast<double>(o.m), 1.0 / o.s));
  pre.push_back(precondition_row("structure-log-argument", arg, 1.0, arg > 1.0, false));

  std::vector<RiskReport> reports;
  std::vector<RateValue> rates;
  std::ostringstream risk_csv, plot_csv;
  risk_csv << "epsilon,replicates,mean_mise,stderr,tail_energy,active_branch,theoretical_rate\n";
  plot_csv << "log_epsilon,log_mean_mise\n";

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double eps = grid[gi];
    pre.push_back(smoothness_coupling_row(o.L, o.beta, o.s, eps));

    // The truth tracks the noise level: atoms are sampled on the oracle
    // bandwidth box for eps, so the bias/variance balance the risk theory
    // describes is actually exercised at every grid point.
    int t_atom = lemma1_bandwidth(o.beta, o.L, eps, o.s, 1 << 20);
    int obs_cutoff = t_atom + 2;
    auto supports = consecutive_supports(o.d, o.s, o.m);
    Structure st = make_structure(o.d, o.s, supports, rule);
    std::vector<CoefficientMap> atoms;
    std::uint64_t truth_seed = derive_seed(o.seed, 1000 + gi);
    for (int l = 0; l < o.m; ++l) {
      SobolevBall ball(supports[l], o.beta, o.L);
      Rng rng(derive_seed(truth_seed, l));
      atoms.push_back(sample_sobolev_atom(o.d, ball, t_atom, rng, 1.0));
    }
    CompoundFunction model = compose(0.0, st, atoms);

    Estimator estimator;
    if (o.mode == "exact") {
      auto cands = std::make_shared<std::vector<Candidate>>(
          enumerate_candidates(o.d, o.s, obs_cutoff, rule));
      notes.push_back("eps=" + format_double(eps) + ": atom_cutoff=" + std::to_string(t_atom) +
                      " obs_cutoff=" + std::to_string(obs_cutoff) + " candidates=" +
                      std::to_string(cands->size()));
      estimator = [cands](const SequenceObservation& y) {
        return exact_aggregate(y, *cands).estimate;
      };
    } else if (o.mode == "mcmc") {
      int s_max = o.s;
      long steps = o.steps, burn = o.burn_in;
      notes.push_back("eps=" + format_double(eps) + ": atom_cutoff=" + std::to_string(t_atom) +
                      " obs_cutoff=" + std::to_string(obs_cutoff) + " mcmc steps=" +
                      std::to_string(steps));
      estimator = [s_max, rule, steps, burn](const SequenceObservation& y) {
        McmcConfig cfg;
        cfg.steps = steps;
        cfg.burn_in = burn;
        cfg.seed = derive_seed(y.seed, 0x6d636d63u);
        return mcmc_aggregate(y, s_max, rule, cfg).estimate;
      };
    } else {
      throw ParameterError("mode must be 'exact' or 'mcmc', got '" + o.mode + "'");
    }

    RiskReport rep = mc_risk(model, estimator, eps, IndexBox(o.d, obs_cutoff), o.replicates,
                             derive_seed(o.seed, 2000 + gi), o.threads);
    RateValue rate = theoretical_rate(o.beta, o.L, eps, o.s, o.m, o.d);
    reports.push_back(rep);
    rates.push_back(rate);
    risk_csv << format_double(eps) << "," << rep.replicates << ","
             << format_double(rep.mean_mise) << "," << format_double(rep.stderr_mise) << ","
             << format_double(rep.tail_energy) << "," << to_string(rate.branch) << ","
             << format_double(rate.value) << "\n";
    plot_csv << format_double(std::log(eps)) << "," << format_double(std::log(rep.mean_mise))
             << "\n";
    std::cout << "eps=" << format_double(eps) << " mean_mise=" << format_double(rep.mean_mise)
              << " stderr=" << format_double(rep.stderr_mise) << " branch="
              << to_string(rate.branch) << "\n";
  }

  write_file(dir / "risk.csv", risk_csv.str());
  write_file(dir / "plot.csv", plot_csv.str());

  for (const RateValue& r : rates) {
    if (r.branch != rates.front().branch) {
      write_manifest(dir, "benchmark", o, pre, notes);
      throw ParameterError(
          "benchmark: the dominant term of the theoretical rate changes across the grid (" +
          std::string(to_string(rates.front().branch)) + " -> " + to_string(r.branch) +
          "); a single power law does not hold, refusing to fit");
    }
  }

  std::vector<double> risks;
  for (const RiskReport& r : reports) risks.push_back(r.mean_mise);
  RateFit fit = rate_fit(grid, risks, bias_branch_exponent(o.beta, o.s));
  std::ostringstream fit_csv;
  fit_csv << "slope,intercept,r_squared,target_exponent\n"
          << format_double(fit.slope) << "," << format_double(fit.intercept) << ","
          << format_double(fit.r_squared) << "," << format_double(fit.target_exponent) << "\n";
  write_file(dir / "fit.csv", fit_csv.str());
  std::cout << "rate fit: slope=" << format_double(fit.slope) << " target="
            << format_double(fit.target_exponent) << " r2=" << format_double(fit.r_squared)
            << "\n";

  write_manifest(dir, "benchmark", o, pre, notes);
  return kExitOk;
}

int cmd_verify_bounds(const Options& o) {
  common_validate(o);
  if (o.m < 1) throw ParameterError("verify-bounds: m must be >= 1");
  const double theta = 0.125;  // separation level used throughout the checks
  validate_partition_shape(o.d, o.s, o.m);

  std::vector<CheckReport> checks = combinatorics_checks();
  std::vector<CheckReport> built = construction_checks(o.d, o.s, o.m, theta, o.beta, o.L,
                                                       o.epsilon);
  checks.insert(checks.end(), built.begin(), built.end());

  fs::create_directories(o.out);
  fs::path dir(o.out);
  std::ostringstream csv;
  csv << "check_name,lhs,rhs,passed\n";
  int failures = 0;
  for (const CheckReport& c : checks) {
    csv << c.name << "," << format_double(c.lhs) << "," << format_double(c.rhs) << ","
        << (c.passed ? "true" : "false") << "\n";
    if (!c.passed) ++failures;
  }
  write_file(dir / "checks.csv", csv.str());

  PackingSet packing = greedy_packing(o.d, o.s, o.m, theta);
  std::ostringstream pk;
  for (const Partition& p : packing.members) pk << serialize_partition(p) << "\n";
  write_file(dir / "packing.txt", pk.str());

  HypercubeCode code = varshamov_gilbert_code(9);
  std::ostringstream cd;
  for (std::uint32_t w : code.words) {
    std::string bits(code.n, '0');
    for (int i = 0; i < code.n; ++i)
      if (w & (1u << i)) bits[i] = '1';
    cd << bits << "\n";
  }
  write_file(dir / "code.txt", cd.str());

  json pre = json::array();
  pre.push_back(precondition_row("partition-shape", o.m * o.s, o.d, o.m * o.s <= o.d, true));
  pre.push_back(precondition_row("separation-level", theta, 0.125, true, true));
  json notes = json::array();
  notes.push_back(std::to_string(checks.size()) + " checks, " + std::to_string(failures) +
                  " failures");
  notes.push_back("packing size " + std::to_string(packing.members.size()) + ", code size " +
                  std::to_string(code.words.size()));
  write_manifest(dir, "verify-bounds", o, pre, notes);

  std::cout << checks.size() << " checks, " << failures << " failures\n";
  return failures == 0 ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"compound-model estimation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "flat key=value configuration file; flags win");
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--d", o.d, "ambient dimension");
    sub->add_option("--s", o.s, "max active coordinates per component");
    sub->add_option("--m", o.m, "number of components");
    sub->add_option("--beta", o.beta, "smoothness order");
    sub->add_option("--L", o.L, "smoothness radius");
    sub->add_option("--epsilon", o.epsilon, "noise level in (0,1)");
    sub->add_option("--eps-grid", o.eps_grid, "noise levels for the benchmark grid")
        ->delimiter(',');
    sub->add_option("--cutoff", o.cutoff, "observation frequency cutoff");
    sub->add_option("--replicates", o.replicates, "Monte-Carlo replicates");
    sub->add_option("--mode", o.mode, "aggregation mode: exact | mcmc")
        ->check(CLI::IsMember({"exact", "mcmc"}));
    sub->add_option("--steps", o.steps, "MCMC steps");
    sub->add_option("--burn-in", o.burn_in, "MCMC burn-in steps");
    sub->add_option("--seed", o.seed, "RNG seed")->envname("COMPOUND_MINIMAX_SEED");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker thread cap");
    sub->add_option("--family-rule", o.family_rule,
                    "support family rule: disjoint | overlap-at-most-one | unrestricted")
        ->check(CLI::IsMember({"disjoint", "overlap-at-most-one", "unrestricted"}));
    return sub;
  };

  CLI::App* simulate = add_common(app.add_subcommand("simulate", "draw a model and observation"));
  CLI::App* estimate =
      add_common(app.add_subcommand("estimate", "aggregate candidate projections"));
  estimate->add_option("--observation", o.observation,
                       "observation CSV (default <out>/observation.csv)");
  CLI::App* benchmark =
      add_common(app.add_subcommand("benchmark", "Monte-Carlo risk over a noise grid"));
  CLI::App* verify =
      add_common(app.add_subcommand("verify-bounds", "combinatorial and construction checks"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (estimate->parsed()) return cmd_estimate(o);
    if (benchmark->parsed()) return cmd_benchmark(o);
    if (verify->parsed()) return cmd_verify_bounds(o);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const ParameterError& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
