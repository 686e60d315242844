#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfp/stochastic.hpp"

// Monte-Carlo experiment harness: limit detection against an equilibrium
// catalog, convergence / non-convergence batch experiments, and order
// preservation along the conjugate dynamic.

namespace sfp::analysis {

struct Catalog {
  std::vector<flow::EquilibriumReport> entries;
};

struct RunVerdict {
  enum class Kind { ConvergedTo, Stalled, Undecided };
  Kind kind = Kind::Undecided;
  int pne_index = -1;  // ConvergedTo only
  double distance = std::numeric_limits<double>::infinity();
  double window_diameter = std::numeric_limits<double>::infinity();
  std::vector<double> final_state;
  std::vector<std::pair<double, double>> apt_samples;  // (t, d(t, 1))
};

const char* to_string(RunVerdict::Kind kind);

// Window diameter = max pairwise inf-distance among the last W stored
// states. Diameter <= tol and a catalog point within 10*tol -> ConvergedTo;
// diameter <= tol with no catalog point near -> Stalled; else Undecided.
RunVerdict detect_limit(const stochastic::Trajectory& traj,
                        const std::vector<flow::EquilibriumReport>& catalog,
                        int W, double tol);

struct ExperimentConfig {
  games::Game game;
  std::vector<response::ChoiceSpec> choices;
  long runs = 1;
  long steps = 100000;
  std::uint64_t seed = 0;
  int window = 50;        // W, in stored iterates; >= 10
  double tol_conv = 1e-2;
  long prefix = 1000;     // synthetic history length realizing the start
  int jobs = 1;
  bool force = false;     // run even when the game is not strictly supermodular
  std::optional<Catalog> catalog;              // computed when absent
  std::optional<games::MixedProfile> start;    // uniform when absent
  std::vector<long> apt_at_steps;  // iterate indices sampled as d(tau_n, 1)

  ExperimentConfig(games::Game g, std::vector<response::ChoiceSpec> c)
      : game(std::move(g)), choices(std::move(c)) {}
};

struct RunOutcome {
  long run = 0;
  bool ok = true;
  RunVerdict verdict;
  std::string error;
};

struct ConfidenceInterval {
  double lo = 0, hi = 1;
};

// Exact (Clopper-Pearson) two-sided binomial interval.
ConfidenceInterval clopper_pearson(long successes, long trials,
                                   double confidence = 0.95);

struct ExperimentReport {
  Catalog catalog;
  std::vector<RunOutcome> outcomes;  // run index order
  std::vector<long> basin_counts;    // per catalog entry
  long converged_stable = 0;   // to entries not linearly unstable
  long converged_unstable = 0;
  long stalled = 0;
  long undecided = 0;
  long errored = 0;
  double frac_stable = 0, frac_unstable = 0;  // of all runs
  ConfidenceInterval ci_stable, ci_unstable;
  // Trapping check: a run started (in the tail-sum order) above or below a
  // linearly unstable entry must not converge across it.
  long monotone_violations = 0;
};

// Independent SFP runs from a common start; refuses games that are not
// strictly supermodular unless cfg.force. Per-run failures are recorded;
// the batch fails only when more than 10% of runs error.
ExperimentReport convergence_experiment(const ExperimentConfig& cfg);

struct NonconvergenceReport {
  Catalog catalog;
  int target_index = -1;
  std::vector<RunOutcome> outcomes;
  long to_target = 0;
  long errored = 0;
  double fraction = 0;
  ConfidenceInterval ci;  // .hi is the reported binomial upper bound
};

// Starts every run at the target perturbed by a uniform tangent
// displacement of norm <= start_radius (projected to the simplex product,
// then realized as an empirical frequency by the start prefix); reports
// the fraction of runs converging to the target. The target must be
// linearly unstable.
NonconvergenceReport nonconvergence_experiment(
    const ExperimentConfig& cfg, const flow::EquilibriumReport& target,
    double start_radius);

struct OrderReport {
  long pairs = 0;
  long preserved = 0;          // pairs ordered at every check time
  double preservation_rate = 0;
  std::vector<double> check_times;
  std::vector<double> min_margins;  // per check time, min over pairs
};

// Samples tail-sum-ordered pairs of profiles (componentwise min/max of two
// random tail-sum images), integrates the conjugate dynamic from both, and
// checks componentwise order at each requested time.
OrderReport order_experiment(const ExperimentConfig& cfg, long pairs,
                             const std::vector<double>& check_times = {1, 5,
                                                                       10});

}  // namespace sfp::analysis
