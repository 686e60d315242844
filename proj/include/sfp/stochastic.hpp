#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfp/flow.hpp"
#include "sfp/response.hpp"

// Stochastic side: decreasing step schedules, recorded trajectories, the
// Robbins-Monro / fictitious-play / diffusion simulators, the affine
// interpolated process with its shadowing distance, deviation-rate bounds,
// and empirical noise statistics.

namespace sfp::stochastic {

// Decreasing step sequence gamma_1, gamma_2, ... with partial sums
// tau_n = sum_{k<=n} gamma_k and the piecewise-constant interpolated step
// gamma_bar(t) = gamma_{m+1} on [tau_m, tau_{m+1}).
class StepSchedule {
 public:
  enum class Kind { Harmonic, PowerLaw, Custom };

  static StepSchedule harmonic();                 // gamma_n = 1/n
  static StepSchedule power_law(double alpha);    // gamma_n = n^-alpha, alpha in (0.5, 1]
  // Probed at construction: positive, nonincreasing over sampled indices.
  static StepSchedule custom(std::function<double(long)> gamma);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  std::string name() const;

  double gamma(long n) const;  // n >= 1
  double tau(long n) const;    // tau(0) = 0
  double gamma_bar(double t) const;
  long segment(double t) const;  // largest m with tau(m) <= t

 private:
  StepSchedule() = default;
  double tau_closed_form(long n) const;

  Kind kind_ = Kind::Harmonic;
  double alpha_ = 1.0;
  std::function<double(long)> custom_;
  mutable std::vector<double> tau_cache_;  // tau_cache_[n] = tau(n)
};

// What a simulator keeps: every stride-th iterate, a dense tail of `window`
// iterates, and any extra step ranges stored densely (for shadowing
// metrics). Estimated storage must fit the budget or the run refuses.
struct RecordingSpec {
  long stride = 0;  // 0 = auto: max(1, n_steps >> 16)
  long window = 256;
  std::vector<std::pair<long, long>> dense_ranges;  // inclusive step ranges
  bool record_noise = false;
  long noise_stride = 1;
  double memory_budget_mb = 64.0;
};

// Strictly increasing times, one state per knot, all states finite.
class Trajectory {
 public:
  Trajectory(int dim, long start_index);

  int dim() const { return dim_; }
  long start_index() const { return start_; }
  std::size_t size() const { return times_.size(); }
  double time(std::size_t k) const { return times_[k]; }
  long step(std::size_t k) const { return steps_[k]; }
  const double* state(std::size_t k) const { return states_.data() + k * dim_; }
  std::vector<double> state_vec(std::size_t k) const;
  double first_time() const;
  double last_time() const;
  // Greatest knot k with time(k) <= t; t must lie in the recorded range.
  std::size_t locate(double t) const;
  void append(long step, double t, const double* x);

  // run metadata, echoed into serialized configs
  std::string field_name;
  std::string schedule_name;
  std::uint64_t seed = 0;
  long total_steps = 0;
  long stride_used = 1;

 private:
  int dim_;
  long start_;
  std::vector<long> steps_;
  std::vector<double> times_;
  std::vector<double> states_;
};

struct NoiseRecord {
  int dim = 0;
  std::vector<long> steps;         // index n+1 of each increment U_{n+1}
  std::vector<double> increments;  // flat, steps.size() * dim
  std::vector<double> states;      // conditioning states x_n, same layout
  std::size_t size() const { return steps.size(); }
  const double* increment(std::size_t k) const {
    return increments.data() + k * dim;
  }
  const double* state(std::size_t k) const { return states.data() + k * dim; }
};

struct RunResult {
  Trajectory traj;
  NoiseRecord noise;
};

// Noise generators draw from (seed, coordinate stream, step counter) only,
// so a run is a pure function of its seed.
using NoiseFn =
    std::function<void(std::uint64_t seed, long n, const double* x, double* out)>;

NoiseFn zero_noise(int dim);
NoiseFn iid_uniform_noise(int dim, double amplitude);  // U[-a, a] per coordinate
NoiseFn iid_gaussian_noise(int dim, double sigma);

// x_{n+1} = x_n + gamma_{n+1} (F(x_n) + U_{n+1}) from iterate start_index,
// recorded at times tau_n.
RunResult run_robbins_monro(const flow::FieldHandle& F,
                            const std::vector<double>& x0,
                            const NoiseFn& noise, const StepSchedule& sched,
                            long n_steps, std::uint64_t seed,
                            const RecordingSpec& rec = {},
                            long start_index = 1);

// Stochastic fictitious play: states are exact empirical action frequencies
// (integer counts over n). The requested start is realized by a synthetic
// history of `prefix` plays via largest-remainder rounding, so interior
// starts are honored to within 1/prefix. Actions are sampled by inverse CDF
// on br(x_n), one independent stream per player, keyed by the step.
RunResult run_sfp(const games::Game& g,
                  const std::vector<response::ChoiceSpec>& choices,
                  const games::MixedProfile& x0, long n_steps,
                  std::uint64_t seed, const RecordingSpec& rec = {},
                  long prefix = 1000);

// Largest-remainder integer rounding of prefix * x0, per player block.
std::vector<std::vector<long>> initial_counts(const games::MixedProfile& x0,
                                              long prefix);

// Euler-Maruyama with decaying diffusion: X += F(X) dt + sqrt(g(t) dt) xi,
// g(t) = exp(-b t), full steps of dt plus a final partial step to t_end.
Trajectory run_diffusion(const flow::FieldHandle& F,
                         const std::vector<double>& x0, double b, double t_end,
                         double dt, std::uint64_t seed,
                         const RecordingSpec& rec = {});

// Piecewise-affine interpolation between stored knots; exact at knots.
std::vector<double> interpolate(const Trajectory& traj, double t);

// sup_{h in [0, T]} || interp(t+h) - Phi_h(interp(t)) ||_2 over a grid of
// step min(0.01, opts.step, local knot spacing at t); the flow is advanced
// incrementally with RK4 at the same step.
double apt_distance(const Trajectory& traj, const flow::FieldHandle& F,
                    double t, double T_horizon,
                    const flow::FlowOptions& opts = {});

// Deviation-rate bound cases: either a q-th moment bound or a subgaussian
// bound on the noise, each with its user-supplied constant B.
struct OmegaRate {
  enum class Case { MomentQ, Subgaussian };
  Case kind = Case::MomentQ;
  double q = 2;  // >= 2
  double B = 1;  // > 0
  int d = 1;     // state dimension (Subgaussian prefactor 2d)

  static OmegaRate moment_q(double q, double B);
  static OmegaRate subgaussian(double B, int d);
};

// Integrand r at a given interpolated step value:
// MomentQ: B gbar^{q/2} / delta^q; Subgaussian: 2 d exp(-B delta^2 / gbar).
double omega_rate_value(const OmegaRate& rate, double gamma_bar, double delta);

// First index k with gamma_k <= B delta^2 / 2.
long omega_k0(const OmegaRate& rate, const StepSchedule& sched, double delta);

// Integral of the rate over [t, infinity), evaluated exactly as segment
// sums of the piecewise-constant integrand; requires t >= tau(k0). The
// horizon argument is accepted for interface parity; the exposed rate
// cases do not depend on it.
double omega_bound(const OmegaRate& rate, const StepSchedule& sched, double t,
                   double delta, double T_horizon = 0);

struct NoiseStatsOptions {
  int buckets = 4;       // grid cells per tail-sum axis, capped at 8
  long min_bucket = 100; // samples required before a bucket is compared
  double lambda_minus = 0.0;  // configured spectral band on the tangent space
  double lambda_plus = 2.0;
};

struct BucketStat {
  long key = 0;          // flattened cell index
  long count = 0;
  double rel_frobenius = 0;  // ||Qhat - Q(mean state)||_F / ||Q||_F
  double min_eig = 0, max_eig = 0;  // Qhat restricted to the tangent space
  double mean_inf = 0;   // ||mean increment||_inf (martingale check aid)
};

struct NoiseStatsReport {
  long samples_total = 0;
  long samples_used = 0;
  int buckets_per_axis = 0;
  std::vector<BucketStat> buckets;
  double max_rel_frobenius = 0;
  double min_eig = std::numeric_limits<double>::infinity();
  double max_eig = -std::numeric_limits<double>::infinity();
  bool within_band = false;
};

// Buckets increments by the tail-sum image of their conditioning states on
// a fixed grid, compares empirical second moments against the analytic
// covariance at the bucket's mean state, and reports the tangent-space
// spectral range against the configured band. Buckets below min_bucket are
// skipped; if none qualifies the data is insufficient.
NoiseStatsReport noise_stats(const NoiseRecord& rec, const games::Game& g,
                             const std::vector<response::ChoiceSpec>& choices,
                             const NoiseStatsOptions& opts = {});

// Exact sampling covariance of U = delta_a - br(x) at x: block diagonal,
// per player diag(br) - br br^T.
Eigen::MatrixXd analytic_noise_covariance(
    const games::Game& g, const std::vector<response::ChoiceSpec>& choices,
    const games::MixedProfile& x);

// Orthonormal basis of the tangent space (zero block sums), block diagonal;
// dim x t_dim.
Eigen::MatrixXd tangent_basis(const std::vector<int>& action_counts);

}  // namespace sfp::stochastic
