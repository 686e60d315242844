#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sfp/response.hpp"

// Deterministic side: fixed-step RK4 flows, equilibrium location and
// stability classification on the tangent chart, cooperativity and
// irreducibility of a field's Jacobian, and order preservation along flows.

namespace sfp::flow {

inline constexpr double kEpsSpec = 1e-6;  // stability margin on Re(lambda)

struct FieldHandle {
  int dim = 0;
  std::function<void(const double*, double*)> eval;
  // optional analytic Jacobian (rows index outputs); empty if unavailable
  std::function<Eigen::MatrixXd(const double*)> jac;
  std::string name;
};

struct FlowOptions {
  double step = 0.01;              // in (0, 0.1]
  double divergence_bound = 1e6;   // inf-norm box; crossing it is an error
};

enum class StabilityLabel { NotLinearlyUnstable, Marginal, LinearlyUnstable };

const char* to_string(StabilityLabel label);
StabilityLabel label_from_string(const std::string& s);

struct EquilibriumReport {
  games::MixedProfile point;
  double residual = 0;  // ||br(x) - x||_inf
  std::vector<std::complex<double>> eigenvalues;  // tangent-chart spectrum
  StabilityLabel label = StabilityLabel::Marginal;
};

// max Re > eps -> LinearlyUnstable; max Re in [-eps, eps] -> Marginal;
// otherwise NotLinearlyUnstable.
StabilityLabel label_spectrum(const std::vector<std::complex<double>>& ev,
                              double eps = kEpsSpec);

// Fixed-step RK4 from x0 for time t >= 0: full steps of opts.step plus one
// final partial step so the endpoint lands exactly on t.
std::vector<double> flow(const FieldHandle& f, std::vector<double> x0,
                         double t, const FlowOptions& opts = {});

// Single RK4 step (used by incremental integrations).
void rk4_step(const FieldHandle& f, std::vector<double>& x, double h,
              std::vector<double>& k1, std::vector<double>& k2,
              std::vector<double>& k3, std::vector<double>& k4,
              std::vector<double>& tmp);

// Flow of the perturbed best-response field on profiles. The result is
// re-projected onto the simplex product; if drift_out is non-null it gets
// the pre-projection distance from the simplex (max block-sum deviation or
// negative mass).
games::MixedProfile flow_profile(const response::BestResponseField& f,
                                 const games::MixedProfile& x0, double t,
                                 const FlowOptions& opts = {},
                                 double* drift_out = nullptr);

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  double damping = 0.5;
};

// Damped best-response iteration x <- (1-damping) x + damping br(x) until
// the residual meets tol, then Newton polish on the tangent chart. If the
// damped iteration fails to converge (it repels from linearly unstable
// fixed points), a line-searched Newton runs from the same start. The
// report carries the tangent-chart spectrum at the solution.
EquilibriumReport find_pne(const response::BestResponseField& f,
                           const games::MixedProfile& x0,
                           const SolveOptions& opts = {});

struct EnumerateOptions {
  double tol = 1e-10;
  int seeds = 64;                 // random interior starts
  std::uint64_t seed = 0x5eed;    // stream for the random starts
  int max_iter = 10000;
};

// Multistart search: every pure vertex, `seeds` random interior points, a
// deterministic chart lattice when the chart dimension is small, and one
// midpoint-refinement round. Deduplicates within 10*tol (inf-norm) and
// sorts by the stacked tail-sum image, lexicographically (a linear
// extension of the stochastic-dominance order).
std::vector<EquilibriumReport> enumerate_pne(
    const response::BestResponseField& f, const EnumerateOptions& opts = {});

// Requires ||br(p) - p||_inf <= 1e-8. Spectrum of the field Jacobian
// restricted to the tangent chart (last coordinate of each block dropped);
// central finite differences stand in when no analytic Jacobian exists.
EquilibriumReport classify_stability(const response::BestResponseField& f,
                                     const games::MixedProfile& p,
                                     double eps_spec = kEpsSpec);

std::vector<std::complex<double>> chart_spectrum(
    const response::BestResponseField& f, const games::MixedProfile& p);

// J restricted to the chart that drops the last coordinate of each block:
// columns get J[:,l] - J[:,last(block l)], rows are the kept coordinates.
Eigen::MatrixXd reduced_jacobian(const Eigen::MatrixXd& J,
                                 const std::vector<int>& action_counts);

struct CoopCheckResult {
  bool cooperative = true;  // off-diagonal entries >= -tol at all samples
  bool irreducible = true;  // coupling graph strongly connected
  double min_offdiag = std::numeric_limits<double>::infinity();
  // witness when cooperative fails:
  int sample_index = -1;
  int row = -1, col = -1;
  double value = 0;
  // witness when irreducible fails: a strongly connected component with no
  // edge to the rest
  std::vector<int> stuck_component;
};

// Jacobian checks at the given sample points (analytic if available,
// otherwise central finite differences). Edges with |J_ij| > tol count as
// coupling; strong connectivity must hold at every sample.
CoopCheckResult check_cooperative_irreducible(
    const FieldHandle& f, const std::vector<std::vector<double>>& samples,
    double tol = 1e-9);

struct MonotonicityResult {
  bool ordered_at_all_times = true;
  int first_violation_index = -1;       // index into `times`
  std::vector<double> margins;          // min over coords of y(t)-x(t)
  double min_margin_after_strict = std::numeric_limits<double>::infinity();
};

// Integrates both starts and checks componentwise order at each requested
// time; times at or beyond t_strict must be strict in every coordinate
// with the given margin. Requires x0 <= y0 componentwise and x0 != y0.
MonotonicityResult check_strong_monotonicity(
    const FieldHandle& f, const std::vector<double>& x0,
    const std::vector<double>& y0, const std::vector<double>& times,
    const FlowOptions& opts = {}, double t_strict = 0.1,
    double strict_margin = 1e-10);

Eigen::MatrixXd finite_difference_jacobian(const FieldHandle& f,
                                           const std::vector<double>& x,
                                           double h = 1e-6);

FieldHandle make_pbr_field(const response::BestResponseField& f);
FieldHandle make_conjugate_field(const response::BestResponseField& f);
FieldHandle make_linear_field(const Eigen::MatrixXd& A);

}  // namespace sfp::flow
