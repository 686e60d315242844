#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sfp/errors.hpp"
#include "sfp/flow.hpp"
#include "sfp/response.hpp"
#include "sfp/rng.hpp"

using namespace sfp;
using flow::EquilibriumReport;
using flow::FieldHandle;
using flow::StabilityLabel;
using games::MixedProfile;
using response::BestResponseField;

namespace {

MixedProfile random_profile(const std::vector<int>& counts,
                            std::uint64_t stream) {
  std::vector<std::vector<double>> blocks;
  std::uint64_t c = 0;
  for (int m : counts) {
    std::vector<double> b(m);
    double s = 0;
    for (int k = 0; k < m; ++k) {
      b[k] = -std::log(rng::uniform01(321, stream, c++));
      s += b[k];
    }
    for (double& v : b) v /= s;
    blocks.push_back(std::move(b));
  }
  return MixedProfile(std::move(blocks));
}

MixedProfile sym_point(double p) {
  return MixedProfile({{1 - p, p}, {1 - p, p}});
}

}  // namespace

TEST_CASE("integrator reproduces linear decay") {
  FieldHandle decay;
  decay.dim = 1;
  decay.eval = [](const double* x, double* out) { out[0] = -x[0]; };
  const auto x1 = flow::flow(decay, {1.0}, 1.0);
  CHECK(std::abs(x1[0] - oracle::kInvE) <= 1e-8);
  const auto x0 = flow::flow(decay, {1.0}, 0.0);
  CHECK(x0[0] == 1.0);
}

TEST_CASE("integrator error drops at fourth order") {
  const BestResponseField f(oracle::coordination_game(), 0.5);
  const FieldHandle h = flow::make_pbr_field(f);
  const std::vector<double> x0 = MixedProfile::uniform({2, 2}).flat();
  flow::FlowOptions fine;
  fine.step = 0.01 / 16;
  const auto ref = flow::flow(h, x0, 1.0, fine);
  auto err = [&](double step) {
    flow::FlowOptions o;
    o.step = step;
    const auto y = flow::flow(h, x0, 1.0, o);
    double e = 0;
    for (int k = 0; k < 4; ++k) e = std::max(e, std::abs(y[k] - ref[k]));
    return e;
  };
  const double e1 = err(0.08);
  const double e2 = err(0.04);
  CHECK(e1 / e2 >= 12.0);
}

TEST_CASE("flow obeys the semigroup identity") {
  const BestResponseField f(oracle::coordination_game(), 0.5);
  const FieldHandle h = flow::make_pbr_field(f);
  const std::vector<double> x0 = random_profile({2, 2}, 77).flat();
  const auto two = flow::flow(h, x0, 2.0);
  const auto one = flow::flow(h, x0, 1.0);
  const auto chained = flow::flow(h, one, 1.0);
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(two[k] - chained[k]) <= 1e-7);
}

TEST_CASE("flow keeps the simplex invariant over long horizons") {
  const BestResponseField f(oracle::coordination_game(), 0.2);
  for (std::uint64_t s = 0; s < 100; ++s) {
    double drift = 0;
    const MixedProfile end =
        flow::flow_profile(f, random_profile({2, 2}, 4000 + s), 50.0, {},
                           &drift);
    CHECK(drift <= 50.0 * 1e-9);
    for (int i = 0; i < 2; ++i) {
      double sum = 0;
      for (double v : end.block(i)) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("flow rejects divergent fields") {
  FieldHandle blow;
  blow.dim = 1;
  blow.eval = [](const double* x, double* out) { out[0] = x[0] * x[0]; };
  CHECK_THROWS_AS(flow::flow(blow, {3.0}, 5.0), DivergenceError);
}

TEST_CASE("fixed-point solver finds each root from a nearby seed") {
  const BestResponseField f(oracle::coordination_game(), 0.2);
  const double roots[3] = {oracle::kRootLow02, oracle::kRootMid02,
                           oracle::kRootHigh02};
  const double seeds[3] = {0.1, 0.72, 0.9};
  for (int k = 0; k < 3; ++k) {
    const EquilibriumReport rep = flow::find_pne(f, sym_point(seeds[k]));
    CHECK(rep.residual <= 1e-10);
    if (k != 1)  // the damped pass slides off the repelling middle root
      CHECK(std::abs(rep.point.block(0)[1] - roots[k]) <= 1e-8);
  }

  // high temperature: every seed reaches the unique rest point near uniform
  const BestResponseField hot(oracle::coordination_game(), 10.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const EquilibriumReport rep =
        flow::find_pne(hot, random_profile({2, 2}, 6000 + s));
    CHECK(std::abs(rep.point.block(0)[1] - oracle::kRoot10) <= 1e-8);
    CHECK(std::abs(rep.point.block(0)[1] - 0.5) <= 0.1);
  }

  // a tolerance below float granularity cannot be met when the rest point
  // has a nonzero rounded residual; the failure carries the last iterate
  const games::Game skew({2, 2}, {{2, -1, -1, 1}, {-2, 1, 1, -1}});
  const BestResponseField spin(skew, 0.1);
  flow::SolveOptions tight;
  tight.tol = 1e-300;
  tight.max_iter = 1;
  try {
    flow::find_pne(spin, MixedProfile({{0.9, 0.1}, {0.9, 0.1}}), tight);
    CHECK(false);
  } catch (const NonConvergenceError& e) {
    CHECK(e.last_iterate.size() == 4);
  }
  CHECK_THROWS_AS(flow::find_pne(f, sym_point(0.5), {.tol = -1.0}),
                  DomainError);
}

TEST_CASE("equilibrium enumeration matches the bisection oracle") {
  for (double eta : {0.2, 0.31, 0.33, 0.5, 1.0, 10.0}) {
    const BestResponseField f(oracle::coordination_game(), eta);
    const auto reports = flow::enumerate_pne(f);
    const auto roots = oracle::sym_logit_roots(eta);
    REQUIRE(reports.size() == roots.size());
    for (std::size_t k = 0; k < roots.size(); ++k)
      CHECK(std::abs(reports[k].point.block(0)[1] - roots[k]) <= 1e-8);
    // catalog comes back sorted by the dominance order
    for (std::size_t k = 0; k + 1 < reports.size(); ++k)
      CHECK(games::t_leq(reports[k].point, reports[k + 1].point));
  }

  // a second pass with more seeds finds the same catalog
  const BestResponseField f(oracle::coordination_game(), 0.2);
  flow::EnumerateOptions wide;
  wide.seeds = 128;
  const auto again = flow::enumerate_pne(f, wide);
  CHECK(again.size() == 3);
}

TEST_CASE("stability labels follow the one-dimensional reduction") {
  // symmetric rest point p of the scalar map g: the tangent spectrum of the
  // product dynamic is {-1 - g'(p), -1 + g'(p)}, so instability is g' > 1
  for (double eta : {0.2, 0.5, 1.0, 10.0}) {
    const BestResponseField f(oracle::coordination_game(), eta);
    for (double p : oracle::sym_logit_roots(eta)) {
      const double gp = oracle::sym_logit_gprime(p, eta);
      const EquilibriumReport rep = flow::classify_stability(f, sym_point(p));
      double max_re = -1e9;
      for (const auto& z : rep.eigenvalues)
        max_re = std::max(max_re, z.real());
      CHECK(std::abs(max_re - (gp - 1.0)) <= 1e-6);
      CHECK(rep.label == (gp > 1.0 ? StabilityLabel::LinearlyUnstable
                                   : StabilityLabel::NotLinearlyUnstable));
    }
  }

  const BestResponseField f02(oracle::coordination_game(), 0.2);
  CHECK_THROWS_AS(flow::classify_stability(f02, sym_point(0.4)), DomainError);
}

TEST_CASE("spectrum labeling handles each sign case") {
  using flow::label_spectrum;
  CHECK(label_spectrum({{-1.0, 0.0}}) == StabilityLabel::NotLinearlyUnstable);
  CHECK(label_spectrum({{-0.5, 2.0}, {-0.5, -2.0}}) ==
        StabilityLabel::NotLinearlyUnstable);
  CHECK(label_spectrum({{0.2, 0.0}, {-1.0, 0.0}}) ==
        StabilityLabel::LinearlyUnstable);
  CHECK(label_spectrum({{0.0, 1.0}, {-1.0, 0.0}}) ==
        StabilityLabel::Marginal);
  CHECK(flow::to_string(StabilityLabel::LinearlyUnstable) ==
        std::string("LinearlyUnstable"));
  CHECK(flow::label_from_string("Marginal") == StabilityLabel::Marginal);
}

TEST_CASE("chart reduction of a block jacobian") {
  // two players with two actions: the chart drops each block's last row and
  // column against the block's own sum direction
  Eigen::MatrixXd J(4, 4);
  J << 1, 2, 3, 4,
       5, 6, 7, 8,
       9, 10, 11, 12,
       13, 14, 15, 16;
  const Eigen::MatrixXd R = flow::reduced_jacobian(J, {2, 2});
  REQUIRE(R.rows() == 2);
  // entry (a, b) = J(k_a, k_b) - J(k_a, last of block b)
  CHECK(R(0, 0) == doctest::Approx(1.0 - 2.0));
  CHECK(R(0, 1) == doctest::Approx(3.0 - 4.0));
  CHECK(R(1, 0) == doctest::Approx(9.0 - 10.0));
  CHECK(R(1, 1) == doctest::Approx(11.0 - 12.0));
}

TEST_CASE("cooperativity and irreducibility of small fields") {
  Eigen::MatrixXd A(2, 2);
  A << -1, 1, 1, -1;
  const FieldHandle coop = flow::make_linear_field(A);
  std::vector<std::vector<double>> pts;
  for (std::uint64_t s = 0; s < 50; ++s)
    pts.push_back({rng::uniform01(41, s, 0), rng::uniform01(41, s, 1)});
  const auto r1 = flow::check_cooperative_irreducible(coop, pts);
  CHECK(r1.cooperative);
  CHECK(r1.irreducible);
  CHECK(r1.min_offdiag == doctest::Approx(1.0));

  Eigen::MatrixXd D(2, 2);
  D << -1, 0, 0, -1;
  const auto r2 =
      flow::check_cooperative_irreducible(flow::make_linear_field(D), pts);
  CHECK(r2.cooperative);  // zero off-diagonals are still nonnegative
  CHECK_FALSE(r2.irreducible);

  Eigen::MatrixXd N(2, 2);
  N << -1, -0.5, 1, -1;
  const auto r3 =
      flow::check_cooperative_irreducible(flow::make_linear_field(N), pts);
  CHECK_FALSE(r3.cooperative);
  CHECK(r3.min_offdiag == doctest::Approx(-0.5));

  // the conjugate dynamic of a strictly supermodular game is cooperative
  // and irreducible on sampled interior points
  for (double eta : {0.2, 0.5}) {
    const BestResponseField f(oracle::coordination_game(), eta);
    const FieldHandle conj = flow::make_conjugate_field(f);
    const auto rc = flow::check_cooperative_irreducible(conj, pts);
    CHECK(rc.cooperative);
    CHECK(rc.irreducible);
  }
}

TEST_CASE("strong monotonicity along ordered starts") {
  Eigen::MatrixXd A(2, 2);
  A << -1, 1, 1, -1;
  const FieldHandle coop = flow::make_linear_field(A);
  const auto res = flow::check_strong_monotonicity(
      coop, {0.0, 0.0}, {1.0, 0.0}, {1.0, 5.0});
  CHECK(res.ordered_at_all_times);
  CHECK(res.min_margin_after_strict > 0);

  // the gap solves the same linear system, so the margin at time t is the
  // smaller entry of exp(At) applied to the initial gap
  const auto gap_flow = flow::flow(coop, {1.0, 0.0}, 1.0);
  CHECK(res.margins.size() == 2);
  CHECK(res.margins[0] ==
        doctest::Approx(std::min(gap_flow[0], gap_flow[1])).epsilon(1e-9));

  CHECK_THROWS_AS(
      flow::check_strong_monotonicity(coop, {0.5, 0.5}, {0.5, 0.5}, {1.0}),
      DomainError);
  const BestResponseField f(oracle::coordination_game(), 0.2);
  const FieldHandle conj = flow::make_conjugate_field(f);
  const auto rc = flow::check_strong_monotonicity(
      conj, {0.0, 0.0}, {1.0, 1.0}, {1.0, 5.0, 10.0});
  CHECK(rc.ordered_at_all_times);
  CHECK(rc.min_margin_after_strict > 0);
}

TEST_CASE("finite-difference jacobian matches the analytic field") {
  const BestResponseField f(oracle::coordination_game(), 0.5);
  const FieldHandle h = flow::make_pbr_field(f);
  const auto x = random_profile({2, 2}, 8123).flat();
  const Eigen::MatrixXd fd = flow::finite_difference_jacobian(h, x);
  const Eigen::MatrixXd an = f.jacobian_raw(x.data());
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      CHECK(std::abs(fd(r, c) - an(r, c)) <= 1e-5);
}

TEST_CASE("interior rest points are trapped by the extremal ones") {
  const BestResponseField f(oracle::coordination_game(), 0.2);
  const auto reports = flow::enumerate_pne(f);
  REQUIRE(reports.size() == 3);
  const auto lo = games::t_operator(reports.front().point).flat();
  const auto hi = games::t_operator(reports.back().point).flat();
  for (const auto& rep : reports) {
    const auto mid = games::t_operator(rep.point).flat();
    for (std::size_t k = 0; k < mid.size(); ++k) {
      CHECK(lo[k] <= mid[k] + 1e-8);
      CHECK(mid[k] <= hi[k] + 1e-8);
    }
  }
}
