// Acceptance suite: each selector checks one headline property end to end
// and prints a single [PASS]/[FAIL] line. Exit code 0 iff the check passed.
//
//   acceptance c1 | c2 | c2-demo | c3 | ... | c9 [cli-binary-path]
//
// The optional second argument (used by c8) points at the command-line
// binary so byte-reproducibility can be checked at the process level too.
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sfp/analysis.hpp"
#include "sfp/flow.hpp"
#include "sfp/io.hpp"
#include "sfp/response.hpp"
#include "sfp/rng.hpp"
#include "sfp/stochastic.hpp"

namespace fs = std::filesystem;
using namespace sfp;
using analysis::ExperimentConfig;
using flow::StabilityLabel;
using games::MixedProfile;
using response::BestResponseField;
using response::ChoiceSpec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<ChoiceSpec> logit2(double eta) {
  return std::vector<ChoiceSpec>(2, ChoiceSpec::logit(eta));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// C1: batches of plays from a uniform interior start settle on an
// equilibrium that is not linearly unstable.
Outcome c1() {
  ExperimentConfig cfg(oracle::coordination_game(), logit2(0.5));
  cfg.runs = 200;
  cfg.steps = 1000000;
  cfg.seed = 1001;
  cfg.tol_conv = 1e-2;
  const auto rep = analysis::convergence_experiment(cfg);
  long good = 0;
  for (const auto& o : rep.outcomes) {
    if (!o.ok || o.verdict.kind != analysis::RunVerdict::Kind::ConvergedTo)
      continue;
    if (o.verdict.distance > 1e-2) continue;
    if (rep.catalog.entries[o.verdict.pne_index].label ==
        StabilityLabel::LinearlyUnstable)
      continue;
    ++good;
  }
  Outcome r;
  r.pass = good >= 190;
  r.detail = "sfp convergence at eta=0.5: " + std::to_string(good) +
             "/200 runs converged to a not-linearly-unstable equilibrium "
             "within 1e-2 (need >= 190)";
  return r;
}

// C2: runs seeded next to the linearly unstable equilibrium of the same
// eta=0.5 game must almost never converge to it. The eta=0.5 catalog has a
// unique equilibrium and no linearly unstable entry, so the designated
// target does not exist; the check reports that state honestly instead of
// substituting a different game. c2-demo runs the identical protocol at
// eta=0.2, where the middle equilibrium is linearly unstable.
Outcome c2_protocol(double eta) {
  ExperimentConfig cfg(oracle::coordination_game(), logit2(eta));
  cfg.runs = 500;
  cfg.steps = 1000000;
  cfg.seed = 2002;
  cfg.tol_conv = 1e-2;
  const BestResponseField f(oracle::coordination_game(), eta);
  const auto cat = flow::enumerate_pne(f);
  const flow::EquilibriumReport* target = nullptr;
  for (const auto& e : cat)
    if (e.label == StabilityLabel::LinearlyUnstable) target = &e;
  Outcome r;
  if (!target) {
    std::ostringstream labels;
    for (const auto& e : cat) labels << " " << flow::to_string(e.label);
    r.pass = false;
    r.detail = "nonconvergence at eta=" + fmt(eta) + ": catalog holds " +
               std::to_string(cat.size()) + " entry(ies) (labels:" +
               labels.str() +
               ") and no linearly unstable entry, so the target of the "
               "escape protocol does not exist at this smoothing level "
               "(the three-equilibrium regime ends near eta=0.321); the "
               "identical protocol passes at eta=0.2 (selector c2-demo)";
    return r;
  }
  const auto rep = analysis::nonconvergence_experiment(cfg, *target, 1e-3);
  r.pass = rep.ci.hi <= 0.01;
  r.detail = "nonconvergence at eta=" + fmt(eta) + ": " +
             std::to_string(rep.to_target) +
             "/500 runs returned to the linearly unstable equilibrium; "
             "binomial upper bound " +
             fmt(rep.ci.hi) + " (need <= 0.01)";
  return r;
}

// C3: equilibrium enumeration against an independent scalar bisection.
Outcome c3() {
  const double etas[] = {0.2, 0.5, 1.0, 10.0};
  const std::size_t expect[] = {3, 1, 1, 1};
  Outcome r;
  r.pass = true;
  std::ostringstream d;
  d << "catalog vs bisection:";
  for (int k = 0; k < 4; ++k) {
    const auto roots = oracle::sym_logit_roots(etas[k]);
    const BestResponseField f(oracle::coordination_game(), etas[k]);
    const auto cat = flow::enumerate_pne(f);
    d << " eta=" << fmt(etas[k]) << " " << cat.size() << "/" << roots.size();
    if (roots.size() != expect[k] || cat.size() != expect[k]) {
      r.pass = false;
      continue;
    }
    for (std::size_t j = 0; j < roots.size(); ++j) {
      const auto x = cat[j].point.flat();
      if (std::abs(x[1] - roots[j]) > 1e-8 ||
          std::abs(x[3] - roots[j]) > 1e-8)
        r.pass = false;
    }
  }
  d << "; locations matched to 1e-8";
  r.detail = d.str();
  return r;
}

// C4: comparable starts stay comparable under the conjugate flow, and the
// conjugate Jacobian is cooperative everywhere sampled.
Outcome c4() {
  ExperimentConfig cfg(oracle::coordination_game(), logit2(0.2));
  cfg.seed = 404;
  const auto rep = analysis::order_experiment(cfg, 50, {1.0, 5.0, 10.0});
  bool margins_ok = true;
  double worst_margin = 1e300;
  for (double m : rep.min_margins) {
    worst_margin = std::min(worst_margin, m);
    margins_ok = margins_ok && m > 0.0;
  }
  const BestResponseField f(oracle::coordination_game(), 0.2);
  double min_offdiag = 1e300;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::vector<double> v{rng::uniform01(405, s, 0),
                                rng::uniform01(405, s, 1)};
    const Eigen::MatrixXd J = f.conjugate_jacobian(v);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        if (a != b) min_offdiag = std::min(min_offdiag, J(a, b));
  }
  Outcome r;
  r.pass = rep.preserved == 50 && margins_ok && min_offdiag >= -1e-9;
  r.detail = "order preservation: " + std::to_string(rep.preserved) +
             "/50 pairs ordered at t in {1,5,10}, smallest strict margin " +
             fmt(worst_margin) + ", smallest off-diagonal " +
             fmt(min_offdiag) + " (tol -1e-9)";
  return r;
}

// C5: every equilibrium lies between the least and greatest one in the
// tail-sum order, with the extremes found independently from the corners.
Outcome c5() {
  const BestResponseField f(oracle::coordination_game(), 0.2);
  const auto lo = flow::find_pne(f, MixedProfile::vertex({2, 2}, {0, 0}));
  const auto hi = flow::find_pne(f, MixedProfile::vertex({2, 2}, {1, 1}));
  const auto vlo = games::t_operator(lo.point).flat();
  const auto vhi = games::t_operator(hi.point).flat();
  const auto cat = flow::enumerate_pne(f);
  Outcome r;
  r.pass = cat.size() == 3;
  double worst = 0;
  for (const auto& e : cat) {
    const auto ve = games::t_operator(e.point).flat();
    for (std::size_t c = 0; c < ve.size(); ++c) {
      worst = std::max({worst, vlo[c] - ve[c], ve[c] - vhi[c]});
      if (ve[c] < vlo[c] - 1e-8 || ve[c] > vhi[c] + 1e-8) r.pass = false;
    }
  }
  r.detail = "interval trapping: " + std::to_string(cat.size()) +
             " equilibria lie between the extreme pair in the tail-sum "
             "order, worst excess " +
             fmt(worst) + " (tol 1e-8)";
  return r;
}

// C6: recorded play noise matches the analytic sampling covariance near
// the equilibrium, and the analytic covariance is positive definite on the
// tangent space.
Outcome c6() {
  stochastic::RecordingSpec rec;
  rec.record_noise = true;
  const auto run = stochastic::run_sfp(oracle::coordination_game(),
                                       logit2(0.5),
                                       MixedProfile::uniform({2, 2}), 120000,
                                       606, rec);
  stochastic::NoiseStatsOptions opts;
  opts.min_bucket = 100000;
  Outcome r;
  long count = 0;
  double rel = -1;
  try {
    const auto stats = stochastic::noise_stats(
        run.noise, oracle::coordination_game(), logit2(0.5), opts);
    for (const auto& b : stats.buckets) {
      if (b.count > count) {
        count = b.count;
        rel = b.rel_frobenius;
      }
    }
    r.pass = count >= 100000 && rel >= 0 && rel <= 0.10;
  } catch (const InsufficientDataError&) {
    r.pass = false;
  }

  const games::Game g = oracle::coordination_game();
  const Eigen::MatrixXd P = stochastic::tangent_basis({2, 2});
  double min_eig = 1e300;
  for (std::uint64_t s = 0; s < 100; ++s) {
    std::vector<std::vector<double>> blocks;
    for (int i = 0; i < 2; ++i) {
      const double p = 0.02 + 0.96 * rng::uniform01(607, s, i);
      blocks.push_back({1 - p, p});
    }
    const Eigen::MatrixXd Q = stochastic::analytic_noise_covariance(
        g, logit2(0.5), MixedProfile(blocks));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Eigen::MatrixXd(P.transpose() * Q * P));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  r.pass = r.pass && min_eig > 0;
  r.detail = "noise covariance: near-equilibrium bucket held " +
             std::to_string(count) +
             " increments with relative error " + fmt(rel) +
             " (need >= 100000 within 0.10); smallest tangent eigenvalue "
             "of the analytic covariance over 100 points " +
             fmt(min_eig) + " (need > 0)";
  return r;
}

// C7: the shadowing distance over a unit horizon shrinks along the run.
Outcome c7() {
  const games::Game g = oracle::coordination_game();
  const BestResponseField f(g, 0.5);
  const flow::FieldHandle h = flow::make_pbr_field(f);
  const long checkpoints[] = {1000, 10000, 100000};
  std::vector<std::vector<double>> dists(3);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    stochastic::RecordingSpec rec;
    rec.stride = 1;
    const auto run = stochastic::run_sfp(g, logit2(0.5),
                                         MixedProfile::uniform({2, 2}),
                                         301000, 700 + seed, rec);
    for (int k = 0; k < 3; ++k) {
      const std::size_t idx = static_cast<std::size_t>(checkpoints[k] - 1000);
      if (run.traj.step(idx) != checkpoints[k])
        return {false, "shadowing decay: checkpoint knot missing"};
      dists[k].push_back(
          stochastic::apt_distance(run.traj, h, run.traj.time(idx), 1.0));
    }
  }
  const double m0 = median(dists[0]), m1 = median(dists[1]),
               m2 = median(dists[2]);
  Outcome r;
  r.pass = m0 >= m1 && m1 >= m2 && m2 <= 0.02;
  r.detail = "shadowing decay: median unit-horizon distance over 30 seeds " +
             fmt(m0) + " -> " + fmt(m1) + " -> " + fmt(m2) +
             " at steps 1e3, 1e4, 1e5 (need nonincreasing, final <= 0.02)";
  return r;
}

// C8: integrator, Jacobians and coordinate maps hit their analytic
// targets, and simulations are byte-stable under a fixed seed.
Outcome c8(const char* cli_path) {
  std::ostringstream d;
  bool pass = true;

  flow::FieldHandle decay;
  decay.dim = 1;
  decay.eval = [](const double* x, double* out) { out[0] = -x[0]; };
  const double rk4 = std::abs(flow::flow(decay, {1.0}, 1.0)[0] - oracle::kInvE);
  pass = pass && rk4 <= 1e-8;
  d << "rk4 error " << fmt(rk4);

  const BestResponseField f(oracle::coordination_game(), 0.5);
  double jac_err = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::vector<double> x(4);
    for (int i = 0; i < 2; ++i) {
      const double p = 0.05 + 0.9 * rng::uniform01(808, s, i);
      x[2 * i] = 1 - p;
      x[2 * i + 1] = p;
    }
    const Eigen::MatrixXd J = f.jacobian_raw(x.data());
    const auto Jfd = oracle::fd_jacobian(
        [&](const std::vector<double>& z) {
          std::vector<double> out(4);
          f.field_raw(z.data(), out.data());
          return out;
        },
        x);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        jac_err = std::max(jac_err, std::abs(J(a, b) - Jfd[a][b]));
  }
  pass = pass && jac_err <= 1e-5;
  d << ", jacobian vs fd " << fmt(jac_err);

  double t_err = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    std::vector<std::vector<double>> blocks;
    for (int i = 0; i < 2; ++i) {
      const double u = rng::uniform01(809, s, 2 * i);
      const double v = rng::uniform01(809, s, 2 * i + 1) * (1 - u);
      blocks.push_back({u, v, 1 - u - v});
    }
    const MixedProfile p(blocks);
    const MixedProfile back = games::t_inverse(games::t_operator(p));
    t_err = std::max(t_err, MixedProfile::distance_inf(p, back));
  }
  pass = pass && t_err <= 1e-12;
  d << ", coordinate round trip " << fmt(t_err);

  stochastic::RecordingSpec rec;
  rec.stride = 1;
  rec.record_noise = true;
  auto run_once = [&] {
    return stochastic::run_sfp(oracle::coordination_game(), logit2(0.5),
                               MixedProfile::uniform({2, 2}), 20000, 909, rec);
  };
  const auto a = run_once();
  const auto b = run_once();
  bool bytes = a.traj.size() == b.traj.size() &&
               a.noise.increments == b.noise.increments;
  for (std::size_t k = 0; bytes && k < a.traj.size(); ++k) {
    bytes = a.traj.time(k) == b.traj.time(k);
    for (int c = 0; bytes && c < 4; ++c)
      bytes = a.traj.state(k)[c] == b.traj.state(k)[c];
  }
  pass = pass && bytes;
  d << ", library rerun " << (bytes ? "identical" : "DIFFERS");

  if (cli_path && *cli_path) {
    const fs::path dir =
        fs::temp_directory_path() /
        ("sfp-acceptance-c8-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path game = dir / "game.json";
    io::write_text_atomic(game.string(),
                          io::dump17(io::game_to_json(
                              oracle::coordination_game())));
    auto invoke = [&](const std::string& out) {
      const std::string cmd = std::string("\"") + cli_path +
                              "\" simulate-sfp --game \"" + game.string() +
                              "\" --eta 0.5 --steps 20000 --seed 909 "
                              "--record-noise --out \"" +
                              out + "\" > /dev/null 2>&1";
      return std::system(cmd.c_str());
    };
    const fs::path o1 = dir / "r1", o2 = dir / "r2";
    const int rc1 = invoke(o1.string());
    const int rc2 = invoke(o2.string());
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const bool cli_same =
        rc1 == 0 && rc2 == 0 &&
        slurp(o1 / "trajectory.csv") == slurp(o2 / "trajectory.csv") &&
        slurp(o1 / "noise.csv") == slurp(o2 / "noise.csv") &&
        !slurp(o1 / "trajectory.csv").empty();
    pass = pass && cli_same;
    d << ", cli rerun " << (cli_same ? "identical" : "DIFFERS");
    fs::remove_all(dir);
  } else {
    d << ", cli rerun skipped (no binary path given)";
  }

  return {pass, "numerical hygiene: " + d.str()};
}

// C9: the deviation-tail evaluator agrees with an independent long-double
// quadrature on the quartic-moment harmonic case.
Outcome c9() {
  const auto sched = stochastic::StepSchedule::harmonic();
  const auto rate = stochastic::OmegaRate::moment_q(4, 1);
  const double cases[][2] = {
      {sched.tau(1000), 0.5}, {3.0, 0.5}, {sched.tau(10000), 0.8}};
  Outcome r;
  r.pass = true;
  double worst_rel = 0;
  for (const auto& c : cases) {
    const double lib = stochastic::omega_bound(rate, sched, c[0], c[1]);
    const auto trap = oracle::omega_momentq_harmonic_trap(4, 1, c[1], c[0]);
    const double mid = 0.5 * (trap.lo + trap.hi);
    const double rel = std::abs(lib - mid) / mid;
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-6 || lib < trap.lo - 1e-6 * mid ||
        lib > trap.hi + 1e-6 * mid)
      r.pass = false;
  }
  r.detail =
      "deviation tail: worst relative gap to the quadrature oracle " +
      fmt(worst_rel) + " over 3 cases (need <= 1e-6)";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance c1|c2|c2-demo|c3|...|c9 [cli-binary]\n";
    return 2;
  }
  const std::string sel = argv[1];
  Outcome o;
  std::string tag = sel;
  try {
    if (sel == "c1") {
      o = c1();
    } else if (sel == "c2") {
      o = c2_protocol(0.5);
    } else if (sel == "c2-demo") {
      o = c2_protocol(0.2);
    } else if (sel == "c3") {
      o = c3();
    } else if (sel == "c4") {
      o = c4();
    } else if (sel == "c5") {
      o = c5();
    } else if (sel == "c6") {
      o = c6();
    } else if (sel == "c7") {
      o = c7();
    } else if (sel == "c8") {
      o = c8(argc > 2 ? argv[2] : nullptr);
    } else if (sel == "c9") {
      o = c9();
    } else {
      std::cerr << "unknown selector: " << sel << "\n";
      return 2;
    }
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("unexpected error: ") + e.what();
  }
  for (auto& ch : tag) ch = std::toupper(static_cast<unsigned char>(ch));
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << tag << " " << o.detail
            << "\n";
  return o.pass ? 0 : 1;
}
