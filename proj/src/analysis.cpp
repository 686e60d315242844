#include "sfp/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <thread>

#include "sfp/rng.hpp"

namespace sfp::analysis {

namespace {

constexpr std::uint64_t kRunSeedStream = 0x5f9a11ull;
constexpr std::uint64_t kPerturbGauss = 0xd17ull;
constexpr std::uint64_t kPerturbRadius = 0xd18ull;
constexpr std::uint64_t kPairStream = 0x0adeull << 20;

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw DomainError("need at least one run");
  if (cfg.steps < 1) throw DomainError("need at least one step");
  if (cfg.window < 10) throw DomainError("convergence window must be >= 10");
  if (!(cfg.tol_conv > 0))
    throw DomainError("convergence tolerance must be positive");
  if (cfg.prefix < 1) throw DomainError("start prefix must be >= 1");
  if (cfg.jobs < 1) throw DomainError("jobs must be >= 1");
}

void require_strictly_supermodular(const ExperimentConfig& cfg) {
  if (cfg.force) return;
  const games::SupermodularityResult sup =
      games::is_supermodular(cfg.game, true);
  if (!sup.strict)
    throw DomainError(
        "game is not strictly supermodular; set force to run anyway");
}

Catalog resolve_catalog(const ExperimentConfig& cfg) {
  if (cfg.catalog) {
    if (cfg.catalog->entries.empty()) throw DomainError("empty catalog");
    return *cfg.catalog;
  }
  const response::BestResponseField f(cfg.game, cfg.choices);
  Catalog cat;
  cat.entries = flow::enumerate_pne(f);
  if (cat.entries.empty()) throw DomainError("no equilibria found");
  return cat;
}

void parallel_runs(long runs, int jobs, const std::function<void(long)>& body) {
  jobs = static_cast<int>(std::min<long>(jobs, runs));
  if (jobs <= 1) {
    for (long r = 0; r < runs; ++r) body(r);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int j = 0; j < jobs; ++j)
    workers.emplace_back([&] {
      for (long r = next.fetch_add(1); r < runs; r = next.fetch_add(1))
        body(r);
    });
  for (auto& w : workers) w.join();
}

std::vector<double> t_image_flat(const games::MixedProfile& p) {
  return games::t_operator(p).flat();
}

bool geq_with_slack(const std::vector<double>& a, const std::vector<double>& b,
                    double slack) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] < b[k] - slack) return false;
  return true;
}

// Dense recording around each shadowing sample so interpolation error does
// not pollute the metric; the harmonic timescale reaches tau_n + 1 by
// iterate ceil(e * n).
stochastic::RecordingSpec experiment_recording(const ExperimentConfig& cfg) {
  stochastic::RecordingSpec rec;
  rec.window = std::max<long>(2L * cfg.window, 256);
  for (long n : cfg.apt_at_steps) {
    if (n < cfg.prefix || n > cfg.prefix + cfg.steps)
      throw DomainError("shadowing sample index outside the run");
    const long hi = static_cast<long>(std::ceil(2.7182818284590452 * 1.002 *
                                                static_cast<double>(n))) +
                    4;
    rec.dense_ranges.emplace_back(std::max(cfg.prefix, n - 2), hi);
  }
  return rec;
}

}  // namespace

const char* to_string(RunVerdict::Kind kind) {
  switch (kind) {
    case RunVerdict::Kind::ConvergedTo:
      return "ConvergedTo";
    case RunVerdict::Kind::Stalled:
      return "Stalled";
    case RunVerdict::Kind::Undecided:
      return "Undecided";
  }
  return "?";
}

RunVerdict detect_limit(const stochastic::Trajectory& traj,
                        const std::vector<flow::EquilibriumReport>& catalog,
                        int W, double tol) {
  if (catalog.empty()) throw DomainError("empty catalog");
  if (W < 2) throw DomainError("window must be >= 2");
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  const std::size_t n = traj.size();
  if (n < 2 * static_cast<std::size_t>(W))
    throw DomainError("trajectory too short for the window");

  const int d = traj.dim();
  RunVerdict v;
  v.final_state = traj.state_vec(n - 1);
  double diam = 0;
  for (int c = 0; c < d; ++c) {
    double lo = traj.state(n - W)[c], hi = lo;
    for (std::size_t k = n - W + 1; k < n; ++k) {
      lo = std::min(lo, traj.state(k)[c]);
      hi = std::max(hi, traj.state(k)[c]);
    }
    diam = std::max(diam, hi - lo);
  }
  v.window_diameter = diam;

  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < catalog.size(); ++e) {
    const std::vector<double> p = catalog[e].point.flat();
    double dist = 0;
    for (int c = 0; c < d; ++c)
      dist = std::max(dist, std::abs(p[c] - v.final_state[c]));
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(e);
    }
  }

  if (diam <= tol && best_dist <= 10 * tol) {
    v.kind = RunVerdict::Kind::ConvergedTo;
    v.pne_index = best;
    v.distance = best_dist;
  } else if (diam <= tol) {
    v.kind = RunVerdict::Kind::Stalled;
  } else {
    v.kind = RunVerdict::Kind::Undecided;
  }
  return v;
}

ConfidenceInterval clopper_pearson(long successes, long trials,
                                   double confidence) {
  if (trials < 1) throw DomainError("need at least one trial");
  if (successes < 0 || successes > trials)
    throw DomainError("successes out of range");
  if (!(confidence > 0) || !(confidence < 1))
    throw DomainError("confidence must lie in (0, 1)");
  const double a = (1.0 - confidence) / 2.0;
  ConfidenceInterval ci;
  if (successes > 0) {
    boost::math::beta_distribution<double> lo(
        static_cast<double>(successes),
        static_cast<double>(trials - successes + 1));
    ci.lo = boost::math::quantile(lo, a);
  }
  if (successes < trials) {
    boost::math::beta_distribution<double> hi(
        static_cast<double>(successes + 1),
        static_cast<double>(trials - successes));
    ci.hi = boost::math::quantile(hi, 1.0 - a);
  }
  return ci;
}

ExperimentReport convergence_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  require_strictly_supermodular(cfg);

  ExperimentReport rep;
  rep.catalog = resolve_catalog(cfg);
  const auto& entries = rep.catalog.entries;
  rep.basin_counts.assign(entries.size(), 0);

  const games::MixedProfile start =
      cfg.start ? *cfg.start
                : games::MixedProfile::uniform(cfg.game.action_counts());
  const stochastic::RecordingSpec rec = experiment_recording(cfg);
  const response::BestResponseField field(cfg.game, cfg.choices);
  const flow::FieldHandle handle = flow::make_pbr_field(field);

  // shadowing sample times on the harmonic scale
  std::vector<double> apt_times;
  {
    const stochastic::StepSchedule sched = stochastic::StepSchedule::harmonic();
    for (long n : cfg.apt_at_steps) apt_times.push_back(sched.tau(n));
  }

  rep.outcomes.assign(cfg.runs, RunOutcome{});
  parallel_runs(cfg.runs, cfg.jobs, [&](long r) {
    RunOutcome& out = rep.outcomes[r];
    out.run = r;
    try {
      const std::uint64_t run_seed = rng::key(cfg.seed, kRunSeedStream, r);
      const stochastic::RunResult res = stochastic::run_sfp(
          cfg.game, cfg.choices, start, cfg.steps, run_seed, rec, cfg.prefix);
      out.verdict = detect_limit(res.traj, entries, cfg.window, cfg.tol_conv);
      for (std::size_t k = 0; k < apt_times.size(); ++k)
        out.verdict.apt_samples.emplace_back(
            apt_times[k],
            stochastic::apt_distance(res.traj, handle, apt_times[k], 1.0));
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  });

  // realized start (after frequency rounding) for the trapping check
  const games::MixedProfile realized = [&] {
    const auto counts = stochastic::initial_counts(start, cfg.prefix);
    std::vector<std::vector<double>> blocks;
    for (const auto& c : counts) {
      std::vector<double> b;
      for (long v : c)
        b.push_back(static_cast<double>(v) / static_cast<double>(cfg.prefix));
      blocks.push_back(std::move(b));
    }
    return games::MixedProfile(std::move(blocks));
  }();
  const std::vector<double> start_t = t_image_flat(realized);
  std::vector<std::vector<double>> entry_t;
  for (const auto& e : entries) entry_t.push_back(t_image_flat(e.point));

  for (const RunOutcome& out : rep.outcomes) {
    if (!out.ok) {
      ++rep.errored;
      continue;
    }
    const RunVerdict& v = out.verdict;
    switch (v.kind) {
      case RunVerdict::Kind::ConvergedTo: {
        ++rep.basin_counts[v.pne_index];
        const bool unstable = entries[v.pne_index].label ==
                              flow::StabilityLabel::LinearlyUnstable;
        (unstable ? rep.converged_unstable : rep.converged_stable) += 1;
        for (std::size_t e = 0; e < entries.size(); ++e) {
          if (entries[e].label != flow::StabilityLabel::LinearlyUnstable)
            continue;
          const bool above = geq_with_slack(start_t, entry_t[e], 1e-9);
          const bool below = geq_with_slack(entry_t[e], start_t, 1e-9);
          const auto& limit_t = entry_t[v.pne_index];
          if (above && !geq_with_slack(limit_t, entry_t[e], 1e-9))
            ++rep.monotone_violations;
          if (below && !geq_with_slack(entry_t[e], limit_t, 1e-9))
            ++rep.monotone_violations;
        }
        break;
      }
      case RunVerdict::Kind::Stalled:
        ++rep.stalled;
        break;
      case RunVerdict::Kind::Undecided:
        ++rep.undecided;
        break;
    }
  }
  if (10 * rep.errored > cfg.runs)
    throw DomainError("more than 10% of runs errored");

  rep.frac_stable =
      static_cast<double>(rep.converged_stable) / static_cast<double>(cfg.runs);
  rep.frac_unstable = static_cast<double>(rep.converged_unstable) /
                      static_cast<double>(cfg.runs);
  rep.ci_stable = clopper_pearson(rep.converged_stable, cfg.runs);
  rep.ci_unstable = clopper_pearson(rep.converged_unstable, cfg.runs);
  return rep;
}

NonconvergenceReport nonconvergence_experiment(
    const ExperimentConfig& cfg, const flow::EquilibriumReport& target,
    double start_radius) {
  validate_config(cfg);
  require_strictly_supermodular(cfg);
  if (target.label != flow::StabilityLabel::LinearlyUnstable)
    throw DomainError("target equilibrium is not linearly unstable");
  if (!(start_radius >= 0)) throw DomainError("start radius must be >= 0");

  NonconvergenceReport rep;
  rep.catalog = resolve_catalog(cfg);
  const auto& entries = rep.catalog.entries;
  {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double dist =
          games::MixedProfile::distance_inf(entries[e].point, target.point);
      if (dist < best) {
        best = dist;
        rep.target_index = static_cast<int>(e);
      }
    }
    if (best > 1e-6) throw DomainError("target not present in the catalog");
  }

  const auto& counts = cfg.game.action_counts();
  const int d = cfg.game.dim();
  const int tdim = cfg.game.t_dim();
  const std::vector<double> center = target.point.flat();
  const games::MixedProfile target_point = entries[rep.target_index].point;

  rep.outcomes.assign(cfg.runs, RunOutcome{});
  parallel_runs(cfg.runs, cfg.jobs, [&](long r) {
    RunOutcome& out = rep.outcomes[r];
    out.run = r;
    try {
      const std::uint64_t run_seed = rng::key(cfg.seed, kRunSeedStream, r);
      std::vector<double> x = center;
      if (start_radius > 0) {
        std::vector<double> dir(d);
        for (int c = 0; c < d; ++c)
          dir[c] = rng::normal(run_seed, kPerturbGauss, c);
        int off = 0;  // project onto zero block sums (the tangent space)
        for (int m : counts) {
          double mean = 0;
          for (int k = 0; k < m; ++k) mean += dir[off + k];
          mean /= m;
          for (int k = 0; k < m; ++k) dir[off + k] -= mean;
          off += m;
        }
        double norm = 0;
        for (int c = 0; c < d; ++c) norm += dir[c] * dir[c];
        norm = std::sqrt(norm);
        if (norm > 1e-300) {
          const double u = rng::uniform01(run_seed, kPerturbRadius, 0);
          const double radius =
              start_radius * std::pow(u, 1.0 / static_cast<double>(tdim));
          for (int c = 0; c < d; ++c) x[c] += radius / norm * dir[c];
        }
        off = 0;  // clip and renormalize each block
        for (int m : counts) {
          double sum = 0;
          for (int k = 0; k < m; ++k) {
            if (x[off + k] < 0) x[off + k] = 0;
            sum += x[off + k];
          }
          for (int k = 0; k < m; ++k) x[off + k] /= sum;
          off += m;
        }
      }
      const games::MixedProfile start = games::MixedProfile::from_flat(counts, x);
      const stochastic::RunResult res =
          stochastic::run_sfp(cfg.game, cfg.choices, start, cfg.steps, run_seed,
                              experiment_recording(cfg), cfg.prefix);
      out.verdict = detect_limit(res.traj, entries, cfg.window, cfg.tol_conv);
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  });

  for (const RunOutcome& out : rep.outcomes) {
    if (!out.ok) {
      ++rep.errored;
      continue;
    }
    if (out.verdict.kind == RunVerdict::Kind::ConvergedTo &&
        games::MixedProfile::distance_inf(
            entries[out.verdict.pne_index].point, target_point) <= 1e-6)
      ++rep.to_target;
  }
  if (10 * rep.errored > cfg.runs)
    throw DomainError("more than 10% of runs errored");
  rep.fraction =
      static_cast<double>(rep.to_target) / static_cast<double>(cfg.runs);
  rep.ci = clopper_pearson(rep.to_target, cfg.runs);
  return rep;
}

OrderReport order_experiment(const ExperimentConfig& cfg, long pairs,
                             const std::vector<double>& check_times) {
  validate_config(cfg);
  require_strictly_supermodular(cfg);
  if (pairs < 1) throw DomainError("need at least one pair");
  if (check_times.empty()) throw DomainError("need at least one check time");
  for (std::size_t k = 0; k < check_times.size(); ++k) {
    if (!(check_times[k] > 0)) throw DomainError("check times must be positive");
    if (k > 0 && check_times[k] <= check_times[k - 1])
      throw DomainError("check times must increase");
  }

  const response::BestResponseField field(cfg.game, cfg.choices);
  const flow::FieldHandle conj = flow::make_conjugate_field(field);
  const auto& counts = cfg.game.action_counts();
  const int tdim = cfg.game.t_dim();

  OrderReport rep;
  rep.pairs = pairs;
  rep.check_times = check_times;
  rep.min_margins.assign(check_times.size(),
                         std::numeric_limits<double>::infinity());

  auto random_t_image = [&](std::uint64_t stream) {
    std::vector<double> v(tdim);
    int coord = 0, pos = 0;
    for (int m : counts) {
      std::vector<double> block(m);
      double sum = 0;
      for (int k = 0; k < m; ++k) {
        block[k] = -std::log(rng::uniform01(cfg.seed, stream, coord++));
        sum += block[k];
      }
      for (double& b : block) b /= sum;
      games::t_block_raw(block.data(), m, v.data() + pos);
      pos += m - 1;
    }
    return v;
  };

  for (long p = 0; p < pairs; ++p) {
    std::vector<double> lo, hi;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const std::uint64_t base = kPairStream + 2 * (100 * p + attempt);
      const std::vector<double> a = random_t_image(base);
      const std::vector<double> b = random_t_image(base + 1);
      lo.resize(tdim);
      hi.resize(tdim);
      double gap = 0;
      for (int c = 0; c < tdim; ++c) {
        lo[c] = std::min(a[c], b[c]);
        hi[c] = std::max(a[c], b[c]);
        gap = std::max(gap, hi[c] - lo[c]);
      }
      if (gap > 1e-9) break;
      lo.clear();
    }
    if (lo.empty()) throw DomainError("could not sample a distinct pair");

    std::vector<double> x = lo, y = hi;
    double t_prev = 0;
    bool ordered = true;
    for (std::size_t k = 0; k < check_times.size(); ++k) {
      const double dt = check_times[k] - t_prev;
      x = flow::flow(conj, std::move(x), dt);
      y = flow::flow(conj, std::move(y), dt);
      t_prev = check_times[k];
      double margin = std::numeric_limits<double>::infinity();
      for (int c = 0; c < tdim; ++c) margin = std::min(margin, y[c] - x[c]);
      rep.min_margins[k] = std::min(rep.min_margins[k], margin);
      if (margin < 0) ordered = false;
    }
    if (ordered) ++rep.preserved;
  }
  rep.preservation_rate =
      static_cast<double>(rep.preserved) / static_cast<double>(rep.pairs);
  return rep;
}

}  // namespace sfp::analysis
