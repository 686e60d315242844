#include "sfp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfp/io.hpp"
#include "sfp/rng.hpp"

namespace sfp::cli {

namespace {

using io::json;

struct Options {
  std::string game_path, choices_path, start_path, point_path, catalog_path;
  std::string traj_path, out_path;
  double eta = 0;
  bool has_eta = false;
  std::uint64_t seed = 0;
  long steps = 0;
  long runs = 0;
  int jobs = 1;
  long prefix = 1000;
  int window = 50;
  double tol = 0;
  bool conjugate = false;
  bool force = false;
  bool record_noise = false;
  long stride = 0;
  long noise_stride = 1;
  double budget_mb = 64.0;
  double time = 0;
  double step = 0.01;
  double dt = 0.01;
  double b = 1.0;
  double t = 0;
  long at_step = 0;
  double horizon = 1.0;
  double delta = 0;
  double radius = 1e-3;
  int target_index = -1;
  long pairs = 50;
  int samples = 100;
  std::string field_kind = "conjugate";
  std::string schedule = "harmonic";
  std::string noise_kind = "none";
  std::string rate_case;
  double q = 2;
  double B = 1;
  int d = 1;
  std::vector<long> apt_at;
  std::vector<double> times{1, 5, 10};
};

games::Game load_game(const Options& o) {
  if (o.game_path.empty()) throw ConfigError("--game is required");
  return io::game_from_json(io::load_json_file(o.game_path));
}

std::vector<response::ChoiceSpec> load_choices(const Options& o,
                                               const games::Game& g) {
  if (!o.choices_path.empty())
    return io::choices_from_json(io::load_json_file(o.choices_path),
                                 g.players());
  if (o.has_eta) {
    if (!(o.eta > 0) || !std::isfinite(o.eta))
      throw ConfigError("--eta must be positive and finite");
    return std::vector<response::ChoiceSpec>(
        g.players(), response::ChoiceSpec::logit(o.eta));
  }
  throw ConfigError("provide --choices FILE or --eta VALUE");
}

games::MixedProfile load_start(const Options& o, const games::Game& g) {
  if (o.start_path.empty())
    return games::MixedProfile::uniform(g.action_counts());
  return io::profile_from_json(io::load_json_file(o.start_path),
                               g.action_counts());
}

json choices_to_json(const std::vector<response::ChoiceSpec>& choices) {
  json arr = json::array();
  for (const auto& c : choices) {
    json e;
    if (c.is_logit()) {
      e["kind"] = "logit";
      e["eta"] = c.eta();
    } else {
      e["kind"] = "custom";
      e["name"] = c.name();
    }
    arr.push_back(std::move(e));
  }
  return arr;
}

stochastic::StepSchedule parse_schedule(const std::string& s) {
  if (s == "harmonic") return stochastic::StepSchedule::harmonic();
  if (s.rfind("power:", 0) == 0) {
    try {
      return stochastic::StepSchedule::power_law(std::stod(s.substr(6)));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("bad --schedule: ") + e.what());
    } catch (const std::exception&) {
      throw ConfigError("bad --schedule exponent: " + s);
    }
  }
  throw ConfigError("--schedule must be harmonic or power:ALPHA");
}

stochastic::NoiseFn parse_noise(const std::string& s, int dim) {
  if (s == "none") return stochastic::zero_noise(dim);
  auto amount = [&](const char* what) {
    try {
      const double a = std::stod(s.substr(s.find(':') + 1));
      if (!(a > 0) || !std::isfinite(a))
        throw ConfigError(std::string(what) + " must be positive");
      return a;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad --noise amount: " + s);
    }
  };
  if (s.rfind("uniform:", 0) == 0)
    return stochastic::iid_uniform_noise(dim, amount("--noise amplitude"));
  if (s.rfind("gauss:", 0) == 0)
    return stochastic::iid_gaussian_noise(dim, amount("--noise sigma"));
  throw ConfigError("--noise must be none, uniform:A, or gauss:S");
}

stochastic::RecordingSpec recording_from(const Options& o) {
  stochastic::RecordingSpec rec;
  rec.stride = o.stride;
  rec.record_noise = o.record_noise;
  rec.noise_stride = o.noise_stride;
  rec.memory_budget_mb = o.budget_mb;
  return rec;
}

void emit(const Options& o, const std::string& text) {
  if (o.out_path.empty())
    std::cout << text;
  else
    io::write_text_atomic(o.out_path, text);
}

void write_run_artifacts(const std::string& dir,
                         const stochastic::Trajectory& traj,
                         const stochastic::NoiseRecord* noise) {
  if (dir.empty()) throw ConfigError("--out DIR is required");
  io::write_text_atomic(dir + "/run.json", io::dump17(io::run_config_json(traj)));
  io::write_text_atomic(dir + "/trajectory.csv", io::trajectory_csv(traj));
  if (noise && noise->size() > 0)
    io::write_text_atomic(dir + "/noise.csv", io::noise_csv(*noise));
}

// interior Dirichlet(1) profile on the seed's given stream
games::MixedProfile random_profile(const games::Game& g, std::uint64_t seed,
                                   std::uint64_t stream) {
  std::vector<std::vector<double>> blocks;
  std::uint64_t c = 0;
  for (int m : g.action_counts()) {
    std::vector<double> b(m);
    double sum = 0;
    for (int k = 0; k < m; ++k) {
      b[k] = -std::log(rng::uniform01(seed, stream, c++));
      sum += b[k];
    }
    for (double& v : b) v /= sum;
    blocks.push_back(std::move(b));
  }
  return games::MixedProfile(std::move(blocks));
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  ~Timer() {
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::fprintf(stderr, "wall-clock: %.3f s\n", s);
  }
};

json verdict_to_json(const analysis::RunOutcome& out) {
  json j;
  j["run"] = out.run;
  j["ok"] = out.ok;
  if (!out.ok) {
    j["error"] = out.error;
    return j;
  }
  const analysis::RunVerdict& v = out.verdict;
  j["verdict"] = analysis::to_string(v.kind);
  if (v.kind == analysis::RunVerdict::Kind::ConvergedTo) {
    j["pne_index"] = v.pne_index;
    j["distance"] = v.distance;
  }
  j["window_diameter"] = v.window_diameter;
  if (!v.apt_samples.empty()) {
    json apt = json::array();
    for (const auto& [t, dist] : v.apt_samples)
      apt.push_back(json::array({t, dist}));
    j["apt"] = std::move(apt);
  }
  return j;
}

json ci_to_json(const analysis::ConfidenceInterval& ci) {
  return json::array({ci.lo, ci.hi});
}

json experiment_config_json(const games::Game& g,
                            const std::vector<response::ChoiceSpec>& choices,
                            const analysis::ExperimentConfig& cfg) {
  json j;
  j["game"] = io::game_to_json(g);
  j["choices"] = choices_to_json(choices);
  j["runs"] = cfg.runs;
  j["steps"] = cfg.steps;
  j["seed"] = cfg.seed;
  j["window"] = cfg.window;
  j["tol_conv"] = cfg.tol_conv;
  j["prefix"] = cfg.prefix;
  j["jobs"] = cfg.jobs;
  if (cfg.start) j["start"] = io::profile_to_json(*cfg.start);
  if (!cfg.apt_at_steps.empty()) j["apt_at_steps"] = cfg.apt_at_steps;
  return j;
}

analysis::ExperimentConfig build_experiment_config(
    const Options& o, const games::Game& g,
    const std::vector<response::ChoiceSpec>& choices) {
  analysis::ExperimentConfig cfg(g, choices);
  cfg.runs = o.runs;
  cfg.steps = o.steps;
  cfg.seed = o.seed;
  cfg.window = o.window;
  if (o.tol > 0) cfg.tol_conv = o.tol;
  cfg.prefix = o.prefix;
  cfg.jobs = o.jobs;
  cfg.force = o.force;
  cfg.apt_at_steps = o.apt_at;
  if (!o.start_path.empty()) cfg.start = load_start(o, g);
  if (!o.catalog_path.empty()) {
    analysis::Catalog cat;
    cat.entries = io::catalog_from_json(io::load_json_file(o.catalog_path),
                                        g.action_counts());
    cfg.catalog = std::move(cat);
  }
  return cfg;
}

std::string basins_csv(const analysis::ExperimentReport& rep, long runs) {
  std::string out = "pne_index,label,count,frequency\n";
  for (std::size_t e = 0; e < rep.catalog.entries.size(); ++e) {
    out += std::to_string(e);
    out += ",";
    out += flow::to_string(rep.catalog.entries[e].label);
    out += ",";
    out += std::to_string(rep.basin_counts[e]);
    out += ",";
    out += io::format17(static_cast<double>(rep.basin_counts[e]) /
                        static_cast<double>(runs));
    out += "\n";
  }
  return out;
}

std::string apt_decay_csv(const analysis::ExperimentReport& rep) {
  std::size_t n_samples = 0;
  for (const auto& out : rep.outcomes)
    if (out.ok) n_samples = std::max(n_samples, out.verdict.apt_samples.size());
  std::string csv = "t,median,q25,q75,runs\n";
  for (std::size_t k = 0; k < n_samples; ++k) {
    std::vector<double> vals;
    double t = 0;
    for (const auto& out : rep.outcomes) {
      if (!out.ok || k >= out.verdict.apt_samples.size()) continue;
      t = out.verdict.apt_samples[k].first;
      vals.push_back(out.verdict.apt_samples[k].second);
    }
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    auto quantile = [&](double p) {
      const double pos = p * static_cast<double>(vals.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, vals.size() - 1);
      return vals[lo] + (pos - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
    };
    csv += io::format17(t) + "," + io::format17(quantile(0.5)) + "," +
           io::format17(quantile(0.25)) + "," + io::format17(quantile(0.75)) +
           "," + std::to_string(vals.size()) + "\n";
  }
  return csv;
}

int cmd_check_game(const Options& o) {
  const games::Game g = load_game(o);
  const games::SupermodularityResult res = games::is_supermodular(g, true);
  if (res.strict)
    std::cout << "supermodular: strict\n";
  else if (res.supermodular)
    std::cout << "supermodular: weak\n";
  else
    std::cout << "supermodular: no\n";
  json j;
  j["supermodular"] = res.supermodular;
  j["strict"] = res.strict;
  j["min_gap"] = res.min_gap;
  j["near_tie"] = res.near_tie;
  if (res.witness) {
    json w;
    w["player"] = res.witness->player;
    w["a_hi"] = res.witness->a_hi;
    w["a_lo"] = res.witness->a_lo;
    w["other"] = res.witness->other;
    w["b_hi"] = res.witness->b_hi;
    w["b_lo"] = res.witness->b_lo;
    w["rest"] = res.witness->rest;
    w["gap"] = res.witness->gap;
    j["witness"] = std::move(w);
  }
  if (!res.supermodular) std::cout << io::dump17(j);
  if (!o.out_path.empty()) io::write_text_atomic(o.out_path, io::dump17(j));
  return 0;
}

int cmd_solve_pne(const Options& o, bool all) {
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  if (all) {
    flow::EnumerateOptions opts;
    if (o.tol > 0) opts.tol = o.tol;
    opts.seed = o.seed ? o.seed : opts.seed;
    emit(o, io::dump17(io::catalog_to_json(flow::enumerate_pne(f, opts))));
  } else {
    flow::SolveOptions opts;
    if (o.tol > 0) opts.tol = o.tol;
    emit(o, io::dump17(io::report_to_json(flow::find_pne(f, load_start(o, g),
                                                         opts))));
  }
  return 0;
}

int cmd_classify(const Options& o) {
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  if (o.point_path.empty()) throw ConfigError("--point FILE is required");
  const games::MixedProfile p = io::profile_from_json(
      io::load_json_file(o.point_path), g.action_counts());
  emit(o, io::dump17(io::report_to_json(flow::classify_stability(f, p))));
  return 0;
}

int cmd_check_coop(const Options& o) {
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  const bool conj = o.field_kind == "conjugate";
  if (!conj && o.field_kind != "pbr")
    throw ConfigError("--field must be conjugate or pbr");
  if (o.samples < 1) throw ConfigError("--samples must be >= 1");
  const flow::FieldHandle field =
      conj ? flow::make_conjugate_field(f) : flow::make_pbr_field(f);
  std::vector<std::vector<double>> pts;
  for (int s = 0; s < o.samples; ++s) {
    const games::MixedProfile p = random_profile(g, o.seed, 0xc00b + s);
    pts.push_back(conj ? games::t_operator(p).flat() : p.flat());
  }
  const flow::CoopCheckResult res =
      flow::check_cooperative_irreducible(field, pts);
  json j;
  j["field"] = o.field_kind;
  j["samples"] = o.samples;
  j["cooperative"] = res.cooperative;
  j["irreducible"] = res.irreducible;
  j["min_offdiag"] = res.min_offdiag;
  if (!res.cooperative) {
    j["sample_index"] = res.sample_index;
    j["row"] = res.row;
    j["col"] = res.col;
    j["value"] = res.value;
  }
  if (!res.irreducible) j["stuck_component"] = res.stuck_component;
  emit(o, io::dump17(j));
  return 0;
}

int cmd_flow(const Options& o) {
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  if (!(o.time >= 0) || !std::isfinite(o.time))
    throw ConfigError("--time must be nonnegative and finite");
  if (!(o.step > 0)) throw ConfigError("--step must be positive");
  const flow::FieldHandle field =
      o.conjugate ? flow::make_conjugate_field(f) : flow::make_pbr_field(f);
  const games::MixedProfile start = load_start(o, g);
  std::vector<double> x =
      o.conjugate ? games::t_operator(start).flat() : start.flat();

  stochastic::Trajectory traj(static_cast<int>(x.size()), 0);
  traj.field_name = field.name;
  double t = 0;
  long k = 0;
  traj.append(k++, t, x.data());
  flow::FlowOptions fopts;
  fopts.step = o.step;
  while (t < o.time - 1e-12) {
    const double h = std::min(o.step, o.time - t);
    x = flow::flow(field, std::move(x), h, fopts);
    t += h;
    traj.append(k++, t, x.data());
  }
  emit(o, io::trajectory_csv(traj));
  return 0;
}

int cmd_simulate_sfp(const Options& o) {
  const games::Game g = load_game(o);
  const std::vector<response::ChoiceSpec> choices = load_choices(o, g);
  if (o.steps < 1) throw ConfigError("--steps must be >= 1");
  Timer timer;
  const stochastic::RunResult res =
      stochastic::run_sfp(g, choices, load_start(o, g), o.steps, o.seed,
                          recording_from(o), o.prefix);
  write_run_artifacts(o.out_path, res.traj, &res.noise);
  return 0;
}

int cmd_simulate_rm(const Options& o) {
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  if (o.steps < 1) throw ConfigError("--steps must be >= 1");
  const flow::FieldHandle field =
      o.conjugate ? flow::make_conjugate_field(f) : flow::make_pbr_field(f);
  const games::MixedProfile start = load_start(o, g);
  const std::vector<double> x0 =
      o.conjugate ? games::t_operator(start).flat() : start.flat();
  Timer timer;
  const stochastic::RunResult res = stochastic::run_robbins_monro(
      field, x0, parse_noise(o.noise_kind, static_cast<int>(x0.size())),
      parse_schedule(o.schedule), o.steps, o.seed, recording_from(o));
  write_run_artifacts(o.out_path, res.traj, &res.noise);
  return 0;
}

int cmd_simulate_diffusion(const Options& o) {
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  if (!(o.time > 0)) throw ConfigError("--time must be positive");
  const flow::FieldHandle field = flow::make_pbr_field(f);
  Timer timer;
  const stochastic::Trajectory traj =
      stochastic::run_diffusion(field, load_start(o, g).flat(), o.b, o.time,
                                o.dt, o.seed, recording_from(o));
  write_run_artifacts(o.out_path, traj, nullptr);
  return 0;
}

int cmd_apt_metric(const Options& o) {
  if (o.traj_path.empty()) throw ConfigError("--traj FILE is required");
  const games::Game g = load_game(o);
  const response::BestResponseField f(g, load_choices(o, g));
  const flow::FieldHandle field =
      o.conjugate ? flow::make_conjugate_field(f) : flow::make_pbr_field(f);
  std::ifstream in(o.traj_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + o.traj_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const stochastic::Trajectory traj = io::trajectory_from_csv(buf.str());
  const double dist = stochastic::apt_distance(traj, field, o.t, o.horizon);
  json j;
  j["t"] = o.t;
  j["horizon"] = o.horizon;
  j["distance"] = dist;
  emit(o, io::dump17(j));
  return 0;
}

int cmd_omega_bound(const Options& o) {
  stochastic::OmegaRate rate;
  if (o.rate_case == "momentq")
    rate = stochastic::OmegaRate::moment_q(o.q, o.B);
  else if (o.rate_case == "subgaussian")
    rate = stochastic::OmegaRate::subgaussian(o.B, o.d);
  else
    throw ConfigError("--case must be momentq or subgaussian");
  if (!(o.delta > 0)) throw ConfigError("--delta must be positive");
  const stochastic::StepSchedule sched = parse_schedule(o.schedule);
  double t = o.t;
  if (o.at_step > 0) {
    if (o.t != 0) throw ConfigError("give either --t or --at-step, not both");
    t = sched.tau(o.at_step);
  }
  const long k0 = stochastic::omega_k0(rate, sched, o.delta);
  const double omega =
      stochastic::omega_bound(rate, sched, t, o.delta, o.horizon);
  json j;
  j["case"] = o.rate_case;
  if (o.rate_case == "momentq") j["q"] = o.q;
  j["B"] = o.B;
  if (o.rate_case == "subgaussian") j["d"] = o.d;
  j["schedule"] = o.schedule;
  j["t"] = t;
  j["delta"] = o.delta;
  j["k0"] = k0;
  j["tau_k0"] = sched.tau(k0);
  j["omega"] = omega;
  emit(o, io::dump17(j));
  return 0;
}

int cmd_experiment(const Options& o) {
  const games::Game g = load_game(o);
  const std::vector<response::ChoiceSpec> choices = load_choices(o, g);
  if (o.out_path.empty()) throw ConfigError("--out DIR is required");
  const analysis::ExperimentConfig cfg =
      build_experiment_config(o, g, choices);
  Timer timer;
  const analysis::ExperimentReport rep = analysis::convergence_experiment(cfg);

  json j;
  j["config"] = experiment_config_json(g, choices, cfg);
  j["catalog"] = io::catalog_to_json(rep.catalog.entries)["equilibria"];
  json runs = json::array();
  for (const auto& out : rep.outcomes) runs.push_back(verdict_to_json(out));
  j["runs"] = std::move(runs);
  json agg;
  agg["basin_counts"] = rep.basin_counts;
  agg["converged_stable"] = rep.converged_stable;
  agg["converged_unstable"] = rep.converged_unstable;
  agg["stalled"] = rep.stalled;
  agg["undecided"] = rep.undecided;
  agg["errored"] = rep.errored;
  agg["frac_stable"] = rep.frac_stable;
  agg["frac_unstable"] = rep.frac_unstable;
  agg["ci_stable"] = ci_to_json(rep.ci_stable);
  agg["ci_unstable"] = ci_to_json(rep.ci_unstable);
  agg["monotone_violations"] = rep.monotone_violations;
  j["aggregate"] = std::move(agg);

  io::write_text_atomic(o.out_path + "/report.json", io::dump17(j));
  io::write_text_atomic(o.out_path + "/basins.csv", basins_csv(rep, cfg.runs));
  io::write_text_atomic(o.out_path + "/apt_decay.csv", apt_decay_csv(rep));
  return 0;
}

int cmd_nonconv_experiment(const Options& o) {
  const games::Game g = load_game(o);
  const std::vector<response::ChoiceSpec> choices = load_choices(o, g);
  if (o.out_path.empty()) throw ConfigError("--out DIR is required");
  analysis::ExperimentConfig cfg = build_experiment_config(o, g, choices);
  if (!cfg.catalog) {
    analysis::Catalog cat;
    cat.entries =
        flow::enumerate_pne(response::BestResponseField(g, choices));
    cfg.catalog = std::move(cat);
  }
  const auto& entries = cfg.catalog->entries;
  int target = o.target_index;
  if (target < 0) {
    for (std::size_t e = 0; e < entries.size(); ++e)
      if (entries[e].label == flow::StabilityLabel::LinearlyUnstable) {
        if (target >= 0)
          throw ConfigError(
              "several linearly unstable equilibria; pick --target-index");
        target = static_cast<int>(e);
      }
    if (target < 0)
      throw DomainError("the catalog holds no linearly unstable equilibrium");
  }
  if (target >= static_cast<int>(entries.size()))
    throw ConfigError("--target-index out of range");
  Timer timer;
  const analysis::NonconvergenceReport rep =
      analysis::nonconvergence_experiment(cfg, entries[target], o.radius);

  json j;
  json cfg_j = experiment_config_json(g, choices, cfg);
  cfg_j["start_radius"] = o.radius;
  j["config"] = std::move(cfg_j);
  j["catalog"] = io::catalog_to_json(rep.catalog.entries)["equilibria"];
  j["target_index"] = rep.target_index;
  json runs = json::array();
  for (const auto& out : rep.outcomes) runs.push_back(verdict_to_json(out));
  j["runs"] = std::move(runs);
  json agg;
  agg["to_target"] = rep.to_target;
  agg["errored"] = rep.errored;
  agg["fraction"] = rep.fraction;
  agg["ci"] = ci_to_json(rep.ci);
  j["aggregate"] = std::move(agg);
  io::write_text_atomic(o.out_path + "/report.json", io::dump17(j));
  return 0;
}

int cmd_order_experiment(const Options& o) {
  const games::Game g = load_game(o);
  const std::vector<response::ChoiceSpec> choices = load_choices(o, g);
  analysis::ExperimentConfig cfg(g, choices);
  cfg.seed = o.seed;
  cfg.force = o.force;
  Timer timer;
  const analysis::OrderReport rep =
      analysis::order_experiment(cfg, o.pairs, o.times);
  json j;
  j["pairs"] = rep.pairs;
  j["preserved"] = rep.preserved;
  j["preservation_rate"] = rep.preservation_rate;
  j["check_times"] = rep.check_times;
  j["min_margins"] = rep.min_margins;
  emit(o, io::dump17(j));
  return 0;
}

void add_game_options(CLI::App* cmd, Options& o, bool with_choices = true) {
  cmd->add_option("--game", o.game_path, "game file (json: players, actions, payoffs)")
      ->required();
  if (with_choices) {
    cmd->add_option("--choices", o.choices_path,
                    "choice rules file (json: kind, eta | name; object or per-player array)");
    cmd->add_option("--eta", o.eta, "shorthand: logit with this eta for every player")
        ->check(CLI::PositiveNumber);
  }
}

void add_recording_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--stride", o.stride, "record every k-th step (0 = auto)");
  cmd->add_option("--window", o.window, "always keep this many final iterates");
  cmd->add_flag("--record-noise", o.record_noise, "record noise increments");
  cmd->add_option("--noise-stride", o.noise_stride,
                  "record every k-th noise increment");
  cmd->add_option("--budget-mb", o.budget_mb, "recording memory budget (MB)");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "stochastic fictitious play and stochastic approximation toolkit"};
  app.require_subcommand(1);

  Options o;
  bool solve_all = false;
  int rc = 0;
  // callbacks fire inside parse(); --eta presence is read off the subcommand
  auto wire = [&rc, &o](CLI::App* cmd, int (*fn)(const Options&)) {
    cmd->callback([cmd, fn, &rc, &o] {
      const CLI::Option* eta = cmd->get_option_no_throw("--eta");
      o.has_eta = eta && eta->count() > 0;
      rc = fn(o);
    });
  };

  CLI::App* c = app.add_subcommand(
      "check-game", "supermodularity check; game json on --game");
  add_game_options(c, o, false);
  c->add_option("--out", o.out_path, "also write the result json here");
  wire(c, &cmd_check_game);

  c = app.add_subcommand(
      "solve-pne", "equilibrium search; game + choices json");
  add_game_options(c, o);
  c->add_option("--start", o.start_path, "start profile file (json: blocks)");
  c->add_flag("--all", solve_all, "enumerate the whole catalog");
  c->add_option("--tol", o.tol, "solver tolerance");
  c->add_option("--seed", o.seed, "seed for the random starts of --all");
  c->add_option("--out", o.out_path, "output file (default stdout)");
  {
    CLI::App* cmd = c;
    c->callback([cmd, &rc, &o, &solve_all] {
      const CLI::Option* eta = cmd->get_option_no_throw("--eta");
      o.has_eta = eta && eta->count() > 0;
      rc = cmd_solve_pne(o, solve_all);
    });
  }

  c = app.add_subcommand(
      "classify", "stability of a given point; game + choices + profile json");
  add_game_options(c, o);
  c->add_option("--point", o.point_path, "profile file (json: blocks)")
      ->required();
  c->add_option("--out", o.out_path, "output file (default stdout)");
  wire(c, &cmd_classify);

  c = app.add_subcommand(
      "check-coop",
      "cooperativity and irreducibility of the field Jacobian at random points");
  add_game_options(c, o);
  c->add_option("--field", o.field_kind, "conjugate (default) or pbr");
  c->add_option("--samples", o.samples, "number of sample points");
  c->add_option("--seed", o.seed, "seed for the sample points");
  c->add_option("--out", o.out_path, "output file (default stdout)");
  wire(c, &cmd_check_coop);

  c = app.add_subcommand(
      "flow", "integrate the dynamic; emits trajectory csv");
  add_game_options(c, o);
  c->add_option("--start", o.start_path, "start profile file (json: blocks)");
  c->add_option("--time", o.time, "integration time")->required();
  c->add_option("--step", o.step, "rk4 step");
  c->add_flag("--conjugate", o.conjugate, "integrate in tail-sum coordinates");
  c->add_option("--out", o.out_path, "output file (default stdout)");
  wire(c, &cmd_flow);

  c = app.add_subcommand(
      "simulate-sfp",
      "stochastic fictitious play run; writes trajectory.csv + run.json");
  add_game_options(c, o);
  c->add_option("--start", o.start_path, "start profile file (json: blocks)");
  c->add_option("--steps", o.steps, "number of plays")->required();
  c->add_option("--seed", o.seed, "run seed");
  c->add_option("--prefix", o.prefix, "synthetic history length");
  c->add_option("--out", o.out_path, "output directory")->required();
  add_recording_options(c, o);
  wire(c, &cmd_simulate_sfp);

  c = app.add_subcommand(
      "simulate-rm",
      "Robbins-Monro run on the field; writes trajectory.csv + run.json");
  add_game_options(c, o);
  c->add_option("--start", o.start_path, "start profile file (json: blocks)");
  c->add_option("--steps", o.steps, "number of iterations")->required();
  c->add_option("--seed", o.seed, "run seed");
  c->add_option("--schedule", o.schedule, "harmonic (default) or power:ALPHA");
  c->add_option("--noise", o.noise_kind, "none, uniform:A, or gauss:S");
  c->add_flag("--conjugate", o.conjugate, "iterate in tail-sum coordinates");
  c->add_option("--out", o.out_path, "output directory")->required();
  add_recording_options(c, o);
  wire(c, &cmd_simulate_rm);

  c = app.add_subcommand(
      "simulate-diffusion",
      "Euler-Maruyama with decaying diffusion; writes trajectory.csv");
  add_game_options(c, o);
  c->add_option("--start", o.start_path, "start profile file (json: blocks)");
  c->add_option("--time", o.time, "end time")->required();
  c->add_option("--dt", o.dt, "step size");
  c->add_option("--b", o.b, "diffusion decay rate in exp(-b t)");
  c->add_option("--seed", o.seed, "run seed");
  c->add_option("--out", o.out_path, "output directory")->required();
  add_recording_options(c, o);
  wire(c, &cmd_simulate_diffusion);

  c = app.add_subcommand(
      "apt-metric",
      "shadowing distance of a recorded trajectory against the flow");
  add_game_options(c, o);
  c->add_option("--traj", o.traj_path, "trajectory csv (t,x_0,...)")
      ->required();
  c->add_option("--t", o.t, "evaluation time")->required();
  c->add_option("--horizon", o.horizon, "shadowing horizon");
  c->add_flag("--conjugate", o.conjugate,
              "trajectory lives in tail-sum coordinates");
  c->add_option("--out", o.out_path, "output file (default stdout)");
  wire(c, &cmd_apt_metric);

  c = app.add_subcommand(
      "omega-bound", "deviation-rate tail bound for a step schedule");
  c->add_option("--case", o.rate_case, "momentq or subgaussian")->required();
  c->add_option("--q", o.q, "moment order (momentq)");
  c->add_option("--B", o.B, "noise bound constant");
  c->add_option("--d", o.d, "state dimension (subgaussian)");
  c->add_option("--schedule", o.schedule, "harmonic (default) or power:ALPHA");
  c->add_option("--t", o.t, "start time");
  c->add_option("--at-step", o.at_step,
                "start at the schedule time of this step");
  c->add_option("--delta", o.delta, "deviation radius")->required();
  c->add_option("--horizon", o.horizon, "horizon (accepted for parity)");
  c->add_option("--out", o.out_path, "output file (default stdout)");
  wire(c, &cmd_omega_bound);

  c = app.add_subcommand(
      "experiment",
      "batch of independent runs; writes report.json, basins.csv, apt_decay.csv");
  add_game_options(c, o);
  c->add_option("--runs", o.runs, "number of runs")->required();
  c->add_option("--steps", o.steps, "plays per run")->required();
  c->add_option("--seed", o.seed, "batch seed");
  c->add_option("--jobs", o.jobs, "worker threads");
  c->add_option("--window", o.window, "stored iterates in the verdict window");
  c->add_option("--tol", o.tol, "convergence tolerance");
  c->add_option("--prefix", o.prefix, "synthetic history length");
  c->add_option("--start", o.start_path, "start profile file (json: blocks)");
  c->add_option("--catalog", o.catalog_path, "equilibrium catalog file");
  c->add_option("--apt-at", o.apt_at,
                "iterate indices sampled for the shadowing decay curve");
  c->add_flag("--force", o.force, "run on games that are not strictly supermodular");
  c->add_option("--out", o.out_path, "output directory")->required();
  wire(c, &cmd_experiment);

  c = app.add_subcommand(
      "nonconv-experiment",
      "runs started near a linearly unstable equilibrium; writes report.json");
  add_game_options(c, o);
  c->add_option("--runs", o.runs, "number of runs")->required();
  c->add_option("--steps", o.steps, "plays per run")->required();
  c->add_option("--seed", o.seed, "batch seed");
  c->add_option("--jobs", o.jobs, "worker threads");
  c->add_option("--window", o.window, "stored iterates in the verdict window");
  c->add_option("--tol", o.tol, "convergence tolerance");
  c->add_option("--prefix", o.prefix, "synthetic history length");
  c->add_option("--radius", o.radius, "start displacement radius");
  c->add_option("--target-index", o.target_index,
                "catalog index of the target (default: the unstable entry)");
  c->add_option("--catalog", o.catalog_path, "equilibrium catalog file");
  c->add_flag("--force", o.force, "run on games that are not strictly supermodular");
  c->add_option("--out", o.out_path, "output directory")->required();
  wire(c, &cmd_nonconv_experiment);

  c = app.add_subcommand(
      "order-experiment",
      "order preservation of the conjugate flow on random ordered pairs");
  add_game_options(c, o);
  c->add_option("--pairs", o.pairs, "number of ordered pairs");
  c->add_option("--times", o.times, "check times (increasing)");
  c->add_option("--seed", o.seed, "sampling seed");
  c->add_flag("--force", o.force, "run on games that are not strictly supermodular");
  c->add_option("--out", o.out_path, "output file (default stdout)");
  wire(c, &cmd_order_experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: DivergenceError: " << e.what() << "\n";
    return 1;
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: NonConvergenceError: " << e.what() << "\n";
    return 1;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: InsufficientDataError: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: DomainError: " << e.what() << "\n";
    return 1;
  } catch (const StructuralError& e) {
    std::cerr << "error: StructuralError: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace sfp::cli
