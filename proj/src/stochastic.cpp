#include "sfp/stochastic.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "sfp/rng.hpp"

namespace sfp::stochastic {

namespace {

constexpr long kTauCacheMax = 1L << 17;        // beyond: closed form
constexpr long kCustomIndexMax = 1L << 22;     // custom schedules: hard cap
constexpr std::uint64_t kUniformStream = 0x55aa0000ull;
constexpr std::uint64_t kGaussStream = 0x66bb0000ull;

}  // namespace

StepSchedule StepSchedule::harmonic() {
  StepSchedule s;
  s.kind_ = Kind::Harmonic;
  s.alpha_ = 1.0;
  return s;
}

StepSchedule StepSchedule::power_law(double alpha) {
  if (!(alpha > 0.5) || alpha > 1.0)
    throw DomainError("power-law exponent must lie in (0.5, 1]");
  StepSchedule s;
  s.kind_ = Kind::PowerLaw;
  s.alpha_ = alpha;
  return s;
}

StepSchedule StepSchedule::custom(std::function<double(long)> gamma) {
  if (!gamma) throw DomainError("custom schedule needs a callable");
  StepSchedule s;
  s.kind_ = Kind::Custom;
  s.custom_ = std::move(gamma);
  // Probe positivity and monotonicity on a sparse index ladder.
  double prev = std::numeric_limits<double>::infinity();
  auto probe = [&](long n) {
    const double g = s.custom_(n);
    if (!std::isfinite(g) || g <= 0)
      throw DomainError("custom schedule must be positive and finite");
    if (g > prev * (1.0 + 1e-12))
      throw DomainError("custom schedule must be nonincreasing");
    prev = g;
  };
  for (long n = 1; n <= 64; ++n) probe(n);
  for (long n = 128; n <= (1L << 30); n *= 2) probe(n);
  return s;
}

std::string StepSchedule::name() const {
  switch (kind_) {
    case Kind::Harmonic:
      return "harmonic";
    case Kind::PowerLaw:
      return "power:" + std::to_string(alpha_);
    case Kind::Custom:
      return "custom";
  }
  return "?";
}

double StepSchedule::gamma(long n) const {
  if (n < 1) throw DomainError("schedule index must be >= 1");
  switch (kind_) {
    case Kind::Harmonic:
      return 1.0 / static_cast<double>(n);
    case Kind::PowerLaw:
      return std::pow(static_cast<double>(n), -alpha_);
    case Kind::Custom: {
      const double g = custom_(n);
      if (!std::isfinite(g) || g <= 0)
        throw DomainError("custom schedule returned a bad step");
      return g;
    }
  }
  return 0;
}

double StepSchedule::tau_closed_form(long n) const {
  // Euler-Maclaurin partial-sum asymptotics; error far below 1e-15 at the
  // cache boundary and shrinking with n.
  const double x = static_cast<double>(n);
  if (alpha_ == 1.0) {
    return std::log(x) + boost::math::constants::euler<double>() +
           1.0 / (2.0 * x) - 1.0 / (12.0 * x * x) +
           1.0 / (120.0 * x * x * x * x);
  }
  const double a = alpha_;
  return boost::math::zeta(a) + std::pow(x, 1.0 - a) / (1.0 - a) +
         std::pow(x, -a) / 2.0 - a * std::pow(x, -a - 1.0) / 12.0 +
         a * (a + 1.0) * (a + 2.0) * std::pow(x, -a - 3.0) / 720.0;
}

double StepSchedule::tau(long n) const {
  if (n < 0) throw DomainError("negative schedule index");
  if (n == 0) return 0;
  const long cap = kind_ == Kind::Custom ? kCustomIndexMax : kTauCacheMax;
  if (n <= cap) {
    if (static_cast<long>(tau_cache_.size()) <= n) {
      if (tau_cache_.empty()) tau_cache_.push_back(0.0);
      for (long k = static_cast<long>(tau_cache_.size()); k <= n; ++k)
        tau_cache_.push_back(tau_cache_[k - 1] + gamma(k));
    }
    return tau_cache_[n];
  }
  if (kind_ == Kind::Custom)
    throw DomainError("custom schedule index beyond the supported range");
  return tau_closed_form(n);
}

long StepSchedule::segment(double t) const {
  if (!(t >= 0)) throw DomainError("time must be nonnegative");
  if (t < tau(1)) return 0;
  const long hard = kind_ == Kind::Custom ? kCustomIndexMax : (1L << 40);
  long lo = 1, hi = 2;
  while (tau(hi) <= t) {
    lo = hi;
    if (hi >= hard) throw DomainError("time beyond the schedule's range");
    hi = std::min(hard, hi * 2);
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (tau(mid) <= t ? lo : hi) = mid;
  }
  return lo;
}

double StepSchedule::gamma_bar(double t) const { return gamma(segment(t) + 1); }

// ---- trajectories ----

Trajectory::Trajectory(int dim, long start_index) : dim_(dim), start_(start_index) {
  if (dim <= 0) throw StructuralError("trajectory dimension must be positive");
}

std::vector<double> Trajectory::state_vec(std::size_t k) const {
  const double* p = state(k);
  return std::vector<double>(p, p + dim_);
}

double Trajectory::first_time() const {
  if (times_.empty()) throw DomainError("empty trajectory");
  return times_.front();
}

double Trajectory::last_time() const {
  if (times_.empty()) throw DomainError("empty trajectory");
  return times_.back();
}

std::size_t Trajectory::locate(double t) const {
  if (times_.empty() || t < first_time() || t > last_time())
    throw DomainError("time outside the recorded range");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

void Trajectory::append(long step, double t, const double* x) {
  if (!times_.empty() && t <= times_.back())
    throw StructuralError("trajectory times must increase");
  for (int c = 0; c < dim_; ++c)
    if (!std::isfinite(x[c]))
      throw DivergenceError("non-finite state at step " + std::to_string(step));
  steps_.push_back(step);
  times_.push_back(t);
  states_.insert(states_.end(), x, x + dim_);
}

namespace {

struct Recorder {
  long stride = 1;
  long start = 0;
  long end = 0;
  long tail_from = 0;
  std::vector<std::pair<long, long>> ranges;

  bool want(long n) const {
    if (n == start || n == end || n >= tail_from) return true;
    if ((n - start) % stride == 0) return true;
    for (const auto& r : ranges)
      if (n >= r.first && n <= r.second) return true;
    return false;
  }
};

Recorder make_recorder(const RecordingSpec& rec, long start, long n_steps,
                       int dim) {
  if (n_steps < 0) throw DomainError("step count must be nonnegative");
  if (rec.stride < 0) throw DomainError("stride must be nonnegative");
  if (rec.window < 2) throw DomainError("recording window must be >= 2");
  Recorder r;
  r.start = start;
  r.end = start + n_steps;
  r.stride = rec.stride > 0 ? rec.stride : std::max<long>(1, n_steps >> 16);
  r.tail_from = std::max(start, r.end - rec.window + 1);
  for (auto [a, b] : rec.dense_ranges) {
    if (a > b) throw DomainError("dense range must be ordered");
    a = std::max(a, start);
    b = std::min(b, r.end);
    if (a <= b) r.ranges.emplace_back(a, b);
  }
  std::sort(r.ranges.begin(), r.ranges.end());

  double knots = static_cast<double>(n_steps) / r.stride + rec.window + 2;
  for (const auto& rr : r.ranges) knots += static_cast<double>(rr.second - rr.first + 1);
  double bytes = knots * (dim + 2) * 8.0;
  if (rec.record_noise) {
    if (rec.noise_stride < 1) throw DomainError("noise stride must be >= 1");
    bytes += (static_cast<double>(n_steps) / rec.noise_stride + 1) *
             (2.0 * dim + 1) * 8.0;
  }
  if (bytes > rec.memory_budget_mb * 1048576.0)
    throw DomainError("recording would exceed the memory budget; increase stride");
  return r;
}

}  // namespace

// ---- noise generators ----

NoiseFn zero_noise(int dim) {
  if (dim < 1) throw DomainError("noise dimension must be >= 1");
  return [dim](std::uint64_t, long, const double*, double* out) {
    std::fill(out, out + dim, 0.0);
  };
}

NoiseFn iid_uniform_noise(int dim, double amplitude) {
  if (dim < 1) throw DomainError("noise dimension must be >= 1");
  if (!(amplitude >= 0)) throw DomainError("noise amplitude must be >= 0");
  return [dim, amplitude](std::uint64_t seed, long n, const double*,
                          double* out) {
    for (int c = 0; c < dim; ++c)
      out[c] = amplitude *
               (2.0 * rng::uniform01(seed, kUniformStream + c, n) - 1.0);
  };
}

NoiseFn iid_gaussian_noise(int dim, double sigma) {
  if (dim < 1) throw DomainError("noise dimension must be >= 1");
  if (!(sigma >= 0)) throw DomainError("noise sigma must be >= 0");
  return [dim, sigma](std::uint64_t seed, long n, const double*, double* out) {
    for (int c = 0; c < dim; ++c)
      out[c] = sigma * rng::normal(seed, kGaussStream + c, n);
  };
}

// ---- simulators ----

RunResult run_robbins_monro(const flow::FieldHandle& F,
                            const std::vector<double>& x0,
                            const NoiseFn& noise, const StepSchedule& sched,
                            long n_steps, std::uint64_t seed,
                            const RecordingSpec& rec, long start_index) {
  if (static_cast<int>(x0.size()) != F.dim)
    throw StructuralError("start state dimension mismatch");
  if (start_index < 0) throw DomainError("start index must be nonnegative");
  const Recorder R = make_recorder(rec, start_index, n_steps, F.dim);

  Trajectory traj(F.dim, start_index);
  traj.field_name = F.name;
  traj.schedule_name = sched.name();
  traj.seed = seed;
  traj.total_steps = n_steps;
  traj.stride_used = R.stride;
  NoiseRecord nr;
  nr.dim = F.dim;

  std::vector<double> x = x0, fx(F.dim), u(F.dim);
  double t = sched.tau(start_index);
  traj.append(start_index, t, x.data());
  for (long n = start_index; n < start_index + n_steps; ++n) {
    F.eval(x.data(), fx.data());
    noise(seed, n + 1, x.data(), u.data());
    if (rec.record_noise && (n - start_index) % rec.noise_stride == 0) {
      nr.steps.push_back(n + 1);
      nr.states.insert(nr.states.end(), x.begin(), x.end());
      nr.increments.insert(nr.increments.end(), u.begin(), u.end());
    }
    const double g = sched.gamma(n + 1);
    for (int c = 0; c < F.dim; ++c) {
      x[c] += g * (fx[c] + u[c]);
      if (!std::isfinite(x[c]))
        throw DivergenceError("non-finite state at step " +
                              std::to_string(n + 1));
    }
    t += g;
    if (R.want(n + 1)) traj.append(n + 1, t, x.data());
  }
  return {std::move(traj), std::move(nr)};
}

std::vector<std::vector<long>> initial_counts(const games::MixedProfile& x0,
                                              long prefix) {
  if (prefix < 1) throw DomainError("history prefix must be >= 1");
  std::vector<std::vector<long>> counts;
  for (const auto& block : x0.blocks()) {
    const int m = static_cast<int>(block.size());
    std::vector<long> c(m);
    std::vector<std::pair<double, int>> frac(m);
    long assigned = 0;
    for (int k = 0; k < m; ++k) {
      const double v = block[k] * static_cast<double>(prefix);
      c[k] = static_cast<long>(std::floor(v));
      frac[k] = {v - std::floor(v), k};
      assigned += c[k];
    }
    long left = prefix - assigned;
    // ties break toward lower action index
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int j = 0; left > 0; j = (j + 1) % m, --left) ++c[frac[j].second];
    counts.push_back(std::move(c));
  }
  return counts;
}

RunResult run_sfp(const games::Game& g,
                  const std::vector<response::ChoiceSpec>& choices,
                  const games::MixedProfile& x0, long n_steps,
                  std::uint64_t seed, const RecordingSpec& rec, long prefix) {
  const response::BestResponseField f(g, choices);
  const int d = g.dim();
  const int N = g.players();
  const auto& m = g.action_counts();
  if (x0.players() != N) throw StructuralError("start profile player mismatch");
  auto counts = initial_counts(x0, prefix);
  const Recorder R = make_recorder(rec, prefix, n_steps, d);

  Trajectory traj(d, prefix);
  traj.field_name = "sfp";
  traj.schedule_name = "harmonic";
  traj.seed = seed;
  traj.total_steps = n_steps;
  traj.stride_used = R.stride;
  NoiseRecord nr;
  nr.dim = d;

  long n = prefix;
  std::vector<double> x(d), br(d);
  auto refresh = [&] {
    int off = 0;
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < m[i]; ++k)
        x[off + k] = static_cast<double>(counts[i][k]) / static_cast<double>(n);
      off += m[i];
    }
  };
  refresh();
  double t = 0;
  for (long k = 1; k <= prefix; ++k) t += 1.0 / static_cast<double>(k);
  traj.append(n, t, x.data());

  for (long s = 0; s < n_steps; ++s) {
    f.br_raw(x.data(), br.data());
    const bool keep_noise =
        rec.record_noise && s % rec.noise_stride == 0;
    if (keep_noise) {
      nr.steps.push_back(n + 1);
      nr.states.insert(nr.states.end(), x.begin(), x.end());
    }
    int off = 0;
    for (int i = 0; i < N; ++i) {
      const double u = rng::uniform01(seed, i, n + 1);
      int a = m[i] - 1;
      double cum = 0;
      for (int k = 0; k < m[i]; ++k) {
        cum += br[off + k];
        if (u < cum) {
          a = k;
          break;
        }
      }
      ++counts[i][a];
      if (keep_noise)
        for (int k = 0; k < m[i]; ++k)
          nr.increments.push_back((k == a ? 1.0 : 0.0) - br[off + k]);
      off += m[i];
    }
    ++n;
    refresh();
    t += 1.0 / static_cast<double>(n);
    if (R.want(n)) traj.append(n, t, x.data());
  }
  return {std::move(traj), std::move(nr)};
}

Trajectory run_diffusion(const flow::FieldHandle& F,
                         const std::vector<double>& x0, double b, double t_end,
                         double dt, std::uint64_t seed,
                         const RecordingSpec& rec) {
  if (static_cast<int>(x0.size()) != F.dim)
    throw StructuralError("start state dimension mismatch");
  if (!(b > 0)) throw DomainError("decay rate must be positive");
  if (!(dt > 0) || dt > 0.01)
    throw DomainError("diffusion step must lie in (0, 0.01]");
  if (!(t_end >= 0)) throw DomainError("end time must be nonnegative");

  const long full = static_cast<long>(std::floor(t_end / dt + 1e-9));
  const double rest = t_end - static_cast<double>(full) * dt;
  const long total = full + (rest > 1e-12 ? 1 : 0);
  const Recorder R = make_recorder(rec, 0, total, F.dim);

  Trajectory traj(F.dim, 0);
  traj.field_name = F.name;
  traj.schedule_name = "exp:" + std::to_string(b);
  traj.seed = seed;
  traj.total_steps = total;
  traj.stride_used = R.stride;

  std::vector<double> x = x0, fx(F.dim);
  double t = 0;
  traj.append(0, t, x.data());
  for (long k = 0; k < total; ++k) {
    const double h = k < full ? dt : rest;
    F.eval(x.data(), fx.data());
    const double sd = std::sqrt(std::exp(-b * t) * h);
    for (int c = 0; c < F.dim; ++c) {
      x[c] += h * fx[c] + sd * rng::normal(seed, c, k);
      if (!std::isfinite(x[c]) || std::abs(x[c]) > 1e6)
        throw DivergenceError("diffusion diverged at step " +
                              std::to_string(k + 1));
    }
    t += h;
    if (R.want(k + 1)) traj.append(k + 1, t, x.data());
  }
  return traj;
}

// ---- interpolation and shadowing ----

std::vector<double> interpolate(const Trajectory& traj, double t) {
  const std::size_t k = traj.locate(t);
  if (t == traj.time(k) || k + 1 == traj.size()) return traj.state_vec(k);
  const double t0 = traj.time(k), t1 = traj.time(k + 1);
  const double s = (t - t0) / (t1 - t0);
  const double* a = traj.state(k);
  const double* b = traj.state(k + 1);
  std::vector<double> out(traj.dim());
  for (int c = 0; c < traj.dim(); ++c) out[c] = a[c] + s * (b[c] - a[c]);
  return out;
}

double apt_distance(const Trajectory& traj, const flow::FieldHandle& F,
                    double t, double T_horizon,
                    const flow::FlowOptions& opts) {
  if (traj.dim() != F.dim) throw StructuralError("field dimension mismatch");
  if (!(T_horizon >= 0)) throw DomainError("horizon must be nonnegative");
  if (t < traj.first_time() || t + T_horizon > traj.last_time() + 1e-12)
    throw DomainError("window outside the recorded range");
  if (T_horizon == 0) return 0;

  const std::size_t k = traj.locate(t);
  const double spacing = k + 1 < traj.size()
                             ? traj.time(k + 1) - traj.time(k)
                             : traj.time(k) - traj.time(k - 1);
  const double h = std::min({0.01, opts.step, spacing});
  const int d = F.dim;
  std::vector<double> z = interpolate(traj, t);
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);

  const long steps = static_cast<long>(std::floor(T_horizon / h + 1e-9));
  const double last = traj.last_time();
  double dist = 0, tcur = t;
  auto compare = [&] {
    const std::vector<double> w = interpolate(traj, std::min(tcur, last));
    double s2 = 0;
    for (int c = 0; c < d; ++c) {
      if (!std::isfinite(z[c]))
        throw DivergenceError("flow diverged inside the shadowing window");
      const double dv = w[c] - z[c];
      s2 += dv * dv;
    }
    dist = std::max(dist, std::sqrt(s2));
  };
  for (long j = 0; j < steps; ++j) {
    flow::rk4_step(F, z, h, k1, k2, k3, k4, tmp);
    tcur += h;
    compare();
  }
  const double rest = T_horizon - static_cast<double>(steps) * h;
  if (rest > 1e-12) {
    flow::rk4_step(F, z, rest, k1, k2, k3, k4, tmp);
    tcur = t + T_horizon;
    compare();
  }
  return dist;
}

// ---- deviation rates ----

OmegaRate OmegaRate::moment_q(double q, double B) {
  if (!(q >= 2)) throw DomainError("moment order must be >= 2");
  if (!(B > 0)) throw DomainError("rate constant must be positive");
  OmegaRate r;
  r.kind = Case::MomentQ;
  r.q = q;
  r.B = B;
  return r;
}

OmegaRate OmegaRate::subgaussian(double B, int d) {
  if (!(B > 0)) throw DomainError("rate constant must be positive");
  if (d < 1) throw DomainError("dimension must be >= 1");
  OmegaRate r;
  r.kind = Case::Subgaussian;
  r.B = B;
  r.d = d;
  return r;
}

double omega_rate_value(const OmegaRate& rate, double gamma_bar, double delta) {
  if (!(gamma_bar > 0)) throw DomainError("step value must be positive");
  if (!(delta > 0)) throw DomainError("deviation must be positive");
  if (rate.kind == OmegaRate::Case::MomentQ)
    return rate.B * std::pow(gamma_bar, rate.q / 2.0) /
           std::pow(delta, rate.q);
  return 2.0 * rate.d * std::exp(-rate.B * delta * delta / gamma_bar);
}

long omega_k0(const OmegaRate& rate, const StepSchedule& sched, double delta) {
  if (!(delta > 0)) throw DomainError("deviation must be positive");
  const double c = rate.B * delta * delta / 2.0;
  if (sched.gamma(1) <= c) return 1;
  if (sched.kind() != StepSchedule::Kind::Custom) {
    long k = static_cast<long>(
        std::ceil(std::pow(c, -1.0 / sched.alpha()) - 1e-9));
    k = std::max<long>(k, 1);
    while (sched.gamma(k) > c) ++k;
    while (k > 1 && sched.gamma(k - 1) <= c) --k;
    return k;
  }
  long lo = 1, hi = 2;
  while (sched.gamma(hi) > c) {
    lo = hi;
    if (hi >= kCustomIndexMax)
      throw DomainError("schedule never reaches the rate threshold");
    hi = std::min(kCustomIndexMax, hi * 2);
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (sched.gamma(mid) > c ? lo : hi) = mid;
  }
  return hi;
}

namespace {

// Sum_{j >= M} j^{-p} for p > 1: direct terms to 64, Euler-Maclaurin tail.
double power_tail(long M, double p) {
  if (!(p > 1)) throw DomainError("divergent rate tail");
  double sum = 0;
  const long M0 = std::max<long>(M, 64);
  for (long j = M; j < M0; ++j) sum += std::pow(static_cast<double>(j), -p);
  const double x = static_cast<double>(M0);
  sum += std::pow(x, 1.0 - p) / (p - 1.0) + std::pow(x, -p) / 2.0 +
         p * std::pow(x, -p - 1.0) / 12.0 -
         p * (p + 1.0) * (p + 2.0) * std::pow(x, -p - 3.0) / 720.0;
  return sum;
}

// Sum_{j >= M} gamma_j * r(gamma_j).
double rate_tail(const OmegaRate& rate, const StepSchedule& sched, long M,
                 double delta) {
  if (sched.kind() != StepSchedule::Kind::Custom &&
      rate.kind == OmegaRate::Case::MomentQ) {
    const double p = sched.alpha() * (1.0 + rate.q / 2.0);
    return rate.B / std::pow(delta, rate.q) * power_tail(M, p);
  }
  const long cap =
      sched.kind() == StepSchedule::Kind::Custom ? 10'000'000L : 50'000'000L;
  double sum = 0;
  for (long j = M; j < M + cap; ++j) {
    const double g = sched.gamma(j);
    const double term = g * omega_rate_value(rate, g, delta);
    sum += term;
    if (term < 1e-300 || (sum > 0 && term <= sum * 1e-18)) return sum;
  }
  throw DomainError("rate tail did not converge within the summation cap");
}

}  // namespace

double omega_bound(const OmegaRate& rate, const StepSchedule& sched, double t,
                   double delta, double T_horizon) {
  if (!(T_horizon >= 0)) throw DomainError("horizon must be nonnegative");
  const long k0 = omega_k0(rate, sched, delta);
  if (t < sched.tau(k0) - 1e-12)
    throw DomainError("t must be at least tau(k0) for this rate");
  const long m = sched.segment(t);
  // gamma_bar is constant on [tau(m), tau(m+1)) and on every later segment;
  // the integral over [t, infinity) is an exact sum of segment areas.
  double total = (sched.tau(m + 1) - t) *
                 omega_rate_value(rate, sched.gamma(m + 1), delta);
  total += rate_tail(rate, sched, m + 2, delta);
  return total;
}

// ---- noise statistics ----

Eigen::MatrixXd tangent_basis(const std::vector<int>& action_counts) {
  int dim = 0, tdim = 0;
  for (int m : action_counts) {
    dim += m;
    tdim += m - 1;
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(dim, tdim);
  int off = 0, col = 0;
  for (int m : action_counts) {
    for (int k = 1; k < m; ++k) {
      const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
      for (int j = 0; j < k; ++j) P(off + j, col) = s;
      P(off + k, col) = -static_cast<double>(k) * s;
      ++col;
    }
    off += m;
  }
  return P;
}

Eigen::MatrixXd analytic_noise_covariance(
    const games::Game& g, const std::vector<response::ChoiceSpec>& choices,
    const games::MixedProfile& x) {
  const response::BestResponseField f(g, choices);
  const int d = g.dim();
  std::vector<double> br(d);
  f.br_raw(x.flat().data(), br.data());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(d, d);
  int off = 0;
  for (int m : g.action_counts()) {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        Q(off + a, off + b) =
            (a == b ? br[off + a] : 0.0) - br[off + a] * br[off + b];
    off += m;
  }
  return Q;
}

NoiseStatsReport noise_stats(const NoiseRecord& rec, const games::Game& g,
                             const std::vector<response::ChoiceSpec>& choices,
                             const NoiseStatsOptions& opts) {
  const int d = g.dim();
  if (rec.dim != d) throw StructuralError("record dimension mismatch");
  if (rec.size() == 0 || rec.states.size() != rec.size() * d ||
      rec.increments.size() != rec.size() * d)
    throw InsufficientDataError("noise record is empty or inconsistent");
  if (opts.min_bucket < 1) throw DomainError("bucket minimum must be >= 1");
  const int nb = std::clamp(opts.buckets, 1, 8);
  const auto& m = g.action_counts();
  const int tdim = g.t_dim();

  struct Accum {
    long count = 0;
    std::vector<double> sum_state, sum_u, sum_uu;
  };
  std::map<long, Accum> cells;
  std::vector<double> v(tdim);
  for (std::size_t s = 0; s < rec.size(); ++s) {
    const double* x = rec.state(s);
    int off = 0, pos = 0;
    for (int mi : m) {
      games::t_block_raw(x + off, mi, v.data() + pos);
      off += mi;
      pos += mi - 1;
    }
    long key = 0;
    for (int a = 0; a < tdim; ++a) {
      const int cell = std::clamp(static_cast<int>(v[a] * nb), 0, nb - 1);
      key = key * nb + cell;
    }
    Accum& acc = cells[key];
    if (acc.count == 0) {
      acc.sum_state.assign(d, 0.0);
      acc.sum_u.assign(d, 0.0);
      acc.sum_uu.assign(static_cast<std::size_t>(d) * d, 0.0);
    }
    ++acc.count;
    const double* u = rec.increment(s);
    for (int i = 0; i < d; ++i) {
      acc.sum_state[i] += x[i];
      acc.sum_u[i] += u[i];
      for (int j = 0; j < d; ++j) acc.sum_uu[i * d + j] += u[i] * u[j];
    }
  }

  NoiseStatsReport rep;
  rep.samples_total = static_cast<long>(rec.size());
  rep.buckets_per_axis = nb;
  const Eigen::MatrixXd P = tangent_basis(m);
  for (const auto& [key, acc] : cells) {
    if (acc.count < opts.min_bucket) continue;
    const double inv = 1.0 / static_cast<double>(acc.count);
    std::vector<double> mean_state(d);
    for (int i = 0; i < d; ++i) mean_state[i] = acc.sum_state[i] * inv;
    const games::MixedProfile center =
        games::MixedProfile::from_flat(m, mean_state);
    const Eigen::MatrixXd Q = analytic_noise_covariance(g, choices, center);
    Eigen::MatrixXd Qhat(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) Qhat(i, j) = acc.sum_uu[i * d + j] * inv;

    BucketStat bs;
    bs.key = key;
    bs.count = acc.count;
    bs.rel_frobenius = (Qhat - Q).norm() / Q.norm();
    const Eigen::MatrixXd S = P.transpose() * Qhat * P;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        (S + S.transpose()) / 2.0);
    if (es.info() != Eigen::Success)
      throw DomainError("bucket eigenvalue computation failed");
    bs.min_eig = es.eigenvalues().minCoeff();
    bs.max_eig = es.eigenvalues().maxCoeff();
    for (int i = 0; i < d; ++i)
      bs.mean_inf = std::max(bs.mean_inf, std::abs(acc.sum_u[i] * inv));
    rep.samples_used += acc.count;
    rep.max_rel_frobenius = std::max(rep.max_rel_frobenius, bs.rel_frobenius);
    rep.min_eig = std::min(rep.min_eig, bs.min_eig);
    rep.max_eig = std::max(rep.max_eig, bs.max_eig);
    rep.buckets.push_back(std::move(bs));
  }
  if (rep.buckets.empty())
    throw InsufficientDataError("no bucket reached the minimum sample count");
  rep.within_band =
      rep.min_eig > opts.lambda_minus && rep.max_eig <= opts.lambda_plus + 1e-9;
  return rep;
}

}  // namespace sfp::stochastic
