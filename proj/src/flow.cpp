#include "sfp/flow.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "sfp/rng.hpp"

namespace sfp::flow {

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_options(const FlowOptions& opts) {
  if (!(opts.step > 0) || opts.step > 0.1)
    throw DomainError("flow step must lie in (0, 0.1]");
}

void check_state(const std::vector<double>& x, double bound) {
  for (double v : x) {
    if (!std::isfinite(v)) throw DivergenceError("flow produced non-finite state");
    if (std::abs(v) > bound)
      throw DivergenceError("flow left the divergence bounding box");
  }
}

}  // namespace

const char* to_string(StabilityLabel label) {
  switch (label) {
    case StabilityLabel::NotLinearlyUnstable:
      return "NotLinearlyUnstable";
    case StabilityLabel::Marginal:
      return "Marginal";
    case StabilityLabel::LinearlyUnstable:
      return "LinearlyUnstable";
  }
  return "?";
}

StabilityLabel label_from_string(const std::string& s) {
  if (s == "NotLinearlyUnstable") return StabilityLabel::NotLinearlyUnstable;
  if (s == "Marginal") return StabilityLabel::Marginal;
  if (s == "LinearlyUnstable") return StabilityLabel::LinearlyUnstable;
  throw ConfigError("unknown stability label: " + s);
}

StabilityLabel label_spectrum(const std::vector<std::complex<double>>& ev,
                              double eps) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& z : ev) top = std::max(top, z.real());
  if (top > eps) return StabilityLabel::LinearlyUnstable;
  if (top >= -eps) return StabilityLabel::Marginal;
  return StabilityLabel::NotLinearlyUnstable;
}

void rk4_step(const FieldHandle& f, std::vector<double>& x, double h,
              std::vector<double>& k1, std::vector<double>& k2,
              std::vector<double>& k3, std::vector<double>& k4,
              std::vector<double>& tmp) {
  const int d = f.dim;
  f.eval(x.data(), k1.data());
  for (int i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  f.eval(tmp.data(), k2.data());
  for (int i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  f.eval(tmp.data(), k3.data());
  for (int i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
  f.eval(tmp.data(), k4.data());
  for (int i = 0; i < d; ++i)
    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

std::vector<double> flow(const FieldHandle& f, std::vector<double> x0,
                         double t, const FlowOptions& opts) {
  check_options(opts);
  if (t < 0) throw DomainError("flow time must be nonnegative");
  if (static_cast<int>(x0.size()) != f.dim)
    throw StructuralError("flow start dimension mismatch");
  const int d = f.dim;
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
  const auto n_full = static_cast<long long>(std::floor(t / opts.step + 1e-12));
  for (long long s = 0; s < n_full; ++s) {
    rk4_step(f, x0, opts.step, k1, k2, k3, k4, tmp);
    check_state(x0, opts.divergence_bound);
  }
  const double rest = t - static_cast<double>(n_full) * opts.step;
  if (rest > 1e-15) {
    rk4_step(f, x0, rest, k1, k2, k3, k4, tmp);
    check_state(x0, opts.divergence_bound);
  }
  return x0;
}

games::MixedProfile flow_profile(const response::BestResponseField& f,
                                 const games::MixedProfile& x0, double t,
                                 const FlowOptions& opts, double* drift_out) {
  FieldHandle h = make_pbr_field(f);
  std::vector<double> x = flow(h, x0.flat(), t, opts);
  const auto& counts = f.game().action_counts();
  double drift = 0;
  int off = 0;
  for (int m : counts) {
    double sum = 0, neg = 0;
    for (int k = 0; k < m; ++k) {
      sum += x[off + k];
      neg = std::max(neg, -x[off + k]);
    }
    drift = std::max({drift, std::abs(sum - 1.0), neg});
    double clipped = 0;
    for (int k = 0; k < m; ++k) {
      if (x[off + k] < 0) x[off + k] = 0;
      clipped += x[off + k];
    }
    for (int k = 0; k < m; ++k) x[off + k] /= clipped;
    off += m;
  }
  if (drift_out) *drift_out = drift;
  return games::MixedProfile::from_flat(counts, x);
}

Eigen::MatrixXd reduced_jacobian(const Eigen::MatrixXd& J,
                                 const std::vector<int>& action_counts) {
  std::vector<int> kept, last;
  int off = 0;
  for (int m : action_counts) {
    for (int k = 0; k < m - 1; ++k) {
      kept.push_back(off + k);
      last.push_back(off + m - 1);
    }
    off += m;
  }
  const int r = static_cast<int>(kept.size());
  Eigen::MatrixXd R(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      R(a, b) = J(kept[a], kept[b]) - J(kept[a], last[b]);
  return R;
}

namespace {

std::vector<std::complex<double>> sorted_spectrum(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M);
  if (solver.info() != Eigen::Success)
    throw DomainError("eigenvalue computation failed");
  std::vector<std::complex<double>> ev(M.rows());
  for (int i = 0; i < M.rows(); ++i) ev[i] = solver.eigenvalues()(i);
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return ev;
}

}  // namespace

namespace {

// Analytic field Jacobian when available, otherwise central differences.
Eigen::MatrixXd field_jacobian(const response::BestResponseField& f,
                               const std::vector<double>& x) {
  if (f.has_jacobian()) return f.jacobian_raw(x.data());
  FieldHandle h;
  h.dim = f.dim();
  h.eval = [&f](const double* p, double* out) { f.field_raw(p, out); };
  return finite_difference_jacobian(h, x);
}

}  // namespace

std::vector<std::complex<double>> chart_spectrum(
    const response::BestResponseField& f, const games::MixedProfile& p) {
  const Eigen::MatrixXd J = field_jacobian(f, p.flat());
  return sorted_spectrum(reduced_jacobian(J, f.game().action_counts()));
}

EquilibriumReport classify_stability(const response::BestResponseField& f,
                                     const games::MixedProfile& p,
                                     double eps_spec) {
  const double res = inf_norm(f.vector_field(p));
  if (res > 1e-8)
    throw DomainError("classify_stability requires a residual <= 1e-8");
  EquilibriumReport rep{p, res, chart_spectrum(f, p),
                        StabilityLabel::Marginal};
  rep.label = label_spectrum(rep.eigenvalues, eps_spec);
  return rep;
}

namespace {

// Chart <-> full profile helpers: the chart keeps all but the last
// coordinate of each block.

std::vector<double> chart_of(const std::vector<double>& full,
                             const std::vector<int>& counts) {
  std::vector<double> c;
  int off = 0;
  for (int m : counts) {
    for (int k = 0; k < m - 1; ++k) c.push_back(full[off + k]);
    off += m;
  }
  return c;
}

std::vector<double> full_of(const std::vector<double>& chart,
                            const std::vector<int>& counts) {
  std::vector<double> x;
  int pos = 0;
  for (int m : counts) {
    double sum = 0;
    for (int k = 0; k < m - 1; ++k) {
      x.push_back(chart[pos + k]);
      sum += chart[pos + k];
    }
    x.push_back(1.0 - sum);
    pos += m - 1;
  }
  return x;
}

void project_blocks(std::vector<double>& x, const std::vector<int>& counts) {
  int off = 0;
  for (int m : counts) {
    double sum = 0;
    for (int k = 0; k < m; ++k) {
      if (x[off + k] < 0) x[off + k] = 0;
      sum += x[off + k];
    }
    if (sum <= 0) {
      for (int k = 0; k < m; ++k) x[off + k] = 1.0 / m;
    } else {
      for (int k = 0; k < m; ++k) x[off + k] /= sum;
    }
    off += m;
  }
}

double residual_inf(const response::BestResponseField& f,
                    const std::vector<double>& x, std::vector<double>& buf) {
  f.field_raw(x.data(), buf.data());
  return inf_norm(buf);
}

// Line-searched Newton on the tangent chart; returns true on success.
bool newton_solve(const response::BestResponseField& f, std::vector<double>& x,
                  double tol, int max_iter) {
  const auto& counts = f.game().action_counts();
  const int d = f.game().dim();
  std::vector<double> field(d);
  project_blocks(x, counts);
  std::vector<double> chart = chart_of(x, counts);
  const int r = static_cast<int>(chart.size());

  auto merit = [&](const std::vector<double>& c, std::vector<double>& full) {
    full = full_of(c, counts);
    project_blocks(full, counts);
    f.field_raw(full.data(), field.data());
    double m = 0;
    for (double v : field) m += v * v;
    return m;
  };

  std::vector<double> full = x;
  for (int it = 0; it < max_iter; ++it) {
    const double m0 = merit(chart, full);
    f.field_raw(full.data(), field.data());
    if (inf_norm(field) <= tol) {
      x = full;
      return true;
    }
    const Eigen::MatrixXd J =
        reduced_jacobian(field_jacobian(f, full), counts);
    Eigen::VectorXd rhs(r);
    {
      int pos = 0, off = 0;
      for (int m : counts) {
        for (int k = 0; k < m - 1; ++k) rhs(pos + k) = -field[off + k];
        pos += m - 1;
        off += m;
      }
    }
    const Eigen::VectorXd step = J.fullPivLu().solve(rhs);
    if (!step.allFinite()) return false;
    double alpha = 1.0;
    bool moved = false;
    std::vector<double> cand(r);
    for (int ls = 0; ls < 30; ++ls) {
      for (int k = 0; k < r; ++k) cand[k] = chart[k] + alpha * step(k);
      std::vector<double> cand_full;
      const double mc = merit(cand, cand_full);
      if (mc < m0 * (1.0 - 1e-4 * alpha) || mc < tol * tol) {
        chart = chart_of(cand_full, counts);
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) return false;
  }
  std::vector<double> final_full = full_of(chart, counts);
  project_blocks(final_full, counts);
  if (residual_inf(f, final_full, field) <= tol) {
    x = final_full;
    return true;
  }
  return false;
}

}  // namespace

EquilibriumReport find_pne(const response::BestResponseField& f,
                           const games::MixedProfile& x0,
                           const SolveOptions& opts) {
  if (!(opts.tol > 0)) throw DomainError("solver tolerance must be positive");
  if (!(opts.damping > 0) || opts.damping > 1)
    throw DomainError("solver damping must lie in (0, 1]");
  const int d = f.game().dim();
  const auto& counts = f.game().action_counts();
  std::vector<double> x = x0.flat();
  if (static_cast<int>(x.size()) != d)
    throw StructuralError("start profile dimension mismatch");
  std::vector<double> br(d), field(d);

  bool damped_ok = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    f.br_raw(x.data(), br.data());
    double r = 0;
    for (int k = 0; k < d; ++k) r = std::max(r, std::abs(br[k] - x[k]));
    if (r <= opts.tol) {
      damped_ok = true;
      break;
    }
    for (int k = 0; k < d; ++k)
      x[k] = (1.0 - opts.damping) * x[k] + opts.damping * br[k];
  }

  if (!damped_ok) {
    std::vector<double> nx = x0.flat();
    if (newton_solve(f, nx, opts.tol, 200)) {
      x = nx;
    } else {
      throw NonConvergenceError("fixed-point search did not converge", x);
    }
  } else {
    // Polish well below the requested tolerance; keep the damped answer if
    // Newton cannot improve it.
    std::vector<double> nx = x;
    if (newton_solve(f, nx, std::max(opts.tol * 1e-4, 1e-14), 40) &&
        residual_inf(f, nx, field) <= residual_inf(f, x, br))
      x = nx;
  }

  project_blocks(x, counts);
  games::MixedProfile point = games::MixedProfile::from_flat(counts, x);
  EquilibriumReport rep{point, residual_inf(f, x, field),
                        chart_spectrum(f, point), StabilityLabel::Marginal};
  rep.label = label_spectrum(rep.eigenvalues);
  return rep;
}

std::vector<EquilibriumReport> enumerate_pne(
    const response::BestResponseField& f, const EnumerateOptions& opts) {
  const games::Game& g = f.game();
  const auto& counts = g.action_counts();
  const int n = g.players();
  std::vector<games::MixedProfile> starts;

  {  // every pure vertex, odometer order
    std::vector<int> a(n, 0);
    bool more = true;
    while (more) {
      starts.push_back(games::MixedProfile::vertex(counts, a));
      more = false;
      for (int j = n - 1; j >= 0; --j) {
        if (++a[j] < counts[j]) {
          more = true;
          break;
        }
        a[j] = 0;
      }
    }
  }

  // random interior starts (Dirichlet(1) per block), counter-based
  for (int s = 0; s < opts.seeds; ++s) {
    std::vector<std::vector<double>> blocks;
    int coord = 0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> b(counts[i]);
      double sum = 0;
      for (int k = 0; k < counts[i]; ++k) {
        b[k] = -std::log(
            rng::uniform01(opts.seed, 0x7a11 + s, coord++));
        sum += b[k];
      }
      for (double& v : b) v /= sum;
      blocks.push_back(std::move(b));
    }
    starts.emplace_back(std::move(blocks));
  }

  // deterministic lattice when the chart is small: per-player simplex grid
  // from compositions of L, shifted to the interior
  if (g.t_dim() <= 4) {
    std::vector<std::vector<std::vector<double>>> per_player;
    for (int i = 0; i < n; ++i) {
      const int m = counts[i];
      const int L = m == 2 ? 8 : 4;
      std::vector<std::vector<double>> pts;
      std::vector<int> c(m, 0);
      c[0] = L;
      while (true) {
        std::vector<double> b(m);
        for (int k = 0; k < m; ++k)
          b[k] = (c[k] + 0.5) / (L + 0.5 * m);
        pts.push_back(std::move(b));
        int j = m - 2;
        while (j >= 0 && c[j] == 0) --j;
        if (j < 0) break;
        --c[j];
        int tail = 0;
        for (int k = j + 1; k < m; ++k) {
          tail += c[k];
          c[k] = 0;
        }
        c[j + 1] = tail + 1;
      }
      per_player.push_back(std::move(pts));
    }
    std::size_t total = 1;
    for (const auto& p : per_player) total *= p.size();
    if (total <= 5000) {
      std::vector<std::size_t> idx(n, 0);
      while (true) {
        std::vector<std::vector<double>> blocks;
        for (int i = 0; i < n; ++i) blocks.push_back(per_player[i][idx[i]]);
        starts.emplace_back(std::move(blocks));
        int j = n - 1;
        while (j >= 0 && ++idx[j] == per_player[j].size()) idx[j--] = 0;
        if (j < 0) break;
      }
    }
  }

  SolveOptions sopt;
  sopt.tol = opts.tol;
  sopt.max_iter = opts.max_iter;
  const double dedup = 10.0 * opts.tol;

  std::vector<EquilibriumReport> reports;
  auto admit = [&](std::vector<double> xf) {
    project_blocks(xf, counts);
    games::MixedProfile point = games::MixedProfile::from_flat(counts, xf);
    for (const auto& q : reports)
      if (games::MixedProfile::distance_inf(point, q.point) <= dedup) return;
    std::vector<double> scratch(g.dim());
    EquilibriumReport rep{point, residual_inf(f, xf, scratch),
                          chart_spectrum(f, point), StabilityLabel::Marginal};
    rep.label = label_spectrum(rep.eigenvalues);
    reports.push_back(std::move(rep));
  };
  auto try_start = [&](const games::MixedProfile& s) {
    // Newton straight from the seed reaches repelling fixed points that the
    // damped pass slides away from.
    std::vector<double> nx = s.flat();
    if (newton_solve(f, nx, std::max(opts.tol * 1e-4, 1e-14), 200)) admit(nx);
    try {
      EquilibriumReport rep = find_pne(f, s, sopt);
      for (const auto& q : reports)
        if (games::MixedProfile::distance_inf(rep.point, q.point) <= dedup)
          return;
      reports.push_back(std::move(rep));
    } catch (const DomainError&) {
      // start did not converge; drop it
    }
  };
  for (const auto& s : starts) try_start(s);

  // one midpoint-refinement round between distinct finds
  const std::size_t first_pass = reports.size();
  for (std::size_t a = 0; a < first_pass; ++a)
    for (std::size_t b = a + 1; b < first_pass; ++b) {
      std::vector<std::vector<double>> blocks;
      for (int i = 0; i < n; ++i) {
        std::vector<double> blk(counts[i]);
        for (int k = 0; k < counts[i]; ++k)
          blk[k] = 0.5 * (reports[a].point.block(i)[k] +
                          reports[b].point.block(i)[k]);
        blocks.push_back(std::move(blk));
      }
      try_start(games::MixedProfile(std::move(blocks)));
    }

  std::sort(reports.begin(), reports.end(),
            [](const EquilibriumReport& a, const EquilibriumReport& b) {
              const auto ta = games::t_operator(a.point).flat();
              const auto tb = games::t_operator(b.point).flat();
              return std::lexicographical_compare(ta.begin(), ta.end(),
                                                  tb.begin(), tb.end());
            });
  return reports;
}

Eigen::MatrixXd finite_difference_jacobian(const FieldHandle& f,
                                           const std::vector<double>& x,
                                           double h) {
  if (static_cast<int>(x.size()) != f.dim)
    throw StructuralError("jacobian point dimension mismatch");
  const int d = f.dim;
  Eigen::MatrixXd J(d, d);
  std::vector<double> xp(x), xm(x), fp(d), fm(d);
  for (int c = 0; c < d; ++c) {
    xp[c] = x[c] + h;
    xm[c] = x[c] - h;
    f.eval(xp.data(), fp.data());
    f.eval(xm.data(), fm.data());
    for (int r = 0; r < d; ++r) J(r, c) = (fp[r] - fm[r]) / (2.0 * h);
    xp[c] = x[c];
    xm[c] = x[c];
  }
  return J;
}

namespace {

// Tarjan strongly connected components on a small directed graph.
struct SccFinder {
  const std::vector<std::vector<int>>& adj;
  std::vector<int> index, low, comp;
  std::vector<bool> on_stack;
  std::vector<int> stack;
  int counter = 0, comps = 0;

  explicit SccFinder(const std::vector<std::vector<int>>& a)
      : adj(a),
        index(a.size(), -1),
        low(a.size(), 0),
        comp(a.size(), -1),
        on_stack(a.size(), false) {}

  void run() {
    for (std::size_t v = 0; v < adj.size(); ++v)
      if (index[v] < 0) visit(static_cast<int>(v));
  }

  void visit(int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      while (true) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
        if (w == v) break;
      }
      ++comps;
    }
  }
};

}  // namespace

CoopCheckResult check_cooperative_irreducible(
    const FieldHandle& f, const std::vector<std::vector<double>>& samples,
    double tol) {
  if (samples.empty()) throw DomainError("no sample points given");
  CoopCheckResult res;
  const int d = f.dim;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (static_cast<int>(samples[s].size()) != d)
      throw StructuralError("sample dimension mismatch");
    const Eigen::MatrixXd J = f.jac ? f.jac(samples[s].data())
                                    : finite_difference_jacobian(f, samples[s]);
    std::vector<std::vector<int>> adj(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        res.min_offdiag = std::min(res.min_offdiag, J(i, j));
        if (J(i, j) < -tol && res.cooperative) {
          res.cooperative = false;
          res.sample_index = static_cast<int>(s);
          res.row = i;
          res.col = j;
          res.value = J(i, j);
        }
        if (std::abs(J(i, j)) > tol) adj[i].push_back(j);
      }
    SccFinder scc(adj);
    scc.run();
    if (scc.comps > 1 && res.irreducible) {
      res.irreducible = false;
      if (res.sample_index < 0) res.sample_index = static_cast<int>(s);
      // report a sink component of the condensation: it cannot reach the rest
      std::vector<bool> has_out(scc.comps, false);
      for (int i = 0; i < d; ++i)
        for (int j : adj[i])
          if (scc.comp[i] != scc.comp[j]) has_out[scc.comp[i]] = true;
      int sink = 0;
      for (int c = 0; c < scc.comps; ++c)
        if (!has_out[c]) {
          sink = c;
          break;
        }
      for (int i = 0; i < d; ++i)
        if (scc.comp[i] == sink) res.stuck_component.push_back(i);
    }
  }
  return res;
}

MonotonicityResult check_strong_monotonicity(
    const FieldHandle& f, const std::vector<double>& x0,
    const std::vector<double>& y0, const std::vector<double>& times,
    const FlowOptions& opts, double t_strict, double strict_margin) {
  check_options(opts);
  if (x0.size() != y0.size() || static_cast<int>(x0.size()) != f.dim)
    throw StructuralError("start dimension mismatch");
  bool equal = true;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    if (!(x0[k] <= y0[k]))
      throw DomainError("starts are not componentwise ordered");
    if (x0[k] != y0[k]) equal = false;
  }
  if (equal) throw DomainError("starts must be distinct");
  if (times.empty()) throw DomainError("no check times given");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0) throw DomainError("negative check time");
    if (k > 0 && times[k] <= times[k - 1])
      throw DomainError("check times must increase");
  }

  MonotonicityResult res;
  std::vector<double> x = x0, y = y0;
  double t_prev = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double dt = times[k] - t_prev;
    x = flow(f, std::move(x), dt, opts);
    y = flow(f, std::move(y), dt, opts);
    t_prev = times[k];
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.size(); ++c)
      margin = std::min(margin, y[c] - x[c]);
    res.margins.push_back(margin);
    const bool strict_here = times[k] >= t_strict;
    if (strict_here)
      res.min_margin_after_strict =
          std::min(res.min_margin_after_strict, margin);
    const bool bad = strict_here ? margin < strict_margin : margin < 0;
    if (bad && res.ordered_at_all_times) {
      res.ordered_at_all_times = false;
      res.first_violation_index = static_cast<int>(k);
    }
  }
  return res;
}

FieldHandle make_pbr_field(const response::BestResponseField& f) {
  auto fp = std::make_shared<const response::BestResponseField>(f);
  FieldHandle h;
  h.dim = fp->dim();
  h.name = "pbr";
  h.eval = [fp](const double* x, double* out) { fp->field_raw(x, out); };
  if (fp->has_jacobian())
    h.jac = [fp](const double* x) { return fp->jacobian_raw(x); };
  return h;
}

FieldHandle make_conjugate_field(const response::BestResponseField& f) {
  auto fp = std::make_shared<const response::BestResponseField>(f);
  FieldHandle h;
  h.dim = fp->t_dim();
  h.name = "conjugate";
  h.eval = [fp](const double* v, double* out) { fp->conjugate_raw(v, out); };
  if (fp->has_jacobian())
    h.jac = [fp](const double* v) { return fp->conjugate_jacobian_raw(v); };
  return h;
}

FieldHandle make_linear_field(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw StructuralError("linear field needs a square matrix");
  FieldHandle h;
  h.dim = static_cast<int>(A.rows());
  h.name = "linear";
  h.eval = [A, d = h.dim](const double* x, double* out) {
    Eigen::Map<const Eigen::VectorXd> xv(x, d);
    Eigen::Map<Eigen::VectorXd> ov(out, d);
    ov = A * xv;
  };
  h.jac = [A](const double*) { return A; };
  return h;
}

}  // namespace sfp::flow
