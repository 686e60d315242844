// Test-side oracles, kept deliberately independent of the library code:
// closed forms, brute-force enumeration, bisection, and long-double
// quadrature that the implementation under test never uses.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfp/game.hpp"

namespace oracle {

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Two-player coordination game: both players earn 2 on (1,1), 1 on (2,2),
// nothing off the diagonal. Strictly supermodular with gap 3.
inline sfp::games::Game coordination_game() {
  return sfp::games::Game({2, 2}, {{2, 0, 0, 1}, {2, 0, 0, 1}});
}

// Zero-sum matching pennies; not supermodular.
inline sfp::games::Game matching_pennies() {
  return sfp::games::Game({2, 2}, {{1, -1, -1, 1}, {-1, 1, 1, -1}});
}

// Flat payoffs: the smoothed best response is exactly uniform everywhere.
inline sfp::games::Game flat_game() {
  return sfp::games::Game({2, 2}, {{0, 0, 0, 0}, {0, 0, 0, 0}});
}

// Three players, two actions each, u_i(a) = v(a_i) * (v(a_j) + v(a_k)) with
// v = {0, 1}. Strictly supermodular with gap 1.
inline sfp::games::Game three_player_game() {
  std::vector<std::vector<double>> tables(3);
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) {
        tables[0].push_back(a0 * (a1 + a2));
        tables[1].push_back(a1 * (a0 + a2));
        tables[2].push_back(a2 * (a0 + a1));
      }
  return sfp::games::Game({2, 2, 2}, std::move(tables));
}

// Symmetric logit map for the coordination game, expressed on the
// probability p of the second action: p' = sigma((3p - 2) / eta).
inline double sym_logit_g(double p, double eta) {
  return logistic((3.0 * p - 2.0) / eta);
}

inline double sym_logit_gprime(double p, double eta) {
  const double s = sym_logit_g(p, eta);
  return 3.0 / eta * s * (1.0 - s);
}

// All fixed points of p -> sigma((3p - 2)/eta) by dense scan plus bisection.
inline std::vector<double> sym_logit_roots(double eta) {
  auto h = [&](double p) { return sym_logit_g(p, eta) - p; };
  std::vector<double> roots;
  const int n = 2'000'000;
  double pa = 0.0, ha = h(pa);
  for (int i = 1; i <= n; ++i) {
    const double pb = static_cast<double>(i) / n;
    const double hb = h(pb);
    if (ha == 0.0) roots.push_back(pa);
    if ((ha < 0 && hb > 0) || (ha > 0 && hb < 0)) {
      double lo = pa, hi = pb, hlo = ha;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double hm = h(mid);
        if ((hlo < 0) == (hm < 0)) {
          lo = mid;
          hlo = hm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    pa = pb;
    ha = hb;
  }
  if (ha == 0.0) roots.push_back(pa);
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || r - out.back() > 1e-9) out.push_back(r);
  return out;
}

// Fixed-point values of the symmetric coordination map, frozen from the
// bisection oracle above at full double precision.
inline constexpr double kRootLow02 = 4.542881340882712e-05;
inline constexpr double kRootMid02 = 0.7345076129354762;
inline constexpr double kRootHigh02 = 0.992518208814781;
inline constexpr double kSlopeMid02 = 2.925092692129575;  // map slope > 1
inline constexpr double kRoot05 = 0.02026447860133756;
inline constexpr double kRoot1 = 0.195846046876141;
inline constexpr double kRoot10 = 0.48649004238421556;

inline constexpr double kExpFrac = 0.73105857863000488;    // e/(1+e)
inline constexpr double kExpFracC = 0.26894142136999512;   // 1/(1+e)
inline constexpr double kExp4Frac = 0.98201379003790844;   // e^4/(1+e^4)
inline constexpr double kExp4FracC = 0.017986209962091558; // 1/(1+e^4)
inline constexpr double kInvE = 0.36787944117144232;       // exp(-1)

// Brute-force increasing-differences check for two-player games, written
// against the payoff tables directly.
struct SupermodCheck {
  bool weak = true;
  bool strict = true;
  double min_gap = std::numeric_limits<double>::infinity();
};

inline SupermodCheck brute_supermodular_2p(const sfp::games::Game& g) {
  SupermodCheck res;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const int mi = g.actions(i), mj = g.actions(j);
    for (int alo = 0; alo < mi; ++alo)
      for (int ahi = alo + 1; ahi < mi; ++ahi)
        for (int blo = 0; blo < mj; ++blo)
          for (int bhi = blo + 1; bhi < mj; ++bhi) {
            std::vector<int> a(2);
            a[i] = ahi;
            a[j] = bhi;
            const double uhh = g.payoff(i, a);
            a[j] = blo;
            const double uhl = g.payoff(i, a);
            a[i] = alo;
            const double ull = g.payoff(i, a);
            a[j] = bhi;
            const double ulh = g.payoff(i, a);
            const double gap = (uhh - ulh) - (uhl - ull);
            res.min_gap = std::min(res.min_gap, gap);
            if (gap < 0) res.weak = false;
            if (gap <= 0) res.strict = false;
          }
  }
  return res;
}

// Generic central finite difference of a vector map.
inline std::vector<std::vector<double>> fd_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-6) {
  const auto f0 = f(x);
  std::vector<std::vector<double>> J(f0.size(),
                                     std::vector<double>(x.size(), 0.0));
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double keep = x[c];
    x[c] = keep + h;
    const auto fp = f(x);
    x[c] = keep - h;
    const auto fm = f(x);
    x[c] = keep;
    for (std::size_t r = 0; r < f0.size(); ++r)
      J[r][c] = (fp[r] - fm[r]) / (2.0 * h);
  }
  return J;
}

// Interval trap for the deviation-rate tail under the harmonic schedule with
// the polynomial moment rate r(gamma) = B * gamma^(q/2) / delta^q:
//   omega(t) = (tau_{m+1} - t) r(gamma_{m+1}) + sum_{j >= m+2} gamma_j r(gamma_j),
// evaluated by long-double direct summation with integral bounds on the
// truncated tail. Everything here is computed from scratch.
struct Interval {
  double lo = 0, hi = 0;
};

inline Interval omega_momentq_harmonic_trap(double q, double B, double delta,
                                            double t) {
  const long double dq = std::pow(static_cast<long double>(delta),
                                  static_cast<long double>(q));
  auto rate = [&](long double gamma) -> long double {
    return B * std::pow(gamma, static_cast<long double>(q) / 2.0L) / dq;
  };
  // walk the harmonic knots to the segment holding t
  long m = 0;
  long double tau = 0.0L;
  while (true) {
    const long double next = tau + 1.0L / (m + 1);
    if (next > static_cast<long double>(t)) break;
    tau = next;
    ++m;
    if (m > 100'000'000) throw std::runtime_error("t too large for oracle");
  }
  const long double tau_next = tau + 1.0L / (m + 1);
  long double total =
      (tau_next - static_cast<long double>(t)) * rate(1.0L / (m + 1));
  const long J = 20'000'000;
  long double sum = 0.0L;
  if (q == 4.0) {
    for (long j = J; j >= m + 2; --j) {
      const long double g = 1.0L / j;
      sum += B * g * g * g / dq;
    }
  } else if (q == 2.0) {
    for (long j = J; j >= m + 2; --j) {
      const long double g = 1.0L / j;
      sum += B * g * g / dq;
    }
  } else {
    for (long j = J; j >= m + 2; --j) {
      const long double gamma = 1.0L / j;
      sum += gamma * rate(gamma);
    }
  }
  total += sum;
  // remainder of sum_{j > J} j^(-p), p = 1 + q/2, trapped by integrals
  const long double p = 1.0L + static_cast<long double>(q) / 2.0L;
  const long double rem_lo = std::pow(static_cast<long double>(J) + 1.0L,
                                      1.0L - p) /
                             (p - 1.0L);
  const long double rem_hi =
      std::pow(static_cast<long double>(J), 1.0L - p) / (p - 1.0L);
  Interval iv;
  iv.lo = static_cast<double>(total + B / dq * rem_lo);
  iv.hi = static_cast<double>(total + B / dq * rem_hi);
  return iv;
}

// Closed-form binomial confidence endpoints at 95%: with zero successes the
// upper limit solves (1-p)^n = alpha/2; mirrored for n successes; one
// success uses the Beta(1, n) quantile in closed form.
inline double cp_hi_zero(long n) {
  return 1.0 - std::pow(0.025, 1.0 / static_cast<double>(n));
}
inline double cp_lo_full(long n) {
  return std::pow(0.025, 1.0 / static_cast<double>(n));
}
inline double cp_lo_one(long n) {
  return 1.0 - std::pow(0.975, 1.0 / static_cast<double>(n));
}

}  // namespace oracle
