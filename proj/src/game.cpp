#include "sfp/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sfp::games {

namespace {

// Advances a mixed-radix counter over the given digit positions; returns
// false once the counter wraps to all zeros.
bool advance(std::vector<int>& a, const std::vector<int>& m,
             const std::vector<int>& positions) {
  for (int p : positions) {
    if (++a[p] < m[p]) return true;
    a[p] = 0;
  }
  return false;
}

}  // namespace

Game::Game(std::vector<int> actions, std::vector<std::vector<double>> payoffs)
    : m_(std::move(actions)), u_(std::move(payoffs)) {
  const int n = static_cast<int>(m_.size());
  if (n < 2) throw DomainError("game needs at least 2 players");
  if (static_cast<int>(u_.size()) != n)
    throw StructuralError("one payoff tensor per player required");
  profiles_ = 1;
  for (int i = 0; i < n; ++i) {
    if (m_[i] < 2) throw DomainError("each player needs at least 2 actions");
    if (profiles_ > kMaxProfileCount / m_[i])
      throw DomainError("profile count exceeds desk-scale limit");
    profiles_ *= m_[i];
  }
  stride_.assign(n, 1);
  for (int i = n - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * m_[i + 1];
  offset_.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    offset_[i] = dim_;
    dim_ += m_[i];
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<long>(u_[i].size()) != profiles_)
      throw StructuralError("payoff tensor size mismatch for player " +
                            std::to_string(i + 1));
    for (double v : u_[i])
      if (!std::isfinite(v)) throw DomainError("non-finite payoff entry");
  }
}

long Game::index_of(const std::vector<int>& a) const {
  if (static_cast<int>(a.size()) != players())
    throw StructuralError("action profile length mismatch");
  long idx = 0;
  for (int j = 0; j < players(); ++j) {
    if (a[j] < 0 || a[j] >= m_[j]) throw StructuralError("action out of range");
    idx += a[j] * stride_[j];
  }
  return idx;
}

MixedProfile::MixedProfile(std::vector<std::vector<double>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw StructuralError("profile needs at least one block");
  for (auto& b : blocks_) {
    if (b.size() < 2) throw StructuralError("block needs at least 2 entries");
    double sum = 0;
    for (double v : b) {
      if (!std::isfinite(v)) throw DomainError("non-finite profile entry");
      if (v < -kSimplexTol)
        throw DomainError("profile entry below -1e-12");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
      throw DomainError("profile block does not sum to 1 within 1e-12");
    // Re-project: clip negatives, renormalize.
    double clipped = 0;
    for (double& v : b) {
      if (v < 0) v = 0;
      clipped += v;
    }
    for (double& v : b) v /= clipped;
  }
}

MixedProfile MixedProfile::uniform(const std::vector<int>& action_counts) {
  std::vector<std::vector<double>> blocks;
  for (int m : action_counts)
    blocks.emplace_back(m, 1.0 / static_cast<double>(m));
  return MixedProfile(std::move(blocks));
}

MixedProfile MixedProfile::vertex(const std::vector<int>& action_counts,
                                  const std::vector<int>& actions) {
  if (action_counts.size() != actions.size())
    throw StructuralError("vertex action list length mismatch");
  std::vector<std::vector<double>> blocks;
  for (std::size_t i = 0; i < action_counts.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= action_counts[i])
      throw StructuralError("vertex action out of range");
    std::vector<double> b(action_counts[i], 0.0);
    b[actions[i]] = 1.0;
    blocks.push_back(std::move(b));
  }
  return MixedProfile(std::move(blocks));
}

MixedProfile MixedProfile::from_flat(const std::vector<int>& action_counts,
                                     const std::vector<double>& flat) {
  std::vector<std::vector<double>> blocks;
  std::size_t pos = 0;
  for (int m : action_counts) {
    if (pos + m > flat.size()) throw StructuralError("flat profile too short");
    blocks.emplace_back(flat.begin() + pos, flat.begin() + pos + m);
    pos += m;
  }
  if (pos != flat.size()) throw StructuralError("flat profile too long");
  return MixedProfile(std::move(blocks));
}

std::vector<double> MixedProfile::flat() const {
  std::vector<double> out;
  for (const auto& b : blocks_) out.insert(out.end(), b.begin(), b.end());
  return out;
}

int MixedProfile::dim() const {
  int d = 0;
  for (const auto& b : blocks_) d += static_cast<int>(b.size());
  return d;
}

double MixedProfile::distance_inf(const MixedProfile& a,
                                  const MixedProfile& b) {
  if (a.players() != b.players())
    throw StructuralError("profile player count mismatch");
  double d = 0;
  for (int i = 0; i < a.players(); ++i) {
    if (a.block(i).size() != b.block(i).size())
      throw StructuralError("profile block size mismatch");
    for (std::size_t k = 0; k < a.block(i).size(); ++k)
      d = std::max(d, std::abs(a.block(i)[k] - b.block(i)[k]));
  }
  return d;
}

TImage::TImage(std::vector<std::vector<double>> blocks)
    : blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    if (b.empty()) throw StructuralError("empty T-image block");
    double prev = 1.0 + kSimplexTol;
    for (double v : b) {
      if (!std::isfinite(v)) throw DomainError("non-finite T-image entry");
      if (v < -kSimplexTol || v > 1.0 + kSimplexTol)
        throw DomainError("T-image entry outside [0,1]");
      if (v > prev + kSimplexTol)
        throw DomainError("T-image block not nonincreasing");
      prev = v;
    }
  }
}

std::vector<double> TImage::flat() const {
  std::vector<double> out;
  for (const auto& b : blocks_) out.insert(out.end(), b.begin(), b.end());
  return out;
}

double expected_payoff(const Game& g, int i, const MixedProfile& x) {
  if (i < 0 || i >= g.players()) throw StructuralError("player out of range");
  if (x.players() != g.players())
    throw StructuralError("profile/game player count mismatch");
  for (int j = 0; j < g.players(); ++j)
    if (static_cast<int>(x.block(j).size()) != g.actions(j))
      throw StructuralError("profile block size mismatch with game");

  const int n = g.players();
  std::vector<int> a(n, 0);
  std::vector<int> all(n);
  std::iota(all.rbegin(), all.rend(), 0);  // innermost digit = last player
  double total = 0;
  do {
    double w = g.payoff_flat(i, g.index_of(a));
    for (int j = 0; j < n; ++j) w *= x.block(j)[a[j]];
    total += w;
  } while (advance(a, g.action_counts(), all));
  return total;
}

void marginal_payoff_raw(const Game& g, int i, const double* x, double* out) {
  const int n = g.players();
  const int mi = g.actions(i);
  for (int b = 0; b < mi; ++b) out[b] = 0;

  std::vector<int> a(n, 0);
  std::vector<int> others;
  for (int j = n - 1; j >= 0; --j)
    if (j != i) others.push_back(j);
  do {
    double w = 1.0;
    long base = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      w *= x[g.block_offset(j) + a[j]];
      base += a[j] * g.stride(j);
    }
    for (int b = 0; b < mi; ++b)
      out[b] += w * g.payoff_flat(i, base + b * g.stride(i));
  } while (advance(a, g.action_counts(), others));
}

std::vector<double> marginal_payoff_vector(
    const Game& g, int i, const std::vector<std::vector<double>>& opponents) {
  if (i < 0 || i >= g.players()) throw StructuralError("player out of range");
  if (static_cast<int>(opponents.size()) != g.players() - 1)
    throw StructuralError("expected one block per opponent");
  std::vector<double> x(g.dim(), 0.0);
  int k = 0;
  for (int j = 0; j < g.players(); ++j) {
    if (j == i) continue;
    if (static_cast<int>(opponents[k].size()) != g.actions(j))
      throw StructuralError("opponent block size mismatch");
    std::copy(opponents[k].begin(), opponents[k].end(),
              x.begin() + g.block_offset(j));
    ++k;
  }
  std::vector<double> out(g.actions(i));
  marginal_payoff_raw(g, i, x.data(), out.data());
  return out;
}

std::vector<double> marginal_payoff_vector(const Game& g, int i,
                                           const MixedProfile& x) {
  std::vector<std::vector<double>> opp;
  for (int j = 0; j < g.players(); ++j)
    if (j != i) opp.push_back(x.block(j));
  return marginal_payoff_vector(g, i, opp);
}

void pairwise_marginal_raw(const Game& g, int i, int j, const double* x,
                           double* out) {
  const int n = g.players();
  const int mi = g.actions(i), mj = g.actions(j);
  for (int k = 0; k < mi * mj; ++k) out[k] = 0;

  std::vector<int> a(n, 0);
  std::vector<int> rest;
  for (int k = n - 1; k >= 0; --k)
    if (k != i && k != j) rest.push_back(k);
  do {
    double w = 1.0;
    long base = 0;
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      w *= x[g.block_offset(k) + a[k]];
      base += a[k] * g.stride(k);
    }
    for (int b = 0; b < mi; ++b)
      for (int c = 0; c < mj; ++c)
        out[b * mj + c] +=
            w * g.payoff_flat(i, base + b * g.stride(i) + c * g.stride(j));
  } while (advance(a, g.action_counts(), rest));
}

SupermodularityResult is_supermodular(const Game& g, bool strict) {
  SupermodularityResult res;
  res.supermodular = true;
  res.strict = true;
  const int n = g.players();

  std::vector<int> a(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<int> rest;
      for (int k = n - 1; k >= 0; --k)
        if (k != i && k != j) rest.push_back(k);
      std::fill(a.begin(), a.end(), 0);
      do {
        for (int ahi = 1; ahi < g.actions(i); ++ahi)
          for (int alo = 0; alo < ahi; ++alo)
            for (int bhi = 1; bhi < g.actions(j); ++bhi)
              for (int blo = 0; blo < bhi; ++blo) {
                a[i] = ahi;
                a[j] = bhi;
                const double u_hh = g.payoff(i, a);
                a[i] = alo;
                const double u_lh = g.payoff(i, a);
                a[i] = ahi;
                a[j] = blo;
                const double u_hl = g.payoff(i, a);
                a[i] = alo;
                const double u_ll = g.payoff(i, a);
                a[i] = 0;
                a[j] = 0;
                const double gap = (u_hh - u_lh) - (u_hl - u_ll);
                res.min_gap = std::min(res.min_gap, gap);
                const bool weak_bad = gap < 0;
                const bool strict_bad = gap <= 0;
                if (weak_bad) res.supermodular = false;
                if (strict_bad) res.strict = false;
                const bool is_violation = strict ? strict_bad : weak_bad;
                if (is_violation && !res.witness) {
                  SupermodularityWitness w;
                  w.player = i + 1;
                  w.a_hi = ahi + 1;
                  w.a_lo = alo + 1;
                  w.other = j + 1;
                  w.b_hi = bhi + 1;
                  w.b_lo = blo + 1;
                  w.rest.assign(n, 0);
                  for (int k = 0; k < n; ++k)
                    if (k != i && k != j) w.rest[k] = a[k] + 1;
                  w.gap = gap;
                  res.witness = std::move(w);
                }
              }
      } while (advance(a, g.action_counts(), rest));
    }
  }
  if (res.strict && res.min_gap < 1e-9) res.near_tie = true;
  return res;
}

void t_block_raw(const double* x, int m, double* v) {
  double acc = 0;
  for (int j = m - 2; j >= 0; --j) {
    acc += x[j + 1];
    v[j] = acc;
  }
}

void t_inverse_block_raw(const double* v, int m, double* x) {
  x[0] = 1.0 - v[0];
  for (int j = 1; j <= m - 2; ++j) x[j] = v[j - 1] - v[j];
  x[m - 1] = v[m - 2];
}

TImage t_operator(const MixedProfile& x) {
  std::vector<std::vector<double>> out;
  for (const auto& b : x.blocks()) {
    std::vector<double> v(b.size() - 1);
    t_block_raw(b.data(), static_cast<int>(b.size()), v.data());
    out.push_back(std::move(v));
  }
  return TImage(std::move(out));
}

MixedProfile t_inverse(const TImage& v) {
  std::vector<std::vector<double>> out;
  for (const auto& b : v.blocks()) {
    std::vector<double> x(b.size() + 1);
    t_inverse_block_raw(b.data(), static_cast<int>(x.size()), x.data());
    out.push_back(std::move(x));
  }
  return MixedProfile(std::move(out));
}

bool t_leq(const TImage& vx, const TImage& vy) {
  if (vx.blocks().size() != vy.blocks().size())
    throw StructuralError("T-image block count mismatch");
  for (std::size_t i = 0; i < vx.blocks().size(); ++i) {
    const auto& a = vx.blocks()[i];
    const auto& b = vy.blocks()[i];
    if (a.size() != b.size())
      throw StructuralError("T-image block size mismatch");
    for (std::size_t k = 0; k < a.size(); ++k)
      if (!(a[k] <= b[k])) return false;
  }
  return true;
}

bool t_leq(const MixedProfile& x, const MixedProfile& y) {
  return t_leq(t_operator(x), t_operator(y));
}

}  // namespace sfp::games
