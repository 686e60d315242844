#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sfp/errors.hpp"

// Finite normal-form games, mixed profiles on products of simplices, and the
// tail-sum change of coordinates that turns stochastic-dominance comparisons
// into componentwise ones.
//
// Conventions: players and actions are 0-based everywhere in code; witness
// structs meant for reporting carry 1-based action numbers and say so.

namespace sfp::games {

inline constexpr double kSimplexTol = 1e-12;
inline constexpr long kMaxProfileCount = 10000;  // desk scale

class Game {
 public:
  // payoffs[i] is player i's payoff tensor, flattened row-major in player
  // order: index = sum_j a_j * stride_j with stride_j = prod_{k>j} m_k.
  Game(std::vector<int> actions, std::vector<std::vector<double>> payoffs);

  int players() const { return static_cast<int>(m_.size()); }
  int actions(int i) const { return m_[i]; }
  const std::vector<int>& action_counts() const { return m_; }
  long profile_count() const { return profiles_; }
  long stride(int i) const { return stride_[i]; }

  long index_of(const std::vector<int>& a) const;
  double payoff(int i, const std::vector<int>& a) const {
    return u_[i][index_of(a)];
  }
  double payoff_flat(int i, long idx) const { return u_[i][idx]; }
  const std::vector<double>& table(int i) const { return u_[i]; }

  int dim() const { return dim_; }          // sum of m_i
  int t_dim() const { return dim_ - players(); }
  int block_offset(int i) const { return offset_[i]; }

 private:
  std::vector<int> m_;
  std::vector<long> stride_;
  std::vector<int> offset_;
  std::vector<std::vector<double>> u_;
  long profiles_ = 0;
  int dim_ = 0;
};

class MixedProfile {
 public:
  // Validates each block to kSimplexTol (entries >= -tol, sums within tol
  // of 1), then re-projects to the exact simplex: clip negatives, renormalize.
  explicit MixedProfile(std::vector<std::vector<double>> blocks);

  static MixedProfile uniform(const std::vector<int>& action_counts);
  // actions are 0-based here.
  static MixedProfile vertex(const std::vector<int>& action_counts,
                             const std::vector<int>& actions);
  static MixedProfile from_flat(const std::vector<int>& action_counts,
                                const std::vector<double>& flat);

  int players() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<double>>& blocks() const { return blocks_; }
  const std::vector<double>& block(int i) const { return blocks_[i]; }
  std::vector<double> flat() const;
  int dim() const;

  // Largest |entry| difference across all blocks.
  static double distance_inf(const MixedProfile& a, const MixedProfile& b);

 private:
  std::vector<std::vector<double>> blocks_;
};

// Image of a profile under the tail-sum operator; blocks have length m_i - 1,
// entries in [0,1] and nonincreasing within kSimplexTol.
class TImage {
 public:
  explicit TImage(std::vector<std::vector<double>> blocks);

  const std::vector<std::vector<double>>& blocks() const { return blocks_; }
  std::vector<double> flat() const;

 private:
  std::vector<std::vector<double>>& mutable_blocks() { return blocks_; }
  std::vector<std::vector<double>> blocks_;
};

double expected_payoff(const Game& g, int i, const MixedProfile& x);

// Payoff of each pure action of player i against the opponents' mixture.
// `opponents` holds the other players' blocks in player order (size N-1).
std::vector<double> marginal_payoff_vector(
    const Game& g, int i, const std::vector<std::vector<double>>& opponents);
// Convenience overload: uses x's blocks, ignoring block i.
std::vector<double> marginal_payoff_vector(const Game& g, int i,
                                           const MixedProfile& x);

// Raw kernel used by integrators: x is the flattened profile (block i is
// ignored), out has length m_i. No simplex validation; the multilinear
// formula extends off the simplex.
void marginal_payoff_raw(const Game& g, int i, const double* x, double* out);

// out[b * m_j + c] = payoff to player i of (i plays b, j plays c) with the
// remaining players at x. Used for Jacobian assembly.
void pairwise_marginal_raw(const Game& g, int i, int j, const double* x,
                           double* out);

// Witness for a failed supermodularity comparison. Action numbers are
// 1-based for reporting; `rest` lists the fixed actions of every player
// (entries for `player` and `other` are 0).
struct SupermodularityWitness {
  int player = 0;
  int a_hi = 0, a_lo = 0;  // player's action pair, a_hi > a_lo
  int b_hi = 0, b_lo = 0;  // other's action pair, b_hi > b_lo
  int other = 0;
  std::vector<int> rest;
  double gap = 0.0;  // the offending difference-of-differences
};

struct SupermodularityResult {
  bool supermodular = false;  // weak inequalities all hold
  bool strict = false;        // strict inequalities all hold
  // Smallest difference-of-differences over all compared tuples.
  double min_gap = std::numeric_limits<double>::infinity();
  // Strict holds but the smallest margin is below 1e-9: borderline game.
  bool near_tie = false;
  // First violating tuple for the requested mode, if any.
  std::optional<SupermodularityWitness> witness;
};

// Brute-force check over every (player i, action pair of i, other player j,
// action pair of j, context of the rest). `strict` asks for strict
// inequalities with margin exactly 0.
SupermodularityResult is_supermodular(const Game& g, bool strict);

TImage t_operator(const MixedProfile& x);
MixedProfile t_inverse(const TImage& v);

// Raw per-block kernels (no validation); x has length m, v has length m-1.
void t_block_raw(const double* x, int m, double* v);
void t_inverse_block_raw(const double* v, int m, double* x);

// Componentwise T(x) <= T(y), exact comparison on stored reals.
bool t_leq(const MixedProfile& x, const MixedProfile& y);
bool t_leq(const TImage& vx, const TImage& vy);

}  // namespace sfp::games
