#include "sfp/response.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace sfp::response {

std::vector<double> logit_choice(const std::vector<double>& pi, double eta) {
  if (!(eta > 0)) throw DomainError("logit eta must be positive");
  if (pi.empty()) throw StructuralError("empty payoff vector");
  double top = pi[0];
  for (double v : pi) {
    if (!std::isfinite(v)) throw DomainError("non-finite payoff entry");
    top = std::max(top, v);
  }
  std::vector<double> out(pi.size());
  double sum = 0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    out[k] = std::exp((pi[k] - top) / eta);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

Eigen::MatrixXd logit_choice_jacobian(const std::vector<double>& pi,
                                      double eta) {
  const std::vector<double> L = logit_choice(pi, eta);
  const int m = static_cast<int>(L.size());
  Eigen::MatrixXd J(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      J(a, b) = ((a == b ? L[a] : 0.0) - L[a] * L[b]) / eta;
  return J;
}

ChoiceSpec ChoiceSpec::logit(double eta) {
  if (!(eta > 0)) throw DomainError("logit eta must be positive");
  ChoiceSpec c;
  c.is_logit_ = true;
  c.eta_ = eta;
  c.name_ = "logit";
  return c;
}

ChoiceSpec ChoiceSpec::custom(CustomChoice cc) {
  if (!cc.value) throw StructuralError("custom choice needs a value map");
  if (cc.name.empty()) throw StructuralError("custom choice needs a name");
  ChoiceSpec c;
  c.is_logit_ = false;
  c.name_ = cc.name;
  c.custom_ = std::make_shared<const CustomChoice>(std::move(cc));
  return c;
}

bool ChoiceSpec::has_jacobian() const {
  return is_logit_ || static_cast<bool>(custom_->jacobian);
}

std::vector<double> ChoiceSpec::value(const std::vector<double>& pi) const {
  if (is_logit_) return logit_choice(pi, eta_);
  std::vector<double> out = custom_->value(pi);
  if (out.size() != pi.size())
    throw StructuralError("custom choice changed the block size");
  double sum = 0;
  for (double v : out) {
    if (!(v > 0)) throw DomainError("custom choice left the open simplex");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DomainError("custom choice output does not sum to 1");
  return out;
}

Eigen::MatrixXd ChoiceSpec::jacobian(const std::vector<double>& pi) const {
  if (is_logit_) return logit_choice_jacobian(pi, eta_);
  if (!custom_->jacobian)
    throw DomainError("choice map has no derivative registered");
  return custom_->jacobian(pi);
}

namespace {
std::mutex registry_mu;
std::map<std::string, CustomChoice>& registry() {
  static std::map<std::string, CustomChoice> r;
  return r;
}
}  // namespace

void register_custom_choice(const CustomChoice& c) {
  std::lock_guard<std::mutex> lock(registry_mu);
  registry()[c.name] = c;
}

ChoiceSpec lookup_custom_choice(const std::string& name) {
  std::lock_guard<std::mutex> lock(registry_mu);
  auto it = registry().find(name);
  if (it == registry().end())
    throw ConfigError("unknown custom choice map: " + name);
  return ChoiceSpec::custom(it->second);
}

BestResponseField::BestResponseField(games::Game g,
                                     std::vector<ChoiceSpec> choices)
    : game_(std::move(g)), choices_(std::move(choices)) {
  if (static_cast<int>(choices_.size()) != game_.players())
    throw StructuralError("one choice spec per player required");
  const int n = game_.players();
  t_mat_ = Eigen::MatrixXd::Zero(game_.t_dim(), game_.dim());
  tinv_mat_ = Eigen::MatrixXd::Zero(game_.dim(), game_.t_dim());
  int row = 0, col = 0;
  for (int i = 0; i < n; ++i) {
    const int m = game_.actions(i);
    const int off = game_.block_offset(i);
    for (int j = 0; j < m - 1; ++j)
      for (int k = j + 1; k < m; ++k) t_mat_(row + j, off + k) = 1.0;
    tinv_mat_(off + 0, col + 0) = -1.0;
    for (int j = 1; j <= m - 2; ++j) {
      tinv_mat_(off + j, col + j - 1) = 1.0;
      tinv_mat_(off + j, col + j) = -1.0;
    }
    tinv_mat_(off + m - 1, col + m - 2) = 1.0;
    row += m - 1;
    col += m - 1;
  }
}

BestResponseField::BestResponseField(games::Game g, double eta)
    : BestResponseField([&] {
        const int n = g.players();
        return BestResponseField(
            std::move(g), std::vector<ChoiceSpec>(n, ChoiceSpec::logit(eta)));
      }()) {}

bool BestResponseField::has_jacobian() const {
  return std::all_of(choices_.begin(), choices_.end(),
                     [](const ChoiceSpec& c) { return c.has_jacobian(); });
}

void BestResponseField::br_raw(const double* x, double* out) const {
  const int n = game_.players();
  std::vector<double> pi;
  for (int i = 0; i < n; ++i) {
    pi.resize(game_.actions(i));
    games::marginal_payoff_raw(game_, i, x, pi.data());
    const std::vector<double> b = choices_[i].value(pi);
    std::copy(b.begin(), b.end(), out + game_.block_offset(i));
  }
}

void BestResponseField::field_raw(const double* x, double* out) const {
  br_raw(x, out);
  for (int d = 0; d < game_.dim(); ++d) out[d] -= x[d];
}

games::MixedProfile BestResponseField::best_response(
    const games::MixedProfile& x) const {
  if (x.players() != game_.players())
    throw StructuralError("profile/game player count mismatch");
  const std::vector<double> flat = x.flat();
  if (static_cast<int>(flat.size()) != game_.dim())
    throw StructuralError("profile dimension mismatch with game");
  std::vector<double> out(game_.dim());
  br_raw(flat.data(), out.data());
  return games::MixedProfile::from_flat(game_.action_counts(), out);
}

std::vector<double> BestResponseField::vector_field(
    const games::MixedProfile& x) const {
  const std::vector<double> flat = x.flat();
  if (static_cast<int>(flat.size()) != game_.dim())
    throw StructuralError("profile dimension mismatch with game");
  std::vector<double> out(game_.dim());
  field_raw(flat.data(), out.data());
  return out;
}

Eigen::MatrixXd BestResponseField::br_jacobian_raw(const double* x) const {
  const int n = game_.players();
  const int d = game_.dim();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> pi, pair;
  for (int i = 0; i < n; ++i) {
    const int mi = game_.actions(i);
    pi.resize(mi);
    games::marginal_payoff_raw(game_, i, x, pi.data());
    const Eigen::MatrixXd DL = choices_[i].jacobian(pi);
    if (DL.rows() != mi || DL.cols() != mi)
      throw StructuralError("choice jacobian has the wrong shape");
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;  // diagonal blocks of D(br) stay exactly zero
      const int mj = game_.actions(j);
      pair.resize(static_cast<std::size_t>(mi) * mj);
      games::pairwise_marginal_raw(game_, i, j, x, pair.data());
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          P(pair.data(), mi, mj);
      J.block(game_.block_offset(i), game_.block_offset(j), mi, mj) = DL * P;
    }
  }
  return J;
}

Eigen::MatrixXd BestResponseField::jacobian_raw(const double* x) const {
  Eigen::MatrixXd J = br_jacobian_raw(x);
  J.diagonal().array() -= 1.0;
  return J;
}

Eigen::MatrixXd BestResponseField::jacobian(
    const games::MixedProfile& x) const {
  const std::vector<double> flat = x.flat();
  if (static_cast<int>(flat.size()) != game_.dim())
    throw StructuralError("profile dimension mismatch with game");
  return jacobian_raw(flat.data());
}

void BestResponseField::conjugate_raw(const double* v, double* out) const {
  const int n = game_.players();
  std::vector<double> x(game_.dim());
  int col = 0;
  for (int i = 0; i < n; ++i) {
    const int m = game_.actions(i);
    games::t_inverse_block_raw(v + col, m, x.data() + game_.block_offset(i));
    col += m - 1;
  }
  std::vector<double> w(game_.dim());
  br_raw(x.data(), w.data());
  col = 0;
  for (int i = 0; i < n; ++i) {
    const int m = game_.actions(i);
    games::t_block_raw(w.data() + game_.block_offset(i), m, out + col);
    for (int j = 0; j < m - 1; ++j) out[col + j] -= v[col + j];
    col += m - 1;
  }
}

std::vector<double> BestResponseField::conjugate_field(
    const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != game_.t_dim())
    throw StructuralError("T-coordinate dimension mismatch");
  std::vector<double> out(game_.t_dim());
  conjugate_raw(v.data(), out.data());
  return out;
}

Eigen::MatrixXd BestResponseField::conjugate_jacobian_raw(
    const double* v) const {
  std::vector<double> x(game_.dim());
  int col = 0;
  for (int i = 0; i < game_.players(); ++i) {
    const int m = game_.actions(i);
    games::t_inverse_block_raw(v + col, m, x.data() + game_.block_offset(i));
    col += m - 1;
  }
  const Eigen::MatrixXd Dbr = br_jacobian_raw(x.data());
  Eigen::MatrixXd J = t_mat_ * Dbr * tinv_mat_;
  J.diagonal().array() -= 1.0;
  return J;
}

Eigen::MatrixXd BestResponseField::conjugate_jacobian(
    const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != game_.t_dim())
    throw StructuralError("T-coordinate dimension mismatch");
  return conjugate_jacobian_raw(v.data());
}

}  // namespace sfp::response
