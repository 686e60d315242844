#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sfp/game.hpp"

// Smoothed best responses and the perturbed best-response vector field
// F(x) = br(x) - x, with analytic Jacobians and the conjugate dynamic in
// tail-sum coordinates.

namespace sfp::response {

// Softmax of pi/eta with max subtraction; eta > 0. Output is interior and
// sums to 1.
std::vector<double> logit_choice(const std::vector<double>& pi, double eta);

// d(logit)/d(pi) = (diag(L) - L L^T) / eta.
Eigen::MatrixXd logit_choice_jacobian(const std::vector<double>& pi,
                                      double eta);

struct CustomChoice {
  std::string name;
  // payoff vector -> interior simplex point (checked at call sites)
  std::function<std::vector<double>(const std::vector<double>&)> value;
  // optional: m x m derivative, rows index outputs
  std::function<Eigen::MatrixXd(const std::vector<double>&)> jacobian;
};

class ChoiceSpec {
 public:
  static ChoiceSpec logit(double eta);
  static ChoiceSpec custom(CustomChoice c);

  bool is_logit() const { return is_logit_; }
  double eta() const { return eta_; }
  const std::string& name() const { return name_; }
  bool has_jacobian() const;

  std::vector<double> value(const std::vector<double>& pi) const;
  Eigen::MatrixXd jacobian(const std::vector<double>& pi) const;

 private:
  ChoiceSpec() = default;
  bool is_logit_ = true;
  double eta_ = 1.0;
  std::string name_;
  std::shared_ptr<const CustomChoice> custom_;
};

// Named registry so configuration files can refer to custom choice maps.
void register_custom_choice(const CustomChoice& c);
ChoiceSpec lookup_custom_choice(const std::string& name);

class BestResponseField {
 public:
  BestResponseField(games::Game g, std::vector<ChoiceSpec> choices);
  // One logit spec shared by every player.
  BestResponseField(games::Game g, double eta);

  const games::Game& game() const { return game_; }
  const std::vector<ChoiceSpec>& choices() const { return choices_; }
  int dim() const { return game_.dim(); }
  int t_dim() const { return game_.t_dim(); }
  bool has_jacobian() const;

  games::MixedProfile best_response(const games::MixedProfile& x) const;
  // Flattened br(x) - x.
  std::vector<double> vector_field(const games::MixedProfile& x) const;
  // Full-coordinate Jacobian of F at x; diagonal blocks of D(br) are
  // exactly zero (br_i does not read block i).
  Eigen::MatrixXd jacobian(const games::MixedProfile& x) const;

  // Conjugate dynamic v -> T(br(T^{-1} v)) - v on tail-sum coordinates.
  std::vector<double> conjugate_field(const std::vector<double>& v) const;
  Eigen::MatrixXd conjugate_jacobian(const std::vector<double>& v) const;

  // Raw kernels for integrators: no simplex validation, formulas extended
  // multilinearly off the simplex. Buffers are caller-provided.
  void br_raw(const double* x, double* out) const;
  void field_raw(const double* x, double* out) const;
  void conjugate_raw(const double* v, double* out) const;
  Eigen::MatrixXd jacobian_raw(const double* x) const;
  Eigen::MatrixXd br_jacobian_raw(const double* x) const;
  Eigen::MatrixXd conjugate_jacobian_raw(const double* v) const;

  // Constant block matrices of the tail-sum change of coordinates.
  const Eigen::MatrixXd& t_matrix() const { return t_mat_; }
  const Eigen::MatrixXd& t_inverse_matrix() const { return tinv_mat_; }

 private:
  games::Game game_;
  std::vector<ChoiceSpec> choices_;
  Eigen::MatrixXd t_mat_;     // t_dim x dim
  Eigen::MatrixXd tinv_mat_;  // dim x t_dim (linear part)
};

}  // namespace sfp::response
