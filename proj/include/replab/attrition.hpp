#pragma once

// Discrete war of attrition. Strategy j in {0..n} persists up to cost c_j; the
// longer-persisting player wins the reward, ties share it:
//
//   b_jk = v_k - c_k           j > k
//          v_k/2 - c_k - rho_k j = k
//          -c_j                j < k
//
// With constant reward v, unit cost steps c_j = j and constant rho the unique
// ESS has a closed form in terms of the real sequence
//   u_{-1} = 0, u_0 = 1, u_k = -(2 rho + 1) u_{k-1} + gamma^2 u_{k-2},
//   gamma^2 = v^2/4 - rho^2,
// which equals (-i gamma)^k U_k(-i(2 rho + 1)/(2 gamma)) for the Chebyshev
// polynomials U_k of the second kind.
//
// Strategy indices are 0-based here, matching the game's own numbering.

#include <cstddef>
#include <optional>
#include <vector>

#include "replab/bounds.hpp"
#include "replab/game.hpp"

namespace replab {

struct AttritionSpec {
  std::size_t n = 1;  // strategies 0..n
  Vector costs;       // strictly increasing, costs[0] >= 0
  Vector rewards;     // nonincreasing, rewards[n] > 0
  Vector rho;         // 0 <= rho[k] < rewards[k]/2

  void validate() const;
  static AttritionSpec unperturbed(Vector costs, Vector rewards);
};

struct ConstantAttritionSpec {
  std::size_t n = 1;
  double v = 1.0;
  double rho = 0.0;

  void validate() const;
  double gamma_sq() const { return v * v / 4.0 - rho * rho; }
  AttritionSpec general() const;
};

// rho ignored: the unperturbed matrix.
PayoffMatrix build_payoff_5_1(const AttritionSpec& spec);
PayoffMatrix build_modified_5_3(const AttritionSpec& spec);
PayoffMatrix build_constant(const ConstantAttritionSpec& spec);

// Coefficients v_k - v_{k-1} - 2(c_k - c_{k-1}), k = 1..n, of the rank-one
// decomposition sum_k coef_k f_k f_k^T, where f_k has zeros in its first k-1
// entries and ones after.
Vector cnd_certificate(const AttritionSpec& spec);
// sum_k coef_k f_k f_k^T.
Matrix certificate_reconstruction(const AttritionSpec& spec);
// The n x n matrix v_min(j,k) - 2 c_min(j,k) - v_0 + 2 c_0, j, k = 1..n.
Matrix certificate_closed_form(const AttritionSpec& spec);
// (1/2)(a_jk + a_kj) - a_j0 - a_0k + a_00 of the unperturbed matrix, j, k = 1..n.
// Equals one half of certificate_closed_form.
Matrix reduced_symmetric_form(const AttritionSpec& spec);

// The s in {0..n-1} with n - 1 + rho <= v/2 + s < n + rho, or empty when
// v >= 2n + 2 rho (that boundary counts as the large-reward case).
std::optional<std::size_t> s_index_5_5(const ConstantAttritionSpec& spec);
bool is_large_reward(const ConstantAttritionSpec& spec);

double chebyshev_u(long k, double rho, double gamma_sq);
// u_{-1} .. u_kmax, so entry i holds u_{i-1}.
Vector chebyshev_u_table(long kmax, double rho, double gamma_sq);

struct ClosedFormEss {
  SimplexPoint p;
  std::optional<std::size_t> s;
  std::optional<double> c;        // normalizing constant, empty in the large-reward case
  std::optional<double> c_check;  // -t_{s+2} + (v/2 - rho) t_{s+1}
};

// Throws NumericalError when the two expressions for c disagree beyond 1e-9
// relative, a weight is below -1e-12, or the weights miss 1 by more than 1e-10.
ClosedFormEss closed_form_ess(const ConstantAttritionSpec& spec);

// t_j = u_j + (s+1-n+v/2+rho) u_{j-1} + (s+1-n)(v/2+rho) u_{j-2}, j >= 1.
double t_sequence(std::size_t j, std::size_t s, const ConstantAttritionSpec& spec);

// {j < n : c_j >= c_n + rho_n - v_n/2}; these weights vanish in the ESS.
std::vector<std::size_t> support_threshold_5_2(const AttritionSpec& spec);

// Determinant of the modified matrix with column k replaced by ones, via the
// product formula and the reduction to a trailing principal block.
double det_column_replaced_5_3(const AttritionSpec& spec, std::size_t k);
// Column-replaced matrix itself, for direct evaluation.
Matrix column_replaced(const PayoffMatrix& b, std::size_t k);

// (v/2 - rho)(u_n + (v/2 + rho) u_{n-1}).
double det_B_5_4(const ConstantAttritionSpec& spec);

// Determinant of the n x n tridiagonal matrix with x on the diagonal, gamma1
// above it and -gamma2 below it, by D_n = x D_{n-1} + gamma1 gamma2 D_{n-2}.
double tridiag_det_A1(double x, double gamma1, double gamma2, std::size_t n);
Matrix tridiag_matrix_A1(double x, double gamma1, double gamma2, std::size_t n);

struct SweepGrid {
  std::size_t n_min = 1;
  std::size_t n_max = 8;
  double v_step = 0.25;
  std::vector<double> rho_fractions{0.0, 0.1, 0.2, 0.4};  // rho = fraction * v
  std::optional<double> v_max;  // default 2n + 2 rho + 1 per (n, fraction)
};

struct SweepRow {
  ConstantAttritionSpec spec;
  ClosedFormEss ess;
  bool perturbed = false;  // v nudged by 1e-9 off a degenerate support boundary
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t perturbed = 0;
};

SweepResult ess_sweep(const SweepGrid& grid);

// Finite-horizon persistence proxy for the maximum-effort strategy n: the
// fraction of paths on which X_n exceeds p_n/2 at some grid time in the final
// quarter of the horizon, p the closed-form ESS. Consistent when that fraction
// is at least 1 - eps_target - 3 SE. details reports whether sigma satisfies
// the sufficient inequalities sigma_max^2/|lam2| < p_n^2 eps/8 and whether the
// window starts after t0 = 16 d(x0, p)/(|lam2| p_n^2 eps).
BoundReport persistence_experiment(const ConstantAttritionSpec& spec, const NoiseSpec& sigma,
                                   const SimplexPoint& x0, const CampaignOptions& opt,
                                   double eps_target = 0.05);

}  // namespace replab
