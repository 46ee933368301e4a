#pragma once

// Truncated entropy potential F_eps and its per-element chain-rule matrix.
//
// lambda_eps clamps s to [eps, 1/eps]; F_eps'' = 1/lambda_eps, integrated
// twice with F_eps(1) = F_eps'(1) = 0. All functions are total on the reals,
// so negative densities are legal inputs.

#include <array>
#include <span>
#include <vector>

#include "chemrep/exec.hpp"
#include "chemrep/mesh.hpp"
#include "chemrep/small_matrix.hpp"

namespace chemrep {

/// Regularization parameters: eps in (0,1), a_shift > 0 (UZSW only).
struct RegParams {
  double eps = 1e-3;
  double a_shift = 1.0;

  /// Throws ConfigError if eps is outside (0,1) or a_shift <= 0.
  void validate() const;
};

double lambda_eps(double s, const RegParams& p);
double f_eps(double s, const RegParams& p);
double fp_eps(double s, const RegParams& p);
double fpp_eps(double s, const RegParams& p);

/// F_eps'(a) - F_eps'(b), integrated branch by branch so that close
/// arguments do not cancel.
double fp_eps_difference(double a, double b, const RegParams& p);

/// Relative gap below which lambda_hat switches to lambda_eps(midpoint).
inline constexpr double kDividedDifferenceThreshold = 1e-12;

/// (a - b) / (F'(a) - F'(b)), or lambda_eps((a+b)/2) when a and b are
/// closer than kDividedDifferenceThreshold * max(1, |a|, |b|).
/// Always in [eps, 1/eps] up to rounding.
double lambda_hat(double a, double b, const RegParams& p);

/// Partial derivatives of lambda_hat in a and b. Near the diagonal (relative
/// gap below 1e-6) both are taken as lambda_eps'((a+b)/2) / 2.
std::array<double, 2> lambda_hat_partials(double a, double b, const RegParams& p);

/// Element-constant matrix sum_i coef_i * leg_i * leg_i^T, with leg_i the
/// unit leg directions of a right triangle.
struct ElementLambda {
  std::array<Vec2, 2> legs{};
  std::array<double, 2> coef{};

  Sym2 matrix() const;
  Vec2 apply(Vec2 g) const { return matrix().apply(g); }
};

/// Builds Lambda_eps(u) on triangle k: coef_i = lambda_hat(u(p_i), u(p_0)).
/// With no fallback, Lambda * grad(Pi F'(u)) == grad(u) on the element.
ElementLambda build_element_lambda(const Mesh& mesh, Index k, std::span<const double> u,
                                   const RegParams& p);

/// Lambda_eps(u) on every element; the parallel path is element-wise and
/// produces identical results.
std::vector<ElementLambda> build_lambda_field(const Mesh& mesh, std::span<const double> u,
                                              const RegParams& p, Exec exec = Exec::parallel);

}  // namespace chemrep
