#pragma once

// Dense reference implementation used only by the tests.
//
// Everything here is recomputed from vertex coordinates: barycentric basis
// functions from a 3x3 solve, a collapsed (Duffy) 5x5 Gauss-Legendre rule,
// dense global matrices and a partial-pivoting LU. Intended for meshes of at
// most a few hundred vertices.

#include <functional>
#include <span>
#include <vector>

#include "chemrep/mesh.hpp"
#include "chemrep/regularization.hpp"
#include "chemrep/schemes.hpp"

namespace oracle {

using chemrep::Index;
using chemrep::Mesh;

inline constexpr int kMaxVertices = 200;

struct Dense {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Dense() = default;
  Dense(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  std::vector<double> apply(std::span<const double> x) const;
  double quadratic(std::span<const double> x) const;
};

/// Point on the reference triangle as barycentrics plus weight (sum 1).
struct QPoint {
  double l[3];
  double w;
};
/// Collapsed Gauss-Legendre rule, 25 points, exact to total degree 8.
const std::vector<QPoint>& duffy_rule();

/// P1 basis on one triangle: phi_i = c_i + g_i . x.
struct Basis {
  double area = 0.0;
  double c[3]{};
  double gx[3]{};
  double gy[3]{};
};
Basis basis(const Mesh& mesh, Index k);

/// Vector dof flags (2N): edge with normal x constrains sigma_1, normal y
/// constrains sigma_2; corners both.
std::vector<char> constrained_dofs(const Mesh& mesh);

/// Generic element-by-element assembly of a dense matrix.
/// kernel(k, basis, out) fills a local (lr x lc) block; dof maps are scalar
/// (one per vertex) or vector (two per vertex, blocked).
Dense dense_assemble(const Mesh& mesh, bool vector_rows, bool vector_cols,
                     const std::function<void(Index, const Basis&, std::vector<double>&)>& kernel);

Dense mass(const Mesh& mesh);
Dense lumped(const Mesh& mesh);
Dense stiffness(const Mesh& mesh);
Dense vector_mass(const Mesh& mesh);
/// R^T W R + D^T W D + M_sigma, unconstrained.
Dense b_operator(const Mesh& mesh);

/// Coefficient given nodally (P1); integrated with the Duffy rule.
Dense weighted_grad_grad(const Mesh& mesh, std::span<const double> c);
Dense weighted_mass(const Mesh& mesh, std::span<const double> c);
/// (c psi_j, grad phi_i): rows vector, cols scalar, constrained rows zero.
Dense weighted_vector_grad(const Mesh& mesh, std::span<const double> c);
/// (Lambda_K grad phi_j, grad phi_i), Lambda_K constant per element.
Dense tensor_stiffness(const Mesh& mesh, std::span<const chemrep::ElementLambda> lambda);

/// Solves a x = b by LU with partial pivoting.
std::vector<double> lu_solve(Dense a, std::vector<double> b);

/// Left-hand side minus right-hand side of the scheme's discrete energy law,
/// recomputed densely (positive means the law is violated). uzsw returns the
/// signed equality residual.
double energy_law_residual(const Mesh& mesh, const chemrep::SchemeState& prev,
                           const chemrep::SchemeState& next);

}  // namespace oracle
