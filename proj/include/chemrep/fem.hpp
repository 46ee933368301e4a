#pragma once

// P1 finite elements on a structured right-triangle mesh.
//
// Scalar fields hold one value per vertex. Vector fields use a blocked
// layout [s1(0..N-1), s2(0..N-1)]; the normal component is constrained to
// zero at boundary vertices (both components at corners).

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "chemrep/exec.hpp"
#include "chemrep/linalg.hpp"
#include "chemrep/mesh.hpp"
#include "chemrep/regularization.hpp"
#include "chemrep/small_matrix.hpp"

namespace chemrep {

using ScalarField = std::vector<double>;
using VectorField = std::vector<double>;

using PointFunction = std::function<double(double x, double y)>;
using GradFunction = std::function<Vec2(double x, double y)>;

struct QuadraturePoint {
  std::array<double, 3> bary{};
  double weight = 0.0;  // relative to the element area; weights sum to 1
};

/// Symmetric 6-point rule on triangles, exact for polynomials of degree 4.
std::span<const QuadraturePoint> quadrature_rule();
inline constexpr int kQuadratureDegree = 4;
inline constexpr int kQuadraturePoints = 6;

/// Area and constant P1 basis gradients of one triangle.
struct ElementGeometry {
  double area = 0.0;
  std::array<Vec2, 3> grad{};
};
ElementGeometry element_geometry(const Mesh& mesh, Index k);

/// Nodal interpolation Pi^h f. Throws InputError on a non-finite value.
ScalarField interp_nodal(const PointFunction& f, const Mesh& mesh);

/// (a, b)^h = sum_j m_j a_j b_j.
double lumped_product(const Mesh& mesh, std::span<const double> a, std::span<const double> b);

enum class Space { scalar, vector, element };

/// Precomputed sparsity and scatter/gather maps for one (row, col) space pair.
///
/// Element k contributes a dense local block; dest[k][l] is its slot in the
/// CSR value array. The serial path scatters element by element; the parallel
/// path gathers per nonzero over the same contributions in ascending element
/// order, so both produce bit-identical values.
class AssemblyPlan {
 public:
  AssemblyPlan(const Mesh& mesh, Space rows, Space cols);

  int local_rows() const { return local_rows_; }
  int local_cols() const { return local_cols_; }
  int local_size() const { return local_rows_ * local_cols_; }

  /// local holds num_triangles blocks of local_size() values, row-major.
  linalg::SparseMatrix reduce(std::span<const double> local, Exec exec) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int local_rows_ = 0;
  int local_cols_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<int> dest_;          // one per local entry, element-major
  std::vector<int> gather_ptr_;    // per nonzero, into gather_src_
  std::vector<int> gather_src_;    // indices into the local array
};

/// Assembled operators and quadrature data for one mesh.
///
/// Constant operators are built once. Weighted forms take coefficient values
/// at quadrature points, element-major (num_triangles * kQuadraturePoints).
class Discretization {
 public:
  explicit Discretization(const Mesh& mesh, Exec exec = Exec::parallel);

  const Mesh& mesh() const { return mesh_; }
  Exec exec() const { return exec_; }
  int n() const { return mesh_.num_vertices(); }

  const linalg::SparseMatrix& mass() const { return mass_; }
  std::span<const double> lumped() const { return mesh_.lumped_weights(); }
  const linalg::SparseMatrix& stiffness() const { return stiffness_; }
  /// Unconstrained vector mass, block diagonal [M 0; 0 M].
  const linalg::SparseMatrix& vector_mass() const { return vector_mass_; }
  /// Element-constant rot and div: (num_triangles x 2N).
  const linalg::SparseMatrix& rot() const { return rot_; }
  const linalg::SparseMatrix& div() const { return div_; }
  /// R^T W R + D^T W D + M_sigma with W = diag(area), unconstrained.
  const linalg::SparseMatrix& b_operator() const { return b_operator_; }
  std::span<const double> areas() const { return areas_; }

  /// One flag per vector dof (2N).
  std::span<const unsigned char> constrained() const { return constrained_; }

  linalg::SparseMatrix weighted_grad_grad(std::span<const double> coeff) const;
  linalg::SparseMatrix weighted_mass(std::span<const double> coeff) const;
  /// (c psi_j, grad phi_i) with rows vector, cols scalar; constrained rows are zero.
  linalg::SparseMatrix weighted_vector_grad(std::span<const double> coeff) const;
  /// Transpose pair of weighted_vector_grad, built from the same local values.
  linalg::SparseMatrix weighted_grad_vector(std::span<const double> coeff) const;
  /// (phi_j c, grad phi_i) for a vector coefficient c; scalar rows and cols.
  linalg::SparseMatrix weighted_value_grad(std::span<const Vec2> coeff) const;
  /// (c_a phi_j, phi_i) for vector dof (a, i) and scalar dof j; constrained rows are zero.
  linalg::SparseMatrix weighted_vector_value(std::span<const Vec2> coeff) const;
  /// (Lambda_K grad phi_j, grad phi_i) with Lambda constant per element.
  linalg::SparseMatrix tensor_stiffness(std::span<const ElementLambda> lambda) const;

  /// P1 field values at every quadrature point.
  std::vector<double> at_quadrature(std::span<const double> field) const;
  std::vector<double> map_at_quadrature(std::span<const double> field,
                                        const std::function<double(double)>& g) const;
  /// Quadrature of g(u_h) over the domain.
  double integrate(std::span<const double> field, const std::function<double(double)>& g) const;
  /// Quadrature of f over the domain.
  double integrate(const PointFunction& f) const;

  /// (f, phi_j), (grad f, grad phi_j), and (F, psi_j) with constrained entries zeroed.
  std::vector<double> load(const PointFunction& f) const;
  std::vector<double> load_grad(const GradFunction& grad_f) const;
  std::vector<double> load_vector(const GradFunction& f) const;

  /// Symmetric elimination on a 2N x 2N operator: constrained rows and
  /// columns zeroed, unit diagonal, rhs entry zeroed.
  void constrain_system(linalg::SparseMatrix& a, std::span<double> rhs) const;
  void constrain_rows(linalg::SparseMatrix& a) const;
  void constrain_cols(linalg::SparseMatrix& a) const;
  void constrain_vector(std::span<double> sigma) const;

 private:
  std::vector<double> local_blocks(const AssemblyPlan& plan,
                                   const std::function<void(Index, double*)>& kernel) const;

  Mesh mesh_;
  Exec exec_;
  std::vector<ElementGeometry> geom_;
  std::vector<double> areas_;
  std::vector<unsigned char> constrained_;
  AssemblyPlan plan_ss_;
  AssemblyPlan plan_vv_;
  AssemblyPlan plan_vs_;
  AssemblyPlan plan_sv_;
  AssemblyPlan plan_ev_;
  linalg::SparseMatrix mass_;
  linalg::SparseMatrix stiffness_;
  linalg::SparseMatrix vector_mass_;
  linalg::SparseMatrix rot_;
  linalg::SparseMatrix div_;
  linalg::SparseMatrix b_operator_;
};

/// Lumped L2 projection: (f, phi_j) / m_j.
ScalarField project_Qh(const PointFunction& f, const Discretization& disc);
/// H1 projection: (K + M) x = (grad f, grad phi) + (f, phi).
ScalarField project_Rh(const PointFunction& f, const GradFunction& grad_f,
                       const Discretization& disc);
/// Consistent L2 projection onto the scalar space.
ScalarField project_L2(const PointFunction& f, const Discretization& disc);
/// Consistent L2 projection onto the constrained vector space.
VectorField project_L2_vector(const GradFunction& f, const Discretization& disc);

/// ||(A_h - I) v||_0^2 = (Kv)^T M^{-1} (Kv).
double ah_defect_norm_sq(const Discretization& disc, std::span<const double> v);

}  // namespace chemrep
