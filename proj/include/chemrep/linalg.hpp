#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chemrep/exec.hpp"

namespace chemrep::linalg {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed sparse row matrix. Column indices are sorted within each row
/// and unique. Explicit zeros are allowed (constraint elimination keeps the
/// pattern).
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Validates the CSR invariants; throws std::invalid_argument otherwise.
  SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
               std::vector<double> values);

  /// Duplicates are summed in input order after a stable sort by (row, col).
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);
  static SparseMatrix diagonal(std::span<const double> d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }

  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values_mut() { return values_; }

  /// Entry (r, c), zero if outside the pattern.
  double at(int r, int c) const;
  /// Position of (r, c) in values(), or -1.
  int find(int r, int c) const;

  /// y = A x. Row-parallel; bit-identical for both policies.
  void multiply(std::span<const double> x, std::span<double> y, Exec exec = Exec::parallel) const;
  std::vector<double> operator*(std::span<const double> x) const;
  /// y = A^T x.
  std::vector<double> multiply_transpose(std::span<const double> x) const;

  SparseMatrix transpose() const;
  SparseMatrix scaled(double s) const;
  std::vector<double> diagonal_values() const;

  /// Quadratic form x^T A x.
  double quadratic(std::span<const double> x) const;
  /// Bilinear form y^T A x.
  double bilinear(std::span<const double> y, std::span<const double> x) const;

  bool same_pattern(const SparseMatrix& other) const;
  bool operator==(const SparseMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// alpha*A + beta*B over the union pattern.
SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta);
/// A * B.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// One block of a block-structured matrix: scale * (*matrix) placed at
/// (row_offset, col_offset).
struct Block {
  int row_offset = 0;
  int col_offset = 0;
  const SparseMatrix* matrix = nullptr;
  double scale = 1.0;
};
SparseMatrix assemble_blocks(int rows, int cols, std::span<const Block> blocks);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::string method;
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

inline constexpr double kDefaultSolveTol = 1e-12;

/// Jacobi-preconditioned conjugate gradients for SPD matrices. Converges to
/// ||Ax - b|| <= tol ||b|| (true residual) within 10 n iterations or throws
/// SolverError.
SolveResult solve_spd(const SparseMatrix& a, std::span<const double> b,
                      double tol = kDefaultSolveTol, std::span<const double> x0 = {});

enum class GeneralMethod { lu, gmres };

/// Square general systems. Default: sparse LU with iterative refinement;
/// GMRES(200) with at most 5 restarts on request. Singular LU or missed
/// tolerance throws SolverError.
SolveResult solve_general(const SparseMatrix& a, std::span<const double> b,
                          double tol = kDefaultSolveTol, GeneralMethod method = GeneralMethod::lu);

}  // namespace chemrep::linalg
