#include "chemrep/linalg.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace chemrep::linalg {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
                           std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (rows_ < 0 || cols_ < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 || row_ptr_.front() != 0) {
    throw std::invalid_argument("SparseMatrix: bad row_ptr");
  }
  if (col_idx_.size() != values_.size() ||
      static_cast<std::size_t>(row_ptr_.back()) != values_.size()) {
    throw std::invalid_argument("SparseMatrix: size mismatch");
  }
  for (int r = 0; r < rows_; ++r) {
    if (row_ptr_[r + 1] < row_ptr_[r]) throw std::invalid_argument("SparseMatrix: row_ptr decreasing");
    for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (col_idx_[p] < 0 || col_idx_[p] >= cols_) {
        throw std::invalid_argument("SparseMatrix: column out of range");
      }
      if (p > row_ptr_[r] && col_idx_[p] <= col_idx_[p - 1]) {
        throw std::invalid_argument("SparseMatrix: columns not sorted/unique");
      }
      if (!std::isfinite(values_[p])) throw std::invalid_argument("SparseMatrix: non-finite value");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> col_idx;
  std::vector<double> values;
  col_idx.reserve(triplets.size());
  values.reserve(triplets.size());
  int last_row = -1;
  int last_col = -1;
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::invalid_argument("from_triplets: index out of range");
    }
    if (t.row == last_row && t.col == last_col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[static_cast<std::size_t>(t.row) + 1];
    last_row = t.row;
    last_col = t.col;
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  const int n = static_cast<int>(d.size());
  std::vector<int> row_ptr(static_cast<std::size_t>(n) + 1);
  std::vector<int> col_idx(static_cast<std::size_t>(n));
  std::iota(row_ptr.begin(), row_ptr.end(), 0);
  std::iota(col_idx.begin(), col_idx.end(), 0);
  return SparseMatrix(n, n, std::move(row_ptr), std::move(col_idx),
                      std::vector<double>(d.begin(), d.end()));
}

int SparseMatrix::find(int r, int c) const {
  const auto first = col_idx_.begin() + row_ptr_[static_cast<std::size_t>(r)];
  const auto last = col_idx_.begin() + row_ptr_[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return -1;
  return static_cast<int>(it - col_idx_.begin());
}

double SparseMatrix::at(int r, int c) const {
  const int p = find(r, c);
  return p < 0 ? 0.0 : values_[static_cast<std::size_t>(p)];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y, Exec exec) const {
  if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
  }
  const int* rp = row_ptr_.data();
  const int* ci = col_idx_.data();
  const double* va = values_.data();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int p = rp[r]; p < rp[r + 1]; ++p) s += va[p] * x[static_cast<std::size_t>(ci[p])];
    y[static_cast<std::size_t>(r)] = s;
  }
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows_));
  multiply(x, y);
  return y;
}

std::vector<double> SparseMatrix::multiply_transpose(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("multiply_transpose: dimension mismatch");
  }
  std::vector<double> y(static_cast<std::size_t>(cols_), 0.0);
  for (int r = 0; r < rows_; ++r) {
    const double xr = x[static_cast<std::size_t>(r)];
    for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      y[static_cast<std::size_t>(col_idx_[p])] += values_[p] * xr;
    }
  }
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<int> row_ptr(static_cast<std::size_t>(cols_) + 1, 0);
  for (int c : col_idx_) ++row_ptr[static_cast<std::size_t>(c) + 1];
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  std::vector<int> next(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<int> col_idx(values_.size());
  std::vector<double> values(values_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const int dst = next[static_cast<std::size_t>(col_idx_[p])]++;
      col_idx[static_cast<std::size_t>(dst)] = r;
      values[static_cast<std::size_t>(dst)] = values_[p];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::scaled(double s) const {
  SparseMatrix out = *this;
  for (double& v : out.values_) v *= s;
  return out;
}

std::vector<double> SparseMatrix::diagonal_values() const {
  const int n = std::min(rows_, cols_);
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < n; ++r) d[static_cast<std::size_t>(r)] = at(r, r);
  return d;
}

double SparseMatrix::bilinear(std::span<const double> y, std::span<const double> x) const {
  const std::vector<double> ax = *this * x;
  return dot(y, ax);
}

double SparseMatrix::quadratic(std::span<const double> x) const { return bilinear(x, x); }

bool SparseMatrix::same_pattern(const SparseMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ &&
         col_idx_ == other.col_idx_;
}

SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("add: dimension mismatch");
  }
  if (a.same_pattern(b)) {
    SparseMatrix out = a;
    auto dst = out.values_mut();
    const auto bv = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = alpha * dst[i] + beta * bv[i];
    return out;
  }
  std::vector<int> row_ptr(static_cast<std::size_t>(a.rows()) + 1, 0);
  std::vector<int> col_idx;
  std::vector<double> values;
  col_idx.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
  values.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
  const auto arp = a.row_ptr();
  const auto brp = b.row_ptr();
  for (int r = 0; r < a.rows(); ++r) {
    int pa = arp[static_cast<std::size_t>(r)];
    int pb = brp[static_cast<std::size_t>(r)];
    const int ea = arp[static_cast<std::size_t>(r) + 1];
    const int eb = brp[static_cast<std::size_t>(r) + 1];
    while (pa < ea || pb < eb) {
      const int ca = pa < ea ? a.col_idx()[static_cast<std::size_t>(pa)] : a.cols();
      const int cb = pb < eb ? b.col_idx()[static_cast<std::size_t>(pb)] : b.cols();
      if (ca == cb) {
        col_idx.push_back(ca);
        values.push_back(alpha * a.values()[static_cast<std::size_t>(pa++)] +
                         beta * b.values()[static_cast<std::size_t>(pb++)]);
      } else if (ca < cb) {
        col_idx.push_back(ca);
        values.push_back(alpha * a.values()[static_cast<std::size_t>(pa++)]);
      } else {
        col_idx.push_back(cb);
        values.push_back(beta * b.values()[static_cast<std::size_t>(pb++)]);
      }
    }
    row_ptr[static_cast<std::size_t>(r) + 1] = static_cast<int>(col_idx.size());
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(row_ptr), std::move(col_idx),
                      std::move(values));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  std::vector<Triplet> trip;
  for (int r = 0; r < a.rows(); ++r) {
    for (int p = a.row_ptr()[static_cast<std::size_t>(r)];
         p < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p) {
      const int k = a.col_idx()[static_cast<std::size_t>(p)];
      const double av = a.values()[static_cast<std::size_t>(p)];
      for (int q = b.row_ptr()[static_cast<std::size_t>(k)];
           q < b.row_ptr()[static_cast<std::size_t>(k) + 1]; ++q) {
        trip.push_back({r, b.col_idx()[static_cast<std::size_t>(q)],
                        av * b.values()[static_cast<std::size_t>(q)]});
      }
    }
  }
  return SparseMatrix::from_triplets(a.rows(), b.cols(), std::move(trip));
}

SparseMatrix assemble_blocks(int rows, int cols, std::span<const Block> blocks) {
  std::vector<Triplet> trip;
  for (const Block& blk : blocks) {
    const SparseMatrix& m = *blk.matrix;
    if (blk.row_offset + m.rows() > rows || blk.col_offset + m.cols() > cols) {
      throw std::invalid_argument("assemble_blocks: block exceeds bounds");
    }
    for (int r = 0; r < m.rows(); ++r) {
      for (int p = m.row_ptr()[static_cast<std::size_t>(r)];
           p < m.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p) {
        trip.push_back({blk.row_offset + r, blk.col_offset + m.col_idx()[static_cast<std::size_t>(p)],
                        blk.scale * m.values()[static_cast<std::size_t>(p)]});
      }
    }
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(trip));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

double relative_residual(const SparseMatrix& a, std::span<const double> x,
                         std::span<const double> b, double bnorm) {
  std::vector<double> r = a * x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r) / bnorm;
}

void check_square(const SparseMatrix& a, std::span<const double> b) {
  if (a.rows() != a.cols() || b.size() != static_cast<std::size_t>(a.rows())) {
    throw std::invalid_argument("solve: matrix must be square and match rhs");
  }
}

}  // namespace

SolveResult solve_spd(const SparseMatrix& a, std::span<const double> b, double tol,
                      std::span<const double> x0) {
  check_square(a, b);
  const std::size_t n = b.size();
  SolveResult res;
  res.report.method = "pcg-jacobi";
  res.x.assign(n, 0.0);
  if (!x0.empty()) {
    if (x0.size() != n) throw std::invalid_argument("solve_spd: bad initial guess size");
    std::copy(x0.begin(), x0.end(), res.x.begin());
  }
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }

  std::vector<double> inv_diag = a.diagonal_values();
  for (double& d : inv_diag) d = d > 0.0 ? 1.0 / d : 1.0;

  const int max_iters = std::max(10 * static_cast<int>(n), 10);
  std::vector<double> r(n), z(n), p(n), ap(n);
  int iters = 0;
  // Outer loop restarts from the true residual if the recursive one drifted.
  for (int restart = 0; restart < 5; ++restart) {
    a.multiply(res.x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rnorm = norm2(r);
    if (rnorm <= tol * bnorm) {
      res.report.iterations = iters;
      res.report.relative_residual = rnorm / bnorm;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (iters < max_iters) {
      a.multiply(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        res.x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      ++iters;
      rnorm = norm2(r);
      if (rnorm <= 0.5 * tol * bnorm) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    const double true_rel = relative_residual(a, res.x, b, bnorm);
    res.report.iterations = iters;
    res.report.relative_residual = true_rel;
    if (true_rel <= tol) return res;
    if (iters >= max_iters) break;
  }
  throw SolverError("solve_spd: CG did not reach tolerance", res.report);
}

namespace {

SolveResult solve_lu(const SparseMatrix& a, std::span<const double> b, double tol) {
  const int n = a.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(a.nnz()));
  for (int r = 0; r < n; ++r) {
    for (int p = a.row_ptr()[static_cast<std::size_t>(r)];
         p < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p) {
      trip.emplace_back(r, a.col_idx()[static_cast<std::size_t>(p)],
                        a.values()[static_cast<std::size_t>(p)]);
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();

  SolveResult res;
  res.report.method = "sparse-lu";
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) {
    throw SolverError("solve_general: singular matrix in sparse LU (" + lu.lastErrorMessage() + ")",
                      res.report);
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  Eigen::VectorXd x = lu.solve(rhs);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    res.x.assign(static_cast<std::size_t>(n), 0.0);
    return res;
  }
  double rel = (rhs - m * x).norm() / bnorm;
  int steps = 1;
  // Iterative refinement.
  for (; rel > tol && steps < 6; ++steps) {
    x += lu.solve(rhs - m * x);
    rel = (rhs - m * x).norm() / bnorm;
  }
  res.x.assign(x.data(), x.data() + n);
  res.report.iterations = steps;
  res.report.relative_residual = rel;
  if (!std::isfinite(rel) || rel > tol) {
    throw SolverError("solve_general: LU residual above tolerance", res.report);
  }
  return res;
}

SolveResult solve_gmres(const SparseMatrix& a, std::span<const double> b, double tol) {
  constexpr int kRestart = 200;
  constexpr int kMaxCycles = 5;
  const std::size_t n = b.size();
  SolveResult res;
  res.report.method = "gmres";
  res.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return res;

  std::vector<double> inv_diag = a.diagonal_values();
  for (double& d : inv_diag) d = d != 0.0 ? 1.0 / d : 1.0;

  const int m = std::min<int>(kRestart, static_cast<int>(n));
  std::vector<std::vector<double>> basis(static_cast<std::size_t>(m) + 1, std::vector<double>(n));
  std::vector<std::vector<double>> hess(static_cast<std::size_t>(m) + 1,
                                        std::vector<double>(static_cast<std::size_t>(m), 0.0));
  std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
  std::vector<double> g(static_cast<std::size_t>(m) + 1);
  std::vector<double> w(n), tmp(n);
  int total = 0;

  for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
    a.multiply(res.x, tmp);
    for (std::size_t i = 0; i < n; ++i) basis[0][i] = b[i] - tmp[i];
    double beta = norm2(basis[0]);
    if (beta <= tol * bnorm) break;
    for (double& v : basis[0]) v /= beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < m; ++j) {
      // Right preconditioning with the Jacobi scaling.
      for (std::size_t i = 0; i < n; ++i) tmp[i] = inv_diag[i] * basis[static_cast<std::size_t>(j)][i];
      a.multiply(tmp, w);
      for (int i = 0; i <= j; ++i) {
        const double hij = dot(w, basis[static_cast<std::size_t>(i)]);
        hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = hij;
        for (std::size_t q = 0; q < n; ++q) w[q] -= hij * basis[static_cast<std::size_t>(i)][q];
      }
      const double hnext = norm2(w);
      hess[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(j)] = hnext;
      if (hnext > 0.0) {
        for (std::size_t q = 0; q < n; ++q) basis[static_cast<std::size_t>(j) + 1][q] = w[q] / hnext;
      }
      for (int i = 0; i < j; ++i) {
        auto& hi = hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        auto& hi1 = hess[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(j)];
        const double t = cs[static_cast<std::size_t>(i)] * hi + sn[static_cast<std::size_t>(i)] * hi1;
        hi1 = -sn[static_cast<std::size_t>(i)] * hi + cs[static_cast<std::size_t>(i)] * hi1;
        hi = t;
      }
      auto& hjj = hess[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
      auto& hj1 = hess[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(j)];
      const double denom = std::hypot(hjj, hj1);
      cs[static_cast<std::size_t>(j)] = denom > 0.0 ? hjj / denom : 1.0;
      sn[static_cast<std::size_t>(j)] = denom > 0.0 ? hj1 / denom : 0.0;
      hjj = denom;
      hj1 = 0.0;
      g[static_cast<std::size_t>(j) + 1] = -sn[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(j)] = cs[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      ++total;
      if (std::abs(g[static_cast<std::size_t>(j) + 1]) <= 0.5 * tol * bnorm || hnext == 0.0) {
        ++j;
        break;
      }
    }
    // Back substitution for the least-squares coefficients.
    std::vector<double> y(static_cast<std::size_t>(j), 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[static_cast<std::size_t>(i)];
      for (int q = i + 1; q < j; ++q) {
        s -= hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] * y[static_cast<std::size_t>(q)];
      }
      y[static_cast<std::size_t>(i)] = s / hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (int i = 0; i < j; ++i) {
      for (std::size_t q = 0; q < n; ++q) {
        tmp[q] += y[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(i)][q];
      }
    }
    for (std::size_t q = 0; q < n; ++q) res.x[q] += inv_diag[q] * tmp[q];
    if (relative_residual(a, res.x, b, bnorm) <= tol) break;
  }
  res.report.iterations = total;
  res.report.relative_residual = relative_residual(a, res.x, b, bnorm);
  if (!(res.report.relative_residual <= tol)) {
    throw SolverError("solve_general: GMRES did not reach tolerance", res.report);
  }
  return res;
}

}  // namespace

SolveResult solve_general(const SparseMatrix& a, std::span<const double> b, double tol,
                          GeneralMethod method) {
  check_square(a, b);
  return method == GeneralMethod::lu ? solve_lu(a, b, tol) : solve_gmres(a, b, tol);
}

}  // namespace chemrep::linalg
