#include "oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "chemrep/regularization.hpp"

namespace oracle {

using chemrep::SchemeKind;
using chemrep::SchemeState;

std::vector<double> Dense::apply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) y[static_cast<std::size_t>(i)] += (*this)(i, j) * x[static_cast<std::size_t>(j)];
  return y;
}

double Dense::quadratic(std::span<const double> x) const {
  const std::vector<double> ax = apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) s += x[i] * ax[i];
  return s;
}

const std::vector<QPoint>& duffy_rule() {
  static const std::vector<QPoint> rule = [] {
    // Gauss-Legendre on [-1, 1], 5 points.
    const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                          0.9061798459386640};
    const double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                          0.4786286704993665, 0.2369268850561891};
    std::vector<QPoint> r;
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        const double s = 0.5 * (xg[a] + 1.0);
        const double t = 0.5 * (xg[b] + 1.0);
        // (s, t) in the unit square -> (x, y) = (s, t (1 - s)) on the reference
        // triangle; Jacobian (1 - s), reference area 1/2.
        const double x = s;
        const double y = t * (1.0 - s);
        const double w = 0.25 * wg[a] * wg[b] * (1.0 - s) * 2.0;
        r.push_back({{1.0 - x - y, x, y}, w});
      }
    }
    return r;
  }();
  return rule;
}

Basis basis(const Mesh& mesh, Index k) {
  const auto& tri = mesh.triangle(k);
  double x[3], y[3];
  for (int i = 0; i < 3; ++i) {
    x[i] = mesh.vertex(tri[static_cast<std::size_t>(i)]).x;
    y[i] = mesh.vertex(tri[static_cast<std::size_t>(i)]).y;
  }
  // Rows [1 x_i y_i]; phi_j(x_i) = delta_ij, so the coefficient columns are
  // the inverse of this matrix.
  const double det = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
  Basis b;
  b.area = 0.5 * std::abs(det);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int m = (i + 2) % 3;
    b.c[i] = (x[j] * y[m] - x[m] * y[j]) / det;
    b.gx[i] = (y[j] - y[m]) / det;
    b.gy[i] = (x[m] - x[j]) / det;
  }
  return b;
}

std::vector<char> constrained_dofs(const Mesh& mesh) {
  const int n = mesh.num_vertices();
  std::vector<char> c(static_cast<std::size_t>(2 * n), 0);
  for (Index j = 0; j < n; ++j) {
    const auto p = mesh.vertex(j);
    if (p.x == 0.0 || p.x == mesh.lx()) c[static_cast<std::size_t>(j)] = 1;
    if (p.y == 0.0 || p.y == mesh.ly()) c[static_cast<std::size_t>(n + j)] = 1;
  }
  return c;
}

Dense dense_assemble(const Mesh& mesh, bool vector_rows, bool vector_cols,
                     const std::function<void(Index, const Basis&, std::vector<double>&)>& kernel) {
  if (mesh.num_vertices() > kMaxVertices) throw std::invalid_argument("oracle mesh too large");
  const int n = mesh.num_vertices();
  const int lr = vector_rows ? 6 : 3;
  const int lc = vector_cols ? 6 : 3;
  Dense out(vector_rows ? 2 * n : n, vector_cols ? 2 * n : n);
  std::vector<double> local(static_cast<std::size_t>(lr * lc));
  for (Index k = 0; k < mesh.num_triangles(); ++k) {
    const auto& tri = mesh.triangle(k);
    const Basis b = basis(mesh, k);
    std::fill(local.begin(), local.end(), 0.0);
    kernel(k, b, local);
    auto dof = [&](int l, bool vec) { return vec ? (l / 3) * n + tri[static_cast<std::size_t>(l % 3)] : tri[static_cast<std::size_t>(l)]; };
    for (int r = 0; r < lr; ++r)
      for (int c = 0; c < lc; ++c) out(dof(r, vector_rows), dof(c, vector_cols)) += local[static_cast<std::size_t>(r * lc + c)];
  }
  return out;
}

namespace {

double nodal_at(const Mesh& mesh, Index k, std::span<const double> f, const QPoint& q) {
  const auto& tri = mesh.triangle(k);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += q.l[i] * f[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
  return s;
}

Dense weighted_mass_impl(const Mesh& mesh, std::span<const double> c, bool vector) {
  return dense_assemble(mesh, vector, vector, [&](Index k, const Basis& b, std::vector<double>& out) {
    const int lc = vector ? 6 : 3;
    for (const QPoint& q : duffy_rule()) {
      const double cq = c.empty() ? 1.0 : nodal_at(mesh, k, c, q);
      for (int blk = 0; blk < (vector ? 2 : 1); ++blk)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            out[static_cast<std::size_t>((blk * 3 + i) * lc + blk * 3 + j)] += b.area * q.w * cq * q.l[i] * q.l[j];
    }
  });
}

}  // namespace

Dense mass(const Mesh& mesh) { return weighted_mass_impl(mesh, {}, false); }
Dense vector_mass(const Mesh& mesh) { return weighted_mass_impl(mesh, {}, true); }
Dense weighted_mass(const Mesh& mesh, std::span<const double> c) { return weighted_mass_impl(mesh, c, false); }

Dense lumped(const Mesh& mesh) {
  const Dense m = mass(mesh);
  Dense out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(i, i) += m(i, j);
  return out;
}

Dense weighted_grad_grad(const Mesh& mesh, std::span<const double> c) {
  return dense_assemble(mesh, false, false, [&](Index k, const Basis& b, std::vector<double>& out) {
    for (const QPoint& q : duffy_rule()) {
      const double cq = c.empty() ? 1.0 : nodal_at(mesh, k, c, q);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          out[static_cast<std::size_t>(i * 3 + j)] += b.area * q.w * cq * (b.gx[i] * b.gx[j] + b.gy[i] * b.gy[j]);
    }
  });
}

Dense stiffness(const Mesh& mesh) { return weighted_grad_grad(mesh, {}); }

Dense b_operator(const Mesh& mesh) {
  // rot psi = d_x psi_2 - d_y psi_1, div psi = d_x psi_1 + d_y psi_2, both
  // constant per element.
  Dense b = dense_assemble(mesh, true, true, [&](Index, const Basis& e, std::vector<double>& out) {
    double rot[6], dv[6];
    for (int i = 0; i < 3; ++i) {
      rot[i] = -e.gy[i];
      rot[3 + i] = e.gx[i];
      dv[i] = e.gx[i];
      dv[3 + i] = e.gy[i];
    }
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) out[static_cast<std::size_t>(r * 6 + c)] = e.area * (rot[r] * rot[c] + dv[r] * dv[c]);
  });
  const Dense m = vector_mass(mesh);
  for (std::size_t i = 0; i < b.a.size(); ++i) b.a[i] += m.a[i];
  return b;
}

Dense weighted_vector_grad(const Mesh& mesh, std::span<const double> c) {
  Dense out = dense_assemble(mesh, true, false, [&](Index k, const Basis& b, std::vector<double>& blk) {
    for (const QPoint& q : duffy_rule()) {
      const double cq = nodal_at(mesh, k, c, q);
      for (int r = 0; r < 6; ++r)
        for (int j = 0; j < 3; ++j) {
          const double g = r < 3 ? b.gx[j] : b.gy[j];
          blk[static_cast<std::size_t>(r * 3 + j)] += b.area * q.w * cq * q.l[r % 3] * g;
        }
    }
  });
  const std::vector<char> cons = constrained_dofs(mesh);
  for (int i = 0; i < out.rows; ++i)
    if (cons[static_cast<std::size_t>(i)])
      for (int j = 0; j < out.cols; ++j) out(i, j) = 0.0;
  return out;
}

Dense tensor_stiffness(const Mesh& mesh, std::span<const chemrep::ElementLambda> lambda) {
  return dense_assemble(mesh, false, false, [&](Index k, const Basis& b, std::vector<double>& out) {
    const chemrep::Sym2 l = lambda[static_cast<std::size_t>(k)].matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double lx = l.xx * b.gx[j] + l.xy * b.gy[j];
        const double ly = l.xy * b.gx[j] + l.yy * b.gy[j];
        out[static_cast<std::size_t>(i * 3 + j)] = b.area * (b.gx[i] * lx + b.gy[i] * ly);
      }
  });
}

std::vector<double> lu_solve(Dense a, std::vector<double> b) {
  const int n = a.rows;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0.0) throw std::runtime_error("oracle: singular matrix");
    if (p != c) {
      for (int j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
      std::swap(b[static_cast<std::size_t>(p)], b[static_cast<std::size_t>(c)]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j) a(r, j) -= f * a(c, j);
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(c)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    double s = b[static_cast<std::size_t>(r)];
    for (int j = r + 1; j < n; ++j) s -= a(r, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(r)] = s / a(r, r);
  }
  return x;
}

namespace {

std::vector<double> minus(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double lumped_entropy(const Dense& ml, std::span<const double> u, const chemrep::RegParams& p) {
  double s = 0.0;
  for (int j = 0; j < ml.rows; ++j) s += ml(j, j) * chemrep::f_eps(u[static_cast<std::size_t>(j)], p);
  return s;
}

// lambda_eps(u_h) sampled on the Duffy rule. Exact as a P1 coefficient only
// where u_h stays inside [eps, 1/eps].
std::vector<double> lambda_nodal(std::span<const double> u, const chemrep::RegParams& p) {
  std::vector<double> out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = chemrep::lambda_eps(u[j], p);
  return out;
}

}  // namespace

double energy_law_residual(const Mesh& mesh, const SchemeState& prev, const SchemeState& next) {
  const double k = next.k;
  const double eps = next.params.eps;
  const Dense m = mass(mesh);
  const Dense ml = lumped(mesh);
  const Dense kk = stiffness(mesh);
  switch (next.kind) {
    case SchemeKind::uv:
    case SchemeKind::beuv: {
      auto energy = [&](const SchemeState& s) {
        return lumped_entropy(ml, s.u, s.params) + 0.5 * kk.quadratic(s.v);
      };
      const std::vector<double> kv = kk.apply(next.v);
      const std::vector<double> minv_kv = lu_solve(m, kv);
      double defect = 0.0;
      for (std::size_t i = 0; i < kv.size(); ++i) defect += kv[i] * minv_kv[i];
      return (energy(next) - energy(prev)) / k + 0.5 * eps / k * m.quadratic(minus(next.u, prev.u)) +
             0.5 / k * kk.quadratic(minus(next.v, prev.v)) + eps * kk.quadratic(next.u) + defect +
             kk.quadratic(next.v);
    }
    case SchemeKind::us: {
      const Dense ms = vector_mass(mesh);
      const Dense b = b_operator(mesh);
      auto energy = [&](const SchemeState& s) {
        return lumped_entropy(ml, s.u, s.params) + 0.5 * ms.quadratic(s.sigma);
      };
      std::vector<double> fp(next.u.size());
      for (std::size_t j = 0; j < fp.size(); ++j) fp[j] = chemrep::fp_eps(next.u[j], next.params);
      const Dense sl = weighted_grad_grad(mesh, lambda_nodal(next.u, next.params));
      return (energy(next) - energy(prev)) / k + 0.5 * eps / k * m.quadratic(minus(next.u, prev.u)) +
             0.5 / k * ms.quadratic(minus(next.sigma, prev.sigma)) + sl.quadratic(fp) +
             b.quadratic(next.sigma);
    }
    case SchemeKind::uzsw: {
      const Dense ms = vector_mass(mesh);
      const Dense b = b_operator(mesh);
      auto energy = [&](const SchemeState& s) { return m.quadratic(s.w) + 0.5 * ms.quadratic(s.sigma); };
      const Dense sl = weighted_grad_grad(mesh, lambda_nodal(prev.u, prev.params));
      return (energy(next) - energy(prev)) / k + m.quadratic(minus(next.w, prev.w)) / k +
             0.5 / k * ms.quadratic(minus(next.sigma, prev.sigma)) + sl.quadratic(next.z) +
             b.quadratic(next.sigma);
    }
  }
  return 0.0;
}

}  // namespace oracle
