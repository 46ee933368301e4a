#include "chemrep/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "chemrep/errors.hpp"

namespace chemrep {

using linalg::SparseMatrix;

namespace {

constexpr double kA1 = 0.44594849091596488632;
constexpr double kW1 = 0.22338158967801146570;
constexpr double kA2 = 0.091576213509770743460;
constexpr double kW2 = 0.10995174365532186764;

constexpr std::array<QuadraturePoint, kQuadraturePoints> kRule{{
    {{1.0 - 2.0 * kA1, kA1, kA1}, kW1},
    {{kA1, 1.0 - 2.0 * kA1, kA1}, kW1},
    {{kA1, kA1, 1.0 - 2.0 * kA1}, kW1},
    {{1.0 - 2.0 * kA2, kA2, kA2}, kW2},
    {{kA2, 1.0 - 2.0 * kA2, kA2}, kW2},
    {{kA2, kA2, 1.0 - 2.0 * kA2}, kW2},
}};

Point2 map_point(const Mesh& mesh, const Mesh::Triangle& t, const QuadraturePoint& q) {
  Point2 x;
  for (int i = 0; i < 3; ++i) {
    const Point2& p = mesh.vertex(t[static_cast<std::size_t>(i)]);
    x.x += q.bary[static_cast<std::size_t>(i)] * p.x;
    x.y += q.bary[static_cast<std::size_t>(i)] * p.y;
  }
  return x;
}

int local_count(Space s) {
  switch (s) {
    case Space::scalar: return 3;
    case Space::vector: return 6;
    case Space::element: return 1;
  }
  return 0;
}

int global_count(const Mesh& mesh, Space s) {
  switch (s) {
    case Space::scalar: return mesh.num_vertices();
    case Space::vector: return 2 * mesh.num_vertices();
    case Space::element: return mesh.num_triangles();
  }
  return 0;
}

// Local dof l of element k. Vector dofs are ordered (component, vertex).
int global_dof(const Mesh& mesh, Space s, Index k, int l) {
  const auto& t = mesh.triangle(k);
  switch (s) {
    case Space::scalar: return t[static_cast<std::size_t>(l)];
    case Space::vector: return (l / 3) * mesh.num_vertices() + t[static_cast<std::size_t>(l % 3)];
    case Space::element: return k;
  }
  return -1;
}

// rot and div of the vector basis function (component a, local vertex i).
double rot_coef(const ElementGeometry& g, int a, int i) {
  const Vec2 gi = g.grad[static_cast<std::size_t>(i)];
  return a == 0 ? -gi.y : gi.x;
}
double div_coef(const ElementGeometry& g, int a, int i) {
  const Vec2 gi = g.grad[static_cast<std::size_t>(i)];
  return a == 0 ? gi.x : gi.y;
}
double component(Vec2 v, int a) { return a == 0 ? v.x : v.y; }

void check_coeff(const Mesh& mesh, std::span<const double> coeff) {
  if (coeff.size() != static_cast<std::size_t>(mesh.num_triangles()) * kQuadraturePoints) {
    throw std::invalid_argument("coefficient array must hold one value per quadrature point");
  }
}

void check_field(const Mesh& mesh, std::span<const double> f) {
  if (f.size() != static_cast<std::size_t>(mesh.num_vertices())) {
    throw std::invalid_argument("scalar field size does not match the mesh");
  }
}

}  // namespace

std::span<const QuadraturePoint> quadrature_rule() { return kRule; }

ElementGeometry element_geometry(const Mesh& mesh, Index k) {
  const auto& t = mesh.triangle(k);
  const Point2& p0 = mesh.vertex(t[0]);
  const Point2& p1 = mesh.vertex(t[1]);
  const Point2& p2 = mesh.vertex(t[2]);
  const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  ElementGeometry g;
  g.area = 0.5 * std::abs(det);
  g.grad[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
  g.grad[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
  g.grad[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
  return g;
}

ScalarField interp_nodal(const PointFunction& f, const Mesh& mesh) {
  ScalarField out(static_cast<std::size_t>(mesh.num_vertices()));
  for (Index j = 0; j < mesh.num_vertices(); ++j) {
    const Point2& p = mesh.vertex(j);
    const double v = f(p.x, p.y);
    if (!std::isfinite(v)) {
      throw InputError("interp_nodal: non-finite value at vertex " + std::to_string(j));
    }
    out[static_cast<std::size_t>(j)] = v;
  }
  return out;
}

double lumped_product(const Mesh& mesh, std::span<const double> a, std::span<const double> b) {
  check_field(mesh, a);
  check_field(mesh, b);
  const auto m = mesh.lumped_weights();
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += m[j] * a[j] * b[j];
  return s;
}

// ---------------------------------------------------------------------------
// AssemblyPlan

AssemblyPlan::AssemblyPlan(const Mesh& mesh, Space rows, Space cols)
    : rows_(global_count(mesh, rows)),
      cols_(global_count(mesh, cols)),
      local_rows_(local_count(rows)),
      local_cols_(local_count(cols)) {
  const Index ne = mesh.num_triangles();
  const int ls = local_size();
  const std::size_t total = static_cast<std::size_t>(ne) * static_cast<std::size_t>(ls);

  std::vector<std::int64_t> keys(total);
  for (Index k = 0; k < ne; ++k) {
    for (int i = 0; i < local_rows_; ++i) {
      const std::int64_t r = global_dof(mesh, rows, k, i);
      for (int j = 0; j < local_cols_; ++j) {
        const std::int64_t c = global_dof(mesh, cols, k, j);
        keys[static_cast<std::size_t>(k) * ls + static_cast<std::size_t>(i * local_cols_ + j)] =
            r * cols_ + c;
      }
    }
  }

  // Sorting by (key, src) puts each nonzero's contributions in element order.
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ka = keys[static_cast<std::size_t>(a)];
    const auto kb = keys[static_cast<std::size_t>(b)];
    return ka != kb ? ka < kb : a < b;
  });

  row_ptr_.assign(static_cast<std::size_t>(rows_) + 1, 0);
  dest_.assign(total, -1);
  gather_src_ = order;
  gather_ptr_.clear();
  gather_ptr_.reserve(total + 1);
  std::int64_t last = -1;
  for (std::size_t s = 0; s < total; ++s) {
    const int src = order[s];
    const std::int64_t key = keys[static_cast<std::size_t>(src)];
    if (key != last) {
      gather_ptr_.push_back(static_cast<int>(s));
      col_idx_.push_back(static_cast<int>(key % cols_));
      ++row_ptr_[static_cast<std::size_t>(key / cols_) + 1];
      last = key;
    }
    dest_[static_cast<std::size_t>(src)] = static_cast<int>(col_idx_.size()) - 1;
  }
  gather_ptr_.push_back(static_cast<int>(total));
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
}

SparseMatrix AssemblyPlan::reduce(std::span<const double> local, Exec exec) const {
  if (local.size() != dest_.size()) throw std::invalid_argument("reduce: local array size");
  std::vector<double> values(col_idx_.size(), 0.0);
  if (exec == Exec::serial) {
    for (std::size_t s = 0; s < local.size(); ++s) {
      values[static_cast<std::size_t>(dest_[s])] += local[s];
    }
  } else {
    const int nnz = static_cast<int>(values.size());
#pragma omp parallel for schedule(static)
    for (int p = 0; p < nnz; ++p) {
      double acc = 0.0;
      for (int g = gather_ptr_[static_cast<std::size_t>(p)];
           g < gather_ptr_[static_cast<std::size_t>(p) + 1]; ++g) {
        acc += local[static_cast<std::size_t>(gather_src_[static_cast<std::size_t>(g)])];
      }
      values[static_cast<std::size_t>(p)] = acc;
    }
  }
  return SparseMatrix(rows_, cols_, row_ptr_, col_idx_, std::move(values));
}

// ---------------------------------------------------------------------------
// Discretization

Discretization::Discretization(const Mesh& mesh, Exec exec)
    : mesh_(mesh),
      exec_(exec),
      plan_ss_(mesh, Space::scalar, Space::scalar),
      plan_vv_(mesh, Space::vector, Space::vector),
      plan_vs_(mesh, Space::vector, Space::scalar),
      plan_sv_(mesh, Space::scalar, Space::vector),
      plan_ev_(mesh, Space::element, Space::vector) {
  const Index ne = mesh_.num_triangles();
  const Index nv = mesh_.num_vertices();
  geom_.resize(static_cast<std::size_t>(ne));
  areas_.resize(static_cast<std::size_t>(ne));
  for (Index k = 0; k < ne; ++k) {
    geom_[static_cast<std::size_t>(k)] = element_geometry(mesh_, k);
    areas_[static_cast<std::size_t>(k)] = geom_[static_cast<std::size_t>(k)].area;
  }

  constrained_.assign(2 * static_cast<std::size_t>(nv), 0);
  for (Index j = 0; j < nv; ++j) {
    const BoundaryKind kind = mesh_.boundary_kind(j);
    if (kind == BoundaryKind::edge_y || kind == BoundaryKind::corner) {
      constrained_[static_cast<std::size_t>(j)] = 1;
    }
    if (kind == BoundaryKind::edge_x || kind == BoundaryKind::corner) {
      constrained_[static_cast<std::size_t>(nv + j)] = 1;
    }
  }

  auto mass_entry = [](double area, int i, int j) { return area / 12.0 * (i == j ? 2.0 : 1.0); };

  mass_ = plan_ss_.reduce(local_blocks(plan_ss_,
                                       [&](Index k, double* out) {
                                         const double a = geom_[static_cast<std::size_t>(k)].area;
                                         for (int i = 0; i < 3; ++i)
                                           for (int j = 0; j < 3; ++j)
                                             out[i * 3 + j] = mass_entry(a, i, j);
                                       }),
                          exec_);

  stiffness_ = plan_ss_.reduce(
      local_blocks(plan_ss_,
                   [&](Index k, double* out) {
                     const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                     for (int i = 0; i < 3; ++i)
                       for (int j = 0; j < 3; ++j)
                         out[i * 3 + j] = g.area * dot(g.grad[static_cast<std::size_t>(i)],
                                                       g.grad[static_cast<std::size_t>(j)]);
                   }),
      exec_);

  vector_mass_ = plan_vv_.reduce(
      local_blocks(plan_vv_,
                   [&](Index k, double* out) {
                     const double a = geom_[static_cast<std::size_t>(k)].area;
                     for (int r = 0; r < 6; ++r)
                       for (int c = 0; c < 6; ++c)
                         out[r * 6 + c] = (r / 3 == c / 3) ? mass_entry(a, r % 3, c % 3) : 0.0;
                   }),
      exec_);

  b_operator_ = plan_vv_.reduce(
      local_blocks(plan_vv_,
                   [&](Index k, double* out) {
                     const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                     for (int r = 0; r < 6; ++r) {
                       for (int c = 0; c < 6; ++c) {
                         const int a = r / 3, i = r % 3, b = c / 3, j = c % 3;
                         double v = g.area * (rot_coef(g, a, i) * rot_coef(g, b, j) +
                                              div_coef(g, a, i) * div_coef(g, b, j));
                         if (a == b) v += mass_entry(g.area, i, j);
                         out[r * 6 + c] = v;
                       }
                     }
                   }),
      exec_);

  rot_ = plan_ev_.reduce(local_blocks(plan_ev_,
                                      [&](Index k, double* out) {
                                        const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                                        for (int c = 0; c < 6; ++c) out[c] = rot_coef(g, c / 3, c % 3);
                                      }),
                         exec_);
  div_ = plan_ev_.reduce(local_blocks(plan_ev_,
                                      [&](Index k, double* out) {
                                        const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                                        for (int c = 0; c < 6; ++c) out[c] = div_coef(g, c / 3, c % 3);
                                      }),
                         exec_);
}

std::vector<double> Discretization::local_blocks(
    const AssemblyPlan& plan, const std::function<void(Index, double*)>& kernel) const {
  const Index ne = mesh_.num_triangles();
  const int ls = plan.local_size();
  std::vector<double> local(static_cast<std::size_t>(ne) * static_cast<std::size_t>(ls));
#pragma omp parallel for schedule(static) if (exec_ == Exec::parallel)
  for (Index k = 0; k < ne; ++k) kernel(k, local.data() + static_cast<std::size_t>(k) * ls);
  return local;
}

SparseMatrix Discretization::weighted_grad_grad(std::span<const double> coeff) const {
  check_coeff(mesh_, coeff);
  return plan_ss_.reduce(
      local_blocks(plan_ss_,
                   [&](Index k, double* out) {
                     const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                     double avg = 0.0;
                     for (int q = 0; q < kQuadraturePoints; ++q) {
                       avg += kRule[static_cast<std::size_t>(q)].weight *
                              coeff[static_cast<std::size_t>(k) * kQuadraturePoints + q];
                     }
                     for (int i = 0; i < 3; ++i)
                       for (int j = 0; j < 3; ++j)
                         out[i * 3 + j] = g.area * avg *
                                          dot(g.grad[static_cast<std::size_t>(i)],
                                              g.grad[static_cast<std::size_t>(j)]);
                   }),
      exec_);
}

SparseMatrix Discretization::weighted_mass(std::span<const double> coeff) const {
  check_coeff(mesh_, coeff);
  return plan_ss_.reduce(
      local_blocks(plan_ss_,
                   [&](Index k, double* out) {
                     const double area = geom_[static_cast<std::size_t>(k)].area;
                     for (int i = 0; i < 3; ++i) {
                       for (int j = 0; j < 3; ++j) {
                         double s = 0.0;
                         for (int q = 0; q < kQuadraturePoints; ++q) {
                           const auto& qp = kRule[static_cast<std::size_t>(q)];
                           s += qp.weight * coeff[static_cast<std::size_t>(k) * kQuadraturePoints + q] *
                                qp.bary[static_cast<std::size_t>(i)] *
                                qp.bary[static_cast<std::size_t>(j)];
                         }
                         out[i * 3 + j] = area * s;
                       }
                     }
                   }),
      exec_);
}

namespace {

// Shared kernel for the vector-grad pair: entry for vector dof (a, i) and
// scalar dof j.
struct VectorGradKernel {
  const std::vector<ElementGeometry>& geom;
  std::span<const double> coeff;

  void weights(Index k, double* s) const {
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int q = 0; q < kQuadraturePoints; ++q) {
        const auto& qp = kRule[static_cast<std::size_t>(q)];
        acc += qp.weight * coeff[static_cast<std::size_t>(k) * kQuadraturePoints + q] *
               qp.bary[static_cast<std::size_t>(i)];
      }
      s[i] = acc;
    }
  }
  double value(Index k, const double* s, int a, int i, int j) const {
    const ElementGeometry& g = geom[static_cast<std::size_t>(k)];
    return g.area * s[i] * component(g.grad[static_cast<std::size_t>(j)], a);
  }
};

}  // namespace

SparseMatrix Discretization::weighted_vector_grad(std::span<const double> coeff) const {
  check_coeff(mesh_, coeff);
  const VectorGradKernel kern{geom_, coeff};
  SparseMatrix out = plan_vs_.reduce(local_blocks(plan_vs_,
                                                  [&](Index k, double* blk) {
                                                    double s[3];
                                                    kern.weights(k, s);
                                                    for (int r = 0; r < 6; ++r)
                                                      for (int j = 0; j < 3; ++j)
                                                        blk[r * 3 + j] = kern.value(k, s, r / 3, r % 3, j);
                                                  }),
                                     exec_);
  constrain_rows(out);
  return out;
}

SparseMatrix Discretization::weighted_grad_vector(std::span<const double> coeff) const {
  check_coeff(mesh_, coeff);
  const VectorGradKernel kern{geom_, coeff};
  SparseMatrix out = plan_sv_.reduce(local_blocks(plan_sv_,
                                                  [&](Index k, double* blk) {
                                                    double s[3];
                                                    kern.weights(k, s);
                                                    for (int j = 0; j < 3; ++j)
                                                      for (int c = 0; c < 6; ++c)
                                                        blk[j * 6 + c] = kern.value(k, s, c / 3, c % 3, j);
                                                  }),
                                     exec_);
  constrain_cols(out);
  return out;
}

SparseMatrix Discretization::weighted_value_grad(std::span<const Vec2> coeff) const {
  if (coeff.size() != static_cast<std::size_t>(mesh_.num_triangles()) * kQuadraturePoints) {
    throw std::invalid_argument("coefficient array must hold one value per quadrature point");
  }
  return plan_ss_.reduce(
      local_blocks(plan_ss_,
                   [&](Index k, double* out) {
                     const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                     for (int j = 0; j < 3; ++j) {
                       // c weighted by phi_j, integrated over the element.
                       Vec2 cj{0.0, 0.0};
                       for (int q = 0; q < kQuadraturePoints; ++q) {
                         const auto& qp = kRule[static_cast<std::size_t>(q)];
                         cj = cj + (qp.weight * qp.bary[static_cast<std::size_t>(j)]) *
                                       coeff[static_cast<std::size_t>(k) * kQuadraturePoints + q];
                       }
                       for (int i = 0; i < 3; ++i)
                         out[i * 3 + j] = g.area * dot(cj, g.grad[static_cast<std::size_t>(i)]);
                     }
                   }),
      exec_);
}

SparseMatrix Discretization::weighted_vector_value(std::span<const Vec2> coeff) const {
  if (coeff.size() != static_cast<std::size_t>(mesh_.num_triangles()) * kQuadraturePoints) {
    throw std::invalid_argument("coefficient array must hold one value per quadrature point");
  }
  SparseMatrix out = plan_vs_.reduce(
      local_blocks(plan_vs_,
                   [&](Index k, double* blk) {
                     const double area = geom_[static_cast<std::size_t>(k)].area;
                     for (int r = 0; r < 6; ++r) {
                       for (int j = 0; j < 3; ++j) {
                         double s = 0.0;
                         for (int q = 0; q < kQuadraturePoints; ++q) {
                           const auto& qp = kRule[static_cast<std::size_t>(q)];
                           s += qp.weight *
                                component(coeff[static_cast<std::size_t>(k) * kQuadraturePoints + q], r / 3) *
                                qp.bary[static_cast<std::size_t>(r % 3)] *
                                qp.bary[static_cast<std::size_t>(j)];
                         }
                         blk[r * 3 + j] = area * s;
                       }
                     }
                   }),
      exec_);
  constrain_rows(out);
  return out;
}

SparseMatrix Discretization::tensor_stiffness(std::span<const ElementLambda> lambda) const {
  if (lambda.size() != static_cast<std::size_t>(mesh_.num_triangles())) {
    throw std::invalid_argument("tensor_stiffness: one ElementLambda per triangle required");
  }
  return plan_ss_.reduce(
      local_blocks(plan_ss_,
                   [&](Index k, double* out) {
                     const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
                     const Sym2 lam = lambda[static_cast<std::size_t>(k)].matrix();
                     for (int i = 0; i < 3; ++i)
                       for (int j = 0; j < 3; ++j)
                         out[i * 3 + j] = g.area * dot(g.grad[static_cast<std::size_t>(i)],
                                                       lam.apply(g.grad[static_cast<std::size_t>(j)]));
                   }),
      exec_);
}

std::vector<double> Discretization::at_quadrature(std::span<const double> field) const {
  check_field(mesh_, field);
  const Index ne = mesh_.num_triangles();
  std::vector<double> out(static_cast<std::size_t>(ne) * kQuadraturePoints);
  for (Index k = 0; k < ne; ++k) {
    const auto& t = mesh_.triangle(k);
    for (int q = 0; q < kQuadraturePoints; ++q) {
      const auto& qp = kRule[static_cast<std::size_t>(q)];
      double v = 0.0;
      for (int i = 0; i < 3; ++i) {
        v += qp.bary[static_cast<std::size_t>(i)] *
             field[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
      }
      out[static_cast<std::size_t>(k) * kQuadraturePoints + q] = v;
    }
  }
  return out;
}

std::vector<double> Discretization::map_at_quadrature(std::span<const double> field,
                                                      const std::function<double(double)>& g) const {
  std::vector<double> out = at_quadrature(field);
  for (double& v : out) v = g(v);
  return out;
}

double Discretization::integrate(std::span<const double> field,
                                 const std::function<double(double)>& g) const {
  const std::vector<double> vals = map_at_quadrature(field, g);
  double s = 0.0;
  for (Index k = 0; k < mesh_.num_triangles(); ++k) {
    double e = 0.0;
    for (int q = 0; q < kQuadraturePoints; ++q) {
      e += kRule[static_cast<std::size_t>(q)].weight *
           vals[static_cast<std::size_t>(k) * kQuadraturePoints + q];
    }
    s += areas_[static_cast<std::size_t>(k)] * e;
  }
  return s;
}

double Discretization::integrate(const PointFunction& f) const {
  double s = 0.0;
  for (Index k = 0; k < mesh_.num_triangles(); ++k) {
    const auto& t = mesh_.triangle(k);
    double e = 0.0;
    for (const auto& qp : kRule) {
      const Point2 x = map_point(mesh_, t, qp);
      e += qp.weight * f(x.x, x.y);
    }
    s += areas_[static_cast<std::size_t>(k)] * e;
  }
  return s;
}

std::vector<double> Discretization::load(const PointFunction& f) const {
  std::vector<double> b(static_cast<std::size_t>(n()), 0.0);
  for (Index k = 0; k < mesh_.num_triangles(); ++k) {
    const auto& t = mesh_.triangle(k);
    const double area = areas_[static_cast<std::size_t>(k)];
    for (const auto& qp : kRule) {
      const Point2 x = map_point(mesh_, t, qp);
      const double fx = f(x.x, x.y);
      for (int i = 0; i < 3; ++i) {
        b[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] +=
            area * qp.weight * fx * qp.bary[static_cast<std::size_t>(i)];
      }
    }
  }
  return b;
}

std::vector<double> Discretization::load_grad(const GradFunction& grad_f) const {
  std::vector<double> b(static_cast<std::size_t>(n()), 0.0);
  for (Index k = 0; k < mesh_.num_triangles(); ++k) {
    const auto& t = mesh_.triangle(k);
    const ElementGeometry& g = geom_[static_cast<std::size_t>(k)];
    Vec2 avg;
    for (const auto& qp : kRule) {
      const Point2 x = map_point(mesh_, t, qp);
      avg = avg + qp.weight * grad_f(x.x, x.y);
    }
    for (int i = 0; i < 3; ++i) {
      b[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] +=
          g.area * dot(avg, g.grad[static_cast<std::size_t>(i)]);
    }
  }
  return b;
}

std::vector<double> Discretization::load_vector(const GradFunction& f) const {
  const Index nv = mesh_.num_vertices();
  std::vector<double> b(2 * static_cast<std::size_t>(nv), 0.0);
  for (Index k = 0; k < mesh_.num_triangles(); ++k) {
    const auto& t = mesh_.triangle(k);
    const double area = areas_[static_cast<std::size_t>(k)];
    for (const auto& qp : kRule) {
      const Point2 x = map_point(mesh_, t, qp);
      const Vec2 fx = f(x.x, x.y);
      for (int i = 0; i < 3; ++i) {
        const auto j = static_cast<std::size_t>(t[static_cast<std::size_t>(i)]);
        const double w = area * qp.weight * qp.bary[static_cast<std::size_t>(i)];
        b[j] += w * fx.x;
        b[static_cast<std::size_t>(nv) + j] += w * fx.y;
      }
    }
  }
  constrain_vector(b);
  return b;
}

void Discretization::constrain_rows(SparseMatrix& a) const {
  if (a.rows() != static_cast<int>(constrained_.size())) {
    throw std::invalid_argument("constrain_rows: matrix rows must match vector dofs");
  }
  auto vals = a.values_mut();
  const auto rp = a.row_ptr();
  for (int r = 0; r < a.rows(); ++r) {
    if (!constrained_[static_cast<std::size_t>(r)]) continue;
    for (int p = rp[static_cast<std::size_t>(r)]; p < rp[static_cast<std::size_t>(r) + 1]; ++p) {
      vals[static_cast<std::size_t>(p)] = 0.0;
    }
  }
}

void Discretization::constrain_cols(SparseMatrix& a) const {
  if (a.cols() != static_cast<int>(constrained_.size())) {
    throw std::invalid_argument("constrain_cols: matrix cols must match vector dofs");
  }
  auto vals = a.values_mut();
  const auto ci = a.col_idx();
  for (std::size_t p = 0; p < vals.size(); ++p) {
    if (constrained_[static_cast<std::size_t>(ci[p])]) vals[p] = 0.0;
  }
}

void Discretization::constrain_system(SparseMatrix& a, std::span<double> rhs) const {
  constrain_rows(a);
  constrain_cols(a);
  auto vals = a.values_mut();
  for (int r = 0; r < a.rows(); ++r) {
    if (!constrained_[static_cast<std::size_t>(r)]) continue;
    const int p = a.find(r, r);
    if (p < 0) throw std::logic_error("constrain_system: diagonal missing from pattern");
    vals[static_cast<std::size_t>(p)] = 1.0;
  }
  if (!rhs.empty()) constrain_vector(rhs);
}

void Discretization::constrain_vector(std::span<double> sigma) const {
  if (sigma.size() != constrained_.size()) {
    throw std::invalid_argument("constrain_vector: vector field size mismatch");
  }
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (constrained_[i]) sigma[i] = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Projections

ScalarField project_Qh(const PointFunction& f, const Discretization& disc) {
  ScalarField x = disc.load(f);
  const auto m = disc.lumped();
  for (std::size_t j = 0; j < x.size(); ++j) x[j] /= m[j];
  return x;
}

ScalarField project_Rh(const PointFunction& f, const GradFunction& grad_f,
                       const Discretization& disc) {
  const SparseMatrix a = linalg::add(disc.stiffness(), 1.0, disc.mass(), 1.0);
  std::vector<double> b = disc.load(f);
  const std::vector<double> bg = disc.load_grad(grad_f);
  for (std::size_t j = 0; j < b.size(); ++j) b[j] += bg[j];
  return linalg::solve_spd(a, b).x;
}

ScalarField project_L2(const PointFunction& f, const Discretization& disc) {
  return linalg::solve_spd(disc.mass(), disc.load(f)).x;
}

VectorField project_L2_vector(const GradFunction& f, const Discretization& disc) {
  SparseMatrix a = disc.vector_mass();
  std::vector<double> b = disc.load_vector(f);
  disc.constrain_system(a, b);
  VectorField x = linalg::solve_spd(a, b).x;
  disc.constrain_vector(x);
  return x;
}

double ah_defect_norm_sq(const Discretization& disc, std::span<const double> v) {
  const std::vector<double> kv = disc.stiffness() * v;
  if (linalg::norm2(kv) == 0.0) return 0.0;
  const std::vector<double> y = linalg::solve_spd(disc.mass(), kv).x;
  return linalg::dot(kv, y);
}

}  // namespace chemrep
