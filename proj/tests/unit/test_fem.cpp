#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "chemrep/errors.hpp"
#include "chemrep/fem.hpp"

using namespace chemrep;

TEST(Quadrature, WeightsAndDegree) {
  const auto rule = quadrature_rule();
  ASSERT_EQ(rule.size(), static_cast<std::size_t>(kQuadraturePoints));
  double w = 0.0;
  for (const auto& q : rule) w += q.weight;
  EXPECT_NEAR(w, 1.0, 1e-15);
  // On the reference triangle, int x^a y^b = a! b! / (a + b + 2)!; the rule
  // weights are relative to the area 1/2.
  auto exact = [](int a, int b) { return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3); };
  for (int a = 0; a <= kQuadratureDegree; ++a) {
    for (int b = 0; a + b <= kQuadratureDegree; ++b) {
      double s = 0.0;
      for (const auto& q : rule) s += q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
      EXPECT_NEAR(0.5 * s, exact(a, b), 1e-15) << a << "," << b;
    }
  }
}

TEST(Fem, ElementGeometry) {
  const Mesh mesh = Mesh::build_structured(2, 2, 2.0, 2.0);
  for (Index k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    EXPECT_DOUBLE_EQ(g.area, 0.5);
    const Vec2 s = g.grad[0] + g.grad[1] + g.grad[2];
    EXPECT_NEAR(norm(s), 0.0, 1e-15);
  }
}

TEST(Fem, MassAndStiffnessInvariants) {
  const Mesh mesh = Mesh::build_structured(5, 4, 2.0, 1.0);
  const Discretization disc(mesh);
  const std::vector<double> ones(static_cast<std::size_t>(disc.n()), 1.0);
  EXPECT_NEAR(disc.mass().quadratic(ones), 2.0, 1e-13);
  for (double v : disc.stiffness() * ones) EXPECT_NEAR(v, 0.0, 1e-13);
  // Row sums of M equal the lumped weights.
  const std::vector<double> rs = disc.mass() * ones;
  for (int j = 0; j < disc.n(); ++j) EXPECT_NEAR(rs[static_cast<std::size_t>(j)], disc.lumped()[static_cast<std::size_t>(j)], 1e-15);
}

// Element mass matrix entries area/12 (1 + delta_ij): on the 1x1 mesh of the
// unit square both triangles have area 1/2.
TEST(Fem, MassFrozenOneCell) {
  const Mesh mesh = Mesh::build_structured(1, 1, 1.0, 1.0);
  const Discretization disc(mesh);
  EXPECT_NEAR(disc.mass().at(0, 0), 2.0 / 12.0, 1e-16);
  EXPECT_NEAR(disc.mass().at(1, 1), 1.0 / 12.0, 1e-16);
  EXPECT_NEAR(disc.mass().at(0, 3), 2.0 / 24.0, 1e-16);
  EXPECT_EQ(disc.mass().at(1, 2), 0.0);
  EXPECT_NEAR(disc.stiffness().at(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(disc.stiffness().at(0, 1), -0.5, 1e-15);
  EXPECT_NEAR(disc.stiffness().at(0, 3), 0.0, 1e-15);
}

TEST(Fem, StiffnessExactOnQuadratic) {
  // (K x)_j against x = nodal values of a linear field is exact: grad = (1, 2).
  const Mesh mesh = Mesh::build_structured(6, 6, 2.0, 2.0);
  const Discretization disc(mesh);
  const ScalarField lin = interp_nodal([](double x, double y) { return x + 2.0 * y; }, mesh);
  EXPECT_NEAR(disc.stiffness().quadratic(lin), 5.0 * 4.0, 1e-12);
}

TEST(Fem, ConstraintsFlags) {
  const Mesh mesh = Mesh::build_structured(2, 2, 2.0, 2.0);
  const Discretization disc(mesh);
  const auto c = disc.constrained();
  ASSERT_EQ(c.size(), 18u);
  // Vertex 1 = (1, 0): bottom edge, sigma_2 constrained only.
  EXPECT_EQ(c[1], 0);
  EXPECT_EQ(c[9 + 1], 1);
  // Vertex 3 = (0, 1): left edge, sigma_1 only.
  EXPECT_EQ(c[3], 1);
  EXPECT_EQ(c[9 + 3], 0);
  // Corner and interior.
  EXPECT_EQ(c[0], 1);
  EXPECT_EQ(c[9], 1);
  EXPECT_EQ(c[4], 0);
  EXPECT_EQ(c[13], 0);
}

TEST(Fem, WeightedPairIsTranspose) {
  const Mesh mesh = Mesh::build_structured(3, 3, 2.0, 2.0);
  const Discretization disc(mesh);
  std::vector<double> c(static_cast<std::size_t>(mesh.num_triangles()) * kQuadraturePoints);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
  const auto p = disc.weighted_vector_grad(c);
  const auto pt = disc.weighted_grad_vector(c);
  EXPECT_EQ(p.transpose(), pt);
}

TEST(Fem, WeightedFormsReduceToConstant) {
  const Mesh mesh = Mesh::build_structured(3, 2, 2.0, 2.0);
  const Discretization disc(mesh);
  const std::vector<double> one(static_cast<std::size_t>(mesh.num_triangles()) * kQuadraturePoints, 1.0);
  const auto k1 = disc.weighted_grad_grad(one);
  const auto m1 = disc.weighted_mass(one);
  for (int i = 0; i < disc.n(); ++i)
    for (int j = 0; j < disc.n(); ++j) {
      EXPECT_NEAR(k1.at(i, j), disc.stiffness().at(i, j), 1e-14);
      EXPECT_NEAR(m1.at(i, j), disc.mass().at(i, j), 1e-15);
    }
}

TEST(Fem, ValueGradIsDerivativeOfWeightedStiffness) {
  // d/du_j of (c(u_h) grad f, grad phi_i) for c(s) = s is (phi_j grad f, grad phi_i).
  const Mesh mesh = Mesh::build_structured(3, 3, 2.0, 2.0);
  const Discretization disc(mesh);
  const ScalarField u = interp_nodal([](double x, double y) { return 1.0 + x * y; }, mesh);
  const ScalarField f = interp_nodal([](double x, double y) { return std::sin(x) + y * y; }, mesh);
  std::vector<Vec2> gradf(static_cast<std::size_t>(mesh.num_triangles()) * kQuadraturePoints);
  for (Index k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    Vec2 s{0, 0};
    for (int i = 0; i < 3; ++i) s = s + f[static_cast<std::size_t>(mesh.triangle(k)[static_cast<std::size_t>(i)])] * g.grad[static_cast<std::size_t>(i)];
    for (int q = 0; q < kQuadraturePoints; ++q) gradf[static_cast<std::size_t>(k) * kQuadraturePoints + static_cast<std::size_t>(q)] = s;
  }
  const auto d = disc.weighted_value_grad(gradf);
  // Linear in u, so the derivative times u reproduces the form.
  const std::vector<double> a = d * u;
  const std::vector<double> b = disc.weighted_grad_grad(disc.at_quadrature(u)) * f;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-13);
}

TEST(Fem, ProjectionsOfConstants) {
  const Mesh mesh = Mesh::build_structured(4, 4, 2.0, 2.0);
  const Discretization disc(mesh);
  const auto c = [](double, double) { return 3.25; };
  const auto zero_grad = [](double, double) { return Vec2{0.0, 0.0}; };
  for (double v : project_Qh(c, disc)) EXPECT_NEAR(v, 3.25, 1e-14);
  for (double v : project_Rh(c, zero_grad, disc)) EXPECT_NEAR(v, 3.25, 1e-11);
  for (double v : project_L2(c, disc)) EXPECT_NEAR(v, 3.25, 1e-11);
  for (double v : project_L2_vector(zero_grad, disc)) EXPECT_EQ(v, 0.0);
}

TEST(Fem, QhConservesIntegral) {
  const Mesh mesh = Mesh::build_structured(8, 8, 2.0, 2.0);
  const Discretization disc(mesh);
  const auto f = [](double x, double y) { return std::exp(x) * (1.0 + y * y); };
  const ScalarField q = project_Qh(f, disc);
  EXPECT_NEAR(lumped_product(mesh, q, std::vector<double>(q.size(), 1.0)), disc.integrate(f), 1e-12);
}

TEST(Fem, InterpRejectsNonFinite) {
  const Mesh mesh = Mesh::build_structured(2, 2, 2.0, 2.0);
  EXPECT_THROW(interp_nodal([](double x, double) { return x > 1.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0; }, mesh),
               InputError);
}

TEST(Fem, AhDefectVanishesOnConstants) {
  const Mesh mesh = Mesh::build_structured(4, 4, 2.0, 2.0);
  const Discretization disc(mesh);
  EXPECT_EQ(ah_defect_norm_sq(disc, std::vector<double>(static_cast<std::size_t>(disc.n()), 2.0)), 0.0);
  const ScalarField v = interp_nodal([](double x, double y) { return x * x - y; }, mesh);
  EXPECT_GT(ah_defect_norm_sq(disc, v), 0.0);
}

TEST(Fem, ConstrainSystem) {
  const Mesh mesh = Mesh::build_structured(2, 2, 2.0, 2.0);
  const Discretization disc(mesh);
  linalg::SparseMatrix a = disc.b_operator();
  std::vector<double> rhs(18, 1.0);
  disc.constrain_system(a, rhs);
  EXPECT_EQ(a.at(0, 0), 1.0);
  EXPECT_EQ(a.at(0, 4), 0.0);
  EXPECT_EQ(rhs[0], 0.0);
  EXPECT_EQ(rhs[4], 1.0);
  EXPECT_EQ(a.transpose(), a);
}
