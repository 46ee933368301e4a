#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chemrep/errors.hpp"
#include "chemrep/fem.hpp"
#include "chemrep/regularization.hpp"

using namespace chemrep;

TEST(Regularization, LambdaClamps) {
  const RegParams p{1e-3, 1.0};
  EXPECT_EQ(lambda_eps(-4.0, p), 1e-3);
  EXPECT_EQ(lambda_eps(1e-5, p), 1e-3);
  EXPECT_EQ(lambda_eps(0.5, p), 0.5);
  EXPECT_EQ(lambda_eps(5000.0, p), 1000.0);
}

// Closed forms: F_eps(0) = 1 - eps/2, F'_eps(0) = ln eps - 1,
// F_eps(1/eps) = 1 - (1 + ln eps)/eps.
TEST(Regularization, FrozenValues) {
  const RegParams p{0.1, 1.0};
  EXPECT_NEAR(f_eps(0.0, p), 0.95, 1e-15);
  EXPECT_NEAR(fp_eps(0.0, p), -3.3025850929940455, 1e-14);
  EXPECT_NEAR(f_eps(10.0, p), 1.0 - 10.0 * (1.0 + std::log(0.1)), 1e-12);
  EXPECT_NEAR(fp_eps(20.0, p), -std::log(0.1) + 2.0 - 1.0, 1e-14);
  EXPECT_NEAR(fpp_eps(-1.0, p), 10.0, 1e-14);
  EXPECT_NEAR(fpp_eps(2.0, p), 0.5, 1e-15);
  EXPECT_EQ(f_eps(1.0, p), 0.0);
  EXPECT_EQ(fp_eps(1.0, p), 0.0);
}

TEST(Regularization, C1AcrossBreakpoints) {
  const RegParams p{1e-2, 1.0};
  for (double b : {p.eps, 1.0 / p.eps}) {
    const double d = 1e-9 * std::max(1.0, b);
    EXPECT_NEAR(f_eps(b - d, p), f_eps(b + d, p), 1e-6);
    EXPECT_NEAR(fp_eps(b - d, p), fp_eps(b + d, p), 1e-5);
  }
}

TEST(Regularization, DifferenceMatchesDirect) {
  const RegParams p{1e-3, 1.0};
  for (auto [a, b] : {std::pair{0.2, 0.7}, std::pair{-1.0, 3.0}, std::pair{5.0, 2000.0}}) {
    EXPECT_NEAR(fp_eps_difference(a, b, p), fp_eps(a, p) - fp_eps(b, p), 1e-10);
  }
  EXPECT_EQ(fp_eps_difference(0.3, 0.3, p), 0.0);
}

TEST(Regularization, LambdaHat) {
  const RegParams p{1e-3, 1.0};
  // ln-divided difference of 1 and e is e - 1.
  EXPECT_NEAR(lambda_hat(std::exp(1.0), 1.0, p), std::exp(1.0) - 1.0, 1e-14);
  EXPECT_EQ(lambda_hat(0.5, 0.5, p), 0.5);
  // Both below eps: F' is linear with slope 1/eps.
  EXPECT_NEAR(lambda_hat(-2.0, -1.0, p), 1e-3, 1e-18);
}

TEST(Regularization, LambdaHatPartialsMatchDifferences) {
  const RegParams p{1e-3, 1.0};
  const double pairs[][2] = {{0.3, 0.7}, {2.0, 0.05}, {-0.2, 0.4}, {1500.0, 3.0}, {0.5, 0.5 + 1e-8}};
  for (const auto& ab : pairs) {
    const auto d = lambda_hat_partials(ab[0], ab[1], p);
    const double h = 1e-6 * std::max(1.0, std::abs(ab[0]));
    const double da = (lambda_hat(ab[0] + h, ab[1], p) - lambda_hat(ab[0] - h, ab[1], p)) / (2 * h);
    const double db = (lambda_hat(ab[0], ab[1] + h, p) - lambda_hat(ab[0], ab[1] - h, p)) / (2 * h);
    EXPECT_NEAR(d[0], da, 1e-5) << ab[0] << " " << ab[1];
    EXPECT_NEAR(d[1], db, 1e-5) << ab[0] << " " << ab[1];
  }
}

TEST(Regularization, ElementLambdaChainRule) {
  const Mesh mesh = Mesh::build_structured(4, 4, 2.0, 2.0);
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(-0.5, 3.0);
  for (double eps : {1e-1, 1e-3}) {
    const RegParams p{eps, 1.0};
    std::vector<double> u(static_cast<std::size_t>(mesh.num_vertices()));
    for (double& x : u) x = dist(gen);
    std::vector<double> fp(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) fp[j] = fp_eps(u[j], p);
    const auto lam = build_lambda_field(mesh, u, p);
    for (Index k = 0; k < mesh.num_triangles(); ++k) {
      const ElementGeometry g = element_geometry(mesh, k);
      const auto& t = mesh.triangle(k);
      Vec2 gu{0, 0}, gf{0, 0};
      for (int i = 0; i < 3; ++i) {
        gu = gu + u[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] * g.grad[static_cast<std::size_t>(i)];
        gf = gf + fp[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] * g.grad[static_cast<std::size_t>(i)];
      }
      const Vec2 d = lam[static_cast<std::size_t>(k)].apply(gf) - gu;
      EXPECT_LE(norm(d), 1e-10 * (1.0 + norm(gu)));
    }
  }
}

TEST(Regularization, ValidateParams) {
  EXPECT_THROW((RegParams{0.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((RegParams{1.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((RegParams{1e-3, 0.0}.validate()), ConfigError);
  EXPECT_NO_THROW((RegParams{1e-3, 1.0}.validate()));
}
