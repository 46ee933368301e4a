#include <gtest/gtest.h>

#include <cmath>

#include "chemrep/app.hpp"
#include "chemrep/diagnostics.hpp"
#include "oracle.hpp"

using namespace chemrep;

TEST(Diagnostics, FZero) {
  EXPECT_EQ(f_zero(0.0), 1.0);
  EXPECT_EQ(f_zero(-2.0), 1.0);
  EXPECT_EQ(f_zero(1.0), 0.0);
  EXPECT_NEAR(f_zero(std::exp(1.0)), 1.0, 1e-15);
}

TEST(Diagnostics, NegativityStats) {
  const Mesh mesh = Mesh::build_structured(2, 2, 2.0, 2.0);
  const Discretization disc(mesh);
  std::vector<double> u(9, 1.0);
  NegativityStats st = negativity_stats(disc, u);
  EXPECT_EQ(st.min_u, 1.0);
  EXPECT_EQ(st.neg_norm, 0.0);
  // Single node -1 at the centre: |phi_4|^2 = M_44 = 6 * area / 6 = 0.5.
  u[4] = -1.0;
  st = negativity_stats(disc, u);
  EXPECT_EQ(st.min_u, -1.0);
  EXPECT_NEAR(st.neg_norm * st.neg_norm, 0.5, 1e-15);
}

TEST(Diagnostics, MassOfConstant) {
  const Mesh mesh = Mesh::build_structured(3, 5, 2.0, 2.0);
  const Discretization disc(mesh);
  const std::vector<double> u(static_cast<std::size_t>(disc.n()), 2.5);
  EXPECT_NEAR(mass_lumped(disc, u), 10.0, 1e-13);
  EXPECT_NEAR(mass_consistent(disc, u), 10.0, 1e-13);
}

TEST(Diagnostics, VIntegralBound) {
  EXPECT_DOUBLE_EQ(v_integral_bound(0, 0.1, -3.0, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(v_integral_bound(2, 1.0, 4.0, 0.5), 1.5);
}

TEST(Diagnostics, ExactEnergyOfConstants) {
  const Mesh mesh = Mesh::build_structured(4, 4, 2.0, 2.0);
  const Discretization disc(mesh);
  const std::vector<double> one(static_cast<std::size_t>(disc.n()), 1.0);
  EXPECT_NEAR(energy_exact(disc, one, one), 0.0, 1e-15);
  const std::vector<double> zero(one.size(), 0.0);
  EXPECT_NEAR(energy_exact(disc, zero, one), 4.0, 1e-13);
  EXPECT_NEAR(residual_exact(disc, one, one, one, one, 1e-3), 0.0, 1e-12);
}

TEST(Diagnostics, EnergyBalanceAccumulates) {
  EnergyBalance b;
  b.add("a", -2.0);
  b.add("b", 0.5);
  EXPECT_EQ(b.residual, -1.5);
  EXPECT_EQ(b.scale, 2.5);
  EXPECT_EQ(b.names.size(), 2u);
}

// Production energy law against the dense recomputation on the 2x2 mesh.
TEST(Diagnostics, EnergyLawMatchesOracle) {
  const Mesh mesh = Mesh::build_structured(2, 2, 2.0, 2.0);
  const Discretization disc(mesh);
  for (SchemeKind kind : {SchemeKind::uv, SchemeKind::us, SchemeKind::uzsw, SchemeKind::beuv}) {
    SchemeState s = init_state(kind, preset_ic("custom-gaussian"), disc, 1e-3, RegParams{1e-3, 1.0});
    for (int n = 0; n < 3; ++n) {
      const StepResult r = step(s, disc, PicardSettings{1e-12, 200});
      const EnergyBalance b = energy_law(s, r.state, disc);
      const double o = oracle::energy_law_residual(mesh, s, r.state);
      EXPECT_NEAR(b.residual, o, 1e-10 * std::max(1.0, b.scale)) << to_string(kind) << " step " << n;
      s = r.state;
    }
  }
}

TEST(Diagnostics, RowFields) {
  const Mesh mesh = Mesh::build_structured(3, 3, 2.0, 2.0);
  const Discretization disc(mesh);
  const SchemeState s = init_state(SchemeKind::uv, preset_ic("constant"), disc, 0.25, RegParams{1e-3, 1.0});
  StepReport rep;
  rep.picard_iters = 4;
  rep.solver_residual = 1e-13;
  const TimeSeriesRow r = make_row(nullptr, s, disc, &rep);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.picard_iters, 4);
  EXPECT_EQ(r.solver_residual, 1e-13);
  EXPECT_NEAR(r.mass_lumped, 4.0, 1e-13);
  EXPECT_EQ(r.re_exact, 0.0);
}
