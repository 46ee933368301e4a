#include <gtest/gtest.h>

#include <cmath>

#include "chemrep/errors.hpp"
#include "chemrep/mesh.hpp"

using namespace chemrep;

TEST(Mesh, CountsOnTwoByTwo) {
  const Mesh m = Mesh::build_structured(2, 2, 2.0, 2.0);
  EXPECT_EQ(m.num_vertices(), 9);
  EXPECT_EQ(m.num_triangles(), 8);
  EXPECT_DOUBLE_EQ(m.h(), std::sqrt(2.0));
}

TEST(Mesh, LexicographicVertices) {
  const Mesh m = Mesh::build_structured(4, 3, 2.0, 1.5);
  EXPECT_EQ(m.vertex(0), (Point2{0.0, 0.0}));
  EXPECT_EQ(m.vertex(4), (Point2{2.0, 0.0}));
  EXPECT_EQ(m.vertex(5), (Point2{0.0, 0.5}));
  EXPECT_EQ(m.vertex(19), (Point2{2.0, 1.5}));
}

TEST(Mesh, RightAngleFirst) {
  const Mesh m = Mesh::build_structured(5, 3, 2.0, 1.0);
  for (Index k = 0; k < m.num_triangles(); ++k) {
    const auto& t = m.triangle(k);
    const Point2 p0 = m.vertex(t[0]), p1 = m.vertex(t[1]), p2 = m.vertex(t[2]);
    const double d = (p1.x - p0.x) * (p2.x - p0.x) + (p1.y - p0.y) * (p2.y - p0.y);
    EXPECT_NEAR(d, 0.0, 1e-14) << "triangle " << k;
    EXPECT_NEAR(m.triangle_area(k), 0.5 * 0.4 * (1.0 / 3.0), 1e-15);
  }
}

// Hand count on [0,2]^2 with 2x2 cells: corner weights 1/3 or 1/6 depending on
// how many triangles touch, edge midpoints 1/2, centre 1.
TEST(Mesh, LumpedWeightsFrozen) {
  const Mesh m = Mesh::build_structured(2, 2, 2.0, 2.0);
  const double expected[9] = {1.0 / 3, 0.5, 1.0 / 6, 0.5, 1.0, 0.5, 1.0 / 6, 0.5, 1.0 / 3};
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(m.lumped_weight(j), expected[j], 1e-15) << j;
}

TEST(Mesh, LumpedWeightsSumToArea) {
  const Mesh m = Mesh::build_structured(7, 5, 3.0, 1.25);
  double s = 0.0;
  for (double w : m.lumped_weights()) s += w;
  EXPECT_NEAR(s, 3.75, 1e-13);
}

TEST(Mesh, BoundaryKinds) {
  const Mesh m = Mesh::build_structured(2, 2, 2.0, 2.0);
  EXPECT_EQ(m.boundary_kind(0), BoundaryKind::corner);
  EXPECT_EQ(m.boundary_kind(1), BoundaryKind::edge_x);
  EXPECT_EQ(m.boundary_kind(3), BoundaryKind::edge_y);
  EXPECT_EQ(m.boundary_kind(4), BoundaryKind::interior);
  EXPECT_EQ(m.boundary_kind(8), BoundaryKind::corner);
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(Mesh::build_structured(0, 2, 1.0, 1.0), ConfigError);
  EXPECT_THROW(Mesh::build_structured(2, 2, -1.0, 1.0), ConfigError);
  EXPECT_THROW(Mesh::build_structured(2, 2, 1.0, 0.0), ConfigError);
}
