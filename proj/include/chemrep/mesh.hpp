#pragma once

#include <array>
#include <span>
#include <vector>

namespace chemrep {

using Index = int;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Boundary classification of a mesh vertex on the rectangle.
/// edge_x: on a horizontal side (y = 0 or y = ly), outward normal along y.
/// edge_y: on a vertical side (x = 0 or x = lx), outward normal along x.
enum class BoundaryKind : unsigned char { interior, edge_x, edge_y, corner };

/// Uniform right-angled triangulation of [0,lx]x[0,ly].
///
/// Vertices are numbered lexicographically, j = iy*(nx+1) + ix. Every grid
/// cell is split along its lower-left to upper-right diagonal; each triangle
/// is stored as (p0, p1, p2) with the right angle at p0, so the legs
/// p0->p1 and p0->p2 are orthogonal. Immutable after construction.
class Mesh {
 public:
  using Triangle = std::array<Index, 3>;

  /// Throws ConfigError on nx, ny < 1 or non-positive lengths.
  static Mesh build_structured(int nx, int ny, double lx, double ly);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }

  const Point2& vertex(Index j) const { return vertices_.at(static_cast<std::size_t>(j)); }
  const Triangle& triangle(Index k) const { return triangles_.at(static_cast<std::size_t>(k)); }
  BoundaryKind boundary_kind(Index j) const { return kinds_.at(static_cast<std::size_t>(j)); }

  std::span<const Point2> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }

  /// Maximum element diameter (the hypotenuse length).
  double h() const { return h_; }

  double triangle_area(Index k) const;

  /// m_j: one third of the area of the triangles incident to vertex j.
  double lumped_weight(Index j) const { return lumped_.at(static_cast<std::size_t>(j)); }
  std::span<const double> lumped_weights() const { return lumped_; }

  bool operator==(const Mesh&) const = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  double lx_ = 0.0;
  double ly_ = 0.0;
  double h_ = 0.0;
  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryKind> kinds_;
  std::vector<double> lumped_;
};

}  // namespace chemrep
