#include "chemrep/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chemrep/errors.hpp"

namespace chemrep {

Mesh Mesh::build_structured(int nx, int ny, double lx, double ly) {
  if (nx < 1 || ny < 1) {
    throw ConfigError("mesh: cell counts must be >= 1 (got nx=" + std::to_string(nx) +
                      ", ny=" + std::to_string(ny) + ")");
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw ConfigError("mesh: side lengths must be positive and finite");
  }

  Mesh m;
  m.nx_ = nx;
  m.ny_ = ny;
  m.lx_ = lx;
  m.ly_ = ly;

  const int nvx = nx + 1;
  const int nvy = ny + 1;
  m.vertices_.reserve(static_cast<std::size_t>(nvx) * nvy);
  m.kinds_.reserve(static_cast<std::size_t>(nvx) * nvy);
  for (int iy = 0; iy < nvy; ++iy) {
    // Exact endpoints, so boundary coordinates are bit-exact 0 and l.
    const double y = (iy == ny) ? ly : ly * static_cast<double>(iy) / ny;
    for (int ix = 0; ix < nvx; ++ix) {
      const double x = (ix == nx) ? lx : lx * static_cast<double>(ix) / nx;
      m.vertices_.push_back({x, y});
      const bool on_vertical = (ix == 0 || ix == nx);
      const bool on_horizontal = (iy == 0 || iy == ny);
      BoundaryKind kind = BoundaryKind::interior;
      if (on_vertical && on_horizontal) {
        kind = BoundaryKind::corner;
      } else if (on_vertical) {
        kind = BoundaryKind::edge_y;
      } else if (on_horizontal) {
        kind = BoundaryKind::edge_x;
      }
      m.kinds_.push_back(kind);
    }
  }

  auto vid = [nvx](int ix, int iy) { return static_cast<Index>(iy * nvx + ix); };
  m.triangles_.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Index ll = vid(ix, iy);
      const Index lr = vid(ix + 1, iy);
      const Index ul = vid(ix, iy + 1);
      const Index ur = vid(ix + 1, iy + 1);
      // Right angle first; both triangles counter-clockwise.
      m.triangles_.push_back({lr, ur, ll});
      m.triangles_.push_back({ul, ll, ur});
    }
  }

  m.h_ = 0.0;
  m.lumped_.assign(m.vertices_.size(), 0.0);
  for (Index k = 0; k < m.num_triangles(); ++k) {
    const auto& t = m.triangles_[static_cast<std::size_t>(k)];
    const Point2& a = m.vertices_[static_cast<std::size_t>(t[1])];
    const Point2& b = m.vertices_[static_cast<std::size_t>(t[2])];
    m.h_ = std::max(m.h_, std::hypot(a.x - b.x, a.y - b.y));
    const double third = m.triangle_area(k) / 3.0;
    for (Index v : t) m.lumped_[static_cast<std::size_t>(v)] += third;
  }
  return m;
}

double Mesh::triangle_area(Index k) const {
  const auto& t = triangle(k);
  const Point2& p0 = vertex(t[0]);
  const Point2& p1 = vertex(t[1]);
  const Point2& p2 = vertex(t[2]);
  return 0.5 * std::abs((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

}  // namespace chemrep
