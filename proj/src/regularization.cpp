#include "chemrep/regularization.hpp"

#include <algorithm>
#include <cmath>

#include "chemrep/errors.hpp"

namespace chemrep {

void RegParams::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0,1)");
  if (!(a_shift > 0.0) || !std::isfinite(a_shift)) throw ConfigError("a_shift must be > 0");
}

double lambda_eps(double s, const RegParams& p) {
  const double lo = p.eps;
  const double hi = 1.0 / p.eps;
  if (s <= lo) return lo;
  if (s >= hi) return hi;
  return s;
}

double fpp_eps(double s, const RegParams& p) { return 1.0 / lambda_eps(s, p); }

double fp_eps(double s, const RegParams& p) {
  const double e = p.eps;
  const double inv = 1.0 / e;
  if (s <= e) return std::log(e) + (s - e) / e;
  if (s >= inv) return -std::log(e) + e * s - 1.0;
  return std::log(s);
}

double f_eps(double s, const RegParams& p) {
  const double e = p.eps;
  const double inv = 1.0 / e;
  if (s <= e) {
    const double d = s - e;
    return (e * std::log(e) - e + 1.0) + std::log(e) * d + d * d / (2.0 * e);
  }
  if (s >= inv) {
    // F(1/e) = (1/e)(-ln e) - 1/e + 1, F'(1/e) = -ln e.
    const double f_hi = -inv * std::log(e) - inv + 1.0;
    const double d = s - inv;
    return f_hi - std::log(e) * d + 0.5 * e * d * d;
  }
  return s * std::log(s) - s + 1.0;
}

namespace {

// Integral of F'' over [lo, hi] with lo <= hi, split at the breakpoints.
double integrate_fpp(double lo, double hi, const RegParams& p) {
  const double e = p.eps;
  const double inv = 1.0 / e;
  double total = 0.0;
  if (lo < e) {
    const double top = std::min(hi, e);
    total += (top - lo) / e;
    lo = top;
  }
  if (lo < hi && lo < inv) {
    const double top = std::min(hi, inv);
    total += std::log1p((top - lo) / lo);
    lo = top;
  }
  if (lo < hi) total += e * (hi - lo);
  return total;
}

}  // namespace

double fp_eps_difference(double a, double b, const RegParams& p) {
  if (a == b) return 0.0;
  return a > b ? integrate_fpp(b, a, p) : -integrate_fpp(a, b, p);
}

double lambda_hat(double a, double b, const RegParams& p) {
  const double gap = std::abs(a - b);
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (gap > kDividedDifferenceThreshold * scale) {
    return (a - b) / fp_eps_difference(a, b, p);
  }
  return lambda_eps(0.5 * (a + b), p);
}

std::array<double, 2> lambda_hat_partials(double a, double b, const RegParams& p) {
  const double gap = std::abs(a - b);
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (gap > 1e-6 * scale) {
    const double lh = lambda_hat(a, b, p);
    const double q = lh / (a - b);
    return {q * (1.0 - lh * fpp_eps(a, p)), q * (lh * fpp_eps(b, p) - 1.0)};
  }
  const double m = 0.5 * (a + b);
  const double d = (m > p.eps && m < 1.0 / p.eps) ? 0.5 : 0.0;
  return {d, d};
}

Sym2 ElementLambda::matrix() const {
  Sym2 m;
  for (int i = 0; i < 2; ++i) {
    const Vec2 e = legs[static_cast<std::size_t>(i)];
    const double c = coef[static_cast<std::size_t>(i)];
    m.xx += c * e.x * e.x;
    m.xy += c * e.x * e.y;
    m.yy += c * e.y * e.y;
  }
  return m;
}

ElementLambda build_element_lambda(const Mesh& mesh, Index k, std::span<const double> u,
                                   const RegParams& p) {
  const auto& t = mesh.triangle(k);
  const Point2& p0 = mesh.vertex(t[0]);
  const double u0 = u[static_cast<std::size_t>(t[0])];
  ElementLambda out;
  for (int i = 0; i < 2; ++i) {
    const Point2& pi = mesh.vertex(t[static_cast<std::size_t>(i + 1)]);
    const Vec2 leg{pi.x - p0.x, pi.y - p0.y};
    const double len = norm(leg);
    out.legs[static_cast<std::size_t>(i)] = (1.0 / len) * leg;
    out.coef[static_cast<std::size_t>(i)] =
        lambda_hat(u[static_cast<std::size_t>(t[static_cast<std::size_t>(i + 1)])], u0, p);
  }
  return out;
}

std::vector<ElementLambda> build_lambda_field(const Mesh& mesh, std::span<const double> u,
                                              const RegParams& p, Exec exec) {
  const Index ne = mesh.num_triangles();
  std::vector<ElementLambda> out(static_cast<std::size_t>(ne));
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (Index k = 0; k < ne; ++k) {
    out[static_cast<std::size_t>(k)] = build_element_lambda(mesh, k, u, p);
  }
  return out;
}

}  // namespace chemrep
