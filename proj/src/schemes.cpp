#include "chemrep/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chemrep/errors.hpp"

namespace chemrep {

using linalg::SparseMatrix;

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::uv: return "uv";
    case SchemeKind::us: return "us";
    case SchemeKind::uzsw: return "uzsw";
    case SchemeKind::beuv: return "beuv";
  }
  return "?";
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "uv") return SchemeKind::uv;
  if (name == "us") return SchemeKind::us;
  if (name == "uzsw") return SchemeKind::uzsw;
  if (name == "beuv") return SchemeKind::beuv;
  throw ConfigError("unknown scheme '" + std::string(name) + "' (expected uv, us, uzsw, beuv)");
}

void PicardSettings::validate() const {
  if (!(tol > 0.0)) throw ConfigError("picard tol must be > 0");
  if (max_iters < 1) throw ConfigError("picard max_iters must be >= 1");
}

double relative_increment(const SparseMatrix& m, std::span<const double> a,
                          std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double num = std::sqrt(std::max(0.0, m.quadratic(d)));
  const double den = std::sqrt(std::max(0.0, m.quadratic(b)));
  return den > 0.0 ? num / den : num;
}

namespace {

std::vector<double> axpy(double a, std::span<const double> x, double b, std::span<const double> y) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

void add_to(std::vector<double>& acc, double s, std::span<const double> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * x[i];
}

std::vector<double> lumped_times(const Discretization& disc, std::span<const double> x) {
  const auto m = disc.lumped();
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = m[j] * x[j];
  return out;
}

SparseMatrix lumped_plus_stiffness(const Discretization& disc, double inv_k) {
  const std::vector<double> m(disc.lumped().begin(), disc.lumped().end());
  return linalg::add(SparseMatrix::diagonal(m), inv_k, disc.stiffness(), 1.0);
}

// ((1/k + 1) M + K), the v-equation operator.
SparseMatrix v_operator(const Discretization& disc, double inv_k) {
  return linalg::add(disc.mass(), inv_k + 1.0, disc.stiffness(), 1.0);
}

struct Solver {
  StepReport& report;

  std::vector<double> spd(const SparseMatrix& a, std::span<const double> b,
                          std::span<const double> x0 = {}) {
    try {
      linalg::SolveResult r = linalg::solve_spd(a, b, linalg::kDefaultSolveTol, x0);
      report.solver_residual = std::max(report.solver_residual, r.report.relative_residual);
      return std::move(r.x);
    } catch (const linalg::SolverError& e) {
      report.solver_residual = std::max(report.solver_residual, e.report().relative_residual);
      throw StepError(std::string("linear solve failed: ") + e.what(), report);
    }
  }

  std::vector<double> general(const SparseMatrix& a, std::span<const double> b) {
    try {
      linalg::SolveResult r = linalg::solve_general(a, b);
      report.solver_residual = std::max(report.solver_residual, r.report.relative_residual);
      return std::move(r.x);
    } catch (const linalg::SolverError& e) {
      throw StepError(std::string("block solve failed: ") + e.what(), report);
    }
  }
};

[[noreturn]] void picard_failure(const SchemeState& prev, const StepReport& report) {
  const double last = report.increments.empty() ? 0.0 : report.increments.back();
  throw StepError("Picard iteration did not converge at step " + std::to_string(prev.n + 1) +
                      " after " + std::to_string(report.picard_iters) +
                      " iterations (last increment " + std::to_string(last) + ")",
                  report);
}

void check_finite(std::span<const double> x, const SchemeState& prev, const StepReport& report) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw StepError("non-finite iterate at step " + std::to_string(prev.n + 1), report);
    }
  }
}

SchemeState advance(const SchemeState& prev) {
  SchemeState next;
  next.kind = prev.kind;
  next.n = prev.n + 1;
  next.k = prev.k;
  next.params = prev.params;
  return next;
}

ScalarField pi_fp(std::span<const double> u, const RegParams& p) {
  ScalarField out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = fp_eps(u[j], p);
  return out;
}

}  // namespace

ScalarField recover_v(const Discretization& disc, double k, std::span<const double> u,
                      std::span<const double> v_prev) {
  const double inv_k = 1.0 / k;
  const SparseMatrix a = v_operator(disc, inv_k);
  const std::vector<double> rhs = disc.mass() * axpy(inv_k, v_prev, 1.0, u);
  return linalg::solve_spd(a, rhs, linalg::kDefaultSolveTol, v_prev).x;
}

SchemeState init_state(SchemeKind kind, const InitialData& data, const Discretization& disc,
                       double k, const RegParams& params) {
  if (!(k > 0.0)) throw ConfigError("time step k must be > 0");
  params.validate();
  SchemeState s;
  s.kind = kind;
  s.k = k;
  s.params = params;
  s.u = project_Qh(data.u0, disc);
  s.v = project_Rh(data.v0, data.grad_v0, disc);
  if (kind == SchemeKind::us || kind == SchemeKind::uzsw) {
    s.sigma = project_L2_vector(data.grad_v0, disc);
  }
  if (kind == SchemeKind::uzsw) {
    const auto u0 = data.u0;
    s.w = project_L2(
        [u0, params](double x, double y) { return std::sqrt(f_eps(u0(x, y), params) + params.a_shift); },
        disc);
    s.z.assign(s.u.size(), 0.0);
  }
  return s;
}

namespace {

// One sweep of the Picard map: the auxiliary unknown (v or sigma) from u^l,
// then the u update that uses it.
struct Sweep {
  std::vector<double> aux;
  ScalarField u;
};

constexpr double kStagnationRatio = 0.95;
constexpr double kMinRelaxation = 1.0 / 64.0;
// An iterate this many times larger than u^{n-1} (consistent L2) is treated as
// divergence; relative increments lose meaning once the iterates blow up.
constexpr double kDivergenceFactor = 1e8;

// Fixed-point loop shared by uv, us and beuv. The stopping test is the max of
// the relative consistent-L2 increments of the plain Picard map, measured
// against the previous iterate. If the increments stop decreasing (a period-2
// cycle or divergence) the u iterate is under-relaxed, halving the factor on
// each further stall; the fixed point, and so the accepted solution, does not
// change.
template <class SweepFn>
Sweep picard_loop(const SchemeState& prev, const Discretization& disc, const SparseMatrix& aux_mass,
                  std::span<const double> aux0, const PicardSettings& set, StepReport& report,
                  SweepFn&& sweep) {
  ScalarField u = prev.u;
  std::vector<double> aux(aux0.begin(), aux0.end());
  const double u_scale = std::sqrt(std::max(0.0, disc.mass().quadratic(prev.u)));
  double theta = 1.0;
  for (int l = 0; l < set.max_iters; ++l) {
    Sweep sw = sweep(u, aux);
    check_finite(sw.u, prev, report);
    if (std::sqrt(std::max(0.0, disc.mass().quadratic(sw.u))) > kDivergenceFactor * std::max(u_scale, 1.0)) {
      report.picard_iters = l + 1;
      throw StepError("Picard iteration diverged at step " + std::to_string(prev.n + 1), report);
    }
    const double inc = std::max(relative_increment(disc.mass(), sw.u, u),
                                relative_increment(aux_mass, sw.aux, aux));
    report.picard_iters = l + 1;
    if (inc <= set.tol) {
      report.increments.push_back(inc);
      report.relaxation = theta;
      return sw;
    }
    if (!report.increments.empty() && inc > kStagnationRatio * report.increments.back()) {
      theta = theta == 1.0 ? 0.5 : std::max(0.5 * theta, kMinRelaxation);
    }
    report.increments.push_back(inc);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += theta * (sw.u[j] - u[j]);
    aux = std::move(sw.aux);
  }
  report.relaxation = theta;
  picard_failure(prev, report);
}

// Damped Newton on R(u, aux) = 0, started from the previous time level.
// Used when the Picard iteration fails: it targets the same discrete
// solution and uses the same increment-based stopping test, with its own
// iteration cap. Steps are halved (up to 10 times) until ||R||_2 decreases.
constexpr int kNewtonMaxIters = 50;

template <class ResidualFn, class JacobianFn>
Sweep newton_loop(const SchemeState& prev, const Discretization& disc, const SparseMatrix& aux_mass,
                  std::span<const double> aux0, const PicardSettings& set, StepReport& report,
                  ResidualFn&& residual, JacobianFn&& jacobian) {
  report.newton = true;
  report.increments.clear();
  Solver solve{report};
  const std::size_t nv = prev.u.size();
  ScalarField u = prev.u;
  std::vector<double> aux(aux0.begin(), aux0.end());
  std::vector<double> r = residual(u, aux);
  double r_norm = linalg::norm2(r);
  for (int l = 0; l < kNewtonMaxIters; ++l) {
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    const std::vector<double> dx = solve.general(jacobian(u, aux), rhs);
    check_finite(dx, prev, report);

    double t = 1.0;
    ScalarField u_try;
    std::vector<double> a_try;
    std::vector<double> r_try;
    for (int ls = 0; ls < 10; ++ls, t *= 0.5) {
      u_try = u;
      a_try = aux;
      for (std::size_t j = 0; j < nv; ++j) u_try[j] += t * dx[j];
      for (std::size_t j = 0; j < a_try.size(); ++j) a_try[j] += t * dx[nv + j];
      r_try = residual(u_try, a_try);
      if (linalg::norm2(r_try) < r_norm) break;
    }
    const double inc = std::max(relative_increment(disc.mass(), u_try, u),
                                relative_increment(aux_mass, a_try, aux));
    report.increments.push_back(inc);
    report.picard_iters = l + 1;
    u = std::move(u_try);
    aux = std::move(a_try);
    r = std::move(r_try);
    r_norm = linalg::norm2(r);
    if (inc <= set.tol) return Sweep{std::move(aux), std::move(u)};
  }
  picard_failure(prev, report);
}

}  // namespace

namespace {

// The uv equations at (u, v), written as R(u, v) = 0:
//   R_u = ((1/k) M_L + K) u - (1/k) M_L u^{n-1} + C(u) v
//   R_v = ((1/k + 1) M + K) v - M u - (1/k) M v^{n-1}
// with C(u) = (Lambda_eps(u) grad phi_j, grad phi_i).
struct UvSystem {
  const SchemeState& prev;
  const Discretization& disc;
  double inv_k;
  SparseMatrix av;
  SparseMatrix au;
  std::vector<double> v_load;  // M v^{n-1}
  std::vector<double> u_load;  // (1/k) M_L u^{n-1}

  UvSystem(const SchemeState& p, const Discretization& d)
      : prev(p), disc(d), inv_k(1.0 / p.k), av(v_operator(d, inv_k)), au(lumped_plus_stiffness(d, inv_k)) {
    v_load = disc.mass() * prev.v;
    u_load = lumped_times(disc, prev.u);
    for (double& x : u_load) x *= inv_k;
  }

  SparseMatrix coupling(std::span<const double> u) const {
    return disc.tensor_stiffness(build_lambda_field(disc.mesh(), u, prev.params, disc.exec()));
  }

  std::vector<double> residual(std::span<const double> u, std::span<const double> v) const {
    const std::size_t nv = u.size();
    std::vector<double> r(2 * nv);
    const std::vector<double> a_u = au * u;
    const std::vector<double> c_v = coupling(u) * v;
    const std::vector<double> a_v = av * v;
    const std::vector<double> m_u = disc.mass() * u;
    for (std::size_t j = 0; j < nv; ++j) {
      r[j] = a_u[j] - u_load[j] + c_v[j];
      r[nv + j] = a_v[j] - m_u[j] - inv_k * v_load[j];
    }
    return r;
  }

  SparseMatrix jacobian(std::span<const double> u, std::span<const double> v) const {
    const Mesh& mesh = disc.mesh();
    const int nv = disc.n();
    // d(C(u) v)/du: Lambda_K depends on u through lambda_hat on each leg.
    std::vector<linalg::Triplet> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
      const ElementGeometry g = element_geometry(mesh, t);
      const auto& tri = mesh.triangle(t);
      const ElementLambda lam = build_element_lambda(mesh, t, u, prev.params);
      Vec2 grad_v{0.0, 0.0};
      for (std::size_t i = 0; i < 3; ++i) grad_v = grad_v + v[static_cast<std::size_t>(tri[i])] * g.grad[i];
      const double u0 = u[static_cast<std::size_t>(tri[0])];
      for (std::size_t l = 0; l < 2; ++l) {
        const Vec2 e = lam.legs[l];
        const auto d = lambda_hat_partials(u[static_cast<std::size_t>(tri[l + 1])], u0, prev.params);
        const double ev = dot(e, grad_v);
        for (std::size_t i = 0; i < 3; ++i) {
          const double w = g.area * dot(g.grad[i], e) * ev;
          trip.push_back({tri[i], tri[l + 1], w * d[0]});
          trip.push_back({tri[i], tri[0], w * d[1]});
        }
      }
    }
    const SparseMatrix j_uu =
        linalg::add(au, 1.0, SparseMatrix::from_triplets(nv, nv, std::move(trip)), 1.0);
    const SparseMatrix j_uv = coupling(u);
    const linalg::Block blocks[] = {
        {0, 0, &j_uu, 1.0}, {0, nv, &j_uv, 1.0}, {nv, 0, &disc.mass(), -1.0}, {nv, nv, &av, 1.0}};
    return linalg::assemble_blocks(2 * nv, 2 * nv, blocks);
  }
};

StepResult uv_picard(const SchemeState& prev, const Discretization& disc, const PicardSettings& set,
                     StepReport& report) {
  const UvSystem sys(prev, disc);
  StepResult res{advance(prev), {}};
  Solver solve{report};
  Sweep out = picard_loop(prev, disc, disc.mass(), prev.v, set, report,
                          [&](const ScalarField& u, const std::vector<double>& v) {
                            std::vector<double> rhs_v = disc.mass() * u;
                            add_to(rhs_v, sys.inv_k, sys.v_load);
                            Sweep sw;
                            sw.aux = solve.spd(sys.av, rhs_v, v);
                            std::vector<double> rhs_u = sys.coupling(u) * sw.aux;
                            for (std::size_t j = 0; j < rhs_u.size(); ++j) rhs_u[j] = sys.u_load[j] - rhs_u[j];
                            sw.u = solve.spd(sys.au, rhs_u, u);
                            return sw;
                          });
  res.report = report;
  res.state.u = std::move(out.u);
  res.state.v = std::move(out.aux);
  return res;
}

StepResult uv_newton(const SchemeState& prev, const Discretization& disc, const PicardSettings& set,
                     StepReport report) {
  const UvSystem sys(prev, disc);
  StepResult res{advance(prev), std::move(report)};
  Sweep out = newton_loop(
      prev, disc, disc.mass(), prev.v, set, res.report,
      [&](const ScalarField& u, const std::vector<double>& v) { return sys.residual(u, v); },
      [&](const ScalarField& u, const std::vector<double>& v) { return sys.jacobian(u, v); });
  res.state.u = std::move(out.u);
  res.state.v = std::move(out.aux);
  return res;
}

}  // namespace

StepResult step_uv(const SchemeState& prev, const Discretization& disc, const PicardSettings& set) {
  StepReport report;
  try {
    return uv_picard(prev, disc, set, report);
  } catch (const StepError& e) {
    return uv_newton(prev, disc, set, e.report());
  }
}

namespace {

// The us equations at (u, sigma), written as R(u, sigma) = 0:
//   R_u = (1/k) M_L (u - u^{n-1}) + S_lambda(u) Pi F'(u) + P(u)^T sigma
//   R_s = ((1/k) M_sigma + B) sigma - P(u) Pi F'(u) - (1/k) M_sigma sigma^{n-1}
// with P(u) = (lambda(u) psi, grad phi) and constrained sigma rows replaced by
// sigma_c = 0.
struct UsSystem {
  const SchemeState& prev;
  const Discretization& disc;
  double inv_k;
  SparseMatrix as;
  std::vector<double> s_load;  // (1/k) M_sigma sigma^{n-1}
  std::vector<double> u_load;  // (1/k) M_L u^{n-1}

  UsSystem(const SchemeState& p, const Discretization& d) : prev(p), disc(d), inv_k(1.0 / p.k) {
    as = linalg::add(disc.vector_mass(), inv_k, disc.b_operator(), 1.0);
    disc.constrain_system(as, {});
    s_load = disc.vector_mass() * prev.sigma;
    for (double& x : s_load) x *= inv_k;
    u_load = lumped_times(disc, prev.u);
    for (double& x : u_load) x *= inv_k;
  }

  std::vector<double> lambda_q(std::span<const double> u) const {
    return disc.map_at_quadrature(u, [&](double s) { return lambda_eps(s, prev.params); });
  }

  // sigma^{l+1} from u^l.
  std::vector<double> sigma_step(const SparseMatrix& p, std::span<const double> fp,
                                 std::span<const double> guess, Solver& solve) const {
    std::vector<double> rhs = p * fp;
    add_to(rhs, 1.0, s_load);
    disc.constrain_vector(rhs);
    std::vector<double> sigma = solve.spd(as, rhs, guess);
    disc.constrain_vector(sigma);
    return sigma;
  }

  std::vector<double> residual(std::span<const double> u, std::span<const double> sigma) const {
    const std::size_t nv = u.size();
    const std::vector<double> lam = lambda_q(u);
    const SparseMatrix p = disc.weighted_vector_grad(lam);
    const ScalarField fp = pi_fp(u, prev.params);
    std::vector<double> r(3 * nv);
    const std::vector<double> mu = lumped_times(disc, u);
    const std::vector<double> sf = disc.weighted_grad_grad(lam) * fp;
    const std::vector<double> ps = p.multiply_transpose(sigma);
    for (std::size_t j = 0; j < nv; ++j) r[j] = inv_k * mu[j] - u_load[j] + sf[j] + ps[j];
    std::vector<double> rhs = p * fp;
    add_to(rhs, 1.0, s_load);
    disc.constrain_vector(rhs);
    const std::vector<double> a_sigma = as * sigma;
    for (std::size_t j = 0; j < 2 * nv; ++j) r[nv + j] = a_sigma[j] - rhs[j];
    return r;
  }

  SparseMatrix jacobian(std::span<const double> u, std::span<const double> sigma) const {
    const Mesh& mesh = disc.mesh();
    const int nv = disc.n();
    const RegParams& rp = prev.params;
    const std::vector<double> lam = lambda_q(u);
    const std::vector<double> dlam = disc.map_at_quadrature(
        u, [&](double s) { return (s > rp.eps && s < 1.0 / rp.eps) ? 1.0 : 0.0; });
    const ScalarField fp = pi_fp(u, rp);
    std::vector<double> fpp(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) fpp[j] = fpp_eps(u[j], rp);
    const SparseMatrix d_fpp = SparseMatrix::diagonal(fpp);

    const std::span<const double> s1 = sigma.subspan(0, static_cast<std::size_t>(nv));
    const std::span<const double> s2 = sigma.subspan(static_cast<std::size_t>(nv));
    const std::vector<double> s1q = disc.at_quadrature(s1);
    const std::vector<double> s2q = disc.at_quadrature(s2);
    std::vector<Vec2> c_u(lam.size());
    std::vector<Vec2> c_s(lam.size());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
      const ElementGeometry g = element_geometry(mesh, t);
      const auto& tri = mesh.triangle(t);
      Vec2 grad_f{0.0, 0.0};
      for (int i = 0; i < 3; ++i) {
        grad_f = grad_f + fp[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])] *
                              g.grad[static_cast<std::size_t>(i)];
      }
      for (int q = 0; q < kQuadraturePoints; ++q) {
        const std::size_t iq = static_cast<std::size_t>(t) * kQuadraturePoints + static_cast<std::size_t>(q);
        c_s[iq] = dlam[iq] * grad_f;
        c_u[iq] = dlam[iq] * (grad_f + Vec2{s1q[iq], s2q[iq]});
      }
    }
    const std::vector<double> ml(disc.lumped().begin(), disc.lumped().end());
    SparseMatrix j_uu = linalg::add(SparseMatrix::diagonal(ml), inv_k,
                                    linalg::multiply(disc.weighted_grad_grad(lam), d_fpp), 1.0);
    j_uu = linalg::add(j_uu, 1.0, disc.weighted_value_grad(c_u), 1.0);
    const SparseMatrix j_us = disc.weighted_grad_vector(lam);
    const SparseMatrix j_su =
        linalg::add(linalg::multiply(disc.weighted_vector_grad(lam), d_fpp), -1.0,
                    disc.weighted_vector_value(c_s), -1.0);
    const linalg::Block blocks[] = {
        {0, 0, &j_uu, 1.0}, {0, nv, &j_us, 1.0}, {nv, 0, &j_su, 1.0}, {nv, nv, &as, 1.0}};
    return linalg::assemble_blocks(3 * nv, 3 * nv, blocks);
  }
};

StepResult us_newton(const SchemeState& prev, const Discretization& disc, const PicardSettings& set,
                     StepReport report) {
  const UsSystem sys(prev, disc);
  StepResult res{advance(prev), std::move(report)};
  Sweep out = newton_loop(
      prev, disc, disc.vector_mass(), prev.sigma, set, res.report,
      [&](const ScalarField& u, const std::vector<double>& s) { return sys.residual(u, s); },
      [&](const ScalarField& u, const std::vector<double>& s) { return sys.jacobian(u, s); });
  disc.constrain_vector(out.aux);
  res.state.v = recover_v(disc, prev.k, out.u, prev.v);
  res.state.u = std::move(out.u);
  res.state.sigma = std::move(out.aux);
  return res;
}

StepResult us_picard(const SchemeState& prev, const Discretization& disc, const PicardSettings& set,
                     StepReport& report) {
  const UsSystem sys(prev, disc);
  const SparseMatrix au = lumped_plus_stiffness(disc, sys.inv_k);
  StepResult res{advance(prev), {}};
  Solver solve{report};
  Sweep out = picard_loop(
      prev, disc, disc.vector_mass(), prev.sigma, set, report,
      [&](const ScalarField& u, const std::vector<double>& sigma) {
        const std::vector<double> lam = sys.lambda_q(u);
        const SparseMatrix p = disc.weighted_vector_grad(lam);  // (lambda psi_i, grad phi_j)
        const ScalarField fp = pi_fp(u, prev.params);
        Sweep sw;
        sw.aux = sys.sigma_step(p, fp, sigma, solve);

        // Stabilized u-step: K u^{l+1} on the left, K u^l on the right.
        std::vector<double> rhs_u = disc.stiffness() * u;
        add_to(rhs_u, 1.0, sys.u_load);
        add_to(rhs_u, -1.0, disc.weighted_grad_grad(lam) * fp);
        add_to(rhs_u, -1.0, p.multiply_transpose(sw.aux));
        sw.u = solve.spd(au, rhs_u, u);
        return sw;
      });
  res.report = report;
  res.state.v = recover_v(disc, prev.k, out.u, prev.v);
  res.state.u = std::move(out.u);
  res.state.sigma = std::move(out.aux);
  return res;
}

}  // namespace

StepResult step_us(const SchemeState& prev, const Discretization& disc, const PicardSettings& set) {
  StepReport report;
  try {
    return us_picard(prev, disc, set, report);
  } catch (const StepError& e) {
    return us_newton(prev, disc, set, e.report());
  }
}

StepResult step_uzsw(const SchemeState& prev, const Discretization& disc) {
  const int nv = disc.n();
  const double inv_k = 1.0 / prev.k;
  const RegParams& p = prev.params;

  const std::vector<double> lam =
      disc.map_at_quadrature(prev.u, [&](double s) { return lambda_eps(s, p); });
  const std::vector<double> g = disc.map_at_quadrature(
      prev.u, [&](double s) { return fp_eps(s, p) / std::sqrt(f_eps(s, p) + p.a_shift); });
  const std::vector<double> u_prev_q = disc.at_quadrature(prev.u);

  const SparseMatrix s_lam = disc.weighted_grad_grad(lam);
  const SparseMatrix q = disc.weighted_grad_vector(u_prev_q);   // (u_prev psi_j, grad phi_i)
  const SparseMatrix qt = disc.weighted_vector_grad(u_prev_q);  // exact transpose of q
  const SparseMatrix gm = disc.weighted_mass(g);
  SparseMatrix as = linalg::add(disc.vector_mass(), inv_k, disc.b_operator(), 1.0);
  disc.constrain_system(as, {});
  // Constrained rows of the sigma equation reduce to sigma_i = 0.
  SparseMatrix neg_qt = qt.scaled(-1.0);
  disc.constrain_rows(neg_qt);

  const int ou = 0, oz = nv, os = 2 * nv, ow = 4 * nv, total = 5 * nv;
  const linalg::Block blocks[] = {
      {ou, ou, &disc.mass(), inv_k},  {ou, oz, &s_lam, 1.0},        {ou, os, &q, 1.0},
      {os, oz, &neg_qt, 1.0},         {os, os, &as, 1.0},
      {ow, ow, &disc.mass(), inv_k},  {ow, ou, &gm, -0.5 * inv_k},
      {oz, oz, &disc.mass(), 1.0},    {oz, ow, &gm, -1.0},
  };
  // Row blocks: [0,N) u-eq (test z), [N,2N) z-eq (test u), [2N,4N) sigma, [4N,5N) w.
  const SparseMatrix a = linalg::assemble_blocks(total, total, blocks);

  std::vector<double> rhs(static_cast<std::size_t>(total), 0.0);
  const std::vector<double> mu = disc.mass() * prev.u;
  const std::vector<double> mw = disc.mass() * prev.w;
  const std::vector<double> gu = gm * prev.u;
  std::vector<double> ms = disc.vector_mass() * prev.sigma;
  disc.constrain_vector(ms);
  for (int j = 0; j < nv; ++j) {
    rhs[static_cast<std::size_t>(ou + j)] = inv_k * mu[static_cast<std::size_t>(j)];
    rhs[static_cast<std::size_t>(ow + j)] =
        inv_k * mw[static_cast<std::size_t>(j)] - 0.5 * inv_k * gu[static_cast<std::size_t>(j)];
  }
  for (int i = 0; i < 2 * nv; ++i) rhs[static_cast<std::size_t>(os + i)] = inv_k * ms[static_cast<std::size_t>(i)];

  StepResult res{advance(prev), {}};
  Solver solve{res.report};
  const std::vector<double> x = solve.general(a, rhs);
  check_finite(x, prev, res.report);
  auto slice = [&](int off, int len) {
    return std::vector<double>(x.begin() + off, x.begin() + off + len);
  };
  res.state.u = slice(ou, nv);
  res.state.z = slice(oz, nv);
  res.state.sigma = slice(os, 2 * nv);
  disc.constrain_vector(res.state.sigma);
  res.state.w = slice(ow, nv);
  res.state.v = recover_v(disc, prev.k, res.state.u, prev.v);
  return res;
}

StepResult step_beuv(const SchemeState& prev, const Discretization& disc, const PicardSettings& set) {
  const double inv_k = 1.0 / prev.k;
  const SparseMatrix av = v_operator(disc, inv_k);
  const SparseMatrix au = linalg::add(disc.mass(), inv_k, disc.stiffness(), 1.0);
  const std::vector<double> v_load = disc.mass() * prev.v;
  const std::vector<double> u_load = disc.mass() * prev.u;

  StepResult res{advance(prev), {}};
  Solver solve{res.report};
  Sweep out = picard_loop(prev, disc, disc.mass(), prev.v, set, res.report,
                          [&](const ScalarField& u, const std::vector<double>& v) {
                            std::vector<double> rhs_v = disc.mass() * u;
                            add_to(rhs_v, inv_k, v_load);
                            Sweep sw;
                            sw.aux = solve.spd(av, rhs_v, v);
                            const SparseMatrix c = disc.weighted_grad_grad(disc.at_quadrature(u));
                            std::vector<double> rhs_u = c * sw.aux;
                            for (std::size_t j = 0; j < rhs_u.size(); ++j) {
                              rhs_u[j] = inv_k * u_load[j] - rhs_u[j];
                            }
                            sw.u = solve.spd(au, rhs_u, u);
                            return sw;
                          });
  res.state.u = std::move(out.u);
  res.state.v = std::move(out.aux);
  return res;
}

StepResult step(const SchemeState& prev, const Discretization& disc, const PicardSettings& s) {
  switch (prev.kind) {
    case SchemeKind::uv: return step_uv(prev, disc, s);
    case SchemeKind::us: return step_us(prev, disc, s);
    case SchemeKind::uzsw: return step_uzsw(prev, disc);
    case SchemeKind::beuv: return step_beuv(prev, disc, s);
  }
  throw std::logic_error("step: unknown scheme");
}

}  // namespace chemrep
