#include "chemrep/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace chemrep {

using linalg::SparseMatrix;

double f_zero(double s) {
  if (s <= 0.0) return 1.0;
  return s * std::log(s) - s + 1.0;
}

double mass_lumped(const Discretization& disc, std::span<const double> u) {
  const auto m = disc.lumped();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += m[j] * u[j];
  return s;
}

double mass_consistent(const Discretization& disc, std::span<const double> u) {
  const std::vector<double> mu = disc.mass() * u;
  double s = 0.0;
  for (double x : mu) s += x;
  return s;
}

namespace {

double lumped_entropy(const Discretization& disc, std::span<const double> u, const RegParams& p) {
  const auto m = disc.lumped();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += m[j] * f_eps(u[j], p);
  return s;
}

std::vector<double> diff(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

ScalarField pi_fp(std::span<const double> u, const RegParams& p) {
  ScalarField out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = fp_eps(u[j], p);
  return out;
}

SparseMatrix lambda_stiffness(const Discretization& disc, std::span<const double> u,
                              const RegParams& p) {
  return disc.weighted_grad_grad(
      disc.map_at_quadrature(u, [&](double s) { return lambda_eps(s, p); }));
}

double lumped_dt_product(const Discretization& disc, std::span<const double> u_prev,
                         std::span<const double> u, std::span<const double> f, double k) {
  const auto m = disc.lumped();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += m[j] * (u[j] - u_prev[j]) * f[j];
  return s / k;
}

}  // namespace

double energy_modified(const SchemeState& s, const Discretization& disc) {
  switch (s.kind) {
    case SchemeKind::uv:
    case SchemeKind::beuv:
      return lumped_entropy(disc, s.u, s.params) + 0.5 * disc.stiffness().quadratic(s.v);
    case SchemeKind::us:
      return lumped_entropy(disc, s.u, s.params) + 0.5 * disc.vector_mass().quadratic(s.sigma);
    case SchemeKind::uzsw:
      return disc.mass().quadratic(s.w) + 0.5 * disc.vector_mass().quadratic(s.sigma);
  }
  return 0.0;
}

double energy_exact(const Discretization& disc, std::span<const double> u,
                    std::span<const double> v) {
  return disc.integrate(u, f_zero) + 0.5 * disc.stiffness().quadratic(v);
}

double residual_exact(const Discretization& disc, std::span<const double> u_prev,
                      std::span<const double> u, std::span<const double> v_prev,
                      std::span<const double> v, double k) {
  const double de = (energy_exact(disc, u, v) - energy_exact(disc, u_prev, v_prev)) / k;
  ScalarField root(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) root[j] = std::sqrt(std::max(u[j], 0.0));
  return de + 4.0 * disc.stiffness().quadratic(root) + ah_defect_norm_sq(disc, v) +
         disc.stiffness().quadratic(v);
}

NegativityStats negativity_stats(const Discretization& disc, std::span<const double> u) {
  NegativityStats st;
  st.min_u = *std::min_element(u.begin(), u.end());
  ScalarField neg(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) neg[j] = std::min(u[j], 0.0);
  st.neg_norm = std::sqrt(std::max(0.0, disc.mass().quadratic(neg)));
  return st;
}

void EnergyBalance::add(std::string name, double value) {
  names.push_back(std::move(name));
  terms.push_back(value);
  residual += value;
  scale += std::abs(value);
}

namespace {

EnergyBalance uzsw_law(const SchemeState& prev, const SchemeState& next,
                       const Discretization& disc) {
  const double k = next.k;
  EnergyBalance b;
  b.add("dt_energy", (energy_modified(next, disc) - energy_modified(prev, disc)) / k);
  b.add("k_dt_w", k * disc.mass().quadratic(diff(next.w, prev.w)) / (k * k));
  b.add("k_dt_sigma", 0.5 * k * disc.vector_mass().quadratic(diff(next.sigma, prev.sigma)) / (k * k));
  b.add("lambda_grad_z", lambda_stiffness(disc, prev.u, prev.params).quadratic(next.z));
  b.add("sigma_h1", disc.b_operator().quadratic(next.sigma));
  return b;
}

}  // namespace

EnergyBalance energy_law(const SchemeState& prev, const SchemeState& next,
                         const Discretization& disc) {
  const double k = next.k;
  const double eps = next.params.eps;
  EnergyBalance b;
  switch (next.kind) {
    case SchemeKind::uv:
    case SchemeKind::beuv: {
      const std::vector<double> du = diff(next.u, prev.u);
      const std::vector<double> dv = diff(next.v, prev.v);
      b.add("dt_energy", (energy_modified(next, disc) - energy_modified(prev, disc)) / k);
      b.add("eps_k_dt_u", 0.5 * eps * k * disc.mass().quadratic(du) / (k * k));
      b.add("k_dt_grad_v", 0.5 * k * disc.stiffness().quadratic(dv) / (k * k));
      b.add("eps_grad_u", eps * disc.stiffness().quadratic(next.u));
      b.add("ah_defect", ah_defect_norm_sq(disc, next.v));
      b.add("grad_v", disc.stiffness().quadratic(next.v));
      return b;
    }
    case SchemeKind::us: {
      const std::vector<double> du = diff(next.u, prev.u);
      const ScalarField fp = pi_fp(next.u, next.params);
      b.add("dt_energy", (energy_modified(next, disc) - energy_modified(prev, disc)) / k);
      b.add("eps_k_dt_u", 0.5 * eps * k * disc.mass().quadratic(du) / (k * k));
      b.add("k_dt_sigma",
            0.5 * k * disc.vector_mass().quadratic(diff(next.sigma, prev.sigma)) / (k * k));
      b.add("lambda_grad_fp", lambda_stiffness(disc, next.u, next.params).quadratic(fp));
      b.add("sigma_h1", disc.b_operator().quadratic(next.sigma));
      return b;
    }
    case SchemeKind::uzsw:
      return uzsw_law(prev, next, disc);
  }
  return b;
}

EnergyBalance energy_identity(const SchemeState& prev, const SchemeState& next,
                              const Discretization& disc) {
  const double k = next.k;
  EnergyBalance b;
  switch (next.kind) {
    case SchemeKind::uv:
    case SchemeKind::beuv: {
      const ScalarField fp = pi_fp(next.u, next.params);
      const std::vector<double> dv = diff(next.v, prev.v);
      const SparseMatrix& kk = disc.stiffness();
      b.add("dt_u_fp", lumped_dt_product(disc, prev.u, next.u, fp, k));
      b.add("grad_u_grad_fp", kk.bilinear(next.u, fp));
      b.add("dt_half_grad_v", 0.5 * (kk.quadratic(next.v) - kk.quadratic(prev.v)) / k);
      b.add("k_dt_grad_v", 0.5 * k * kk.quadratic(dv) / (k * k));
      b.add("ah_defect", ah_defect_norm_sq(disc, next.v));
      b.add("grad_v", kk.quadratic(next.v));
      return b;
    }
    case SchemeKind::us: {
      const ScalarField fp = pi_fp(next.u, next.params);
      const SparseMatrix& ms = disc.vector_mass();
      b.add("dt_u_fp", lumped_dt_product(disc, prev.u, next.u, fp, k));
      b.add("lambda_grad_fp", lambda_stiffness(disc, next.u, next.params).quadratic(fp));
      b.add("dt_half_sigma", 0.5 * (ms.quadratic(next.sigma) - ms.quadratic(prev.sigma)) / k);
      b.add("k_dt_sigma", 0.5 * k * ms.quadratic(diff(next.sigma, prev.sigma)) / (k * k));
      b.add("sigma_h1", disc.b_operator().quadratic(next.sigma));
      return b;
    }
    case SchemeKind::uzsw:
      return uzsw_law(prev, next, disc);
  }
  return b;
}

double v_integral_bound(int n, double k, double v0_integral, double m0) {
  return std::pow(1.0 + k, -static_cast<double>(n)) * std::abs(v0_integral) + m0;
}

TimeSeriesRow make_row(const SchemeState* prev, const SchemeState& next,
                       const Discretization& disc, const StepReport* report) {
  TimeSeriesRow r;
  r.t = next.t();
  r.mass_lumped = mass_lumped(disc, next.u);
  r.mass_consistent = mass_consistent(disc, next.u);
  r.v_integral = mass_consistent(disc, next.v);
  r.e_mod = energy_modified(next, disc);
  r.e_exact = energy_exact(disc, next.u, next.v);
  r.re_exact = prev ? residual_exact(disc, prev->u, next.u, prev->v, next.v, next.k) : 0.0;
  const NegativityStats neg = negativity_stats(disc, next.u);
  r.min_u = neg.min_u;
  r.neg_norm_u = neg.neg_norm;
  if (report) {
    r.picard_iters = report->picard_iters;
    r.solver_residual = report->solver_residual;
  }
  return r;
}

}  // namespace chemrep
