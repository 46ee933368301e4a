#pragma once

// Time stepping for the chemo-repulsion system
//   u_t - div(grad u) - div(u grad v) = 0,  v_t - lap v + v = u,
// with zero-flux boundaries, in four fully discrete variants:
//   uv   - lumped, Lambda_eps chain rule, Picard in (v, u)
//   us   - sigma = grad v, lambda_eps-weighted flux, Picard in (sigma, u)
//   uzsw - linear quadratized scheme in (u, z, sigma, w), one block solve
//   beuv - plain backward Euler in (u, v), Picard in (v, u)

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chemrep/fem.hpp"
#include "chemrep/regularization.hpp"

namespace chemrep {

enum class SchemeKind { uv, us, uzsw, beuv };

std::string_view to_string(SchemeKind kind);
/// Throws ConfigError on an unknown name.
SchemeKind parse_scheme(std::string_view name);

struct PicardSettings {
  double tol = 1e-4;
  int max_iters = 100;

  void validate() const;
};

/// Fields at time level n. v is always present (recovered for us/uzsw);
/// sigma for us/uzsw; z and w for uzsw only.
struct SchemeState {
  SchemeKind kind = SchemeKind::uv;
  int n = 0;
  double k = 0.0;
  RegParams params;
  ScalarField u;
  ScalarField v;
  VectorField sigma;
  ScalarField z;
  ScalarField w;

  double t() const { return n * k; }
};

struct StepReport {
  int picard_iters = 0;
  /// Max relative L2 increment per Picard iteration (empty for uzsw).
  std::vector<double> increments;
  /// Largest relative residual over the inner linear solves.
  double solver_residual = 0.0;
  /// Final under-relaxation factor of the u iterate (1: plain Picard).
  double relaxation = 1.0;
  /// us only: Picard failed and the step was solved by damped Newton;
  /// picard_iters and increments then describe the Newton iteration.
  bool newton = false;
};

class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, StepReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const StepReport& report() const { return report_; }

 private:
  StepReport report_;
};

struct InitialData {
  PointFunction u0;
  PointFunction v0;
  GradFunction grad_v0;
};

/// u = Q^h u0 and v = R^h v0 for every scheme; sigma is the constrained L2
/// projection of grad v0 (us, uzsw), w the L2 projection of
/// sqrt(F_eps(u0) + A) and z = 0 (uzsw).
SchemeState init_state(SchemeKind kind, const InitialData& data, const Discretization& disc,
                       double k, const RegParams& params);

struct StepResult {
  SchemeState state;
  StepReport report;
};

StepResult step_uv(const SchemeState& prev, const Discretization& disc, const PicardSettings& s);
StepResult step_us(const SchemeState& prev, const Discretization& disc, const PicardSettings& s);
StepResult step_uzsw(const SchemeState& prev, const Discretization& disc);
StepResult step_beuv(const SchemeState& prev, const Discretization& disc, const PicardSettings& s);

/// Dispatch on prev.kind.
StepResult step(const SchemeState& prev, const Discretization& disc, const PicardSettings& s);

/// Solves (1/k)(v, vb) + (grad v, grad vb) + (v, vb) = (1/k)(v_prev, vb) + (u, vb).
ScalarField recover_v(const Discretization& disc, double k, std::span<const double> u,
                      std::span<const double> v_prev);

/// Relative consistent-L2 increment |a - b|_M / |b|_M (b the previous
/// iterate); absolute when b = 0.
double relative_increment(const linalg::SparseMatrix& m, std::span<const double> a,
                          std::span<const double> b);

}  // namespace chemrep
