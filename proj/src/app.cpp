#include "chemrep/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "chemrep/errors.hpp"

namespace chemrep {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bump(double x, double y) { return x * y * (2.0 - x) * (2.0 - y); }

InitialData cosine_preset(double amp) {
  const double base = amp + 0.0001;
  InitialData d;
  d.u0 = [amp, base](double x, double y) {
    return amp * std::cos(kTwoPi * x) * std::cos(kTwoPi * y) + base;
  };
  d.v0 = [amp, base](double x, double y) {
    return -amp * std::cos(kTwoPi * x) * std::cos(kTwoPi * y) + base;
  };
  d.grad_v0 = [amp](double x, double y) {
    return Vec2{amp * kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y),
                amp * kTwoPi * std::cos(kTwoPi * x) * std::sin(kTwoPi * y)};
  };
  return d;
}

}  // namespace

InitialData preset_ic(std::string_view name) {
  if (name == "positivity") {
    InitialData d;
    d.u0 = [](double x, double y) {
      const double r2 = (x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0);
      return -10.0 * bump(x, y) * std::exp(-10.0 * r2) + 10.0001;
    };
    d.v0 = [](double x, double y) {
      const double r2 = (x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0);
      return 100.0 * bump(x, y) * std::exp(-30.0 * r2) + 0.0001;
    };
    d.grad_v0 = [](double x, double y) {
      const double r2 = (x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0);
      const double e = std::exp(-30.0 * r2);
      const double p = bump(x, y);
      const double px = (2.0 - 2.0 * x) * y * (2.0 - y);
      const double py = (2.0 - 2.0 * y) * x * (2.0 - x);
      return Vec2{100.0 * e * (px - 60.0 * (x - 1.0) * p), 100.0 * e * (py - 60.0 * (y - 1.0) * p)};
    };
    return d;
  }
  if (name == "energy1") return cosine_preset(7.0);
  if (name == "energy2") return cosine_preset(14.0);
  if (name == "constant") {
    InitialData d;
    d.u0 = [](double, double) { return 1.0; };
    d.v0 = [](double, double) { return 1.0; };
    d.grad_v0 = [](double, double) { return Vec2{}; };
    return d;
  }
  if (name == "custom-gaussian") {
    InitialData d;
    d.u0 = [](double x, double y) {
      return 1.0 + 5.0 * std::exp(-20.0 * ((x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0)));
    };
    d.v0 = [](double, double) { return 1.0; };
    d.grad_v0 = [](double, double) { return Vec2{}; };
    return d;
  }
  throw ConfigError("unknown ic_preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"positivity", "energy1", "energy2", "constant", "custom-gaussian"};
}

void RunConfig::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("nx and ny must be >= 1");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("lx and ly must be > 0");
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("k must be > 0");
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (snapshot_stride < 0) throw ConfigError("snapshot_stride must be >= 0");
  reg().validate();
  picard().validate();
  preset_ic(ic_preset);
}

// ---------------------------------------------------------------------------
// Output

std::string_view csv_header() {
  return "t,mass_lumped,mass_consistent,v_integral,E_mod,E_exact,RE_exact,min_u,neg_norm_u,"
         "picard_iters,solver_residual";
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string csv_row(const TimeSeriesRow& r) {
  std::string s;
  for (double v : {r.t, r.mass_lumped, r.mass_consistent, r.v_integral, r.e_mod, r.e_exact,
                   r.re_exact, r.min_u, r.neg_norm_u}) {
    append_double(s, v);
    s += ',';
  }
  s += std::to_string(r.picard_iters);
  s += ',';
  append_double(s, r.solver_residual);
  return s;
}

void write_vtk(std::ostream& os, const Mesh& mesh, const SchemeState& state) {
  const Index nv = mesh.num_vertices();
  const Index ne = mesh.num_triangles();
  std::string line;
  os << "# vtk DataFile Version 3.0\n";
  os << "chemrep " << to_string(state.kind) << " n=" << state.n << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nv << " double\n";
  for (const Point2& p : mesh.vertices()) {
    line.clear();
    append_double(line, p.x);
    line += ' ';
    append_double(line, p.y);
    os << line << " 0\n";
  }
  os << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << ne << '\n';
  for (Index k = 0; k < ne; ++k) os << "5\n";
  os << "POINT_DATA " << nv << '\n';
  auto scalars = [&](const char* name, const ScalarField& f) {
    if (f.empty()) return;
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f) {
      line.clear();
      append_double(line, v);
      os << line << '\n';
    }
  };
  scalars("u", state.u);
  scalars("v", state.v);
  scalars("z", state.z);
  scalars("w", state.w);
  if (!state.sigma.empty()) {
    os << "VECTORS sigma double\n";
    for (Index j = 0; j < nv; ++j) {
      line.clear();
      append_double(line, state.sigma[static_cast<std::size_t>(j)]);
      line += ' ';
      append_double(line, state.sigma[static_cast<std::size_t>(nv + j)]);
      os << line << " 0\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

// Total mass that the scheme conserves exactly.
double conserved_mass(const TimeSeriesRow& r, SchemeKind kind) {
  return (kind == SchemeKind::uv || kind == SchemeKind::us) ? r.mass_lumped : r.mass_consistent;
}

void update_summary(RunSummary& s, const TimeSeriesRow& row, const TimeSeriesRow& first,
                    SchemeKind kind) {
  s.final_e_mod = row.e_mod;
  s.final_e_exact = row.e_exact;
  if (&row != &first) s.max_re_exact = std::max(s.max_re_exact, row.re_exact);
  s.min_min_u = std::min(s.min_min_u, row.min_u);
  s.max_neg_norm_sq = std::max(s.max_neg_norm_sq, row.neg_norm_u * row.neg_norm_u);
  const double m0 = conserved_mass(first, kind);
  s.max_mass_drift =
      std::max(s.max_mass_drift, std::abs(conserved_mass(row, kind) - m0) / std::max(std::abs(m0), 1e-300));
  s.max_picard_iters = std::max(s.max_picard_iters, row.picard_iters);
}

struct Session {
  Mesh mesh;
  Discretization disc;
  SchemeState state;

  explicit Session(const RunConfig& cfg)
      : mesh(Mesh::build_structured(cfg.nx, cfg.ny, cfg.lx, cfg.ly)),
        disc(mesh, cfg.parallel ? Exec::parallel : Exec::serial),
        state(init_state(cfg.scheme, preset_ic(cfg.ic_preset), disc, cfg.k, cfg.reg())) {}
};

template <class OnStep>
RunResult drive(const RunConfig& cfg, OnStep&& on_step) {
  cfg.validate();
  Session s(cfg);
  RunResult out;
  out.rows.push_back(make_row(nullptr, s.state, s.disc, nullptr));
  out.summary.min_min_u = out.rows[0].min_u;
  update_summary(out.summary, out.rows[0], out.rows[0], cfg.scheme);
  on_step(s.state, out.rows.back());
  const PicardSettings picard = cfg.picard();
  for (int n = 1; n <= cfg.n_steps; ++n) {
    try {
      StepResult r = step(s.state, s.disc, picard);
      out.rows.push_back(make_row(&s.state, r.state, s.disc, &r.report));
      s.state = std::move(r.state);
    } catch (const StepError& e) {
      out.summary.failed = true;
      out.summary.error = e.what();
      break;
    }
    out.summary.steps_completed = n;
    update_summary(out.summary, out.rows.back(), out.rows[0], cfg.scheme);
    on_step(s.state, out.rows.back());
  }
  return out;
}

nlohmann::json summary_json(const RunConfig& cfg, const RunSummary& s) {
  nlohmann::json j;
  j["scheme"] = std::string(to_string(cfg.scheme));
  j["ic_preset"] = cfg.ic_preset;
  j["nx"] = cfg.nx;
  j["ny"] = cfg.ny;
  j["k"] = cfg.k;
  j["eps"] = cfg.eps;
  j["n_steps"] = cfg.n_steps;
  j["steps_completed"] = s.steps_completed;
  j["failed"] = s.failed;
  if (s.failed) j["error"] = s.error;
  j["final_E_mod"] = s.final_e_mod;
  j["final_E_exact"] = s.final_e_exact;
  j["max_RE_exact"] = s.max_re_exact;
  j["min_min_u"] = s.min_min_u;
  j["max_neg_norm_sq"] = s.max_neg_norm_sq;
  j["max_mass_drift"] = s.max_mass_drift;
  j["max_picard_iters"] = s.max_picard_iters;
  return j;
}

}  // namespace

RunResult simulate(const RunConfig& cfg) {
  return drive(cfg, [](const SchemeState&, const TimeSeriesRow&) {});
}

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "series.csv");
  csv << csv_header() << '\n';
  const Mesh mesh = Mesh::build_structured(cfg.nx, cfg.ny, cfg.lx, cfg.ly);

  RunResult res = drive(cfg, [&](const SchemeState& st, const TimeSeriesRow& row) {
    csv << csv_row(row) << '\n';
    if (cfg.snapshot_stride > 0 && st.n % cfg.snapshot_stride == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "field_%06d.vtk", st.n);
      std::ofstream vtk(cfg.output_dir / name);
      write_vtk(vtk, mesh, st);
    }
  });
  csv.close();
  std::ofstream(cfg.output_dir / "summary.json") << summary_json(cfg, res.summary).dump(2) << '\n';

  log << to_string(cfg.scheme) << " " << cfg.ic_preset << ": " << res.summary.steps_completed << "/"
      << cfg.n_steps << " steps, E_exact " << res.summary.final_e_exact << ", max RE_e "
      << res.summary.max_re_exact << ", min u " << res.summary.min_min_u << '\n';
  if (res.summary.failed) {
    log << "step failure: " << res.summary.error << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

namespace {

struct CheckLine {
  std::ostream& log;
  bool all = true;

  void operator()(bool ok, std::string_view name, double value, double limit) {
    all = all && ok;
    log << (ok ? "PASS " : "FAIL ") << name << " (value " << value << ", limit " << limit << ")\n";
  }
};

}  // namespace

int check(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  CheckLine line{log};
  Session s(cfg);
  const RegParams p = cfg.reg();
  const Mesh& mesh = s.mesh;

  // Chain rule and spectral bounds on random fields plus the initial field.
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> dist(p.eps, 1.0 / p.eps);
  double pl1 = 0.0;
  double spec = 0.0;
  for (int trial = 0; trial < 21; ++trial) {
    ScalarField u = s.state.u;
    if (trial > 0) {
      for (double& x : u) x = std::min(dist(rng), 50.0);
    }
    for (Index k = 0; k < mesh.num_triangles(); ++k) {
      const ElementLambda lam = build_element_lambda(mesh, k, u, p);
      const ElementGeometry g = element_geometry(mesh, k);
      const auto& t = mesh.triangle(k);
      Vec2 gu, gf;
      for (int i = 0; i < 3; ++i) {
        const double ui = u[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
        gu = gu + ui * g.grad[static_cast<std::size_t>(i)];
        gf = gf + fp_eps(ui, p) * g.grad[static_cast<std::size_t>(i)];
      }
      pl1 = std::max(pl1, norm(lam.apply(gf) - gu) / (1.0 + norm(gu)));
      double lo = 0.0, hi = 0.0;
      lam.matrix().eigenvalues(lo, hi);
      spec = std::max({spec, p.eps - lo, hi - 1.0 / p.eps});
    }
  }
  line(pl1 <= 1e-10, "chain-rule identity", pl1, 1e-10);
  line(spec <= 1e-12, "Lambda spectral bounds", spec, 1e-12);

  // Short run: conservation and energy laws per step.
  const int steps = std::min(cfg.n_steps, 20);
  const PicardSettings picard = cfg.picard();
  const bool lumped = cfg.scheme == SchemeKind::uv || cfg.scheme == SchemeKind::us;
  auto mass = [&](const ScalarField& u) {
    return lumped ? mass_lumped(s.disc, u) : mass_consistent(s.disc, u);
  };
  const double m0 = mass(s.state.u);
  const double v0_int = mass_consistent(s.disc, s.state.v);
  double drift = 0.0, law = -INFINITY, ident = 0.0, vbound = -INFINITY;
  int done = 0;
  try {
    for (int n = 1; n <= steps; ++n) {
      StepResult r = step(s.state, s.disc, picard);
      drift = std::max(drift, std::abs(mass(r.state.u) - m0) / std::abs(m0));
      const EnergyBalance eb = energy_law(s.state, r.state, s.disc);
      const EnergyBalance id = energy_identity(s.state, r.state, s.disc);
      law = std::max(law, eb.residual / eb.scale);
      ident = std::max(ident, std::abs(id.residual) / id.scale);
      vbound = std::max(vbound, std::abs(mass_consistent(s.disc, r.state.v)) -
                                    v_integral_bound(n, cfg.k, v0_int, m0));
      s.state = std::move(r.state);
      done = n;
    }
  } catch (const StepError& e) {
    log << "FAIL step " << done + 1 << ": " << e.what() << '\n';
    return kExitSolver;
  }
  line(drift <= 1e-8, "mass conservation", drift, 1e-8);
  if (cfg.scheme != SchemeKind::beuv) {
    line(law <= 1e-8, "energy law", law, 1e-8);
    line(ident <= 1e-8, "energy identity", ident, 1e-8);
  } else {
    log << "INFO energy law (no theorem for beuv): " << law << '\n';
  }
  line(vbound <= 1e-8, "v integral bound", vbound, 1e-8);
  return line.all ? kExitOk : kExitProperty;
}

int sweep_eps(const RunConfig& cfg, const std::vector<double>& eps_values, std::ostream& log) {
  if (eps_values.empty()) {
    log << "config error: empty eps list\n";
    return kExitConfig;
  }
  std::vector<RunConfig> cfgs;
  for (double e : eps_values) {
    RunConfig c = cfg;
    c.eps = e;
    std::string tag;
    append_double(tag, e);
    c.output_dir = cfg.output_dir / ("eps_" + tag);
    try {
      c.validate();
    } catch (const ConfigError& err) {
      log << "config error: " << err.what() << '\n';
      return kExitConfig;
    }
    cfgs.push_back(std::move(c));
  }
  const int count = static_cast<int>(cfgs.size());
  std::vector<int> codes(cfgs.size());
  std::vector<std::ostringstream> logs(cfgs.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    codes[static_cast<std::size_t>(i)] = run(cfgs[static_cast<std::size_t>(i)], logs[static_cast<std::size_t>(i)]);
  }
  int worst = kExitOk;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    log << "eps=" << cfgs[i].eps << ": " << logs[i].str();
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace chemrep
