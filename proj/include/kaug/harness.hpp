#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kaug/csv.hpp"
#include "kaug/diagnostics.hpp"
#include "kaug/family.hpp"
#include "kaug/generators.hpp"
#include "kaug/matrix_market.hpp"
#include "kaug/solvers.hpp"

namespace kaug {

// ---------------------------------------------------------------------------
// Generated family bundle and manifest
// ---------------------------------------------------------------------------

struct GeneratedFamily {
  NearSingularFamily family;
  GeneratorSpec spec;
  Vector x_dagger;                     // documented solution behind b
  std::vector<std::size_t> row_order;  // svd-damped row permutation
};

inline GeneratedFamily generate(const GeneratorSpec& spec_in) {
  GeneratorSpec spec = spec_in;
  if (spec.eps_grid.empty()) spec.eps_grid = default_eps_grid(spec.kind);
  GeneratedFamily out;
  out.spec = spec;
  switch (spec.kind) {
    case GeneratorKind::Motivating2x2:
      out.family = gen_motivating(spec.eps_grid);
      out.x_dagger = Vector{1.0, 0.0};
      break;
    case GeneratorKind::Tridiagonal3x3:
      out.family = gen_tridiagonal(spec.eps_grid);
      out.x_dagger = Vector{1.0, 1.0, 1.0};
      break;
    case GeneratorKind::RandomNearlySingular: {
      auto g = gen_random_with_solution(spec);
      out.family = std::move(g.first);
      out.x_dagger = std::move(g.second);
      break;
    }
    case GeneratorKind::SvdDamped: {
      detail::require(!spec.source_path.empty(),
                      "generate: svd_damped needs source_path");
      const DenseMatrix a = matrix_market_read(spec.source_path);
      SvdDampedFamily f =
          gen_svd_damped(a, spec.damp_count, spec.eps_grid, spec.seed);
      out.family = std::move(f.family);
      out.x_dagger = f.x_dagger;
      out.row_order = std::move(f.row_order);
      break;
    }
  }
  return out;
}

inline nlohmann::json manifest_json(const GeneratedFamily& g,
                                    const std::vector<std::string>& mtx_files) {
  nlohmann::json j;
  j["schema"] = "kaug-family-manifest/1";
  j["kind"] = generator_name(g.spec.kind);
  j["eps_grid"] = g.spec.eps_grid;
  j["seed"] = g.spec.seed;
  j["m0"] = g.family.m0;
  j["eps_bar"] = g.family.eps_bar;
  j["x_dagger"] = g.x_dagger.entries();
  if (g.family.pi) {
    const DenseMatrix& pi = *g.family.pi;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < pi.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t k = 0; k < pi.cols(); ++k) row.push_back(pi(i, k));
      rows.push_back(row);
    }
    j["pi"] = rows;
  }
  if (g.spec.kind == GeneratorKind::RandomNearlySingular) {
    j["m"] = g.spec.m;
    j["n"] = g.spec.n;
    j["r"] = g.spec.r;
    j["dual_kernel_dim"] = g.spec.dual_kernel_dim;
  }
  if (g.spec.kind == GeneratorKind::SvdDamped) {
    j["damp_count"] = g.spec.damp_count;
    j["source_path"] = g.spec.source_path;
    j["row_order"] = g.row_order;
  }
  j["files"] = mtx_files;
  return j;
}

/// Write one .mtx per grid point plus the manifest; returns the manifest
/// path.
inline std::string write_family(const GeneratedFamily& g,
                                const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  std::vector<std::string> files;
  for (std::size_t k = 0; k < g.spec.eps_grid.size(); ++k) {
    const std::string name = "A_eps" + std::to_string(k) + ".mtx";
    matrix_market_write(g.family.matrix(g.spec.eps_grid[k]),
                        (fs::path(output_dir) / name).string());
    files.push_back(name);
  }
  const std::string manifest_path =
      (fs::path(output_dir) / "family.json").string();
  std::ofstream out(manifest_path);
  if (!out) throw std::runtime_error("cannot write " + manifest_path);
  out << manifest_json(g, files).dump(2) << "\n";
  return manifest_path;
}

/// Rebuild the family recorded by a manifest by re-running its generator.
inline GeneratedFamily load_family(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path);
  nlohmann::json j;
  in >> j;
  if (j.value("schema", "") != "kaug-family-manifest/1")
    throw std::runtime_error("manifest: unsupported schema");
  GeneratorSpec spec;
  spec.kind = parse_generator(j.at("kind").get<std::string>());
  spec.eps_grid = j.at("eps_grid").get<std::vector<double>>();
  spec.seed = j.value("seed", (std::uint64_t)0);
  if (spec.kind == GeneratorKind::RandomNearlySingular) {
    spec.m = j.at("m").get<std::size_t>();
    spec.n = j.at("n").get<std::size_t>();
    spec.r = j.at("r").get<std::size_t>();
    spec.dual_kernel_dim = j.at("dual_kernel_dim").get<std::size_t>();
  }
  if (spec.kind == GeneratorKind::SvdDamped) {
    spec.damp_count = j.at("damp_count").get<std::size_t>();
    spec.source_path = j.at("source_path").get<std::string>();
    if (!fs::path(spec.source_path).is_absolute() &&
        !fs::exists(spec.source_path)) {
      const fs::path relative_to_manifest =
          fs::path(manifest_path).parent_path() / spec.source_path;
      if (fs::exists(relative_to_manifest))
        spec.source_path = relative_to_manifest.string();
    }
  }
  return generate(spec);
}

// ---------------------------------------------------------------------------
// Parameter policies
// ---------------------------------------------------------------------------

enum class OmegaPolicy { Paper, Fixed, OptimalStar };
enum class RhoPolicy { ZeroSublinear, PaperRho0Scaled, Fixed };

inline bool kernel_augmented(SolverKind k) {
  return k == SolverKind::KaK || k == SolverKind::KaCD ||
         k == SolverKind::SymKaCD || k == SolverKind::KaACD;
}

/// Resolve the relaxation parameter for one solver on one matrix.
/// Paper policy: 0.9 * 2/delta_max for the classical row/coordinate
/// methods, 0.9 * 2/(1 + delta_max) for the kernel-augmented ones.
inline double resolve_omega(OmegaPolicy policy, double fixed_value,
                            SolverKind kind, const DenseMatrix& a,
                            RankTolerance tol = RankTolerance()) {
  switch (policy) {
    case OmegaPolicy::Fixed:
      return fixed_value;
    case OmegaPolicy::Paper: {
      const double dmax = delta_min_max(a, tol).second;
      return kernel_augmented(kind) ? 0.9 * 2.0 / (1.0 + dmax)
                                    : 0.9 * 2.0 / dmax;
    }
    case OmegaPolicy::OptimalStar: {
      if (kernel_augmented(kind)) return omega_star(a, tol);
      const double dmax = delta_min_max(a, tol).second;
      return 2.0 / (dmax * (2.0 + (double)floor_log2_2m(a.rows())));
    }
  }
  throw std::invalid_argument("resolve_omega: unknown policy");
}

struct ResolvedRho {
  double rho = 0.0;
  std::string note;  // nonempty when a fallback fired
};

/// Convexity parameter for the accelerated method. The scaled-rho0 policy
/// falls back to the sublinear mode when omega leaves rho0's admissible
/// window.
inline ResolvedRho resolve_rho(RhoPolicy policy, double scale,
                               double fixed_value,
                               const NearSingularFamily& fam, double omega,
                               RankTolerance tol = RankTolerance()) {
  switch (policy) {
    case RhoPolicy::ZeroSublinear:
      return {0.0, ""};
    case RhoPolicy::Fixed:
      return {fixed_value, ""};
    case RhoPolicy::PaperRho0Scaled: {
      const FamilyGridConstants g = family_grid_constants(fam);
      const double limit = 2.0 / (1.0 + g.c2 * g.c2 / g.eta0);
      if (!(omega > 0.0 && omega < limit))
        return {0.0,
                "rho0 window excludes omega; using rho = 0 (sublinear mode)"};
      const double r0 = rho0(fam, omega, tol);
      if (!(r0 > 0.0)) return {0.0, "rho0 <= 0; using rho = 0"};
      return {scale * r0, ""};
    }
  }
  throw std::invalid_argument("resolve_rho: unknown policy");
}

// ---------------------------------------------------------------------------
// Benchmark runner
// ---------------------------------------------------------------------------

struct ExperimentPlan {
  GeneratorSpec generator;
  std::vector<SolverKind> solvers;
  OmegaPolicy omega_policy = OmegaPolicy::Paper;
  double omega_fixed = 1.0;
  RhoPolicy rho_policy = RhoPolicy::PaperRho0Scaled;
  double rho_scale = 0.9;
  double rho_fixed = 0.0;
  double tol = 1e-6;
  std::size_t max_iters = 20000000;
  std::uint64_t rrk_seed = 1;
  std::string output_dir;
  bool write_csv = true;
  bool write_markdown = true;
  bool write_traces = false;  // full residual histories can be very large
};

struct BenchCell {
  SolverKind solver;
  double eps = 0.0;
  SolverConfig cfg;
  IterationTrace trace;
  std::string note;
};

struct BenchResult {
  std::vector<SolverKind> solvers;
  std::vector<double> eps_grid;
  // Keyed (solver index, eps index); populated for every cell.
  std::vector<std::vector<BenchCell>> cells;
};

inline BenchResult run_bench(const ExperimentPlan& plan) {
  detail::require(!plan.solvers.empty(), "run_bench: no solvers selected");
  detail::require(plan.tol > 0.0 && plan.tol < 1.0,
                  "run_bench: tol outside (0,1)");
  const GeneratedFamily gen = generate(plan.generator);
  const NearSingularFamily& fam = gen.family;
  validate_family(fam);

  bool need_x_ls = false, need_primal = false, need_dual = false;
  for (SolverKind k : plan.solvers) {
    if (k == SolverKind::KaK) need_x_ls = need_primal = true;
    if (k == SolverKind::KaCD || k == SolverKind::SymKaCD ||
        k == SolverKind::KaACD)
      need_dual = true;
  }

  BenchResult result;
  result.solvers = plan.solvers;
  result.eps_grid = fam.eps_grid;
  result.cells.assign(plan.solvers.size(),
                      std::vector<BenchCell>(fam.eps_grid.size()));

  // One immutable view per grid point, shared by all solver cells.
  std::vector<ProblemView> views;
  views.reserve(fam.eps_grid.size());
  for (double eps : fam.eps_grid) {
    ProblemOptions opt;
    opt.with_x_ls = need_x_ls;
    opt.with_primal_kernel = need_primal;
    opt.with_dual_projector = need_dual;
    views.push_back(
        make_problem_view(fam.matrix(eps), fam.rhs(eps), fam.m0, opt));
  }

  std::vector<std::future<BenchCell>> jobs;
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (std::size_t si = 0; si < plan.solvers.size(); ++si) {
    for (std::size_t ei = 0; ei < fam.eps_grid.size(); ++ei) {
      const SolverKind kind = plan.solvers[si];
      const double eps = fam.eps_grid[ei];
      const ProblemView* view = &views[ei];
      keys.emplace_back(si, ei);
      jobs.push_back(std::async(std::launch::async, [&plan, &fam, kind, eps,
                                                     view]() {
        BenchCell cell;
        cell.solver = kind;
        cell.eps = eps;
        SolverConfig cfg;
        cfg.tol = plan.tol;
        cfg.max_iters = plan.max_iters;
        cfg.criterion = natural_criterion(kind);
        cfg.seed = plan.rrk_seed;
        cfg.omega = resolve_omega(plan.omega_policy, plan.omega_fixed, kind,
                                  view->a);
        if (kind == SolverKind::KaACD) {
          ResolvedRho rr = resolve_rho(plan.rho_policy, plan.rho_scale,
                                       plan.rho_fixed, fam, cfg.omega);
          cfg.rho = rr.rho;
          cell.note = rr.note;
          cfg.gamma0 = rr.rho > 0.0 ? rr.rho : 1.0;
        }
        cell.cfg = cfg;
        cell.trace = run_solver(kind, *view, cfg);
        return cell;
      }));
    }
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    result.cells[keys[i].first][keys[i].second] = jobs[i].get();
  return result;
}

/// Iteration-count cell: plain integer up to 1e4, then scientific with two
/// significant digits; ">N" marks exhaustion of the iteration budget.
inline std::string format_count_cell(const IterationTrace& tr,
                                     std::size_t max_iters) {
  if (!tr.converged) return ">" + std::to_string(max_iters);
  if (tr.iters <= 10000) return std::to_string(tr.iters);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1e", (double)tr.iters);
  return buf;
}

inline std::string render_markdown_table(const BenchResult& r,
                                         std::size_t max_iters) {
  std::ostringstream out;
  out << "| solver |";
  for (double eps : r.eps_grid) out << " eps=" << format_double(eps) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < r.eps_grid.size(); ++i) out << "---|";
  out << "\n";
  for (std::size_t si = 0; si < r.solvers.size(); ++si) {
    out << "| " << solver_name(r.solvers[si]) << " |";
    for (std::size_t ei = 0; ei < r.eps_grid.size(); ++ei)
      out << " " << format_count_cell(r.cells[si][ei].trace, max_iters)
          << " |";
    out << "\n";
  }
  return out.str();
}

inline void write_bench_outputs(const ExperimentPlan& plan,
                                const BenchResult& result) {
  namespace fs = std::filesystem;
  if (plan.output_dir.empty()) return;
  fs::create_directories(plan.output_dir);
  if (plan.write_markdown) {
    std::ofstream md(fs::path(plan.output_dir) / "table.md");
    md << render_markdown_table(result, plan.max_iters);
  }
  if (plan.write_csv) {
    std::ofstream summary(fs::path(plan.output_dir) / "summary.csv");
    summary << summary_csv_header() << "\n";
    for (const auto& row : result.cells)
      for (const BenchCell& cell : row)
        summary << summary_csv_row(cell.solver, cell.eps, cell.trace) << "\n";
  }
  if (plan.write_traces) {
    std::ofstream traces(fs::path(plan.output_dir) / "traces.csv");
    traces << trace_csv_header() << "\n";
    for (const auto& row : result.cells)
      for (const BenchCell& cell : row)
        for (const std::string& line :
             trace_csv_rows(cell.solver, cell.eps, cell.cfg, cell.trace))
          traces << line << "\n";
  }
}

// ---------------------------------------------------------------------------
// Diagnose
// ---------------------------------------------------------------------------

struct DiagnoseResult {
  std::vector<RateReport> reports;  // one per grid eps
  std::string csv;
  std::string summary;  // human-readable, flags rho <= 0
};

/// Rate constants across the grid. omega < 0 selects the per-eps optimal
/// omega_star.
inline DiagnoseResult run_diagnose(const NearSingularFamily& fam,
                                   double omega,
                                   RankTolerance tol = RankTolerance()) {
  check_nearly_singular(fam, tol);
  DiagnoseResult out;
  std::ostringstream csv, human;
  csv << rate_report_csv_header() << "\n";
  for (double eps : fam.eps_grid) {
    const DenseMatrix a = fam.matrix(eps);
    const double w = omega < 0.0 ? omega_star(a, tol) : omega;
    RateReport r = compute_rate_report(fam, eps, w, tol);
    csv << rate_report_csv_row(r) << "\n";
    human << "eps=" << format_double(eps) << "  omega=" << format_double(w)
          << "  rho=" << format_double(r.rho)
          << "  lmin_plus=" << format_double(r.lmin_plus);
    if (!(r.rho > 0.0))
      human << "  [WARN rho <= 0: outside the contraction regime]";
    human << "\n";
    out.reports.push_back(r);
  }
  out.csv = csv.str();
  out.summary = human.str();
  return out;
}

// ---------------------------------------------------------------------------
// Geometry (2-d trajectories)
// ---------------------------------------------------------------------------

struct GeometryResult {
  std::vector<std::vector<Vector>> kaczmarz_path;  // per outer iteration
  std::vector<std::vector<Vector>> kak_path;
  std::string csv;  // method,iter,substep,x1,x2
};

/// Per-sub-step trajectories of Kaczmarz and KaK on the 2-d motivating
/// family, for external plotting of the zigzag behavior.
inline GeometryResult run_geometry(const NearSingularFamily& fam, double eps,
                                   double omega_kacz, double omega_kak,
                                   std::size_t iters,
                                   RankTolerance tol = RankTolerance()) {
  const DenseMatrix a = fam.matrix(eps);
  detail::require(a.cols() == 2, "run_geometry: needs a 2-d problem");
  ProblemOptions opt;
  opt.with_x_ls = true;
  opt.with_primal_kernel = true;
  opt.tol = tol;
  const ProblemView view = make_problem_view(a, fam.rhs(eps), fam.m0, opt);

  GeometryResult out;
  std::ostringstream csv;
  csv << "method,iter,substep,x1,x2\n";
  auto emit = [&csv](const char* method, std::size_t iter,
                     const std::vector<Vector>& path) {
    for (std::size_t s = 0; s < path.size(); ++s)
      csv << method << "," << iter << "," << s << ","
          << format_double(path[s][0]) << "," << format_double(path[s][1])
          << "\n";
  };

  Vector x(2);
  for (std::size_t k = 0; k < iters; ++k) {
    auto path = kaczmarz_sweep_recorded(x, view, omega_kacz);
    x = path.back();
    emit("kaczmarz", k, path);
    out.kaczmarz_path.push_back(std::move(path));
  }
  Vector z(2);
  for (std::size_t k = 0; k < iters; ++k) {
    auto path = kak_step_recorded(z, view, omega_kak);
    z = path.back();
    emit("kak", k, path);
    out.kak_path.push_back(std::move(path));
  }
  out.csv = csv.str();
  return out;
}

}  // namespace kaug
