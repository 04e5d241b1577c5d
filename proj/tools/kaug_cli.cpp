// Command-line front end: generate nearly singular families, report rate
// constants, run solver benchmarks over eps grids, and dump 2-d
// trajectories. See README.md for usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kaug/harness.hpp"

namespace {

std::vector<double> parse_eps_list(const std::string& csv) {
  std::vector<double> grid;
  for (const std::string& cell : kaug::csv_split(csv))
    grid.push_back(kaug::parse_double(cell));
  return grid;
}

kaug::GeneratorSpec spec_from_flags(const std::string& kind,
                                    const std::string& eps_csv, std::size_t m,
                                    std::size_t n, std::size_t r,
                                    std::size_t dk, std::size_t damp,
                                    std::uint64_t seed,
                                    const std::string& source) {
  kaug::GeneratorSpec spec;
  spec.kind = kaug::parse_generator(kind);
  if (!eps_csv.empty()) spec.eps_grid = parse_eps_list(eps_csv);
  spec.m = m;
  spec.n = n;
  spec.r = r;
  spec.dual_kernel_dim = dk;
  spec.damp_count = damp;
  spec.seed = seed;
  spec.source_path = source;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-augmented Kaczmarz / coordinate-descent harness"};
  app.require_subcommand(1);

  // --- gen ---------------------------------------------------------------
  std::string gen_kind = "motivating", gen_eps, gen_source, gen_out = ".";
  std::size_t gen_m = 50, gen_n = 80, gen_r = 45, gen_dk = 5, gen_damp = 5;
  std::uint64_t gen_seed = 1;
  CLI::App* gen = app.add_subcommand(
      "gen", "generate a family: .mtx per grid point plus a JSON manifest");
  gen->add_option("--kind", gen_kind,
                  "motivating | tridiagonal | random | svd_damped");
  gen->add_option("--eps", gen_eps, "comma-separated eps grid, decreasing");
  gen->add_option("--m", gen_m, "rows (random kind)");
  gen->add_option("--n", gen_n, "columns (random kind)");
  gen->add_option("--r", gen_r, "rank of the A0 block (random kind)");
  gen->add_option("--dk", gen_dk, "dual kernel dimension = m - r");
  gen->add_option("--damp", gen_damp, "damped singular values (svd_damped)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--source", gen_source, "source .mtx (svd_damped)");
  gen->add_option("--out", gen_out, "output directory");

  // --- diagnose ------------------------------------------------------------
  std::string diag_manifest, diag_omega = "star", diag_out;
  CLI::App* diag = app.add_subcommand(
      "diagnose", "rate constants per grid eps, written as CSV");
  diag->add_option("--family", diag_manifest, "family manifest (family.json)")
      ->required();
  diag->add_option("--omega", diag_omega,
                   "relaxation parameter, or 'star' for the optimal one");
  diag->add_option("--out", diag_out, "output directory (default: stdout)");

  // --- bench ---------------------------------------------------------------
  std::string bench_manifest, bench_solvers = "cd,kacd,kaacd";
  std::string bench_omega = "paper", bench_rho = "paper:0.9";
  std::string bench_out, bench_formats = "csv,markdown";
  double bench_tol = 1e-6;
  std::size_t bench_max_iters = 20000000;
  std::uint64_t bench_rrk_seed = 1;
  bool bench_traces = false;
  CLI::App* bench = app.add_subcommand(
      "bench", "run solvers over the eps grid and emit iteration tables");
  bench->add_option("--family", bench_manifest, "family manifest")->required();
  bench->add_option("--solvers", bench_solvers,
                    "comma list: kaczmarz,cd,kak,kacd,symkacd,kaacd,rrk");
  bench->add_option("--omega-policy", bench_omega,
                    "paper | star | fixed:<value>");
  bench->add_option("--rho-policy", bench_rho,
                    "zero | paper:<scale> | fixed:<value>");
  bench->add_option("--tol", bench_tol, "relative stopping tolerance");
  bench->add_option("--max-iters", bench_max_iters, "iteration budget");
  bench->add_option("--rrk-seed", bench_rrk_seed, "RRK shuffle seed");
  bench->add_option("--out", bench_out, "output directory")->required();
  bench->add_option("--formats", bench_formats, "csv,markdown subset");
  bench->add_flag("--traces", bench_traces,
                  "also write full residual histories (can be large)");

  // --- geometry --------------------------------------------------------------
  double geo_eps = 0.2;
  std::string geo_omega_kak = "1";
  double geo_omega_kacz = 1.0;
  std::size_t geo_iters = 12;
  std::string geo_out;
  bool geo_allow_boundary = false;
  CLI::App* geo = app.add_subcommand(
      "geometry", "per-sub-step 2-d trajectories of Kaczmarz and KaK");
  geo->add_option("--eps", geo_eps, "family parameter");
  geo->add_option("--omega", geo_omega_kacz, "Kaczmarz relaxation");
  geo->add_option("--omega-kak", geo_omega_kak,
                  "KaK relaxation: a number, or 'star2' for 2/delta_max");
  geo->add_option("--iters", geo_iters, "outer iterations to record");
  geo->add_option("--out", geo_out, "output directory (default: stdout)");
  geo->add_flag("--allow-boundary-omega", geo_allow_boundary,
                "permit the 2/delta_max preset, which sits outside the "
                "contraction theory");

  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    if (gen->parsed()) {
      kaug::GeneratorSpec spec =
          spec_from_flags(gen_kind, gen_eps, gen_m, gen_n, gen_r, gen_dk,
                          gen_damp, gen_seed, gen_source);
      kaug::GeneratedFamily fam = kaug::generate(spec);
      kaug::validate_family(fam.family);
      const std::string manifest = kaug::write_family(fam, gen_out);
      std::cout << "wrote " << manifest << " and "
                << fam.spec.eps_grid.size() << " matrix files\n";
    } else if (diag->parsed()) {
      kaug::GeneratedFamily fam = kaug::load_family(diag_manifest);
      const double omega =
          diag_omega == "star" ? -1.0 : kaug::parse_double(diag_omega);
      kaug::DiagnoseResult res = kaug::run_diagnose(fam.family, omega);
      if (diag_out.empty()) {
        std::cout << res.csv;
      } else {
        fs::create_directories(diag_out);
        std::ofstream csv(fs::path(diag_out) / "rate_report.csv");
        csv << res.csv;
      }
      std::cout << res.summary;
    } else if (bench->parsed()) {
      kaug::ExperimentPlan plan;
      plan.generator = kaug::load_family(bench_manifest).spec;
      for (const std::string& s : kaug::csv_split(bench_solvers))
        plan.solvers.push_back(kaug::parse_solver(s));
      if (bench_omega == "paper") {
        plan.omega_policy = kaug::OmegaPolicy::Paper;
      } else if (bench_omega == "star") {
        plan.omega_policy = kaug::OmegaPolicy::OptimalStar;
      } else if (bench_omega.rfind("fixed:", 0) == 0) {
        plan.omega_policy = kaug::OmegaPolicy::Fixed;
        plan.omega_fixed = kaug::parse_double(bench_omega.substr(6));
      } else {
        throw std::invalid_argument("bench: bad --omega-policy");
      }
      if (bench_rho == "zero") {
        plan.rho_policy = kaug::RhoPolicy::ZeroSublinear;
      } else if (bench_rho.rfind("paper:", 0) == 0) {
        plan.rho_policy = kaug::RhoPolicy::PaperRho0Scaled;
        plan.rho_scale = kaug::parse_double(bench_rho.substr(6));
      } else if (bench_rho.rfind("fixed:", 0) == 0) {
        plan.rho_policy = kaug::RhoPolicy::Fixed;
        plan.rho_fixed = kaug::parse_double(bench_rho.substr(6));
      } else {
        throw std::invalid_argument("bench: bad --rho-policy");
      }
      plan.tol = bench_tol;
      plan.max_iters = bench_max_iters;
      plan.rrk_seed = bench_rrk_seed;
      plan.output_dir = bench_out;
      plan.write_csv = bench_formats.find("csv") != std::string::npos;
      plan.write_markdown =
          bench_formats.find("markdown") != std::string::npos;
      plan.write_traces = bench_traces;
      kaug::BenchResult res = kaug::run_bench(plan);
      kaug::write_bench_outputs(plan, res);
      std::cout << kaug::render_markdown_table(res, plan.max_iters);
      for (const auto& row : res.cells)
        for (const kaug::BenchCell& cell : row)
          if (!cell.note.empty())
            std::cout << "note: " << kaug::solver_name(cell.solver)
                      << " eps=" << kaug::format_double(cell.eps) << ": "
                      << cell.note << "\n";
    } else if (geo->parsed()) {
      kaug::NearSingularFamily fam = kaug::gen_motivating({geo_eps});
      double omega_kak;
      if (geo_omega_kak == "star2") {
        if (!geo_allow_boundary)
          throw std::invalid_argument(
              "geometry: the 2/delta_max preset needs "
              "--allow-boundary-omega");
        omega_kak =
            2.0 / kaug::delta_min_max(fam.matrix(geo_eps)).second;
      } else {
        omega_kak = kaug::parse_double(geo_omega_kak);
      }
      kaug::GeometryResult res =
          kaug::run_geometry(fam, geo_eps, geo_omega_kacz, omega_kak,
                             geo_iters);
      if (geo_out.empty()) {
        std::cout << res.csv;
      } else {
        fs::create_directories(geo_out);
        std::ofstream csv(fs::path(geo_out) / "trajectory.csv");
        csv << res.csv;
        std::cout << "wrote " << (fs::path(geo_out) / "trajectory.csv").string()
                  << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
    return 1;
  }
  return 0;
}
