#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaug/csv.hpp"
#include "kaug/linalg.hpp"
#include "kaug/matrix.hpp"
#include "kaug/rng.hpp"
#include "kaug/subspace.hpp"

namespace kaug {

enum class SolverKind { Kaczmarz, CD, KaK, KaCD, SymKaCD, KaACD, RRK };

enum class StoppingCriterion { PrimalResidual, DualResidual };

inline std::string solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::Kaczmarz: return "kaczmarz";
    case SolverKind::CD: return "cd";
    case SolverKind::KaK: return "kak";
    case SolverKind::KaCD: return "kacd";
    case SolverKind::SymKaCD: return "symkacd";
    case SolverKind::KaACD: return "kaacd";
    case SolverKind::RRK: return "rrk";
  }
  throw std::invalid_argument("solver_name: unknown kind");
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "kaczmarz") return SolverKind::Kaczmarz;
  if (s == "cd") return SolverKind::CD;
  if (s == "kak") return SolverKind::KaK;
  if (s == "kacd") return SolverKind::KaCD;
  if (s == "symkacd") return SolverKind::SymKaCD;
  if (s == "kaacd") return SolverKind::KaACD;
  if (s == "rrk") return SolverKind::RRK;
  throw std::invalid_argument("parse_solver: unknown solver '" + s + "'");
}

/// Kaczmarz-type methods iterate on x in R^n against ||Ax-b||/||b||;
/// coordinate-type methods iterate on y in R^m against ||AA^T y + b||/||b||.
inline StoppingCriterion natural_criterion(SolverKind k) {
  switch (k) {
    case SolverKind::Kaczmarz:
    case SolverKind::KaK:
    case SolverKind::RRK:
      return StoppingCriterion::PrimalResidual;
    default:
      return StoppingCriterion::DualResidual;
  }
}

struct SolverConfig {
  double omega = 1.0;
  double rho = 0.0;     // convexity parameter (KaACD)
  double gamma0 = 1.0;  // initial estimate-sequence weight (KaACD)
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  StoppingCriterion criterion = StoppingCriterion::PrimalResidual;
  std::uint64_t seed = 0;  // randomized baselines only
};

struct IterationTrace {
  std::size_t iters = 0;
  std::vector<double> residuals;  // length iters + 1; [0] is the initial one
  bool converged = false;
  Vector solution;
};

/// Immutable per-problem data shared by every solver run. The Gram matrix
/// A A^T backs the coordinate-type sweeps; kernel data is attached only
/// when a kernel-augmented method asks for it.
struct ProblemView {
  DenseMatrix a;
  Vector b;
  std::size_t m0 = 0;
  Vector row_norms_sq;  // d_i = ||A_(i)||^2 > 0
  DenseMatrix gram;     // A A^T
  std::optional<Subspace> appker;
  std::optional<DualKernelProjector> dual_projector;
  std::optional<Vector> x_ls;

  std::size_t row_count() const { return a.rows(); }
  std::size_t col_count() const { return a.cols(); }
};

struct ProblemOptions {
  bool with_x_ls = false;          // KaK reference solution
  bool with_primal_kernel = false; // KaK kernel step
  bool with_dual_projector = false;
  bool allow_pseudoinverse = false;
  RankTolerance tol{};
};

inline ProblemView make_problem_view(DenseMatrix a, Vector b, std::size_t m0,
                                     ProblemOptions opt = ProblemOptions()) {
  detail::require(b.size() == a.rows(), "make_problem_view: b length");
  ProblemView p;
  p.row_norms_sq = detail::row_norms_squared(a);
  for (std::size_t i = 0; i < p.row_norms_sq.size(); ++i)
    detail::require(p.row_norms_sq[i] > 0.0, "make_problem_view: zero row");
  p.gram = matmul(a, transpose(a));
  p.m0 = m0;
  if (opt.with_primal_kernel)
    p.appker = approximate_kernel(a, m0, opt.tol);
  if (opt.with_dual_projector)
    p.dual_projector = DualKernelProjector::build(
        a, approximate_dual_kernel(a, m0, opt.tol), opt.allow_pseudoinverse,
        opt.tol);
  if (opt.with_x_ls) {
    Vector x = min_norm_least_squares(a, b, opt.tol);
    const double bn = norm(b);
    detail::require(norm(matvec(a, x) - b) <= 1e-8 * std::max(bn, 1e-300),
                    "make_problem_view: b not consistent with A");
    p.x_ls = std::move(x);
  }
  p.a = std::move(a);
  p.b = std::move(b);
  return p;
}

inline ProblemOptions options_for(SolverKind k) {
  ProblemOptions o;
  switch (k) {
    case SolverKind::KaK:
      o.with_x_ls = true;
      o.with_primal_kernel = true;
      break;
    case SolverKind::KaCD:
    case SolverKind::SymKaCD:
    case SolverKind::KaACD:
      o.with_dual_projector = true;
      break;
    default:
      break;
  }
  return o;
}

// ---------------------------------------------------------------------------
// Sweeps and steps
// ---------------------------------------------------------------------------

namespace detail {

inline void kaczmarz_row_update(Vector& x, const ProblemView& p, std::size_t i,
                                double omega) {
  auto ri = p.a.row(i);
  long double s = 0.0L;
  for (std::size_t j = 0; j < x.size(); ++j) s += (long double)ri[j] * x[j];
  const double coef = omega * (p.b[i] - (double)s) / p.row_norms_sq[i];
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += coef * ri[j];
}

inline void cd_coordinate_update(Vector& y, const ProblemView& p, std::size_t i,
                                 double omega) {
  auto gi = p.gram.row(i);
  long double s = 0.0L;
  for (std::size_t j = 0; j < y.size(); ++j) s += (long double)gi[j] * y[j];
  y[i] -= omega * ((double)s + p.b[i]) / p.row_norms_sq[i];
}

inline void dual_kernel_update(Vector& y, const ProblemView& p, double omega) {
  Vector grad = matvec(p.gram, y) + p.b;
  const Vector corr = p.dual_projector->apply(grad);
  axpy(-omega, corr, y);
}

}  // namespace detail

/// One cyclic pass of relaxed row projections, ascending row order.
inline Vector kaczmarz_sweep(Vector x, const ProblemView& p, double omega) {
  detail::require(x.size() == p.col_count(), "kaczmarz_sweep: x length");
  for (std::size_t i = 0; i < p.row_count(); ++i)
    detail::kaczmarz_row_update(x, p, i, omega);
  return x;
}

/// One cyclic pass of coordinate updates on the dual objective
/// g(y) = ||A^T y||^2 / 2 + b^T y.
inline Vector cd_sweep(Vector y, const ProblemView& p, double omega) {
  detail::require(y.size() == p.row_count(), "cd_sweep: y length");
  for (std::size_t i = 0; i < p.row_count(); ++i)
    detail::cd_coordinate_update(y, p, i, omega);
  return y;
}

/// Kaczmarz sweep followed by the kernel correction
/// v <- v + omega P_appker (x_ls - v).
inline Vector kak_step(Vector x, const ProblemView& p, double omega) {
  detail::require(p.x_ls.has_value(), "kak_step: x_ls absent");
  detail::require(p.appker.has_value(), "kak_step: kernel basis absent");
  x = kaczmarz_sweep(std::move(x), p, omega);
  const Vector corr = projector_apply(*p.appker, *p.x_ls - x);
  axpy(omega, corr, x);
  return x;
}

/// CD sweep followed by the dual kernel correction
/// u <- u - omega Rhat (A A^T u + b).
inline Vector kacd_step(Vector y, const ProblemView& p, double omega) {
  detail::require(p.dual_projector.has_value(), "kacd_step: projector absent");
  y = cd_sweep(std::move(y), p, omega);
  detail::dual_kernel_update(y, p, omega);
  return y;
}

/// Symmetrized step: forward sweep, two kernel corrections, backward sweep.
inline Vector symkacd_step(Vector z, const ProblemView& p, double omega) {
  detail::require(p.dual_projector.has_value(),
                  "symkacd_step: projector absent");
  detail::require(z.size() == p.row_count(), "symkacd_step: z length");
  for (std::size_t i = 0; i < p.row_count(); ++i)
    detail::cd_coordinate_update(z, p, i, omega);
  detail::dual_kernel_update(z, p, omega);
  detail::dual_kernel_update(z, p, omega);
  for (std::size_t i = p.row_count(); i-- > 0;)
    detail::cd_coordinate_update(z, p, i, omega);
  return z;
}

/// Momentum state of the accelerated dual method.
struct KaacdState {
  Vector y;
  Vector v;
  double gamma = 0.0;
};

/// One outer iteration of the accelerated scheme; returns alpha_k.
inline double kaacd_advance(KaacdState& st, const ProblemView& p, double omega,
                            double rho) {
  const double gamma_k = st.gamma;
  const double alpha =
      (gamma_k + std::sqrt(gamma_k * gamma_k + 4.0 * gamma_k)) / 2.0;
  const double gamma_next = (gamma_k + rho * alpha) / (1.0 + alpha);

  const std::size_t m = st.y.size();
  Vector z(m);
  for (std::size_t i = 0; i < m; ++i)
    z[i] = (st.y[i] + alpha * st.v[i]) / (1.0 + alpha);
  const Vector z_next = symkacd_step(z, p, omega);

  const double denom = gamma_k + rho * alpha;
  Vector v_next(m);
  for (std::size_t i = 0; i < m; ++i)
    v_next[i] = (gamma_k * st.v[i] + rho * alpha * z[i] +
                 alpha * (z_next[i] - z[i])) /
                denom;
  for (std::size_t i = 0; i < m; ++i)
    st.y[i] = (st.y[i] + alpha * v_next[i]) / (1.0 + alpha);
  st.v = v_next;
  st.gamma = gamma_next;
  return alpha;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

namespace detail {

inline double relative_residual(const ProblemView& p, const Vector& iterate,
                                StoppingCriterion crit) {
  const double bn = norm(p.b);
  double rn = 0.0;
  if (crit == StoppingCriterion::PrimalResidual) {
    rn = norm(matvec(p.a, iterate) - p.b);
  } else {
    rn = norm(matvec(p.gram, iterate) + p.b);
  }
  // Zero right-hand side: fall back to the absolute residual.
  return bn == 0.0 ? rn : rn / bn;
}

inline void validate_config(const SolverConfig& cfg, SolverKind kind) {
  require(cfg.tol > 0.0 && cfg.tol < 1.0, "SolverConfig: tol outside (0,1)");
  require(cfg.max_iters >= 1, "SolverConfig: max_iters < 1");
  require(cfg.omega > 0.0, "SolverConfig: omega <= 0");
  require(cfg.criterion == natural_criterion(kind),
          "SolverConfig: criterion does not match solver kind");
  if (kind == SolverKind::KaACD) {
    require(cfg.rho >= 0.0, "SolverConfig: rho < 0");
    require(cfg.gamma0 > 0.0, "SolverConfig: gamma0 <= 0");
    require(cfg.gamma0 >= cfg.rho, "SolverConfig: gamma0 < rho");
  }
}

template <typename StepFn>
IterationTrace iterate_to_tolerance(const ProblemView& p,
                                    const SolverConfig& cfg,
                                    StoppingCriterion crit, std::size_t dim,
                                    StepFn step) {
  IterationTrace tr;
  Vector it(dim);
  tr.residuals.push_back(relative_residual(p, it, crit));
  while (tr.residuals.back() >= cfg.tol && tr.iters < cfg.max_iters) {
    it = step(std::move(it));
    ++tr.iters;
    tr.residuals.push_back(relative_residual(p, it, crit));
  }
  tr.converged = tr.residuals.back() < cfg.tol;
  tr.solution = std::move(it);
  return tr;
}

}  // namespace detail

/// Accelerated dual solve; the stopping test reads y_k after the momentum
/// update, which is the declared output sequence.
inline IterationTrace kaacd_solve(const ProblemView& p,
                                  const SolverConfig& cfg) {
  detail::validate_config(cfg, SolverKind::KaACD);
  detail::require(p.dual_projector.has_value(), "kaacd_solve: projector absent");
  IterationTrace tr;
  KaacdState st;
  st.y = Vector(p.row_count());
  st.v = Vector(p.row_count());
  st.gamma = cfg.gamma0;
  const auto crit = StoppingCriterion::DualResidual;
  tr.residuals.push_back(detail::relative_residual(p, st.y, crit));
  while (tr.residuals.back() >= cfg.tol && tr.iters < cfg.max_iters) {
    kaacd_advance(st, p, cfg.omega, cfg.rho);
    ++tr.iters;
    tr.residuals.push_back(detail::relative_residual(p, st.y, crit));
  }
  tr.converged = tr.residuals.back() < cfg.tol;
  tr.solution = std::move(st.y);
  return tr;
}

/// Randomized reshuffling Kaczmarz: every epoch applies all m row
/// projections in a freshly shuffled order; one trace entry per epoch.
inline IterationTrace rrk_solve(const ProblemView& p, const SolverConfig& cfg) {
  detail::validate_config(cfg, SolverKind::RRK);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(p.row_count());
  std::iota(order.begin(), order.end(), 0);
  return detail::iterate_to_tolerance(
      p, cfg, StoppingCriterion::PrimalResidual, p.col_count(),
      [&](Vector x) {
        rng.shuffle(order);
        for (std::size_t i : order)
          detail::kaczmarz_row_update(x, p, i, cfg.omega);
        return x;
      });
}

/// Run a solver from the zero initial vector until the relative residual
/// drops below tol or max_iters outer iterations elapse. Exhaustion is a
/// non-converged trace, not an error.
inline IterationTrace run_solver(SolverKind kind, const ProblemView& p,
                                 const SolverConfig& cfg) {
  detail::validate_config(cfg, kind);
  const double w = cfg.omega;
  switch (kind) {
    case SolverKind::Kaczmarz:
      return detail::iterate_to_tolerance(
          p, cfg, StoppingCriterion::PrimalResidual, p.col_count(),
          [&](Vector x) { return kaczmarz_sweep(std::move(x), p, w); });
    case SolverKind::CD:
      return detail::iterate_to_tolerance(
          p, cfg, StoppingCriterion::DualResidual, p.row_count(),
          [&](Vector y) { return cd_sweep(std::move(y), p, w); });
    case SolverKind::KaK:
      return detail::iterate_to_tolerance(
          p, cfg, StoppingCriterion::PrimalResidual, p.col_count(),
          [&](Vector x) { return kak_step(std::move(x), p, w); });
    case SolverKind::KaCD:
      return detail::iterate_to_tolerance(
          p, cfg, StoppingCriterion::DualResidual, p.row_count(),
          [&](Vector y) { return kacd_step(std::move(y), p, w); });
    case SolverKind::SymKaCD:
      return detail::iterate_to_tolerance(
          p, cfg, StoppingCriterion::DualResidual, p.row_count(),
          [&](Vector z) { return symkacd_step(std::move(z), p, w); });
    case SolverKind::KaACD:
      return kaacd_solve(p, cfg);
    case SolverKind::RRK:
      return rrk_solve(p, cfg);
  }
  throw std::invalid_argument("run_solver: unknown kind");
}

// ---------------------------------------------------------------------------
// Sub-step recording (geometric trajectories)
// ---------------------------------------------------------------------------

/// Iterate positions after every sub-step of one sweep, starting point
/// included.
inline std::vector<Vector> kaczmarz_sweep_recorded(Vector x,
                                                   const ProblemView& p,
                                                   double omega) {
  std::vector<Vector> path;
  path.push_back(x);
  for (std::size_t i = 0; i < p.row_count(); ++i) {
    detail::kaczmarz_row_update(x, p, i, omega);
    path.push_back(x);
  }
  return path;
}

inline std::vector<Vector> kak_step_recorded(Vector x, const ProblemView& p,
                                             double omega) {
  detail::require(p.x_ls.has_value() && p.appker.has_value(),
                  "kak_step_recorded: kernel data absent");
  std::vector<Vector> path = kaczmarz_sweep_recorded(std::move(x), p, omega);
  Vector v = path.back();
  const Vector corr = projector_apply(*p.appker, *p.x_ls - v);
  axpy(omega, corr, v);
  path.push_back(std::move(v));
  return path;
}

// ---------------------------------------------------------------------------
// Trace serialization
// ---------------------------------------------------------------------------

inline std::string trace_csv_header() {
  return "solver,eps,omega,rho,iter,residual";
}

inline std::vector<std::string> trace_csv_rows(SolverKind kind, double eps,
                                               const SolverConfig& cfg,
                                               const IterationTrace& tr) {
  std::vector<std::string> rows;
  rows.reserve(tr.residuals.size());
  for (std::size_t k = 0; k < tr.residuals.size(); ++k) {
    rows.push_back(csv_join({solver_name(kind), format_double(eps),
                             format_double(cfg.omega), format_double(cfg.rho),
                             std::to_string(k),
                             format_double(tr.residuals[k])}));
  }
  return rows;
}

inline std::string summary_csv_header() { return "solver,eps,iters,converged"; }

inline std::string summary_csv_row(SolverKind kind, double eps,
                                   const IterationTrace& tr) {
  return csv_join({solver_name(kind), format_double(eps),
                   std::to_string(tr.iters), tr.converged ? "1" : "0"});
}

}  // namespace kaug
