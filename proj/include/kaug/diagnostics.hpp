#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaug/csv.hpp"
#include "kaug/family.hpp"
#include "kaug/linalg.hpp"
#include "kaug/matrix.hpp"
#include "kaug/subspace.hpp"

namespace kaug {

/// Rate constants for one (eps, omega). lmin_plus_upper_bound is NaN when
/// the angle-sum precondition theta1 + beta <= pi/2 fails.
struct RateReport {
  double eps = 0.0;
  double omega = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  double theta1 = 0.0;  // radians
  double beta = 0.0;    // radians
  double sigma0 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
  double rho = 0.0;
  double rho0 = 0.0;
  double omega_star = 0.0;
  double lmin_plus = 0.0;
  double lmin_plus_upper_bound = 0.0;
};

inline std::size_t floor_log2_2m(std::size_t m) {
  std::size_t v = 2 * m, r = 0;
  while (v >>= 1) ++r;
  return r;
}

/// (lambda_min_plus, lambda_max) of A^T D^{-1} A with D = diag(A A^T),
/// read off the m x m matrix D^{-1/2} A A^T D^{-1/2} sharing its nonzero
/// spectrum.
inline std::pair<double, double> delta_min_max(
    const DenseMatrix& a, RankTolerance tol = RankTolerance()) {
  detail::require(a.rows() > 0 && a.cols() > 0, "delta_min_max: empty matrix");
  const Vector d = detail::row_norms_squared(a);
  for (std::size_t i = 0; i < d.size(); ++i)
    detail::require(d[i] > 0.0, "delta_min_max: zero row");
  const std::size_t m = a.rows();
  DenseMatrix w(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    auto ri = a.row(i);
    for (std::size_t j = i; j < m; ++j) {
      auto rj = a.row(j);
      long double s = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k)
        s += (long double)ri[k] * rj[k];
      const double val = (double)s / std::sqrt(d[i] * d[j]);
      w(i, j) = val;
      w(j, i) = val;
    }
  }
  return sym_eig_extremes(w, tol);
}

/// ||D^{-1} A|| with D = diag(A A^T).
inline double normalized_row_operator_norm(const DenseMatrix& a) {
  const Vector d = detail::row_norms_squared(a);
  DenseMatrix scaled(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    detail::require(d[i] > 0.0, "normalized_row_operator_norm: zero row");
    for (std::size_t j = 0; j < a.cols(); ++j) scaled(i, j) = a(i, j) / d[i];
  }
  return spectral_norm(scaled);
}

/// lambda_min_plus(A^T A) read from the singular values of A.
inline double lmin_plus_gram(const DenseMatrix& a,
                             RankTolerance tol = RankTolerance()) {
  SvdResult s = svd(a);
  const std::size_t r = s.rank(tol);
  if (r == 0) return 0.0;
  return s.sigma[r - 1] * s.sigma[r - 1];
}

/// Largest canonical angle between row(A0(eps)) and row(A0(0)), and the
/// worst row angle of A1(eps) against row(A1(0)).
inline std::pair<double, double> theta1_beta(const NearSingularFamily& fam,
                                             double eps,
                                             RankTolerance tol = RankTolerance()) {
  detail::require(eps > 0.0 && eps <= fam.eps_bar,
                  "theta1_beta: eps outside (0, eps_bar]");
  const DenseMatrix a0_eps = fam.a0(eps);
  const DenseMatrix a0_lim = fam.a0(0.0);
  const Subspace row_eps = row_space_basis(a0_eps, tol);
  const Subspace row_lim = row_space_basis(a0_lim, tol);
  if (row_eps.dim() != row_lim.dim())
    throw std::runtime_error("near-singularity(ii): rank of A0 changes with eps");
  const double theta1 =
      row_eps.dim() == 0 ? 0.0 : canonical_angles(row_eps, row_lim).largest();

  const DenseMatrix a1_eps = fam.a1(eps);
  const Subspace row_a1_lim = row_space_basis(fam.a1(0.0), tol);
  double beta = 0.0;
  for (std::size_t i = 0; i < a1_eps.rows(); ++i) {
    Vector ri(a1_eps.cols());
    for (std::size_t j = 0; j < a1_eps.cols(); ++j) ri[j] = a1_eps(i, j);
    beta = std::max(beta, angle_to_subspace(ri, row_a1_lim));
  }
  return {theta1, beta};
}

/// sigma_0(eps) = lambda_min_plus(A0(0)^T A0(0)) cos^2(theta1)
///                - ||A0(0) - A0(eps)||^2. May be <= 0 for large eps.
inline double sigma0(const NearSingularFamily& fam, double eps,
                     RankTolerance tol = RankTolerance()) {
  detail::require(eps >= 0.0 && eps <= fam.eps_bar,
                  "sigma0: eps outside [0, eps_bar]");
  const double lmin0 = lmin_plus_gram(fam.a0(0.0), tol);
  if (eps == 0.0) return lmin0;
  const double theta1 = theta1_beta(fam, eps, tol).first;
  const double pert = spectral_norm(fam.a0(0.0) - fam.a0(eps));
  const double c = std::cos(theta1);
  return lmin0 * c * c - pert * pert;
}

/// C1(eps) = ||E1||^2 + 2 ||A1(0)|| ||E1|| + ||E0|| ||A1(0)|| ||Pi||.
inline double c1(const NearSingularFamily& fam, double eps,
                 RankTolerance tol = RankTolerance()) {
  const DenseMatrix pi = recovered_pi(fam, tol);
  const double e0 = spectral_norm(fam.a0(eps) - fam.a0(0.0));
  const double e1 = spectral_norm(fam.a1(eps) - fam.a1(0.0));
  const double a1n = spectral_norm(fam.a1(0.0));
  return e1 * e1 + 2.0 * a1n * e1 + e0 * a1n * spectral_norm(pi);
}

/// Contraction prefactor
/// C0 = 4 w (2 - w (1 + dmax)) / (2 + w floor(log2(2m)) dmax + 2 w N)^2
/// with N = ||D^{-1} A||.
inline double c0(const DenseMatrix& a, double omega,
                 RankTolerance tol = RankTolerance()) {
  const double dmax = delta_min_max(a, tol).second;
  detail::require(omega > 0.0 && omega < 2.0 / (1.0 + dmax),
                  "c0: omega outside (0, 2/(1+delta_max))");
  const double lg = (double)floor_log2_2m(a.rows());
  const double nrm = normalized_row_operator_norm(a);
  const double den = 2.0 + omega * lg * dmax + 2.0 * omega * nrm;
  return 4.0 * omega * (2.0 - omega * (1.0 + dmax)) / (den * den);
}

/// The maximizer of C0 over the admissible relaxation interval.
inline double omega_star(const DenseMatrix& a,
                         RankTolerance tol = RankTolerance()) {
  const double dmax = delta_min_max(a, tol).second;
  const double lg = (double)floor_log2_2m(a.rows());
  const double nrm = normalized_row_operator_norm(a);
  return 2.0 / (2.0 + (2.0 + lg) * dmax + 2.0 * nrm);
}

/// rho(eps, omega) = C0(eps, omega) (min(1, sigma0/eta1) - C1/eta0).
/// Nonpositive values are reported, not errored: the contraction guarantee
/// only guarantees positivity for small eps.
inline double rho(const NearSingularFamily& fam, double eps, double omega,
                  RankTolerance tol = RankTolerance()) {
  const FamilyGridConstants g = family_grid_constants(fam);
  const double s0 = sigma0(fam, eps, tol);
  const double cc1 = c1(fam, eps, tol);
  return c0(fam.matrix(eps), omega, tol) *
         (std::min(1.0, s0 / g.eta1) - cc1 / g.eta0);
}

/// eps-free lower bound
/// rho0(w) = w (2 - w (1 + C2^2/eta0)) min(2 eta1, lmin0)
///           / (eta1 (2 + w floor(log2(2m)) C2^2/eta0 + 2 w C2/sqrt(eta0))^2).
inline double rho0(const NearSingularFamily& fam, double omega,
                   RankTolerance tol = RankTolerance()) {
  const FamilyGridConstants g = family_grid_constants(fam);
  const double q = g.c2 * g.c2 / g.eta0;
  detail::require(omega > 0.0 && omega < 2.0 / (1.0 + q),
                  "rho0: omega outside (0, 2/(1+C2^2/eta0))");
  const std::size_t m = fam.row_count();
  const double lg = (double)floor_log2_2m(m);
  const double lmin0 = lmin_plus_gram(fam.a0(0.0), tol);
  const double den = 2.0 + omega * lg * q + 2.0 * omega * g.c2 / std::sqrt(g.eta0);
  return omega * (2.0 - omega * (1.0 + q)) * std::min(2.0 * g.eta1, lmin0) /
         (g.eta1 * den * den);
}

/// m1 eta1 sin^2(theta1 + beta); valid only while theta1 + beta <= pi/2.
inline double lmin_plus_upper_bound(const NearSingularFamily& fam, double eps,
                                    RankTolerance tol = RankTolerance()) {
  const auto [theta1, beta] = theta1_beta(fam, eps, tol);
  if (theta1 + beta > std::numbers::pi / 2.0)
    throw std::runtime_error(
        "lmin_plus_upper_bound: theta1 + beta exceeds pi/2");
  const FamilyGridConstants g = family_grid_constants(fam);
  const double s = std::sin(theta1 + beta);
  return (double)fam.m1_count() * g.eta1 * s * s;
}

/// All rate constants for one (eps, omega).
inline RateReport compute_rate_report(const NearSingularFamily& fam, double eps,
                                      double omega,
                                      RankTolerance tol = RankTolerance()) {
  RateReport r;
  r.eps = eps;
  r.omega = omega;
  const DenseMatrix a = fam.matrix(eps);
  std::tie(r.delta_min, r.delta_max) = delta_min_max(a, tol);
  std::tie(r.theta1, r.beta) = theta1_beta(fam, eps, tol);
  r.sigma0 = sigma0(fam, eps, tol);
  r.c1 = c1(fam, eps, tol);
  r.c0 = c0(a, omega, tol);
  r.rho = rho(fam, eps, omega, tol);
  r.omega_star = omega_star(a, tol);
  r.lmin_plus = lmin_plus_gram(a, tol);
  if (r.theta1 + r.beta <= std::numbers::pi / 2.0) {
    r.lmin_plus_upper_bound = lmin_plus_upper_bound(fam, eps, tol);
  } else {
    r.lmin_plus_upper_bound = std::numeric_limits<double>::quiet_NaN();
  }
  const FamilyGridConstants g = family_grid_constants(fam);
  const double q = g.c2 * g.c2 / g.eta0;
  if (omega < 2.0 / (1.0 + q)) {
    r.rho0 = rho0(fam, omega, tol);
  } else {
    r.rho0 = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

inline std::string rate_report_csv_header() {
  return "eps,omega,delta_min,delta_max,theta1,beta,sigma0,c1,c0,rho,rho0,"
         "omega_star,lmin_plus,lmin_plus_upper_bound";
}

inline std::string rate_report_csv_row(const RateReport& r) {
  return csv_join({format_double(r.eps), format_double(r.omega),
                   format_double(r.delta_min), format_double(r.delta_max),
                   format_double(r.theta1), format_double(r.beta),
                   format_double(r.sigma0), format_double(r.c1),
                   format_double(r.c0), format_double(r.rho),
                   format_double(r.rho0), format_double(r.omega_star),
                   format_double(r.lmin_plus),
                   format_double(r.lmin_plus_upper_bound)});
}

}  // namespace kaug
