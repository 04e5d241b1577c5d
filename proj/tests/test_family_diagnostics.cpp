#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "kaug/diagnostics.hpp"
#include "kaug/family.hpp"
#include "kaug/generators.hpp"
#include "kaug/rng.hpp"
#include "support/oracles.hpp"

using namespace kaug;

namespace {

std::vector<double> powers_of(double base, int count) {
  std::vector<double> grid;
  double e = 1.0;
  for (int k = 0; k < count; ++k) {
    e /= base;
    grid.push_back(e);
  }
  return grid;
}

double motivating_lmin_plus(double eps) {
  const double e2 = eps * eps;
  return 4.0 * e2 / (2.0 + e2 + std::sqrt(e2 * e2 + 4.0));
}

// Closed-form eigenvalues of a symmetric 2x2 [[a,b],[b,c]].
std::pair<double, double> eig2(double a, double b, double c) {
  const double half_tr = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {half_tr - disc, half_tr + disc};
}

}  // namespace

TEST_CASE("family validation accepts the built-in generators") {
  CHECK_NOTHROW(validate_family(gen_motivating(powers_of(5, 4))));
  CHECK_NOTHROW(validate_family(gen_tridiagonal(powers_of(5, 4))));
  CHECK_NOTHROW(check_nearly_singular(gen_motivating(powers_of(5, 4))));
  CHECK_NOTHROW(check_nearly_singular(gen_tridiagonal(powers_of(5, 4))));
}

TEST_CASE("family validation names the violated clause") {
  // A0 whose rank changes with eps breaks the constant-rank clause.
  NearSingularFamily bad_rank;
  bad_rank.m0 = 1;
  bad_rank.eps_bar = 0.5;
  bad_rank.eps_grid = {0.2};
  bad_rank.a0 = [](double eps) { return DenseMatrix(1, 2, {eps, 0.0}); };
  bad_rank.a1 = [](double) { return DenseMatrix(1, 2, {1.0, 1.0}); };
  bad_rank.rhs = [bad_rank](double eps) {
    return matvec(bad_rank.matrix(eps), Vector{1, 1});
  };
  bad_rank.pi = DenseMatrix(1, 1, {0.0});
  CHECK_THROWS_WITH(check_nearly_singular(bad_rank),
                    Catch::Matchers::ContainsSubstring("near-singularity"));

  // A1(0) outside the row space of A0(0) breaks the limit coupling.
  NearSingularFamily bad_pi;
  bad_pi.m0 = 1;
  bad_pi.eps_bar = 0.5;
  bad_pi.eps_grid = {0.2};
  bad_pi.a0 = [](double) { return DenseMatrix(1, 2, {1.0, -1.0}); };
  bad_pi.a1 = [](double) { return DenseMatrix(1, 2, {1.0, 1.0}); };
  bad_pi.rhs = [bad_pi](double eps) {
    return matvec(bad_pi.matrix(eps), Vector{1, 0});
  };
  CHECK_THROWS_WITH(validate_family(bad_pi),
                    Catch::Matchers::ContainsSubstring("near-singularity(iii)"));

  // Inconsistent right-hand side needs a rank-deficient matrix.
  NearSingularFamily bad_b;
  bad_b.m0 = 1;
  bad_b.eps_bar = 0.5;
  bad_b.eps_grid = {0.2};
  bad_b.a0 = [](double) { return DenseMatrix(1, 2, {1.0, -1.0}); };
  bad_b.a1 = [](double eps) {
    return DenseMatrix(2, 2, {1.0 + eps, -1.0 + eps, 2.0, -2.0});
  };
  bad_b.rhs = [](double) { return Vector{1.0, 0.0, 0.0}; };
  CHECK_THROWS_WITH(validate_family(bad_b),
                    Catch::Matchers::ContainsSubstring("consistency"));
}

TEST_CASE("recovered pi matches the exact coupling") {
  NearSingularFamily fam = gen_tridiagonal(powers_of(5, 4));
  REQUIRE(fam.pi.has_value());
  // Exact coupling for this family is [-1, -1].
  CHECK((*fam.pi)(0, 0) == Catch::Approx(-1.0).epsilon(1e-12));
  CHECK((*fam.pi)(0, 1) == Catch::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("delta_min_max basics") {
  CHECK(delta_min_max(DenseMatrix::identity(3)).first == Catch::Approx(1.0));
  CHECK(delta_min_max(DenseMatrix::identity(3)).second == Catch::Approx(1.0));

  const auto [dmin, dmax] = delta_min_max(DenseMatrix(1, 2, {3.0, 4.0}));
  CHECK(dmin == Catch::Approx(1.0));
  CHECK(dmax == Catch::Approx(1.0));

  CHECK_THROWS_AS(delta_min_max(DenseMatrix(2, 2, {1, 1, 0, 0})),
                  std::invalid_argument);
}

TEST_CASE("delta_min_max against the 2x2 closed form") {
  const double eps = 0.2;
  NearSingularFamily fam = gen_motivating({eps});
  const DenseMatrix a = fam.matrix(eps);
  // Brute force: A^T D^{-1} A assembled by hand, eigenvalues closed-form.
  const double d1 = 2.0, d2 = 2.0 + 2.0 * eps * eps;
  DenseMatrix g(2, 2);
  const double r1[2] = {1.0, -1.0}, r2[2] = {1.0 + eps, -1.0 + eps};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      g(i, j) = r1[i] * r1[j] / d1 + r2[i] * r2[j] / d2;
  const auto [lo, hi] = eig2(g(0, 0), g(0, 1), g(1, 1));
  const auto [dmin, dmax] = delta_min_max(a);
  CHECK(dmin == Catch::Approx(lo).epsilon(1e-10));
  CHECK(dmax == Catch::Approx(hi).epsilon(1e-10));
}

TEST_CASE("theta1 and beta on the motivating family") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 6));
  const double eps = 0.2;
  const auto [theta1, beta] = theta1_beta(fam, eps);
  CHECK(theta1 == Catch::Approx(0.0).margin(1e-12));  // A0 constant in eps
  const double expected_beta =
      std::acos(2.0 / (std::sqrt(2.0) * std::sqrt(2.0 + 2.0 * eps * eps)));
  CHECK(beta == Catch::Approx(expected_beta).epsilon(1e-10));

  // theta1 + beta decreases monotonically to zero along the grid.
  double prev = std::numbers::pi;
  for (double e : fam.eps_grid) {
    const auto [t, b] = theta1_beta(fam, e);
    CHECK(t + b < prev);
    prev = t + b;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("sigma0 values") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 4));
  for (double eps : fam.eps_grid)
    CHECK(sigma0(fam, eps) == Catch::Approx(2.0).epsilon(1e-10));
  CHECK(sigma0(fam, 0.0) == Catch::Approx(2.0).epsilon(1e-10));

  NearSingularFamily tri = gen_tridiagonal(powers_of(5, 6));
  const double limit = 4.0 - std::sqrt(13.0);
  CHECK(sigma0(tri, 0.0) == Catch::Approx(limit).epsilon(1e-10));
  CHECK(sigma0(tri, tri.eps_grid.back()) ==
        Catch::Approx(limit).epsilon(1e-3));
  // Approaches the limit as eps shrinks.
  CHECK(std::abs(sigma0(tri, 1.0 / 125) - limit) <
        std::abs(sigma0(tri, 1.0 / 5) - limit));
}

TEST_CASE("c1 values") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 4));
  CHECK(c1(fam, 0.0) == Catch::Approx(0.0).margin(1e-14));
  CHECK(c1(fam, 0.2) == Catch::Approx(0.88).epsilon(1e-12));
  double prev = 1e9;
  for (double eps : fam.eps_grid) {
    const double v = c1(fam, eps);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("c0 at omega_star matches the closed form") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 4));
  for (double eps : {0.2, 0.008}) {
    const DenseMatrix a = fam.matrix(eps);
    const double ws = omega_star(a);
    const double dmax = delta_min_max(a).second;
    const double lg = (double)floor_log2_2m(a.rows());
    const double nrm = normalized_row_operator_norm(a);
    const double closed = 1.0 / (1.0 + (1.0 + lg) * dmax + 2.0 * nrm);
    CHECK(c0(a, ws) == Catch::Approx(closed).epsilon(1e-12));
    CHECK(ws > 0.0);
    CHECK(ws < 2.0 / (1.0 + dmax));
  }
}

TEST_CASE("c0 vanishes at the ends of the admissible interval") {
  NearSingularFamily fam = gen_motivating({0.2});
  const DenseMatrix a = fam.matrix(0.2);
  const double dmax = delta_min_max(a).second;
  CHECK(c0(a, 1e-9) < 1e-8);
  CHECK(c0(a, 2.0 / (1.0 + dmax) * (1.0 - 1e-10)) < 1e-8);
  CHECK_THROWS_AS(c0(a, 2.0 / (1.0 + dmax)), std::invalid_argument);
  CHECK_THROWS_AS(c0(a, -0.1), std::invalid_argument);
}

TEST_CASE("rho is positive on the grid and never above one") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 6));
  for (double eps : fam.eps_grid) {
    const double r = rho(fam, eps, omega_star(fam.matrix(eps)));
    CHECK(r <= 1.0);
    CHECK(r > 0.0);
  }
}

TEST_CASE("rho uniformity versus collapsing lmin_plus") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 6));
  double rho_min = 1e300, rho_max = 0.0;
  double lmin_max = 0.0, lmin_min = 1e300;
  for (double eps : fam.eps_grid) {
    const DenseMatrix a = fam.matrix(eps);
    const double r = rho(fam, eps, omega_star(a));
    const double l = lmin_plus_gram(a);
    lmin_max = std::max(lmin_max, l);
    lmin_min = std::min(lmin_min, l);
    if (eps <= 1.0 / 25 + 1e-12) {
      rho_min = std::min(rho_min, r);
      rho_max = std::max(rho_max, r);
    }
  }
  // The contraction factor is eps-uniform once past the pre-asymptotic
  // first grid point, while lmin_plus collapses by many orders.
  CHECK((rho_max - rho_min) / rho_max < 0.10);
  CHECK(lmin_max / lmin_min > 1e6);
}

TEST_CASE("rho0 is a positive lower bound in the small-eps regime") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 6));
  const FamilyGridConstants g = family_grid_constants(fam);
  const double limit = 2.0 / (1.0 + g.c2 * g.c2 / g.eta0);
  const double omega = 0.9 * limit;
  const double r0 = rho0(fam, omega);
  CHECK(r0 > 0.0);
  for (double eps : fam.eps_grid) {
    if (eps > 1.0 / 125 + 1e-12) continue;
    CHECK(r0 <= rho(fam, eps, omega));
  }
  CHECK(rho0(fam, 1e-9) < 1e-8);
  CHECK_THROWS_AS(rho0(fam, limit), std::invalid_argument);
}

TEST_CASE("lmin_plus upper bound dominates the true value") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 4));
  for (double eps : fam.eps_grid) {
    const double bound = lmin_plus_upper_bound(fam, eps);
    CHECK(motivating_lmin_plus(eps) <= bound + 1e-10);
  }

  NearSingularFamily tri = gen_tridiagonal(powers_of(5, 4));
  for (double eps : tri.eps_grid) {
    const double bound = lmin_plus_upper_bound(tri, eps);
    const double lmin = lmin_plus_gram(tri.matrix(eps));
    CHECK(lmin == Catch::Approx(eps * eps).epsilon(1e-8));
    CHECK(lmin <= bound + 1e-10);
  }
}

TEST_CASE("lmin_plus upper bound refuses a violated angle precondition") {
  // A0 rotating with eps plus a nearly orthogonal A1 row pushes
  // theta1 + beta past pi/2.
  NearSingularFamily fam;
  fam.m0 = 1;
  fam.eps_bar = 1.0;
  fam.eps_grid = {0.9};
  fam.a0 = [](double eps) {
    return DenseMatrix(1, 2, {std::cos(1.2 * eps), std::sin(1.2 * eps)});
  };
  fam.a1 = [](double eps) { return DenseMatrix(1, 2, {0.05, eps}); };
  fam.rhs = [fam](double eps) { return matvec(fam.matrix(eps), Vector{1, 0}); };
  const auto [theta1, beta] = theta1_beta(fam, 0.9);
  REQUIRE(theta1 + beta > std::numbers::pi / 2.0);
  CHECK_THROWS_AS(lmin_plus_upper_bound(fam, 0.9), std::runtime_error);
}

TEST_CASE("rate report bundles the constants and serializes") {
  NearSingularFamily fam = gen_motivating(powers_of(5, 4));
  const double eps = 0.04;
  const double ws = omega_star(fam.matrix(eps));
  const RateReport r = compute_rate_report(fam, eps, ws);
  CHECK(r.eps == eps);
  CHECK(r.omega == ws);
  CHECK(r.delta_max >= r.delta_min);
  CHECK(r.delta_min > 0.0);
  CHECK(r.rho <= 1.0);
  CHECK(r.omega_star == Catch::Approx(ws));
  CHECK(r.lmin_plus ==
        Catch::Approx(motivating_lmin_plus(eps)).epsilon(1e-10));

  const std::string row = rate_report_csv_row(r);
  const auto cells = csv_split(row);
  const auto headers = csv_split(rate_report_csv_header());
  REQUIRE(cells.size() == headers.size());
  CHECK(parse_double(cells[0]) == r.eps);
  CHECK(parse_double(cells[9]) == r.rho);
  CHECK(parse_double(cells[12]) == r.lmin_plus);
}

TEST_CASE("eigenvalue bound inequalities hold over both closed-form families") {
  for (const NearSingularFamily& fam :
       {gen_motivating(powers_of(5, 4)), gen_tridiagonal(powers_of(5, 4))}) {
    const FamilyGridConstants g = family_grid_constants(fam);
    for (double eps : fam.eps_grid) {
      const auto [theta1, beta] = theta1_beta(fam, eps);
      const double s0 = sigma0(fam, eps);
      if (theta1 + beta <= std::numbers::pi / 2.0) {
        const double s = std::sin(theta1 + beta);
        CHECK(lmin_plus_gram(fam.matrix(eps)) <=
              (double)fam.m1_count() * g.eta1 * s * s + 1e-10);
      }
      if (s0 > 0.0) CHECK(lmin_plus_gram(fam.a0(eps)) >= s0 - 1e-10);
    }
  }
}
