#include <catch_amalgamated.hpp>

#include <cmath>

#include "kaug/linalg.hpp"
#include "kaug/matrix.hpp"
#include "kaug/rng.hpp"
#include "support/oracles.hpp"

using namespace kaug;

namespace {

DenseMatrix motivating_matrix(double eps) {
  return DenseMatrix(2, 2, {1.0, -1.0, 1.0 + eps, -1.0 + eps});
}

// Stable evaluation of 2 + eps^2 - sqrt(eps^4 + 4).
double motivating_lmin_plus(double eps) {
  const double e2 = eps * eps;
  return 4.0 * e2 / (2.0 + e2 + std::sqrt(e2 * e2 + 4.0));
}

double orthonormality_error(const DenseMatrix& q) {
  const DenseMatrix g = matmul(transpose(q), q);
  DenseMatrix d = g;
  for (std::size_t i = 0; i < g.rows(); ++i) d(i, i) -= 1.0;
  return frobenius_norm(d);
}

}  // namespace

TEST_CASE("matvec basics") {
  CHECK(matvec(DenseMatrix::identity(3), Vector{1, 2, 3}).entries() ==
        std::vector<double>{1, 2, 3});

  const Vector r = matvec(motivating_matrix(0.2), Vector{1, 1});
  CHECK(r[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(r[1] == Catch::Approx(0.4).margin(1e-15));

  CHECK(matvec(DenseMatrix(2, 2), Vector{5, 7}).entries() ==
        std::vector<double>{0, 0});

  CHECK_THROWS_AS(matvec(DenseMatrix(2, 3), Vector{1, 2}),
                  std::invalid_argument);
}

TEST_CASE("finite-entry invariants") {
  CHECK_THROWS_AS((Vector{1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0, INFINITY}), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("thin_qr on simple inputs") {
  // Q and R match the identity up to column signs.
  const QrResult id = thin_qr(DenseMatrix::identity(3));
  CHECK(frobenius_norm(matmul(id.q, id.r) - DenseMatrix::identity(3)) ==
        Catch::Approx(0.0).margin(1e-14));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(id.q(i, i)) == Catch::Approx(1.0));
    CHECK(std::abs(id.r(i, i)) == Catch::Approx(1.0));
  }

  const QrResult col = thin_qr(DenseMatrix(2, 1, {3.0, 4.0}));
  CHECK(std::abs(col.r(0, 0)) == Catch::Approx(5.0).epsilon(1e-14));
  CHECK(std::abs(col.q(0, 0)) == Catch::Approx(0.6).epsilon(1e-14));
  CHECK(std::abs(col.q(1, 0)) == Catch::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("thin_qr properties on random inputs") {
  Rng rng(42);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{6, 3},
                      {20, 7},
                      {200, 100}}) {
    const DenseMatrix a = rng.normal_matrix(m, n);
    const QrResult qr = thin_qr(a);
    CHECK(orthonormality_error(qr.q) <= 1e-12);
    CHECK(frobenius_norm(matmul(qr.q, qr.r) - a) <= 1e-12 * frobenius_norm(a));
    for (std::size_t i = 0; i < qr.r.rows(); ++i)
      for (std::size_t j = 0; j < i; ++j) CHECK(qr.r(i, j) == 0.0);
  }
  CHECK_THROWS_AS(thin_qr(DenseMatrix(2, 3)), std::invalid_argument);
}

TEST_CASE("svd of a diagonal matrix sorts singular values") {
  const DenseMatrix d(3, 3, {3, 0, 0, 0, 1, 0, 0, 0, 2});
  const SvdResult s = svd(d);
  REQUIRE(s.sigma.size() == 3);
  CHECK(s.sigma[0] == Catch::Approx(3.0).epsilon(1e-14));
  CHECK(s.sigma[1] == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(s.sigma[2] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("svd reproduces the motivating family's smallest eigenvalue") {
  for (double eps : {0.2, 0.04, 0.008, 0.0016}) {
    const SvdResult s = svd(motivating_matrix(eps));
    const double lmin = s.sigma[1] * s.sigma[1];
    CHECK(lmin == Catch::Approx(motivating_lmin_plus(eps)).epsilon(1e-12));
  }
}

TEST_CASE("svd of a rank-1 outer product") {
  const Vector u{1, -2, 3};
  const Vector v{2, 5};
  DenseMatrix m(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) m(i, j) = u[i] * v[j];
  const SvdResult s = svd(m);
  CHECK(s.sigma[0] == Catch::Approx(norm(u) * norm(v)).epsilon(1e-13));
  CHECK(s.sigma[1] == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("svd reconstruction and orthonormality on random shapes") {
  Rng rng(7);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{10, 6},
                      {6, 10},
                      {40, 13},
                      {1, 5}}) {
    const DenseMatrix a = rng.normal_matrix(m, n);
    const SvdResult s = svd(a);
    DenseMatrix rec(m, n);
    for (std::size_t k = 0; k < s.sigma.size(); ++k) {
      CHECK(s.sigma[k] >= 0.0);
      if (k > 0) CHECK(s.sigma[k - 1] >= s.sigma[k]);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          rec(i, j) += s.u(i, k) * s.sigma[k] * s.v(j, k);
    }
    CHECK(frobenius_norm(rec - a) <= 1e-10 * frobenius_norm(a));
    CHECK(orthonormality_error(s.u) <= 1e-12);
    CHECK(orthonormality_error(s.v) <= 1e-12);
  }
}

TEST_CASE("svd singular values agree with Gram eigenvalues") {
  Rng rng(11);
  const DenseMatrix a = rng.normal_matrix(10, 6);
  const SvdResult s = svd(a);
  const auto [lmin_plus, lmax] = sym_eig_extremes(matmul(transpose(a), a));
  CHECK(std::sqrt(lmax) == Catch::Approx(s.sigma[0]).epsilon(1e-8));
  CHECK(std::sqrt(lmin_plus) == Catch::Approx(s.sigma[5]).epsilon(1e-8));
}

TEST_CASE("min_norm_least_squares basics") {
  CHECK(min_norm_least_squares(DenseMatrix::identity(2), Vector{3, 4})[0] ==
        Catch::Approx(3.0));

  const DenseMatrix a = motivating_matrix(0.2);
  const Vector x = min_norm_least_squares(a, matvec(a, Vector{1, 0}));
  CHECK(x[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] == Catch::Approx(0.0).margin(1e-12));

  const Vector y =
      min_norm_least_squares(DenseMatrix(1, 2, {1.0, -1.0}), Vector{2});
  CHECK(y[0] == Catch::Approx(1.0).epsilon(1e-13));
  CHECK(y[1] == Catch::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("min_norm_least_squares projects onto the row space") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    // Rank-deficient by construction: 6x5 of rank 3.
    const DenseMatrix a =
        matmul(rng.normal_matrix(6, 3), rng.normal_matrix(3, 5));
    const Vector x0 = rng.normal_vector(5);
    const Vector b = matvec(a, x0);
    const Vector x = min_norm_least_squares(a, b);
    CHECK(norm(matvec(a, x) - b) <= 1e-10 * std::max(1.0, norm(b)));
    // x must be orthogonal to ker(A).
    const DenseMatrix nb = null_space_basis_matrix(a);
    REQUIRE(nb.cols() == 2);
    const Vector overlap = matvec_transposed(nb, x);
    CHECK(norm(overlap) <= 1e-10 * std::max(1.0, norm(x)));
  }
}

TEST_CASE("null space basis") {
  const DenseMatrix row(1, 2, {1.0, -1.0});
  const DenseMatrix nb = null_space_basis_matrix(row);
  REQUIRE(nb.cols() == 1);
  CHECK(std::abs(nb(0, 0)) == Catch::Approx(1.0 / std::sqrt(2.0)));
  CHECK(nb(0, 0) == Catch::Approx(nb(1, 0)));

  CHECK(null_space_basis_matrix(DenseMatrix::identity(3)).cols() == 0);

  // A0 A^T of the motivating family.
  const DenseMatrix m(1, 2, {2.0, 2.0});
  const DenseMatrix dual = null_space_basis_matrix(m);
  REQUIRE(dual.cols() == 1);
  CHECK(dual(0, 0) == Catch::Approx(-dual(1, 0)));
}

TEST_CASE("null space dimension complements the rank") {
  Rng rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 4 + (std::size_t)rng.integer(5);
    const std::size_t r = 1 + (std::size_t)rng.integer(n - 1);
    const std::size_t rows = r + (std::size_t)rng.integer(4);
    const DenseMatrix a =
        matmul(rng.normal_matrix(rows, r), rng.normal_matrix(r, n));
    const DenseMatrix nb = null_space_basis_matrix(a);
    CHECK(nb.cols() + svd(a).rank() == n);
    CHECK(spectral_norm(matmul(a, nb)) <=
          10.0 * 1e-10 * spectral_norm(a));
  }
}

TEST_CASE("sym_eig_extremes on diagonal and paper matrices") {
  const DenseMatrix d(3, 3, {0, 0, 0, 0, 2, 0, 0, 0, 5});
  const auto [lmin_plus, lmax] = sym_eig_extremes(d);
  CHECK(lmin_plus == Catch::Approx(2.0));
  CHECK(lmax == Catch::Approx(5.0));

  const double eps = 0.2;
  const DenseMatrix a = motivating_matrix(eps);
  const auto [lp, lm] = sym_eig_extremes(matmul(transpose(a), a));
  CHECK(lp == Catch::Approx(motivating_lmin_plus(eps)).epsilon(1e-9));
  CHECK(lm == Catch::Approx(2.0 + eps * eps +
                            std::sqrt(std::pow(eps, 4) + 4.0)));

  // A0^T A0 of the motivating family has lambda_min_plus = 2.
  const DenseMatrix a0(1, 2, {1.0, -1.0});
  CHECK(sym_eig_extremes(matmul(transpose(a0), a0)).first ==
        Catch::Approx(2.0));

  CHECK(sym_eig_extremes(DenseMatrix(2, 2)).first == 0.0);
  CHECK_THROWS_AS(sym_eig_extremes(DenseMatrix(2, 2, {1, 2, 3, 4})),
                  std::invalid_argument);
}

TEST_CASE("sym_eig_extremes matches the characteristic polynomial oracle") {
  Rng rng(17);
  for (std::size_t n : {2, 3, 4}) {
    for (int trial = 0; trial < 5; ++trial) {
      // Well-separated eigenvalues through a random orthogonal conjugation.
      const QrResult qr = thin_qr(rng.normal_matrix(n, n));
      DenseMatrix lambda(n, n);
      for (std::size_t i = 0; i < n; ++i)
        lambda(i, i) = 0.5 + 2.0 * (double)i + rng.uniform();
      const DenseMatrix m =
          matmul(qr.q, matmul(lambda, transpose(qr.q)));
      DenseMatrix sym = m;  // symmetrize the rounding residue
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          sym(i, j) = 0.5 * (m(i, j) + m(j, i));

      const auto poly = testing::charpoly_coefficients(sym);
      const double bound = frobenius_norm(sym) + 1.0;
      const auto roots = testing::poly_roots_bisect(poly, -bound, bound);
      REQUIRE(roots.size() == n);
      const auto [lmin_plus, lmax] = sym_eig_extremes(sym);
      CHECK(lmin_plus == Catch::Approx(roots.front()).epsilon(1e-8));
      CHECK(lmax == Catch::Approx(roots.back()).epsilon(1e-8));
    }
  }
}

TEST_CASE("solve_spd") {
  CHECK(solve_spd(DenseMatrix::identity(3), Vector{1, 2, 3}).entries() ==
        std::vector<double>{1, 2, 3});

  const Vector x = solve_spd(DenseMatrix(2, 2, {4, 0, 0, 9}), Vector{4, 9});
  CHECK(x[0] == Catch::Approx(1.0));
  CHECK(x[1] == Catch::Approx(1.0));

  const Vector y = solve_spd(DenseMatrix(2, 2, {2, 1, 1, 2}), Vector{3, 3});
  CHECK(y[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(y[1] == Catch::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(solve_spd(DenseMatrix(2, 2, {1, 2, 2, 1}), Vector{1, 1}),
                  std::runtime_error);
}

TEST_CASE("solve_spd residual bound on random SPD systems") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseMatrix g = rng.normal_matrix(12, 12);
    DenseMatrix m = matmul(g, transpose(g));
    for (std::size_t i = 0; i < 12; ++i) m(i, i) += 0.5;
    const Vector b = rng.normal_vector(12);
    const Vector x = solve_spd(m, b);
    CHECK(norm(matvec(m, x) - b) <= 1e-10 * spectral_norm(m) * norm(x));
  }
}

TEST_CASE("spectral_norm") {
  CHECK(spectral_norm(DenseMatrix::identity(4)) == Catch::Approx(1.0));
  CHECK(spectral_norm(DenseMatrix(2, 2, {0, 3, 0, 0})) == Catch::Approx(3.0));
  CHECK(spectral_norm(DenseMatrix(3, 2)) == 0.0);
}
