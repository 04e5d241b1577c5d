#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaug/family.hpp"
#include "kaug/linalg.hpp"
#include "kaug/matrix.hpp"
#include "kaug/matrix_market.hpp"
#include "kaug/rng.hpp"

namespace kaug {

enum class GeneratorKind {
  Motivating2x2,
  Tridiagonal3x3,
  RandomNearlySingular,
  SvdDamped
};

inline std::string generator_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Motivating2x2: return "motivating";
    case GeneratorKind::Tridiagonal3x3: return "tridiagonal";
    case GeneratorKind::RandomNearlySingular: return "random";
    case GeneratorKind::SvdDamped: return "svd_damped";
  }
  throw std::invalid_argument("generator_name: unknown kind");
}

inline GeneratorKind parse_generator(const std::string& s) {
  if (s == "motivating") return GeneratorKind::Motivating2x2;
  if (s == "tridiagonal") return GeneratorKind::Tridiagonal3x3;
  if (s == "random") return GeneratorKind::RandomNearlySingular;
  if (s == "svd_damped") return GeneratorKind::SvdDamped;
  throw std::invalid_argument("parse_generator: unknown kind '" + s + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Motivating2x2;
  std::vector<double> eps_grid;
  std::size_t m = 0, n = 0, r = 0, dual_kernel_dim = 0;  // random kind
  std::size_t damp_count = 5;                            // svd-damped kind
  std::uint64_t seed = 0;
  std::string source_path;  // svd-damped kind
};

namespace detail {

inline void validate_grid(const std::vector<double>& grid) {
  require(!grid.empty(), "GeneratorSpec: eps grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] > 0.0, "GeneratorSpec: eps must be positive");
    if (i > 0)
      require(grid[i] < grid[i - 1],
              "GeneratorSpec: eps grid must be strictly decreasing");
  }
}

/// Random square factor with singular values in [1/2, 3/2]. A plain
/// Gaussian square matrix is itself badly conditioned for larger k, which
/// would bury the eps-driven near singularity under unrelated
/// ill-conditioning.
inline DenseMatrix conditioned_square(Rng& rng, std::size_t k) {
  const QrResult q1 = thin_qr(rng.normal_matrix(k, k));
  const QrResult q2 = thin_qr(rng.normal_matrix(k, k));
  DenseMatrix d(k, k);
  for (std::size_t i = 0; i < k; ++i) d(i, i) = rng.uniform(0.5, 1.5);
  return matmul(q1.q, matmul(d, transpose(q2.q)));
}

}  // namespace detail

/// The 2x2 motivating family: A0 = [1,-1] constant, A1 = [1+eps,-1+eps].
/// The right-hand side is A(eps) x with the documented x = [1, 0].
inline NearSingularFamily gen_motivating(std::vector<double> eps_grid) {
  detail::validate_grid(eps_grid);
  NearSingularFamily fam;
  fam.m0 = 1;
  fam.eps_bar = std::max(0.5, eps_grid.front());
  fam.eps_grid = std::move(eps_grid);
  fam.a0 = [](double) { return DenseMatrix(1, 2, {1.0, -1.0}); };
  fam.a1 = [](double eps) {
    return DenseMatrix(1, 2, {1.0 + eps, -1.0 + eps});
  };
  fam.rhs = [](double eps) { return Vector{1.0, 1.0 + eps}; };
  fam.pi = DenseMatrix(1, 1, {1.0});
  return fam;
}

/// The 3x3 tridiagonal family with the (2-row, 1-row) split. The
/// right-hand side is A(eps) x with x = [1,1,1], rescaled to unit norm.
inline NearSingularFamily gen_tridiagonal(std::vector<double> eps_grid) {
  detail::validate_grid(eps_grid);
  NearSingularFamily fam;
  fam.m0 = 2;
  fam.eps_bar = std::max(0.5, eps_grid.front());
  fam.eps_grid = std::move(eps_grid);
  fam.a0 = [](double eps) {
    return DenseMatrix(2, 3, {1.0 + eps, -1.0, 0.0, -1.0, 2.0 + eps, -1.0});
  };
  fam.a1 = [](double eps) { return DenseMatrix(1, 3, {0.0, -1.0, 1.0 + eps}); };
  fam.rhs = [](double eps) {
    Vector b{eps, eps, eps};  // A(eps) [1,1,1]^T
    const double bn = norm(b);
    return bn > 0.0 ? (1.0 / bn) * b : b;
  };
  fam.pi = recovered_pi(fam);
  return fam;
}

/// Random nearly singular family. Construction: orthonormal V0 (n x r) and
/// V+ (n x (m-r)) with disjoint spans, A0 = G0 V0^T fixed across eps,
/// A1(eps) = Pi A0 + eps G+ V+^T, rows scaled once at the largest grid eps
/// so the diagonal of A A^T stays in [1/2, 2] over the whole grid. Also
/// returns the seeded solution behind the right-hand side.
inline std::pair<NearSingularFamily, Vector> gen_random_with_solution(
    const GeneratorSpec& spec) {
  detail::require(spec.kind == GeneratorKind::RandomNearlySingular,
                  "gen_random: wrong generator kind");
  detail::validate_grid(spec.eps_grid);
  const std::size_t m = spec.m, n = spec.n, r = spec.r;
  detail::require(m >= 2 && n >= 2, "gen_random: m, n too small");
  detail::require(r >= 1 && r < std::min(m, n), "gen_random: need 1 <= r < min(m,n)");
  detail::require(m <= n, "gen_random: needs m <= n");
  detail::require(spec.dual_kernel_dim == m - r,
                  "gen_random: dual_kernel_dim must equal m - r");

  const std::size_t m0 = r;
  const std::size_t m1 = m - m0;
  const double eps_max = spec.eps_grid.front();

  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(spec.seed + (attempt << 32));

    const QrResult basis_qr = thin_qr(rng.normal_matrix(n, m));
    DenseMatrix v0(n, r), vplus(n, m - r);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < r; ++j) v0(i, j) = basis_qr.q(i, j);
      for (std::size_t j = r; j < m; ++j) vplus(i, j - r) = basis_qr.q(i, j);
    }
    const DenseMatrix g0 = detail::conditioned_square(rng, r);
    const DenseMatrix pi_raw = rng.normal_matrix(m1, m0);
    const DenseMatrix gplus = detail::conditioned_square(rng, m - r);
    if (svd(g0).rank() < r || svd(gplus).rank() < m - r) continue;

    DenseMatrix a0 = matmul(g0, transpose(v0));
    DenseMatrix stable_part = matmul(pi_raw, a0);            // m1 x n
    DenseMatrix eps_part = matmul(gplus, transpose(vplus));  // m1 x n

    // One-time row scaling at eps_max.
    DenseMatrix pi = pi_raw;
    bool feasible = true;
    for (std::size_t i = 0; i < m0; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a0(i, j) * a0(i, j);
      const double scale = 1.0 / std::sqrt(s);
      for (std::size_t j = 0; j < n; ++j) a0(i, j) *= scale;
      for (std::size_t k = 0; k < m1; ++k) pi(k, i) /= scale;
    }
    for (std::size_t i = 0; i < m1; ++i) {
      double cs = 0.0, ds = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        cs += stable_part(i, j) * stable_part(i, j);
        ds += eps_part(i, j) * eps_part(i, j);
      }
      const double total = cs + eps_max * eps_max * ds;
      // The constant part must dominate or the diagonal leaves [1/2, 2]
      // for small eps.
      if (cs < 0.5 * total) {
        feasible = false;
        break;
      }
      const double scale = 1.0 / std::sqrt(total);
      for (std::size_t j = 0; j < n; ++j) {
        stable_part(i, j) *= scale;
        eps_part(i, j) *= scale;
      }
      for (std::size_t k = 0; k < m0; ++k) pi(i, k) *= scale;
    }
    if (!feasible) continue;

    // Seeded solution with components in both the stable span and the
    // kernel-bound span, so the right-hand side exercises the hard
    // directions.
    const Vector g_coef = rng.normal_vector(r);
    const Vector h_coef = rng.normal_vector(m - r);
    Vector x_dagger = matvec(v0, g_coef) + matvec(vplus, h_coef);

    NearSingularFamily fam;
    fam.m0 = m0;
    fam.eps_bar = eps_max;
    fam.eps_grid = spec.eps_grid;
    fam.pi = pi;
    fam.a0 = [a0](double) { return a0; };
    fam.a1 = [stable_part, eps_part, m1, n](double eps) {
      DenseMatrix a1(m1, n);
      for (std::size_t i = 0; i < m1; ++i)
        for (std::size_t j = 0; j < n; ++j)
          a1(i, j) = stable_part(i, j) + eps * eps_part(i, j);
      return a1;
    };
    fam.rhs = [fam, x_dagger](double eps) {
      return matvec(fam.matrix(eps), x_dagger);
    };
    return {std::move(fam), std::move(x_dagger)};
  }
  throw std::runtime_error("gen_random: no feasible sample after 64 attempts");
}

inline NearSingularFamily gen_random(const GeneratorSpec& spec) {
  return gen_random_with_solution(spec).first;
}

struct SvdDampedFamily {
  NearSingularFamily family;
  std::vector<std::size_t> row_order;  // family row i = source row row_order[i]
  Vector x_dagger;
};

/// Damp the damp_count smallest singular values of a full-row-rank matrix
/// by eps. Rows are reordered once, by descending alignment with the span
/// of the undamped right singular vectors, and the first m - damp_count
/// rows form the A0 block.
inline SvdDampedFamily gen_svd_damped(const DenseMatrix& a,
                                      std::size_t damp_count,
                                      std::vector<double> eps_grid,
                                      std::uint64_t seed) {
  detail::validate_grid(eps_grid);
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  detail::require(m >= 2 && m <= n, "gen_svd_damped: needs 2 <= rows <= cols");
  SvdResult f = svd(a);
  detail::require(f.rank() == m, "gen_svd_damped: matrix not full row rank");
  detail::require(damp_count >= 1 && damp_count < m,
                  "gen_svd_damped: damp_count out of range");

  const std::size_t m0 = m - damp_count;
  // Alignment of each source row with the span of the kept right singular
  // vectors.
  DenseMatrix v_keep(n, m0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m0; ++j) v_keep(i, j) = f.v(i, j);
  std::vector<double> score(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vector ri(n);
    for (std::size_t j = 0; j < n; ++j) ri[j] = a(i, j);
    score[i] = norm(matvec_transposed(v_keep, ri)) / norm(ri);
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t p, std::size_t q) { return score[p] > score[q]; });

  Rng rng(seed);
  const Vector coef = rng.normal_vector(m);
  Vector x_dagger(n);  // in row(A(eps)) for every eps > 0
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < n; ++j) x_dagger[j] += coef[k] * f.v(j, k);

  const Vector sig = f.sigma;
  const DenseMatrix u = f.u, v = f.v;
  auto assemble = [u, sig, v, order, m, n,
                   damp_count](double eps, std::size_t r0, std::size_t r1) {
    Vector sig_eps(m);
    for (std::size_t k = 0; k < m; ++k)
      sig_eps[k] = (k >= m - damp_count) ? eps * sig[k] : sig[k];
    DenseMatrix block(r1 - r0, n);
    for (std::size_t i = r0; i < r1; ++i) {
      const std::size_t src = order[i];
      for (std::size_t j = 0; j < n; ++j) {
        long double s = 0.0L;
        for (std::size_t k = 0; k < m; ++k)
          s += (long double)u(src, k) * sig_eps[k] * v(j, k);
        block(i - r0, j) = (double)s;
      }
    }
    return block;
  };

  SvdDampedFamily out;
  out.row_order = order;
  out.x_dagger = x_dagger;
  NearSingularFamily& fam = out.family;
  fam.m0 = m0;
  fam.eps_bar = std::max(1.0, eps_grid.front());
  fam.eps_grid = std::move(eps_grid);
  fam.a0 = [assemble, m0](double eps) { return assemble(eps, 0, m0); };
  fam.a1 = [assemble, m0, m](double eps) { return assemble(eps, m0, m); };
  fam.rhs = [fam, x_dagger](double eps) {
    return matvec(fam.matrix(eps), x_dagger);
  };
  fam.pi = recovered_pi(fam);
  return out;
}

/// Dispatch on the generator kind; SvdDamped reads its source matrix from
/// spec.source_path.
inline NearSingularFamily make_family(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorKind::Motivating2x2:
      return gen_motivating(spec.eps_grid);
    case GeneratorKind::Tridiagonal3x3:
      return gen_tridiagonal(spec.eps_grid);
    case GeneratorKind::RandomNearlySingular:
      return gen_random(spec);
    case GeneratorKind::SvdDamped: {
      detail::require(!spec.source_path.empty(),
                      "make_family: svd_damped needs source_path");
      const DenseMatrix a = matrix_market_read(spec.source_path);
      return gen_svd_damped(a, spec.damp_count, spec.eps_grid, spec.seed)
          .family;
    }
  }
  throw std::invalid_argument("make_family: unknown generator kind");
}

/// Default grids matching the reported experiments.
inline std::vector<double> default_eps_grid(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Motivating2x2:
    case GeneratorKind::Tridiagonal3x3:
      return {1.0 / 5, 1.0 / 25, 1.0 / 125, 1.0 / 625};
    case GeneratorKind::RandomNearlySingular:
      return {1.0 / 3, 1.0 / 9, 1.0 / 27, 1.0 / 81, 1.0 / 243};
    case GeneratorKind::SvdDamped:
      return {1.0 / 2, 1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  }
  throw std::invalid_argument("default_eps_grid: unknown kind");
}

}  // namespace kaug
