#pragma once

// Extremal eigenpairs of a real symmetric SparseOperator.
//
// ground_state() is a thick-restart Lanczos iteration with full
// reorthogonalisation: each cycle grows a Krylov basis to `krylov_dim`
// vectors, solves the projected problem, keeps the `keep` lowest Ritz vectors
// plus the residual direction, and starts over. Because the kept Ritz
// vectors stay in the next search space, the lowest Ritz value can only go
// down from one restart to the next.
//
// dense_spectrum() is a full diagonalisation used as a reference oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bosehub/errors.hpp"
#include "bosehub/hamil.hpp"

namespace bosehub {

struct LanczosOptions {
  double tol = 1e-10;       // absolute bound on ||H psi - E psi||
  int krylov_dim = 30;
  int keep = 10;            // Ritz vectors carried across a restart
  int max_restarts = 200;
  std::uint64_t seed = 0x5eedULL;
  std::vector<double> start;  // optional start vector; overrides `seed`
};

struct EigenResult {
  double energy = 0;
  std::vector<double> vector;
  double residual = 0;
  int iterations = 0;  // matrix-vector products
  int restarts = 0;
  std::vector<double> history;  // lowest Ritz value after every cycle
};

namespace detail {

inline Eigen::VectorXd random_unit_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 2.0 * unit_uniform(rng) - 1.0;
  return v / v.norm();
}

// Orthogonalise w against the first `cols` columns of V, twice.
inline void orthogonalize(const Eigen::MatrixXd& V, Eigen::Index cols, Eigen::VectorXd& w, Eigen::VectorXd* coeffs) {
  if (cols == 0) {
    if (coeffs) coeffs->resize(0);
    return;
  }
  Eigen::VectorXd h = V.leftCols(cols).transpose() * w;
  w.noalias() -= V.leftCols(cols) * h;
  Eigen::VectorXd h2 = V.leftCols(cols).transpose() * w;
  w.noalias() -= V.leftCols(cols) * h2;
  if (coeffs) *coeffs = h + h2;
}

inline void fix_phase(std::vector<double>& v) {
  if (v.empty()) return;
  auto it = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*it < 0)
    for (auto& x : v) x = -x;
}

}  // namespace detail

// Lowest eigenpair of the symmetric map `apply(x, y)` : y = A x.
template <class MatVec>
EigenResult lanczos_lowest(std::size_t dim, MatVec&& apply, const LanczosOptions& opt = {}) {
  if (dim == 0) throw std::domain_error("lanczos: empty operator");
  if (!(opt.tol > 0)) throw std::domain_error("lanczos: tol must be > 0");
  using Eigen::Index;
  const Index n = static_cast<Index>(dim);
  const Index m = std::min<Index>(std::max(opt.krylov_dim, 2), n);
  const Index keep_max = std::clamp<Index>(opt.keep, 1, std::max<Index>(m - 2, 1));

  EigenResult out;
  Eigen::MatrixXd V(n, m);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd w(n), h;
  if (opt.start.empty()) {
    V.col(0) = detail::random_unit_vector(dim, opt.seed);
  } else {
    if (opt.start.size() != dim) throw std::domain_error("lanczos: start vector has wrong length");
    V.col(0) = Eigen::Map<const Eigen::VectorXd>(opt.start.data(), n);
    if (!(V.col(0).norm() > 0)) throw std::domain_error("lanczos: start vector is zero");
    V.col(0).normalize();
  }

  auto matvec = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    apply(std::span<const double>(x.data(), dim), std::span<double>(y.data(), dim));
    ++out.iterations;
  };

  Index locked = 0;  // leading columns of V that are Ritz vectors with diagonal T
  double best_residual = std::numeric_limits<double>::infinity();
  double last_improvement = best_residual;
  int stagnant = 0;
  std::uint64_t reseed = opt.seed;

  for (int cycle = 0; cycle <= opt.max_restarts; ++cycle) {
    out.restarts = cycle;
    Index filled = m;  // columns actually used this cycle
    double beta = 0;
    Eigen::VectorXd r;
    double anorm = 1.0;
    for (Index i = 0; i < locked; ++i) anorm = std::max(anorm, std::abs(T(i, i)));

    for (Index j = locked; j < m; ++j) {
      Eigen::VectorXd vj = V.col(j);
      matvec(vj, w);
      detail::orthogonalize(V, j + 1, w, &h);
      T.block(0, j, j + 1, 1) = h;
      T.block(j, 0, 1, j + 1) = h.transpose();
      anorm = std::max(anorm, std::abs(h[j]));
      beta = w.norm();
      if (j + 1 == m) {
        r = w;
        break;
      }
      if (beta <= 1e-13 * anorm) {
        // Invariant subspace; continue with a fresh direction if one exists.
        reseed = mix64(reseed);
        Eigen::VectorXd fresh = detail::random_unit_vector(dim, reseed);
        detail::orthogonalize(V, j + 1, fresh, nullptr);
        const double fn = fresh.norm();
        if (fn <= 1e-8) {
          filled = j + 1;
          beta = 0;
          r = Eigen::VectorXd::Zero(n);
          break;
        }
        V.col(j + 1) = fresh / fn;
      } else {
        V.col(j + 1) = w / beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T.topLeftCorner(filled, filled));
    const Eigen::VectorXd& theta = small.eigenvalues();
    const Eigen::MatrixXd& S = small.eigenvectors();
    out.history.push_back(theta[0]);

    const double estimate = std::abs(beta * S(filled - 1, 0));
    if (estimate <= opt.tol || filled < m || filled == n) {
      Eigen::VectorXd y = V.leftCols(filled) * S.col(0);
      y.normalize();
      Eigen::VectorXd Hy(n);
      matvec(y, Hy);
      const double energy = y.dot(Hy);
      const double residual = (Hy - energy * y).norm();
      best_residual = std::min(best_residual, residual);
      if (residual <= opt.tol) {
        out.energy = energy;
        out.residual = residual;
        out.vector.assign(y.data(), y.data() + n);
        detail::fix_phase(out.vector);
        return out;
      }
    }
    best_residual = std::min(best_residual, estimate);
    if (best_residual < 0.9 * last_improvement) {
      last_improvement = best_residual;
      stagnant = 0;
    } else {
      ++stagnant;
    }
    if (cycle == opt.max_restarts) break;

    // Thick restart: lowest Ritz vectors first, then the residual direction.
    const Index kept = std::min<Index>(keep_max, filled - 1);
    Eigen::MatrixXd Y = V.leftCols(filled) * S.leftCols(kept);
    V.leftCols(kept) = Y;
    T.setZero();
    for (Index i = 0; i < kept; ++i) T(i, i) = theta[i];
    Eigen::VectorXd next;
    if (stagnant >= 25 || beta <= 1e-13 * anorm) {
      // Stalled (e.g. start vector blind to the ground state): inject a new direction.
      reseed = mix64(reseed ^ 0x9e3779b97f4a7c15ULL);
      next = detail::random_unit_vector(dim, reseed);
      stagnant = 0;
    } else {
      next = r;
    }
    detail::orthogonalize(V, kept, next, nullptr);
    const double next_norm = next.norm();
    if (next_norm <= 1e-8) break;  // search space already complete; tol is below rounding
    V.col(kept) = next / next_norm;
    locked = kept;
  }
  throw ConvergenceError("lanczos: no convergence after " + std::to_string(opt.max_restarts) +
                             " restarts (best residual " + std::to_string(best_residual) + ")",
                         best_residual);
}

inline EigenResult ground_state(const SparseOperator& H, const LanczosOptions& opt = {}) {
  return lanczos_lowest(
      H.dimension(), [&](std::span<const double> x, std::span<double> y) { H.apply(x, y); }, opt);
}

// Highest eigenpair, via the lowest eigenpair of -H.
inline EigenResult most_excited_state(const SparseOperator& H, const LanczosOptions& opt = {}) {
  EigenResult r = lanczos_lowest(
      H.dimension(),
      [&](std::span<const double> x, std::span<double> y) {
        H.apply(x, y);
        for (auto& v : y) v = -v;
      },
      opt);
  r.energy = -r.energy;
  for (auto& e : r.history) e = -e;
  return r;
}

// ---------------------------------------------------------------------------

inline constexpr std::size_t kDenseDimensionCap = 4000;

struct DenseSpectrum {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns; empty unless requested
};

inline Eigen::MatrixXd to_dense(const SparseOperator& H) {
  if (H.dimension() > kDenseDimensionCap)
    throw CapacityError("to_dense: dimension " + std::to_string(H.dimension()) + " exceeds dense cap");
  const auto n = static_cast<Eigen::Index>(H.dimension());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  H.for_each([&](std::size_t i, std::size_t j, double v) { A(Eigen::Index(i), Eigen::Index(j)) = v; });
  return A;
}

inline DenseSpectrum dense_spectrum(const SparseOperator& H, bool with_vectors = false) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(H), with_vectors ? Eigen::ComputeEigenvectors
                                                                               : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense_spectrum: eigensolver failed");
  DenseSpectrum out{es.eigenvalues(), {}};
  if (with_vectors) out.vectors = es.eigenvectors();
  return out;
}

}  // namespace bosehub
