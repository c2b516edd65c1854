#pragma once

// Disordered attractive Bose-Hubbard Hamiltonian
//
//   H/hbar = sum_l [ w_l n_l - (U/2) n_l (n_l - 1) + J (a+_{l+1} a_l + a+_l a_{l+1}) ]
//
// assembled as a real symmetric CSR matrix in a SectorBasis. U > 0 is
// attractive. Open chains drop the (L,1) bond; periodic chains keep it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bosehub/errors.hpp"
#include "bosehub/fock.hpp"

namespace bosehub {

enum class Boundary { open, periodic };

inline std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

inline Boundary parse_boundary(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw std::invalid_argument("unknown boundary '" + s + "' (expected open|periodic)");
}

struct ModelParams {
  int L = 0;
  int N = 0;
  double U = 1.0;
  double J = 0.0;
  Boundary boundary = Boundary::open;
  std::vector<double> omega;  // per-site detunings, length L

  // Physical-range check (L>=1, N>=1, U>0, J>=0, |omega|=L). The builder
  // itself accepts any real U and J so that the sign symmetries can be probed.
  void validate() const {
    if (L < 1) throw std::domain_error("ModelParams: L must be >= 1");
    if (N < 1) throw std::domain_error("ModelParams: N must be >= 1");
    if (!(U > 0)) throw std::domain_error("ModelParams: U must be > 0");
    if (!(J >= 0)) throw std::domain_error("ModelParams: J must be >= 0");
    if (static_cast<int>(omega.size()) != L) throw std::domain_error("ModelParams: omega must have length L");
  }
};

// Dimensionless view: energies in units of hbar U N (N-1).
struct ScaledParams {
  double tau = 0;
  double delta = 0;
  std::vector<double> sigma;
  double epsilon_unit = 0;  // U N (N-1)

  double to_scaled_energy(double E) const { return E / epsilon_unit; }
};

inline ScaledParams scale(const ModelParams& p, double D) {
  if (p.N < 2) throw std::domain_error("scale: N must be >= 2 (energy unit U(N-1) vanishes)");
  const double unit = p.U * (p.N - 1);
  ScaledParams s;
  s.tau = p.J / unit;
  s.delta = D / unit;
  s.sigma.reserve(p.omega.size());
  for (double w : p.omega) s.sigma.push_back(w / unit);
  s.epsilon_unit = p.U * p.N * (p.N - 1);
  return s;
}

// Physical parameters for a scaled point, using U = 1.
inline ModelParams params_from_scaled(int L, int N, Boundary b, double tau, std::span<const double> sigma) {
  ModelParams p;
  p.L = L;
  p.N = N;
  p.U = 1.0;
  p.J = tau * (N - 1);
  p.boundary = b;
  p.omega.reserve(sigma.size());
  for (double s : sigma) p.omega.push_back(s * (N - 1));
  return p;
}

// ---------------------------------------------------------------------------
// Disorder sampling

// SplitMix64 finaliser; used to key independent streams by (seed, a, b).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// L independent draws from U(-D, D). The mean is not subtracted.
inline std::vector<double> sample_disorder(int L, double D, std::uint64_t seed) {
  if (!(D >= 0)) throw std::domain_error("sample_disorder: D must be >= 0");
  std::vector<double> omega(L, 0.0);
  if (D == 0) return omega;
  std::mt19937_64 rng(seed);
  for (auto& w : omega) w = D * (2.0 * unit_uniform(rng) - 1.0);
  return omega;
}

// ---------------------------------------------------------------------------
// Sparse storage

class SparseOperator {
public:
  SparseOperator() = default;

  // Rows given as (column, value) lists; duplicates are summed, zeros kept out.
  static SparseOperator from_rows(std::size_t dim, std::vector<std::vector<std::pair<std::size_t, double>>> rows) {
    SparseOperator op;
    op.dim_ = dim;
    op.row_ptr_.reserve(dim + 1);
    for (auto& row : rows) {
      std::sort(row.begin(), row.end(), [](auto& a, auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < row.size();) {
        std::size_t col = row[k].first;
        if (col >= dim) throw std::domain_error("SparseOperator: column index out of range");
        double v = 0;
        for (; k < row.size() && row[k].first == col; ++k) v += row[k].second;
        if (v != 0) {
          op.cols_.push_back(static_cast<std::uint32_t>(col));
          op.vals_.push_back(v);
        }
      }
      op.row_ptr_.push_back(op.cols_.size());
    }
    return op;
  }

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t nonzeros() const noexcept { return vals_.size(); }

  // y = A x
  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < dim_; ++i) {
      double acc = 0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += vals_[k] * x[cols_[k]];
      y[i] = acc;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(dim_);
    apply(x, y);
    return y;
  }

  double at(std::size_t i, std::size_t j) const {
    auto first = cols_.begin() + row_ptr_[i];
    auto last = cols_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
    return (it != last && *it == j) ? vals_[it - cols_.begin()] : 0.0;
  }

  bool is_symmetric(double tol = 1e-12) const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (std::abs(vals_[k] - at(cols_[k], i)) > tol) return false;
    return true;
  }

  double expectation(std::span<const double> psi) const {
    double acc = 0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += psi[i] * vals_[k] * psi[cols_[k]];
    return acc;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) f(i, std::size_t(cols_[k]), vals_[k]);
  }

  SparseOperator operator-() const {
    SparseOperator r = *this;
    for (auto& v : r.vals_) v = -v;
    return r;
  }

private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
};

// Nearest-neighbour bonds (l, l+1); periodic chains add (L-1, 0) for L >= 3.
inline std::vector<std::pair<int, int>> chain_bonds(int L, Boundary b) {
  std::vector<std::pair<int, int>> bonds;
  for (int l = 0; l + 1 < L; ++l) bonds.emplace_back(l, l + 1);
  if (b == Boundary::periodic) {
    if (L < 3) throw std::domain_error("periodic chain requires L >= 3");
    bonds.emplace_back(L - 1, 0);
  }
  return bonds;
}

inline SparseOperator build_hamiltonian(const ModelParams& p, const SectorBasis& basis) {
  if (basis.sites() != p.L || basis.bosons() != p.N)
    throw std::domain_error("build_hamiltonian: basis does not match (L, N)");
  if (static_cast<int>(p.omega.size()) != p.L) throw std::domain_error("build_hamiltonian: omega must have length L");
  const auto bonds = chain_bonds(p.L, p.boundary);
  const std::size_t dim = basis.dimension();
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    auto s = basis.state(i);
    double diag = 0;
    for (int l = 0; l < p.L; ++l) diag += p.omega[l] * s[l] - 0.5 * p.U * s[l] * (s[l] - 1);
    auto& row = rows[i];
    row.reserve(2 * bonds.size() + 1);
    row.emplace_back(i, diag);
    if (p.J == 0) continue;
    for (auto [a, b] : bonds) {
      // H is symmetric, so <j|H|i> from hopping out of |i> fills row i too.
      if (auto h = basis.hop(i, a, b)) row.emplace_back(h->first, p.J * h->second);
      if (auto h = basis.hop(i, b, a)) row.emplace_back(h->first, p.J * h->second);
    }
  }
  return SparseOperator::from_rows(dim, std::move(rows));
}

inline SparseOperator number_operator(const SectorBasis& basis, int site) {
  if (site < 0 || site >= basis.sites()) throw std::domain_error("number_operator: site out of range");
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(basis.dimension());
  for (std::size_t i = 0; i < basis.dimension(); ++i) rows[i].emplace_back(i, double(basis.state(i)[site]));
  return SparseOperator::from_rows(basis.dimension(), std::move(rows));
}

// ---------------------------------------------------------------------------
// Matrix Market coordinate format (general, real); full storage is written.

inline void write_matrix_market(std::ostream& os, const SparseOperator& A) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.dimension() << ' ' << A.dimension() << ' ' << A.nonzeros() << '\n';
  os << std::setprecision(17);
  A.for_each([&](std::size_t i, std::size_t j, double v) { os << i + 1 << ' ' << j + 1 << ' ' << v << '\n'; });
}

inline SparseOperator read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("read_matrix_market: missing banner");
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream header(line);
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(header >> rows >> cols >> nnz) || rows != cols) throw std::runtime_error("read_matrix_market: bad size line");
  std::vector<std::vector<std::pair<std::size_t, double>>> entries(rows);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0;
    if (!(is >> i >> j >> v) || i == 0 || j == 0 || i > rows || j > cols)
      throw std::runtime_error("read_matrix_market: bad entry " + std::to_string(k + 1));
    entries[i - 1].emplace_back(j - 1, v);
  }
  return SparseOperator::from_rows(rows, std::move(entries));
}

}  // namespace bosehub
