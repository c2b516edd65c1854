#pragma once

// Observables on state vectors: one-body density, occupations, IPRs,
// occupation-density distributions, reciprocal-Fock states and the
// critical-hopping extractor.
//
// Periodic chains use the real cos/sin mode basis of reciprocal_modes() for
// every state-vector construction. Reciprocal *occupations* are reported in
// the complex-mode convention <b+_q b_q>, q = k+1; for a real state the two
// members of a degenerate {q, L-q} pair each carry half of the pair's total.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bosehub/errors.hpp"
#include "bosehub/fock.hpp"
#include "bosehub/hamil.hpp"
#include "bosehub/modes.hpp"

namespace bosehub::analysis {

inline constexpr std::size_t kReciprocalDimensionCap = 5000;

inline double norm2(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

inline void require_state(std::span<const double> psi, const SectorBasis& basis, const char* who) {
  if (psi.size() != basis.dimension())
    throw std::domain_error(std::string(who) + ": state length does not match basis dimension");
  if (std::abs(norm2(psi) - 1.0) > 1e-8) throw std::domain_error(std::string(who) + ": state is not unit-norm");
}

// rho(l, m) = <a+_l a_m>
inline Eigen::MatrixXd one_body_density(std::span<const double> psi, const SectorBasis& basis) {
  require_state(psi, basis, "one_body_density");
  const int L = basis.sites();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(L, L);
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    if (psi[i] == 0) continue;
    auto s = basis.state(i);
    for (int l = 0; l < L; ++l) {
      rho(l, l) += psi[i] * psi[i] * s[l];
      for (int m = 0; m < L; ++m) {
        if (m == l || s[m] == 0) continue;
        // a+_l a_m |i> = amp |j>, contributing psi_j psi_i amp
        auto h = basis.hop(i, m, l);
        rho(l, m) += psi[h->first] * psi[i] * h->second;
      }
    }
  }
  return rho;
}

inline std::vector<double> site_occupations(std::span<const double> psi, const SectorBasis& basis) {
  if (psi.size() != basis.dimension()) throw std::domain_error("site_occupations: dimension mismatch");
  std::vector<double> occ(basis.sites(), 0.0);
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    auto s = basis.state(i);
    for (int l = 0; l < basis.sites(); ++l) occ[l] += psi[i] * psi[i] * s[l];
  }
  return occ;
}

// <eta_k> from the one-body density (open: (F rho F^T)_kk; periodic: complex modes).
inline std::vector<double> mode_occupations(const Eigen::MatrixXd& rho, Boundary b) {
  const int L = static_cast<int>(rho.rows());
  std::vector<double> occ(L, 0.0);
  if (b == Boundary::open) {
    const Eigen::MatrixXd F = pert::reciprocal_modes(L, b);
    const Eigen::MatrixXd m = F * rho * F.transpose();
    for (int k = 0; k < L; ++k) occ[k] = m(k, k);
    return occ;
  }
  const double pi = std::numbers::pi;
  for (int k = 0; k < L; ++k) {
    double acc = 0;
    for (int l = 0; l < L; ++l)
      for (int m = 0; m < L; ++m) acc += rho(l, m) * std::cos(2 * pi * (l - m) * (k + 1) / L);
    occ[k] = acc / L;
  }
  return occ;
}

// Real cos/sin-mode occupations -> complex-mode convention (pair average).
inline std::vector<double> pair_average(std::span<const double> real_mode_occ, Boundary b) {
  std::vector<double> out(real_mode_occ.begin(), real_mode_occ.end());
  if (b == Boundary::open) return out;
  const int L = static_cast<int>(out.size());
  for (int q = 1; 2 * q < L; ++q) {
    const double avg = 0.5 * (real_mode_occ[q - 1] + real_mode_occ[L - q - 1]);
    out[q - 1] = out[L - q - 1] = avg;
  }
  return out;
}

// P = [N^2 / sum_m <n_m>^2 - 1] / (L - 1)
inline double ipr_from_occupations(std::span<const double> occ, int N) {
  const auto L = occ.size();
  if (L < 2) throw std::domain_error("ipr: L must be >= 2");
  double s = 0;
  for (double n : occ) s += n * n;
  return (double(N) * N / s - 1.0) / double(L - 1);
}

enum class Space { spatial, reciprocal };

inline double ipr(std::span<const double> psi, const SectorBasis& basis, Space space, Boundary b) {
  if (basis.sites() < 2) throw std::domain_error("ipr: L must be >= 2");
  if (space == Space::spatial) {
    require_state(psi, basis, "ipr");
    return ipr_from_occupations(site_occupations(psi, basis), basis.bosons());
  }
  return ipr_from_occupations(mode_occupations(one_body_density(psi, basis), b), basis.bosons());
}

// p_n = probability of n bosons on `site`, n = 0..N
inline std::vector<double> occupation_density(std::span<const double> psi, const SectorBasis& basis, int site) {
  if (site < 0 || site >= basis.sites()) throw std::domain_error("occupation_density: site out of range");
  if (psi.size() != basis.dimension()) throw std::domain_error("occupation_density: dimension mismatch");
  std::vector<double> p(basis.bosons() + 1, 0.0);
  for (std::size_t i = 0; i < basis.dimension(); ++i) p[basis.state(i)[site]] += psi[i] * psi[i];
  return p;
}

// ---------------------------------------------------------------------------
// Creation operators with arbitrary real orbitals

// Bases for 0..N bosons on L sites.
class BasisLadder {
public:
  BasisLadder(int L, int N) {
    if (N < 0) throw std::domain_error("BasisLadder: N must be >= 0");
    levels_.reserve(N + 1);
    for (int n = 0; n <= N; ++n) levels_.emplace_back(L, n);
  }
  const SectorBasis& operator[](int n) const { return levels_.at(n); }
  int top() const { return static_cast<int>(levels_.size()) - 1; }
  int sites() const { return levels_.front().sites(); }

private:
  std::vector<SectorBasis> levels_;
};

// (sum_l phi_l a+_l) psi, mapping the n-boson sector `from` into `to`.
inline std::vector<double> apply_creation(const SectorBasis& from, std::span<const double> psi, const SectorBasis& to,
                                          std::span<const double> phi) {
  const int L = from.sites();
  if (to.sites() != L || to.bosons() != from.bosons() + 1 || static_cast<int>(phi.size()) != L)
    throw std::domain_error("apply_creation: incompatible sectors or orbital");
  std::vector<double> out(to.dimension(), 0.0);
  FockState t(L);
  for (std::size_t i = 0; i < from.dimension(); ++i) {
    if (psi[i] == 0) continue;
    auto s = from.state(i);
    std::copy(s.begin(), s.end(), t.begin());
    for (int l = 0; l < L; ++l) {
      if (phi[l] == 0) continue;
      ++t[l];
      out[to.rank(t)] += psi[i] * phi[l] * std::sqrt(double(t[l]));
      --t[l];
    }
  }
  return out;
}

struct OrbitalPower {
  std::vector<double> orbital;
  int count = 0;
};

// prod_j (A+_{phi_j})^{n_j} / sqrt(n_j!) |vac>, in the top sector of `ladder`.
inline std::vector<double> product_state(const BasisLadder& ladder, const std::vector<OrbitalPower>& factors) {
  int total = 0;
  for (auto& f : factors) {
    if (f.count < 0) throw std::domain_error("product_state: negative count");
    total += f.count;
  }
  if (total != ladder.top()) throw std::domain_error("product_state: occupations do not sum to N");
  std::vector<double> v{1.0};
  int n = 0;
  for (auto& f : factors) {
    double fact = 1;
    for (int c = 1; c <= f.count; ++c) {
      v = apply_creation(ladder[n], v, ladder[n + 1], f.orbital);
      ++n;
      fact *= c;
    }
    const double s = 1.0 / std::sqrt(fact);
    for (auto& x : v) x *= s;
  }
  return v;
}

// |eta_1, ..., eta_L> in the position basis.
inline std::vector<double> reciprocal_fock_vector(const SectorBasis& basis, std::span<const int> eta, Boundary b) {
  const int L = basis.sites();
  if (static_cast<int>(eta.size()) != L) throw std::domain_error("reciprocal_fock_vector: eta has wrong length");
  int total = 0;
  for (int e : eta) {
    if (e < 0) throw std::domain_error("reciprocal_fock_vector: negative mode occupation");
    total += e;
  }
  if (total != basis.bosons()) throw std::domain_error("reciprocal_fock_vector: mode occupations do not sum to N");
  const Eigen::MatrixXd F = pert::reciprocal_modes(L, b);
  BasisLadder ladder(L, basis.bosons());
  std::vector<OrbitalPower> factors;
  for (int k = 0; k < L; ++k) {
    if (eta[k] == 0) continue;
    std::vector<double> row(L);
    for (int l = 0; l < L; ++l) row[l] = F(k, l);
    factors.push_back({std::move(row), eta[k]});
  }
  return product_state(ladder, factors);
}

namespace detail {

inline Eigen::MatrixXd build_reciprocal_matrix(int L, int N, Boundary b) {
  const Eigen::MatrixXd F = pert::reciprocal_modes(L, b);
  BasisLadder ladder(L, N);
  Eigen::MatrixXd prev = Eigen::MatrixXd::Ones(1, 1);
  for (int n = 1; n <= N; ++n) {
    const SectorBasis& lo = ladder[n - 1];
    const SectorBasis& hi = ladder[n];
    Eigen::MatrixXd cur(hi.dimension(), hi.dimension());
    FockState parent(L);
    std::vector<double> row(L);
    for (std::size_t j = 0; j < hi.dimension(); ++j) {
      auto eta = hi.state(j);
      std::copy(eta.begin(), eta.end(), parent.begin());
      int k = 0;
      while (eta[k] == 0) ++k;
      --parent[k];
      const auto p = static_cast<Eigen::Index>(lo.rank(parent));
      for (int l = 0; l < L; ++l) row[l] = F(k, l);
      auto col = apply_creation(lo, std::span<const double>(prev.col(p).data(), lo.dimension()), hi, row);
      const double s = 1.0 / std::sqrt(double(eta[k]));
      for (std::size_t i = 0; i < col.size(); ++i) cur(Eigen::Index(i), Eigen::Index(j)) = col[i] * s;
    }
    prev = std::move(cur);
  }
  return prev;
}

}  // namespace detail

// Column j = reciprocal Fock state whose mode occupations are basis.state(j).
// Orthogonal; cached per (L, N, boundary).
inline std::shared_ptr<const Eigen::MatrixXd> reciprocal_fock_matrix(int L, int N, Boundary b) {
  if (basis_size(L, N) > kReciprocalDimensionCap)
    throw CapacityError("reciprocal expansion: dimension " + std::to_string(basis_size(L, N)) + " exceeds cap " +
                        std::to_string(kReciprocalDimensionCap));
  using Key = std::tuple<int, int, int>;
  static std::shared_mutex mutex;
  static std::map<Key, std::shared_ptr<const Eigen::MatrixXd>> cache;
  const Key key{L, N, static_cast<int>(b)};
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const Eigen::MatrixXd>(detail::build_reciprocal_matrix(L, N, b));
  std::unique_lock lock(mutex);
  return cache.emplace(key, std::move(built)).first->second;
}

// Amplitudes of psi in the reciprocal Fock basis (same index order as `basis`).
inline Eigen::VectorXd reciprocal_amplitudes(std::span<const double> psi, const SectorBasis& basis, Boundary b) {
  if (psi.size() != basis.dimension()) throw std::domain_error("reciprocal_amplitudes: dimension mismatch");
  auto R = reciprocal_fock_matrix(basis.sites(), basis.bosons(), b);
  Eigen::Map<const Eigen::VectorXd> v(psi.data(), Eigen::Index(psi.size()));
  return R->transpose() * v;
}

// Per-mode distribution p_n (real cos/sin modes for periodic chains).
inline std::vector<double> occupation_density_reciprocal(std::span<const double> psi, const SectorBasis& basis, int mode,
                                                         Boundary b) {
  if (mode < 0 || mode >= basis.sites()) throw std::domain_error("occupation_density_reciprocal: mode out of range");
  const Eigen::VectorXd chi = reciprocal_amplitudes(psi, basis, b);
  std::vector<double> p(basis.bosons() + 1, 0.0);
  for (std::size_t j = 0; j < basis.dimension(); ++j) p[basis.state(j)[mode]] += chi[Eigen::Index(j)] * chi[Eigen::Index(j)];
  return p;
}

// Mode occupations from the full expansion (complex-mode convention, as mode_occupations).
inline std::vector<double> mode_occupations_expanded(std::span<const double> psi, const SectorBasis& basis, Boundary b) {
  const Eigen::VectorXd chi = reciprocal_amplitudes(psi, basis, b);
  std::vector<double> occ(basis.sites(), 0.0);
  for (std::size_t j = 0; j < basis.dimension(); ++j) {
    auto eta = basis.state(j);
    const double w = chi[Eigen::Index(j)] * chi[Eigen::Index(j)];
    for (int k = 0; k < basis.sites(); ++k) occ[k] += w * eta[k];
  }
  return pair_average(occ, b);
}

// |<psi|phi>|^2
inline double overlap(std::span<const double> psi, std::span<const double> phi) {
  if (psi.size() != phi.size()) throw std::domain_error("overlap: states live in different bases");
  if (std::abs(norm2(psi) - 1) > 1e-8 || std::abs(norm2(phi) - 1) > 1e-8)
    throw std::domain_error("overlap: states must be unit-norm");
  double d = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) d += psi[i] * phi[i];
  return std::min(1.0, d * d);
}

// dP/dtau on a non-uniform grid: second-order central differences inside,
// one-sided at the ends.
inline std::vector<double> gradient(std::span<const double> x, std::span<const double> f) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  d[0] = (f[1] - f[0]) / (x[1] - x[0]);
  d[n - 1] = (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    d[i] = (hl * hl * f[i + 1] - hr * hr * f[i - 1] + (hr * hr - hl * hl) * f[i]) / (hl * hr * (hl + hr));
  }
  return d;
}

// argmax |dP/dtau|; ties resolved toward the smaller tau.
inline double critical_tau(std::span<const double> tau, std::span<const double> P) {
  if (tau.size() != P.size()) throw std::domain_error("critical_tau: grid and values differ in length");
  if (tau.size() < 5) throw std::domain_error("critical_tau: need at least 5 grid points");
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (!(tau[i] > tau[i - 1])) throw std::domain_error("critical_tau: grid must be strictly ascending");
  const auto d = gradient(tau, P);
  double best = 0;
  for (double v : d) best = std::max(best, std::abs(v));
  for (std::size_t i = 0; i < d.size(); ++i)
    if (std::abs(d[i]) >= best * (1 - 1e-12)) return tau[i];
  return tau.front();
}

// ---------------------------------------------------------------------------

struct ObservableSet {
  double energy_scaled = 0;
  double ipr_s = 0;
  double ipr_r = 0;
  std::vector<double> occupations_s;
  std::vector<double> occupations_r;
  std::map<std::string, double> fidelities;
};

// `epsilon_unit` converts the eigenvalue to scaled units (U N (N-1)).
inline ObservableSet observe(std::span<const double> psi, const SectorBasis& basis, Boundary b, double energy,
                             double epsilon_unit) {
  ObservableSet o;
  o.energy_scaled = energy / epsilon_unit;
  const Eigen::MatrixXd rho = one_body_density(psi, basis);
  o.occupations_s.resize(basis.sites());
  for (int l = 0; l < basis.sites(); ++l) o.occupations_s[l] = rho(l, l);
  o.occupations_r = mode_occupations(rho, b);
  o.ipr_s = ipr_from_occupations(o.occupations_s, basis.bosons());
  o.ipr_r = ipr_from_occupations(o.occupations_r, basis.bosons());
  return o;
}

}  // namespace bosehub::analysis
