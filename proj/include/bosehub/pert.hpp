#pragma once

// Perturbative states and energies for the localized, W and superfluid
// phases, and the phase-boundary curves built from them.
//
// Scaled units throughout: tau = J/U(N-1), delta = D/U(N-1),
// sigma = omega/U(N-1), epsilon = E/U N(N-1). State vectors come out
// normalised, in the position SectorBasis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bosehub/analysis.hpp"
#include "bosehub/errors.hpp"
#include "bosehub/fock.hpp"
#include "bosehub/hamil.hpp"
#include "bosehub/modes.hpp"

namespace bosehub::pert {

enum class Phase { localized, w, superfluid };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::localized: return "localized";
    case Phase::w: return "w";
    case Phase::superfluid: return "superfluid";
  }
  return "?";
}

struct PhaseEnergy {
  double epsilon = 0;
  int order = 2;
  Phase phase = Phase::localized;
  std::optional<std::string> warning;
};

// alpha(N) = [(N-1)^(N-1) / (N-1)!]^(1/N), evaluated in log space.
inline double alpha(int N) {
  if (N < 2) throw std::domain_error("alpha: N must be >= 2");
  const double m = N - 1;
  return std::exp((m * std::log(m) - std::lgamma(m + 1)) / N);
}

namespace detail {

inline void normalize(std::vector<double>& v) {
  const double n = std::sqrt(analysis::norm2(v));
  for (auto& x : v) x /= n;
}

inline int wrap(int site, int L, Boundary b) {
  if (b == Boundary::periodic) return (site % L + L) % L;
  return (site >= 0 && site < L) ? site : -1;
}

inline std::vector<int> neighbours(int site, int L, Boundary b) {
  std::vector<int> out;
  for (int d : {-1, +1})
    if (int m = wrap(site + d, L, b); m >= 0) out.push_back(m);
  return out;
}

inline double scaled_unit(const ModelParams& p) {
  if (p.N < 2) throw std::domain_error("perturbative states need N >= 2");
  if (!(p.U > 0)) throw std::domain_error("perturbative states need U > 0");
  return p.U * (p.N - 1);
}

// |n_l0 = N> + sum_m tau sqrt(N) / ((sigma_l0 - sigma_m) - 1) |n_l0 = N-1, n_m = 1>, unnormalised.
inline void add_localized(std::vector<double>& v, const SectorBasis& basis, Boundary b, double tau,
                          std::span<const double> sigma, int l0, double weight) {
  const int L = basis.sites(), N = basis.bosons();
  FockState s(L, 0);
  s[l0] = N;
  v[basis.rank(s)] += weight;
  for (int m : neighbours(l0, L, b)) {
    const double den = (sigma[l0] - sigma[m]) - 1.0;
    if (std::abs(den) < 1e-12)
      throw SingularityError("localized correction: resonant denominator between sites " + std::to_string(l0) +
                             " and " + std::to_string(m));
    FockState t(L, 0);
    t[l0] = N - 1;
    t[m] += 1;
    v[basis.rank(t)] += weight * tau * std::sqrt(double(N)) / den;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Localized phase

// Site with the lowest detuning (first one on ties).
inline int localized_ground_site(std::span<const double> sigma) {
  if (sigma.empty()) throw std::domain_error("localized_ground_site: empty disorder vector");
  return static_cast<int>(std::min_element(sigma.begin(), sigma.end()) - sigma.begin());
}

// Site with the lowest energy through second order, sigma_l + tau^2 sum_m 1/((sigma_l - sigma_m) - 1).
// At weak disorder this avoids the open-chain edges, which have one neighbour only.
inline int localized_ground_site(std::span<const double> sigma, double tau, Boundary b) {
  if (sigma.empty()) throw std::domain_error("localized_ground_site: empty disorder vector");
  const int L = static_cast<int>(sigma.size());
  int best = -1;
  double best_e = 0;
  for (int l = 0; l < L; ++l) {
    double e = sigma[l];
    bool resonant = false;
    for (int m : detail::neighbours(l, L, b)) {
      const double den = (sigma[l] - sigma[m]) - 1.0;
      if (std::abs(den) < 1e-12) resonant = true;
      e += tau * tau / den;
    }
    if (resonant) continue;
    if (best < 0 || e < best_e) {
      best = l;
      best_e = e;
    }
  }
  if (best < 0) throw SingularityError("localized_ground_site: every site has a resonant neighbour");
  return best;
}

inline std::vector<double> localized_state(const ModelParams& p, const SectorBasis& basis, int ell0) {
  if (basis.sites() != p.L || basis.bosons() != p.N) throw std::domain_error("localized_state: basis mismatch");
  if (ell0 < 0 || ell0 >= p.L) throw std::domain_error("localized_state: site out of range");
  const double unit = detail::scaled_unit(p);
  std::vector<double> sigma(p.omega.size());
  for (std::size_t l = 0; l < sigma.size(); ++l) sigma[l] = p.omega[l] / unit;
  std::vector<double> v(basis.dimension(), 0.0);
  detail::add_localized(v, basis, p.boundary, p.J / unit, sigma, ell0, 1.0);
  detail::normalize(v);
  return v;
}

// E^(0) + E^(2) for one disorder realization, scaled:
//   sigma_l0 - 1/2 + tau^2 sum_m 1 / ((sigma_l0 - sigma_m) - 1)
inline double localized_energy_realization(std::span<const double> sigma, double tau, Boundary b) {
  const int L = static_cast<int>(sigma.size());
  const int l0 = localized_ground_site(sigma);
  double e = sigma[l0] - 0.5;
  for (int m : detail::neighbours(l0, L, b)) {
    const double den = (sigma[l0] - sigma[m]) - 1.0;
    if (std::abs(den) < 1e-12) throw SingularityError("localized energy: resonant denominator");
    e += tau * tau / den;
  }
  return e;
}

// Disorder-averaged localized energy of the open chain:
//   -1/2 - delta (L-1)/(L+1) - 2 tau^2 (L-1)/L sum_{n=0}^{n_terms} (-1)^n L / ((n+1)(n+L)) (2 delta)^n
// n_terms = 1 is the closed second-order expression.
inline PhaseEnergy localized_energy_avg(double tau, double delta, int L, int n_terms = 1) {
  if (!(delta >= 0)) throw std::domain_error("localized_energy_avg: delta must be >= 0");
  if (n_terms < 1) throw std::domain_error("localized_energy_avg: n_terms must be >= 1");
  if (L < 1) throw std::domain_error("localized_energy_avg: L must be >= 1");
  double series = 0, x = 1;
  for (int n = 0; n <= n_terms; ++n) {
    series += (n % 2 ? -1.0 : 1.0) * L / double((n + 1) * (n + L)) * x;
    x *= 2 * delta;
  }
  PhaseEnergy e;
  e.phase = Phase::localized;
  e.epsilon = -0.5 - delta * (L - 1) / (L + 1) - 2 * tau * tau * (L - 1) / L * series;
  if (2 * delta >= 1 && n_terms > 1)
    e.warning = "localized series: 2*delta >= 1, partial sum of a non-convergent series";
  return e;
}

// ---------------------------------------------------------------------------
// W phase

struct KNCoefficients {
  double b = 0;
  double c = 0;
};

// Nth-order couplings of the degenerate manifold: off-diagonal b, boundary shift c.
inline KNCoefficients kN_coefficients(int N, double tau, double U = 1.0, Boundary bc = Boundary::open) {
  if (N < 2) throw std::domain_error("kN_coefficients: N must be >= 2");
  const double m = N - 1;
  const double tn = std::pow(tau, N);
  const double ratio = std::exp(m * std::log(m) - std::lgamma(m + 1));  // (N-1)^(N-1)/(N-1)!
  KNCoefficients k;
  k.b = -U * N * m * ratio * tn;
  k.c = U * N * m * tn;
  if (bc == Boundary::periodic) {
    k.b = U * N * m * ratio * tn * (N % 2 ? 1.0 : -1.0);  // (-1)^(N-1)
    k.c = 0;
  }
  return k;
}

enum class WCase {
  single_site,          // open, L <= 2 ceil(N/2), odd L
  two_site,             // open, L <= 2 ceil(N/2), even L
  odd_n,                // open, alternating sine
  n_two,                // open, N = 2 (c = |b|)
  even_n_c_zero,        // open, even N > 2, c set to zero
  even_n_exact_c,       // open, even N > 2, theta-root solution
  periodic_uniform,     // even N
  periodic_alternating, // odd N, even L
  periodic_degenerate,  // odd N, odd L: one member of a degenerate pair
};

inline std::string to_string(WCase c) {
  switch (c) {
    case WCase::single_site: return "single_site";
    case WCase::two_site: return "two_site";
    case WCase::odd_n: return "odd_n";
    case WCase::n_two: return "n_two";
    case WCase::even_n_c_zero: return "even_n_c_zero";
    case WCase::even_n_exact_c: return "even_n_exact_c";
    case WCase::periodic_uniform: return "periodic_uniform";
    case WCase::periodic_alternating: return "periodic_alternating";
    case WCase::periodic_degenerate: return "periodic_degenerate";
  }
  return "?";
}

struct WShape {
  int ell_s = 0;                      // first participating site is ell_s (0-based)
  int L_d = 0;                        // number of participating sites
  std::vector<double> coefficients;   // length L_d, unit norm
};

struct WState {
  std::vector<double> vector;
  WShape shape;
  WCase kind = WCase::odd_n;
  bool degenerate_pair = false;
};

struct WOptions {
  bool exact_c = false;  // even N > 2: use the theta-root profile instead of c = 0
};

// Smallest positive root of cos((L_d+1) t/2) + r cos((L_d-1) t/2), 0 <= r < 1.
inline double w_theta(int L_d, double r) {
  if (L_d < 1) throw std::domain_error("w_theta: L_d must be >= 1");
  if (!(r >= 0 && r < 1)) throw std::domain_error("w_theta: ratio must lie in [0, 1)");
  auto f = [&](double t) { return std::cos((L_d + 1) * t / 2) + r * std::cos((L_d - 1) * t / 2); };
  double lo = 0, hi = std::numbers::pi / L_d;
  if (f(hi) > 0) throw RootError("w_theta: no sign change on (0, pi/L_d]");
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Zeroth-order profile inside the degenerate manifold.
inline WShape w_shape(int L, int N, Boundary b, WOptions opt, WCase* kind_out = nullptr, bool* degenerate = nullptr) {
  if (N < 2) throw std::domain_error("w_state: N must be >= 2");
  const double pi = std::numbers::pi;
  WShape sh;
  WCase kind{};
  bool deg = false;
  if (b == Boundary::periodic) {
    sh.ell_s = 0;
    sh.L_d = L;
    sh.coefficients.resize(L);
    for (int l = 1; l <= L; ++l) {
      if (N % 2 == 0) {
        kind = WCase::periodic_uniform;
        sh.coefficients[l - 1] = 1.0;
      } else if (L % 2 == 0) {
        kind = WCase::periodic_alternating;
        sh.coefficients[l - 1] = (l % 2 ? -1.0 : 1.0);
      } else {
        kind = WCase::periodic_degenerate;
        deg = true;
        sh.coefficients[l - 1] = std::cos(2 * pi * l * ((L - 1) / 2) / L);
      }
    }
  } else {
    const int half = (N + 1) / 2;  // ceil(N/2)
    if (L <= 2 * half) {
      if (L % 2) {
        kind = WCase::single_site;
        sh.ell_s = (L - 1) / 2;
        sh.L_d = 1;
        sh.coefficients = {1.0};
      } else {
        kind = WCase::two_site;
        sh.ell_s = L / 2 - 1;
        sh.L_d = 2;
        sh.coefficients = {1.0, N % 2 ? -1.0 : 1.0};
      }
    } else {
      sh.ell_s = half - 1;
      sh.L_d = L - 2 * sh.ell_s;
      const int Ld = sh.L_d;
      sh.coefficients.resize(Ld);
      if (N % 2) {
        kind = WCase::odd_n;
        for (int l = 1; l <= Ld; ++l) sh.coefficients[l - 1] = (l % 2 ? -1.0 : 1.0) * std::sin(pi * l / (Ld + 1));
      } else if (N == 2) {
        kind = WCase::n_two;
        for (int l = 1; l <= Ld; ++l) sh.coefficients[l - 1] = std::sin(pi * (2 * l - 1) / (2 * Ld));
      } else if (!opt.exact_c) {
        kind = WCase::even_n_c_zero;
        for (int l = 1; l <= Ld; ++l) sh.coefficients[l - 1] = std::sin(pi * l / (Ld + 1));
      } else {
        kind = WCase::even_n_exact_c;
        const auto k = kN_coefficients(N, 1.0);
        const double theta = w_theta(Ld, k.c / std::abs(k.b));
        for (int l = 1; l <= Ld; ++l)
          sh.coefficients[l - 1] = k.c * std::sin((l - 1) * theta) - k.b * std::sin(l * theta);
      }
    }
  }
  detail::normalize(sh.coefficients);
  if (kind_out) *kind_out = kind;
  if (degenerate) *degenerate = deg;
  return sh;
}

// sum_l c_l |psi^1_l>, each constituent carrying its disorder-free first-order correction.
// Detunings in `p` are ignored.
inline WState w_state(const ModelParams& p, const SectorBasis& basis, WOptions opt = {}) {
  if (basis.sites() != p.L || basis.bosons() != p.N) throw std::domain_error("w_state: basis mismatch");
  const double tau = p.J / detail::scaled_unit(p);
  WState w;
  w.shape = w_shape(p.L, p.N, p.boundary, opt, &w.kind, &w.degenerate_pair);
  const std::vector<double> zero(p.L, 0.0);
  w.vector.assign(basis.dimension(), 0.0);
  for (int i = 0; i < w.shape.L_d; ++i)
    detail::add_localized(w.vector, basis, p.boundary, tau, zero, w.shape.ell_s + i, w.shape.coefficients[i]);
  detail::normalize(w.vector);
  return w;
}

// epsilon_W = -1/2 - 2 tau^2
inline PhaseEnergy w_energy(double tau) { return {-0.5 - 2 * tau * tau, 2, Phase::w, std::nullopt}; }

// ---------------------------------------------------------------------------
// Superfluid phase

namespace detail {

inline std::vector<double> row(const Eigen::MatrixXd& F, int k) {
  std::vector<double> r(F.cols());
  for (Eigen::Index l = 0; l < F.cols(); ++l) r[l] = F(k, l);
  return r;
}

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace detail

// |eta_k0 = N> plus its first-order disorder and interaction corrections.
inline std::vector<double> sf_state(const ModelParams& p, const SectorBasis& basis) {
  if (basis.sites() != p.L || basis.bosons() != p.N) throw std::domain_error("sf_state: basis mismatch");
  if (!(p.J > 0)) throw std::domain_error("sf_state: J must be > 0");
  if (static_cast<int>(p.omega.size()) != p.L) throw std::domain_error("sf_state: omega must have length L");
  const int L = p.L, N = p.N;
  const double J = p.J, U = p.U;
  const double pi = std::numbers::pi;
  const int k0 = condensate_mode(L, p.boundary);
  const Eigen::MatrixXd F = reciprocal_modes(L, p.boundary);
  const analysis::BasisLadder ladder(L, N);
  const auto cond = detail::row(F, k0);

  std::vector<double> psi = analysis::product_state(ladder, {{cond, N}});

  // Disorder: one boson promoted into the orbital phi = sum_k coef_k f_k.
  std::vector<double> phi(L, 0.0);
  if (p.boundary == Boundary::open) {
    const double c1 = std::cos(pi / (L + 1));
    for (int k = 1; k < L; ++k) {
      double s = 0;
      for (int l = 1; l <= L; ++l) s += p.omega[l - 1] * std::sin(pi * l * k / (L + 1)) * std::sin(pi * l * L / (L + 1));
      const double coef = -std::sqrt(double(N)) / (J * (L + 1)) * s / (c1 + std::cos(pi * k / (L + 1)));
      for (int l = 0; l < L; ++l) phi[l] += coef * F(k - 1, l);
    }
  } else {
    // Complex modes b+_k = L^(-1/2) sum_l e^{2 pi i l k / L} a+_l; the +-k terms combine into a real orbital.
    for (int k = 1; k <= L; ++k) {
      if (2 * k == L) continue;
      std::complex<double> s = 0;
      for (int l = 1; l <= L; ++l)
        s += p.omega[l - 1] * (l % 2 ? -1.0 : 1.0) * std::polar(1.0, -2 * pi * l * k / L);
      const std::complex<double> coef = -std::sqrt(double(N)) / (2 * J * L) * s / (1 + std::cos(2 * pi * k / L));
      for (int l = 1; l <= L; ++l) phi[l - 1] += (coef * std::polar(1.0, 2 * pi * l * k / L)).real() / std::sqrt(double(L));
    }
  }
  if (std::any_of(phi.begin(), phi.end(), [](double x) { return x != 0; }))
    detail::axpy(psi, 1.0, analysis::product_state(ladder, {{phi, 1}, {cond, N - 1}}));

  // Interaction: two bosons scattered out of the condensate.
  if (N >= 2 && U != 0) {
    if (p.boundary == Boundary::open) {
      const double pre = U * std::sqrt(double(N) * (N - 1)) / (8 * J * (L + 1));
      auto cs = [&](int k) { return std::cos(pi * k / (L + 1)); };
      for (int k = 1; k < L; ++k) {
        const double a = pre * std::sqrt(2.0) * (2 + (k == 1)) / (2 * (cs(1) + cs(k)));
        detail::axpy(psi, a, analysis::product_state(ladder, {{detail::row(F, k - 1), 2}, {cond, N - 2}}));
      }
      if (L - 2 >= 1) {
        const double a = -pre * 2 * std::sqrt(double(N - 1)) / (cs(1) + cs(L - 2));
        detail::axpy(psi, a, analysis::product_state(ladder, {{detail::row(F, L - 3), 1}, {cond, N - 1}}));
      }
      for (int k = 1; k + 2 < L; ++k) {
        const double a = -pre * 2 / (2 * cs(1) + cs(k) + cs(k + 2));
        detail::axpy(psi, a,
                     analysis::product_state(
                         ladder, {{detail::row(F, k - 1), 1}, {detail::row(F, k + 1), 1}, {cond, N - 2}}));
      }
    } else {
      const double pre = U * std::sqrt(double(N) * (N - 1)) / (4 * J * L);
      const auto uniform = detail::row(F, L - 1);
      detail::axpy(psi, pre / (2 * std::sqrt(2.0)), analysis::product_state(ladder, {{uniform, 2}, {cond, N - 2}}));
      for (int k = 1; 2 * k < L; ++k) {
        // b+_k b+_{-k} = (C+^2 + S+^2) / 2 with the real cos/sin modes of index k.
        const double a = pre / (1 + std::cos(2 * pi * k / L));
        const auto c2 = analysis::product_state(ladder, {{detail::row(F, k - 1), 2}, {cond, N - 2}});
        const auto s2 = analysis::product_state(ladder, {{detail::row(F, L - k - 1), 2}, {cond, N - 2}});
        // (A+)^2 |.> = sqrt(2) |2_A>, hence the sqrt(2)/2 factor.
        detail::axpy(psi, a * std::sqrt(2.0) / 2, c2);
        detail::axpy(psi, a * std::sqrt(2.0) / 2, s2);
      }
    }
  }
  detail::normalize(psi);
  return psi;
}

struct SFCoefficients {
  double a = 0;
  double b = 0;
};

// epsilon_SF = e0(tau) - (delta^2 + b) a / tau, so a is the coefficient of -delta^2/tau.
inline SFCoefficients sf_coefficients(int L, int N, Boundary bc) {
  if (N < 2) throw std::domain_error("sf_energy: N must be >= 2");
  const double pi = std::numbers::pi;
  SFCoefficients k;
  double ab = 0;
  if (bc == Boundary::open) {
    if (L < 1) throw std::domain_error("sf_energy: L must be >= 1");
    const double c = std::cos(pi / (L + 1)), s = std::sin(pi / (L + 1)), c3 = std::cos(3 * pi / (L + 1));
    k.a = (5 * c * c + 1) / (24.0 * (L + 1) * c * s * s);
    const double bracket = (15.0 + 4.0 * L * (L + 2)) / (6 * c) + (6 * c * c - 5) / (s * s * c) + 4.0 * (N - 1) / (c - c3);
    ab = bracket / (32.0 * (L + 1) * (L + 1) * (N - 1));
  } else {
    if (L % 2) throw DegeneracyError("sf_energy: periodic chain with odd L");
    k.a = (double(L) * L - 4) / (36.0 * L);
    ab = (double(L) * L - 1) / (48.0 * (N - 1) * L * L);
  }
  k.b = ab / k.a;
  return k;
}

inline PhaseEnergy sf_energy_avg(double tau, double delta, int L, int N, Boundary bc) {
  if (!(tau > 0)) throw std::domain_error("sf_energy_avg: tau must be > 0");
  const auto k = sf_coefficients(L, N, bc);
  const double pi = std::numbers::pi;
  const double e0 = bc == Boundary::open ? -2 * tau * std::cos(pi / (L + 1)) - 3.0 / (4 * (L + 1))
                                         : -2 * tau - 1.0 / (2 * L);
  return {e0 - (delta * delta + k.b) * k.a / tau, 2, Phase::superfluid, std::nullopt};
}

// ---------------------------------------------------------------------------
// Phase boundaries

// delta = (3A/2) [alpha(N) tau]^N; the default A = 4/3 gives 2 [alpha(N) tau]^N.
inline double boundary_loc_w(double tau, int N, double A = 4.0 / 3.0) {
  if (!(tau >= 0)) throw std::domain_error("boundary_loc_w: tau must be >= 0");
  return 1.5 * A * std::pow(alpha(N) * tau, N);
}

namespace detail {

// First tau on a log grid over [lo, hi] where g changes from negative
// (small-tau phase lower) to positive (superfluid lower), refined by bisection
// down to adjacent doubles.
template <class G>
double crossing(G&& g, double lo, double hi, const char* what) {
  constexpr int kScan = 400;
  double prev_t = lo, prev_g = g(lo);
  for (int i = 1; i <= kScan; ++i) {
    const double t = lo * std::pow(hi / lo, double(i) / kScan);
    const double gt = g(t);
    if (prev_g < 0 && gt >= 0) {
      double a = prev_t, b = t;
      while (true) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (g(m) < 0 ? a : b) = m;
      }
      return std::abs(g(a)) < std::abs(g(b)) ? a : b;
    }
    prev_t = t;
    prev_g = gt;
  }
  throw RootError(std::string(what) + ": no crossing in tau in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace detail

// tau where epsilon_W = epsilon_SF.
inline double boundary_w_sf(double delta, int L, int N, Boundary bc = Boundary::open, double lo = 0.01, double hi = 10) {
  return detail::crossing(
      [&](double t) { return w_energy(t).epsilon - sf_energy_avg(t, delta, L, N, bc).epsilon; }, lo, hi,
      "boundary_w_sf");
}

// tau where epsilon_loc = epsilon_SF.
inline double boundary_sf_loc(double delta, int L, int N, Boundary bc = Boundary::open, double lo = 0.01,
                              double hi = 10) {
  return detail::crossing(
      [&](double t) {
        return localized_energy_avg(t, delta, L, 1).epsilon - sf_energy_avg(t, delta, L, N, bc).epsilon;
      },
      lo, hi, "boundary_sf_loc");
}

}  // namespace bosehub::pert
