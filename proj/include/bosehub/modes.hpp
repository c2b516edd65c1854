#pragma once

// Single-particle eigenmodes of the hopping term.
//
// Row k of the returned matrix holds mode k's amplitude on every site; rows
// are orthonormal. Mode and site indices are 0-based, so row k corresponds to
// the conventional mode label k+1.
//
//   open:      f(k, l) = sqrt(2/(L+1)) sin(pi (l+1)(k+1) / (L+1)),
//              energy 2J cos(pi (k+1)/(L+1)); the lowest mode is row L-1.
//   periodic:  real combinations of exp(2 pi i l q / L), q = k+1:
//              q = L            -> uniform 1/sqrt(L)
//              2q = L           -> (-1)^(l+1) / sqrt(L)
//              q < L/2          -> sqrt(2/L) cos(2 pi (l+1) q / L)
//              L/2 < q < L      -> sqrt(2/L) sin(2 pi (l+1)(L-q) / L)
//              so the degenerate pair {q, L-q} maps to {cos_q, sin_q}.
//              energy 2J cos(2 pi q / L); for even L the lowest mode is row L/2-1.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "bosehub/hamil.hpp"

namespace bosehub::pert {

inline Eigen::MatrixXd reciprocal_modes(int L, Boundary b) {
  if (L < 1) throw std::domain_error("reciprocal_modes: L must be >= 1");
  const double pi = std::numbers::pi;
  Eigen::MatrixXd f(L, L);
  if (b == Boundary::open) {
    const double norm = std::sqrt(2.0 / (L + 1));
    for (int k = 0; k < L; ++k)
      for (int l = 0; l < L; ++l) f(k, l) = norm * std::sin(pi * (l + 1) * (k + 1) / (L + 1));
    return f;
  }
  for (int k = 0; k < L; ++k) {
    const int q = k + 1;
    for (int l = 0; l < L; ++l) {
      const int site = l + 1;
      if (q == L)
        f(k, l) = 1.0 / std::sqrt(double(L));
      else if (2 * q == L)
        f(k, l) = (site % 2 == 0 ? 1.0 : -1.0) / std::sqrt(double(L));
      else if (2 * q < L)
        f(k, l) = std::sqrt(2.0 / L) * std::cos(2 * pi * site * q / L);
      else
        f(k, l) = std::sqrt(2.0 / L) * std::sin(2 * pi * site * (L - q) / L);
    }
  }
  return f;
}

inline std::vector<double> mode_energies(int L, Boundary b, double J) {
  const double pi = std::numbers::pi;
  std::vector<double> e(L);
  for (int k = 0; k < L; ++k)
    e[k] = b == Boundary::open ? 2 * J * std::cos(pi * (k + 1) / (L + 1)) : 2 * J * std::cos(2 * pi * (k + 1) / L);
  return e;
}

// Index of the condensate mode of the superfluid (0-based row).
inline int condensate_mode(int L, Boundary b) {
  if (b == Boundary::open) return L - 1;
  if (L % 2 != 0) throw DegeneracyError("periodic chain with odd L has a doubly degenerate lowest mode");
  return L / 2 - 1;
}

// Odd periodic chains: the lowest mode is a degenerate cos/sin pair, so reciprocal
// occupations depend on the basis chosen inside the pair. Outputs carry a flag.
inline bool reciprocal_experimental(int L, Boundary b) { return b == Boundary::periodic && L % 2 != 0; }

// Single-particle hopping matrix (the J-term coefficients).
inline Eigen::MatrixXd hopping_matrix(int L, Boundary b, double J) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L, L);
  for (auto [a, c] : chain_bonds(L, b)) {
    h(a, c) += J;
    h(c, a) += J;
  }
  return h;
}

}  // namespace bosehub::pert
