#pragma once

// Fixed-N occupation-number basis for L bosonic sites.
//
// States are ordered lexicographically *decreasing* in the occupation vector:
// (N,0,...,0) has index 0 and (0,...,0,N) has index dim-1. State-vector files
// index into this order, so it must never change (see kBasisOrderTag).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bosehub/errors.hpp"

namespace bosehub {

using FockState = std::vector<int>;

inline constexpr std::uint32_t kBasisOrderTag = 1;  // lexicographically decreasing
inline constexpr std::uint64_t kMaxDimension = std::uint64_t{1} << 31;

namespace detail {

// Pascal table C(n, k) for n < rows, k < cols; entries saturate at UINT64_MAX.
class BinomialTable {
public:
  BinomialTable() = default;
  BinomialTable(int rows, int cols) : rows_(rows), cols_(cols), table_(std::size_t(rows) * cols, 0) {
    constexpr auto kSat = std::numeric_limits<std::uint64_t>::max();
    for (int n = 0; n < rows_; ++n) {
      at(n, 0) = 1;
      for (int k = 1; k < cols_ && k <= n; ++k) {
        std::uint64_t a = at(n - 1, k - 1);
        std::uint64_t b = k <= n - 1 ? at(n - 1, k) : 0;
        at(n, k) = (a == kSat || b == kSat || a > kSat - b) ? kSat : a + b;
      }
    }
  }

  std::uint64_t operator()(int n, int k) const {
    if (k < 0 || n < 0 || k > n) return 0;
    return table_[std::size_t(n) * cols_ + k];
  }

private:
  std::uint64_t& at(int n, int k) { return table_[std::size_t(n) * cols_ + k]; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint64_t> table_;
};

// Number of ways to put m bosons on s sites.
inline std::uint64_t distributions(const BinomialTable& binom, int sites, int m) {
  if (sites == 0) return m == 0 ? 1 : 0;
  return binom(sites + m - 1, m);
}

}  // namespace detail

// C(L+N-1, N). Throws CapacityError when the count exceeds 2^31.
inline std::uint64_t basis_size(int L, int N) {
  if (L < 1) throw std::domain_error("basis_size: L must be >= 1");
  if (N < 0) throw std::domain_error("basis_size: N must be >= 0");
  // C(L+N-1, N) = C(L+N-1, L-1); multiply in the smaller index and bail out
  // as soon as the running value passes the ceiling.
  const int n = L + N - 1;
  const int k = std::min(N, L - 1);
  unsigned __int128 value = 1;
  for (int i = 1; i <= k; ++i) {
    value = value * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (value > kMaxDimension) {
      throw CapacityError("basis_size: C(" + std::to_string(n) + "," + std::to_string(N) +
                          ") exceeds the 2^31 capacity ceiling");
    }
  }
  return static_cast<std::uint64_t>(value);
}

// Returns the state reached by a^dagger_to a_from, and its matrix element
// sqrt(n_from (n_to + 1)); empty when site `from` is unoccupied.
inline std::optional<std::pair<FockState, double>> apply_hop(const FockState& s, int from, int to) {
  const int L = static_cast<int>(s.size());
  if (from < 0 || from >= L || to < 0 || to >= L) throw std::domain_error("apply_hop: site out of range");
  if (from == to) throw std::domain_error("apply_hop: from and to must differ");
  if (s[from] == 0) return std::nullopt;
  FockState t = s;
  const double amp = std::sqrt(double(s[from]) * double(s[to] + 1));
  --t[from];
  ++t[to];
  return std::make_pair(std::move(t), amp);
}

class SectorBasis {
public:
  SectorBasis(int L, int N) : L_(L), N_(N) {
    dim_ = static_cast<std::size_t>(basis_size(L, N));
    binom_ = detail::BinomialTable(L + N + 1, N + 2);
    states_.resize(dim_ * L_);
    // Enumerate in decreasing lexicographic order: odometer over compositions.
    FockState s(L_, 0);
    s[0] = N_;
    for (std::size_t i = 0; i < dim_; ++i) {
      std::copy(s.begin(), s.end(), states_.begin() + i * L_);
      if (i + 1 < dim_) advance(s);
    }
  }

  int sites() const noexcept { return L_; }
  int bosons() const noexcept { return N_; }
  std::size_t dimension() const noexcept { return dim_; }

  std::span<const int> state(std::size_t i) const {
    if (i >= dim_) throw std::domain_error("SectorBasis::state: index out of range");
    return {states_.data() + i * L_, static_cast<std::size_t>(L_)};
  }

  FockState unrank(std::size_t i) const {
    if (i >= dim_) throw std::domain_error("unrank: index out of range");
    FockState s(L_, 0);
    int remaining = N_;
    for (int site = 0; site < L_ - 1; ++site) {
      // Try occupations from the largest down; each block holds the states
      // sharing this prefix.
      for (int v = remaining; v >= 0; --v) {
        const std::uint64_t block = detail::distributions(binom_, L_ - site - 1, remaining - v);
        if (i < block) {
          s[site] = v;
          remaining -= v;
          break;
        }
        i -= block;
      }
    }
    s[L_ - 1] = remaining;
    return s;
  }

  // O(L) perfect-hash index of a state in this sector.
  std::size_t rank(std::span<const int> s) const {
    if (static_cast<int>(s.size()) != L_) throw std::domain_error("rank: state has wrong length");
    std::uint64_t index = 0;
    int remaining = N_;
    for (int site = 0; site < L_; ++site) {
      const int v = s[site];
      if (v < 0 || v > remaining) throw std::domain_error("rank: occupations do not sum to N");
      // States with a larger occupation at `site` (same prefix) come first.
      if (remaining > v) index += detail::distributions(binom_, L_ - site, remaining - v - 1);
      remaining -= v;
    }
    if (remaining != 0) throw std::domain_error("rank: occupations do not sum to N");
    return static_cast<std::size_t>(index);
  }

  std::size_t rank(const FockState& s) const { return rank(std::span<const int>(s)); }

  // Index of a^dagger_to a_from |state i>, or nullopt if site `from` is empty.
  std::optional<std::pair<std::size_t, double>> hop(std::size_t i, int from, int to) const {
    auto s = state(i);
    if (s[from] == 0) return std::nullopt;
    FockState t(s.begin(), s.end());
    const double amp = std::sqrt(double(t[from]) * double(t[to] + 1));
    --t[from];
    ++t[to];
    return std::make_pair(rank(t), amp);
  }

private:
  // Next composition in decreasing lexicographic order.
  void advance(FockState& s) const {
    // Find the rightmost non-final site with bosons, move one boson right and
    // gather everything after it into the next site.
    int j = L_ - 2;
    while (j >= 0 && s[j] == 0) --j;
    int tail = 0;
    for (int k = j + 1; k < L_; ++k) {
      tail += s[k];
      s[k] = 0;
    }
    --s[j];
    s[j + 1] = tail + 1;
  }

  int L_;
  int N_;
  std::size_t dim_ = 0;
  detail::BinomialTable binom_;
  std::vector<int> states_;
};

}  // namespace bosehub
