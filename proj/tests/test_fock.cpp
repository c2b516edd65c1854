#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bosehub/fock.hpp"

using namespace bosehub;

namespace {

// Independent count: number of compositions of N into L parts by recursion.
std::uint64_t count_compositions(int L, int N) {
  if (L == 1) return 1;
  std::uint64_t c = 0;
  for (int n = 0; n <= N; ++n) c += count_compositions(L - 1, N - n);
  return c;
}

}  // namespace

TEST(BasisSize, Examples) {
  EXPECT_EQ(basis_size(2, 1), 2u);
  EXPECT_EQ(basis_size(1, 7), 1u);
  EXPECT_EQ(basis_size(8, 4), 330u);
  EXPECT_EQ(basis_size(8, 9), 11440u);
  EXPECT_EQ(basis_size(5, 0), 1u);
}

TEST(BasisSize, MatchesRecursiveCount) {
  for (int L = 1; L <= 8; ++L)
    for (int N = 0; N <= 6; ++N) EXPECT_EQ(basis_size(L, N), count_compositions(L, N)) << L << "," << N;
}

TEST(BasisSize, CapacityCeiling) {
  EXPECT_THROW(basis_size(40, 40), CapacityError);
  EXPECT_THROW(basis_size(1000, 1000), CapacityError);
  // C(33, 16) = 1166803110 < 2^31, C(34, 17) = 2333606220 > 2^31
  EXPECT_EQ(basis_size(18, 16), 1166803110u);
  EXPECT_THROW(basis_size(18, 17), CapacityError);
  EXPECT_THROW(basis_size(0, 3), std::domain_error);
  EXPECT_THROW(basis_size(3, -1), std::domain_error);
}

TEST(Enumerate, SmallSectors) {
  SectorBasis b21(2, 1);
  ASSERT_EQ(b21.dimension(), 2u);
  EXPECT_EQ(b21.unrank(0), (FockState{1, 0}));
  EXPECT_EQ(b21.unrank(1), (FockState{0, 1}));

  SectorBasis b22(2, 2);
  ASSERT_EQ(b22.dimension(), 3u);
  EXPECT_EQ(b22.unrank(0), (FockState{2, 0}));
  EXPECT_EQ(b22.unrank(1), (FockState{1, 1}));
  EXPECT_EQ(b22.unrank(2), (FockState{0, 2}));

  SectorBasis b32(3, 2);
  ASSERT_EQ(b32.dimension(), 6u);
  EXPECT_EQ(b32.unrank(0), (FockState{2, 0, 0}));
  EXPECT_EQ(b32.unrank(5), (FockState{0, 0, 2}));
}

TEST(Enumerate, StrictlyDecreasingAndComplete) {
  for (int L = 1; L <= 8; ++L)
    for (int N = 0; N <= 6; ++N) {
      SectorBasis b(L, N);
      ASSERT_EQ(b.dimension(), basis_size(L, N));
      std::set<FockState> seen;
      for (std::size_t i = 0; i < b.dimension(); ++i) {
        FockState s(b.state(i).begin(), b.state(i).end());
        int sum = 0;
        for (int v : s) {
          EXPECT_GE(v, 0);
          sum += v;
        }
        EXPECT_EQ(sum, N);
        if (i > 0) {
          FockState prev(b.state(i - 1).begin(), b.state(i - 1).end());
          EXPECT_GT(prev, s);  // lexicographically decreasing
        }
        seen.insert(s);
      }
      EXPECT_EQ(seen.size(), b.dimension());
    }
}

TEST(Rank, Examples) {
  SectorBasis b(2, 2);
  EXPECT_EQ(b.rank(FockState{2, 0}), 0u);
  EXPECT_EQ(b.unrank(2), (FockState{0, 2}));
}

TEST(Rank, BijectionExhaustive) {
  for (int L = 1; L <= 9; ++L)
    for (int N = 0; N <= 8; ++N) {
      if (basis_size(L, N) > 10000) continue;
      SectorBasis b(L, N);
      for (std::size_t i = 0; i < b.dimension(); ++i) {
        const FockState s = b.unrank(i);
        ASSERT_EQ(b.rank(s), i);
        ASSERT_TRUE(std::equal(s.begin(), s.end(), b.state(i).begin()));
      }
    }
}

TEST(Rank, Errors) {
  SectorBasis b(3, 2);
  EXPECT_THROW(b.rank(FockState{1, 0, 0}), std::domain_error);
  EXPECT_THROW(b.rank(FockState{2, 1, 0}), std::domain_error);
  EXPECT_THROW(b.rank(FockState{2, 0}), std::domain_error);
  EXPECT_THROW(b.rank(FockState{3, -1, 0}), std::domain_error);
  EXPECT_THROW(b.unrank(6), std::domain_error);
}

TEST(ApplyHop, Examples) {
  auto a = apply_hop({2, 0}, 0, 1);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->first, (FockState{1, 1}));
  EXPECT_DOUBLE_EQ(a->second, std::sqrt(2.0));

  EXPECT_FALSE(apply_hop({0, 1}, 0, 1));

  auto c = apply_hop({1, 1}, 1, 0);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->first, (FockState{2, 0}));
  EXPECT_DOUBLE_EQ(c->second, std::sqrt(2.0));

  EXPECT_THROW(apply_hop({1, 1}, 0, 0), std::domain_error);
  EXPECT_THROW(apply_hop({1, 1}, 0, 2), std::domain_error);
}

TEST(ApplyHop, HermiticitySeed) {
  SectorBasis b(4, 3);
  for (std::size_t i = 0; i < b.dimension(); ++i) {
    const FockState s = b.unrank(i);
    for (int l = 0; l < 4; ++l)
      for (int m = 0; m < 4; ++m) {
        if (l == m) continue;
        auto fwd = apply_hop(s, l, m);
        if (!fwd) continue;
        auto back = apply_hop(fwd->first, m, l);
        ASSERT_TRUE(back);
        EXPECT_EQ(back->first, s);
        EXPECT_DOUBLE_EQ(back->second, fwd->second);
        auto viaIndex = b.hop(i, l, m);
        ASSERT_TRUE(viaIndex);
        EXPECT_EQ(viaIndex->first, b.rank(fwd->first));
        EXPECT_DOUBLE_EQ(viaIndex->second, fwd->second);
      }
  }
}
