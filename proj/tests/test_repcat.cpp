#include <gtest/gtest.h>

#include <map>

#include "ncfb/repcat.hpp"
#include "support.hpp"

using namespace ncfb;

namespace {

// Clebsch-Gordan recursion: spin j (x) spin 1 = spins |j-1| .. j+1 (spin 0 (x) 1 = 1).
std::map<int, int> cg_multiplicities(int k) {
  std::map<int, int> m{{0, 1}};
  for (int step = 0; step < k; ++step) {
    std::map<int, int> next;
    for (auto [j, mult] : m)
      for (int s = std::abs(j - 1); s <= j + 1; ++s) next[s] += mult;
    m = next;
  }
  return m;
}

std::map<int, int> registry_multiplicities(const repcat::IrrepRegistry& reg, int k) {
  std::map<int, int> out;
  for (const auto& s : reg.decompose(reg.power(k))) {
    EXPECT_GE(s.id, 0);
    if (s.id >= 0) ++out[reg.entry(s.id).spin];
  }
  return out;
}

}  // namespace

TEST(CGOracle, RecursionReproducesKnownTables) {
  EXPECT_EQ(cg_multiplicities(2), (std::map<int, int>{{0, 1}, {1, 1}, {2, 1}}));
  EXPECT_EQ(cg_multiplicities(3), (std::map<int, int>{{0, 1}, {1, 3}, {2, 2}, {3, 1}}));
}

TEST(Decomposition, MultiplicitiesMatchClebschGordan) {
  const auto& reg = fixtures::registry(3, 4);
  for (int k = 1; k <= 4; ++k) EXPECT_EQ(registry_multiplicities(reg, k), cg_multiplicities(k)) << "k=" << k;
}

TEST(Decomposition, EmbeddingsFormAUnitary) {
  const auto& reg = fixtures::registry(3, 3);
  const auto& rho = reg.power(3);
  Matrix e(rho.dim(), 0);
  for (const auto& s : reg.decompose(rho)) {
    Matrix grown(rho.dim(), e.cols() + s.embedding.cols());
    grown << e, s.embedding;
    e = grown;
    EXPECT_LT(repcat::equivariance_residual(reg.entry(s.id).rep, rho, s.embedding), 1e-9);
  }
  ASSERT_EQ(e.cols(), rho.dim());
  EXPECT_LT((e.adjoint() * e - Matrix::Identity(e.cols(), e.cols())).norm(), 1e-9);
}

TEST(Intertwiners, CommutantDimensionIsSumOfSquaredMultiplicities) {
  auto cat = fixtures::catalog(3, 4);
  const int expected[] = {1, 1, 3, 15, 91};
  for (int k = 1; k <= 4; ++k) {
    int oracle = 0;
    for (auto [j, m] : cg_multiplicities(k)) oracle += m * m;
    EXPECT_EQ(oracle, expected[k]);
    EXPECT_EQ(cat->space(k, k).dim(), oracle) << "k=" << k;
  }
}

TEST(Intertwiners, MixedDimensionsMatchMultiplicityProducts) {
  auto cat = fixtures::catalog(3, 3);
  for (int k = 0; k <= 3; ++k)
    for (int l = 0; l <= 3; ++l) {
      auto mk = cg_multiplicities(k), ml = cg_multiplicities(l);
      int oracle = 0;
      for (auto [j, m] : mk)
        if (ml.count(j)) oracle += m * ml[j];
      EXPECT_EQ(cat->space(k, l).dim(), oracle) << k << "," << l;
    }
}

TEST(Intertwiners, DirectAndDecompositionRoutesAgree) {
  auto v = liegroup::standard_rep(3);
  auto v2 = liegroup::tensor_power(v, 2);
  auto v3 = liegroup::tensor_power(v, 3);
  for (auto [a, b] : {std::pair{v2, v2}, std::pair{v, v3}, std::pair{v3, v}}) {
    auto direct = repcat::intertwiner_space_direct(a, b);
    auto dec = repcat::intertwiner_space_by_decomposition(a, b);
    ASSERT_EQ(direct.dim(), dec.dim());
    for (const auto& t : dec.basis) {
      EXPECT_LT(repcat::equivariance_residual(a, b, t), 1e-9);
      Matrix back = direct.combine(direct.coefficients(t));
      EXPECT_LT((back - t).norm(), 1e-8);
    }
  }
}

TEST(Intertwiners, BasisIsHilbertSchmidtOrthonormal) {
  auto cat = fixtures::catalog(3, 3);
  const auto& sp = cat->space(2, 2);
  for (int i = 0; i < sp.dim(); ++i)
    for (int j = 0; j < sp.dim(); ++j) {
      Complex ip = (sp.basis[i].adjoint() * sp.basis[j]).trace();
      EXPECT_NEAR(std::abs(ip - Complex(i == j ? 1.0 : 0.0)), 0.0, 1e-10);
    }
}

TEST(Registry, ConjugateSolutionsAreNormalized) {
  const auto& reg = fixtures::registry(3, 3);
  for (const auto& e : reg.entries()) {
    auto cs = repcat::conjugate_solution(e.id, reg);
    EXPECT_NEAR(cs.R.squaredNorm(), static_cast<double>(e.dim), 1e-9);
    EXPECT_LT(cs.conjugate_equation_residual(), 1e-9);
  }
}

TEST(Registry, IsometricSetsResolveTheIdentity) {
  const auto& reg = fixtures::registry(3, 3);
  const int pi = reg.pi_id();
  auto set = repcat::isometric_set(pi, pi, reg);
  EXPECT_TRUE(set.complete_in_registry());
  Matrix sum = Matrix::Zero(9, 9);
  for (const auto& m : set.members) sum += m.isometry * m.isometry.adjoint();
  EXPECT_LT((sum - Matrix::Identity(9, 9)).norm(), 1e-9);
  EXPECT_EQ(set.members.size(), 3u);
}

TEST(Registry, SpinLookupAndErrors) {
  const auto& reg = fixtures::registry(3, 2);
  EXPECT_EQ(reg.entry(reg.trivial_id()).dim, 1);
  EXPECT_EQ(reg.entry(reg.pi_id()).dim, 3);
  EXPECT_FALSE(reg.id_for_spin(3).has_value());
  EXPECT_THROW(reg.entry(999), Error);
}

TEST(Registry, SOFourHasChiralPieces) {
  const auto& reg = fixtures::registry(4, 2);
  std::map<int, int> dims;
  for (const auto& s : reg.decompose(reg.power(2))) ++dims[reg.entry(s.id).dim];
  // V (x) V = 1 + 3 + 3 + 9 for SO(4).
  EXPECT_EQ(dims, (std::map<int, int>{{1, 1}, {3, 2}, {9, 1}}));
}
