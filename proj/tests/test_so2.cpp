#include <gtest/gtest.h>

#include "ncfb/so2.hpp"
#include "support.hpp"

using namespace ncfb;

class CannedMorita : public ::testing::TestWithParam<std::string> {};

TEST_P(CannedMorita, FactorSystemIsAssociativeAndFlat) {
  auto n = so2::canned_morita(GetParam());
  auto fs = so2::factor_system(n, 3);
  auto assoc = so2::associativity_check(fs, 1e-10);
  EXPECT_TRUE(assoc.pass) << assoc.residual;
  EXPECT_LT(assoc.residual, 1e-10);
  for (const auto& f : so2::flatness_checks(fs, 1e-10)) EXPECT_TRUE(f.pass) << f.name << " " << f.residual;
  EXPECT_TRUE(so2::psi_unitarity_check(fs, 1e-10).pass);
}

TEST_P(CannedMorita, GradedAlgebraChecksAndSplit) {
  auto a = so2::build_so2_algebra(so2::factor_system(so2::canned_morita(GetParam()), 3));
  auto rep = so2::check_so2(a, 1e-10);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.residual;
  EXPECT_TRUE(rep.split.pass);
  EXPECT_EQ(rep.split.gamma_dim, 2 * rep.split.n_dim);
  EXPECT_EQ(rep.split.plus_dim, rep.split.n_dim);
  EXPECT_EQ(rep.split.minus_dim, rep.split.n_dim);
  EXPECT_TRUE(so2::round_trip(a).pass);
}

INSTANTIATE_TEST_SUITE_P(Kinds, CannedMorita, ::testing::Values("trivial", "permutation", "matrix"));

TEST(So2, FourierLevelsOfTheAlgebraBimoduleHaveDimB) {
  for (const std::string kind : {"trivial", "matrix"}) {
    auto n = so2::canned_morita(kind);
    auto a = so2::build_so2_algebra(so2::factor_system(n, 3));
    for (auto [k, d] : a.level_dims()) EXPECT_EQ(d, n.algebra().dim()) << kind << " level " << k;
  }
}

TEST(So2, PerturbedPsiBreaksAssociativity) {
  auto fs = so2::factor_system(so2::canned_morita("permutation"), 3);
  fs.psi.at({1, 1}) *= std::polar(1.0, 0.3);
  auto assoc = so2::associativity_check(fs, 1e-10);
  EXPECT_FALSE(assoc.pass);
  EXPECT_GT(assoc.residual, 0.1);
  // still unitary, so only the cocycle condition notices
  EXPECT_TRUE(so2::psi_unitarity_check(fs, 1e-10).pass);
}

TEST(So2, MoritaAxiomsHoldForPermutationBimodule) {
  auto n = so2::permutation_bimodule({2, 0, 1});
  for (const auto& c : so2::check_morita(n)) EXPECT_TRUE(c.pass) << c.axiom;
}

TEST(So2, NonFullModuleIsNotMorita) {
  auto b = fixtures::algebra({1, 1});
  std::vector<Matrix> act{Matrix::Identity(1, 1), Matrix::Zero(1, 1)};
  auto m = hilbmod::make_correspondence(b, 1, act, act, act);
  EXPECT_THROW(so2::make_morita(m), AxiomViolation);
}

TEST(So2, DualConjugateMapIsAntiUnitaryData) {
  auto n = so2::canned_morita("matrix");
  auto d = so2::dual(n);
  EXPECT_EQ(d.module.dim(), n.dim());
  EXPECT_LT((d.conj_map.adjoint() * d.conj_map - Matrix::Identity(n.dim(), n.dim())).norm(), 1e-10);
}

TEST(So2, GradingWeights) {
  auto a = so2::build_so2_algebra(so2::factor_system(so2::canned_morita("trivial"), 2));
  EXPECT_NEAR(std::abs(a.weight(2, 0.7) - std::polar(1.0, 1.4)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(a.weight(0, 0.7) - Complex(1.0)), 0.0, 1e-12);
}

TEST(So2, CutoffBelowOneIsRejected) {
  EXPECT_THROW(so2::factor_system(so2::canned_morita("trivial"), 0), InvalidCutoffError);
}
