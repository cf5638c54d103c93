#include <gtest/gtest.h>

#include "ncfb/reconstruct.hpp"
#include "support.hpp"

using namespace ncfb;
using reconstruct::TruncatedFrameBundle;

namespace {

TruncatedFrameBundle build(const std::vector<int>& blocks, std::uint64_t seed = kDefaultSeed) {
  auto cat = fixtures::catalog(3, 2);
  const auto& reg = fixtures::registry(3, 2, seed);
  auto d = typepi::trivial_type_pi(fixtures::algebra(blocks), 3, 2, cat);
  return reconstruct::build_algebra(d, reg, reconstruct::cutoff_from_spins(reg, {0, 1, 2}));
}

std::vector<int> dims(const TruncatedFrameBundle& a) {
  std::vector<int> out;
  for (auto [s, d] : a.level_dims()) out.push_back(d);
  return out;
}

}  // namespace

TEST(Reconstruct, PeterWeylLevelDimensions) {
  EXPECT_EQ(dims(build({1})), (std::vector<int>{1, 9, 25}));
  EXPECT_EQ(dims(build({1, 1})), (std::vector<int>{2, 18, 50}));
  EXPECT_EQ(dims(build({2})), (std::vector<int>{4, 36, 100}));
}

TEST(Reconstruct, StructureChecksPass) {
  const auto& reg = fixtures::registry(3, 2);
  for (const auto& blocks : {std::vector<int>{1}, std::vector<int>{2}}) {
    auto a = build(blocks);
    auto ch = reconstruct::check_structure(a, reg);
    for (const auto& r : ch.records) EXPECT_TRUE(r.pass) << r.name << " " << r.residual << " " << r.detail;
  }
}

TEST(Reconstruct, CommutativeCoefficientsGiveCommutativeAlgebra) {
  auto c = reconstruct::check_classical(build({1, 1}));
  EXPECT_TRUE(c.commutative);
  EXPECT_LT(c.residual, 1e-8);
  EXPECT_TRUE(c.peter_weyl_checked && c.peter_weyl_match);
}

TEST(Reconstruct, MatrixCoefficientsBreakCommutativity) {
  auto c = reconstruct::check_classical(build({2}));
  EXPECT_FALSE(c.commutative);
  ASSERT_TRUE(c.witness.has_value());
  EXPECT_GT(c.residual, 1e-3);
}

TEST(Reconstruct, UnitLevelIsTheCoefficientAlgebra) {
  auto a = build({2, 1});
  const auto& reg = fixtures::registry(3, 2);
  EXPECT_EQ(a.level(reg.trivial_id()).dim(), 5);
  EXPECT_DOUBLE_EQ(a.inner_weight(reg.trivial_id()), 1.0);
  EXPECT_NEAR(a.inner_weight(reg.pi_id()), 1.0 / 3.0, 1e-12);
}

TEST(Reconstruct, RecoveryAndFreenessOnCannedData) {
  auto cat = fixtures::catalog(3, 3);
  const auto& reg = fixtures::registry(3, 3);
  for (const auto& d : typepi::canned_valid_data(cat)) {
    auto a = reconstruct::build_algebra(d, reg, reconstruct::cutoff_from_spins(reg, {0, 1, 2}));
    auto rec = reconstruct::check_recovery(a, reg);
    EXPECT_TRUE(rec.success) << d.kind;
    EXPECT_LT(rec.bimodule_residual, 1e-8);
    EXPECT_LT(rec.inner_residual, 1e-8);
    EXPECT_TRUE(reconstruct::check_freeness(a, reg).free) << d.kind;
  }
}

TEST(Reconstruct, DegenerateFixtureFailsFreenessAtTheEmptiedLevel) {
  const auto& reg = fixtures::registry(3, 2);
  auto a = build({1});
  const int spin2 = *reg.id_for_spin(2);
  auto bad = reconstruct::degenerate_fixture(a, spin2);
  auto fr = reconstruct::check_freeness(bad, reg);
  EXPECT_FALSE(fr.free);
  ASSERT_EQ(fr.offending.size(), 1u);
  EXPECT_EQ(fr.offending[0], spin2);
}

TEST(Reconstruct, SpectralInnerProductRoutesAgree) {
  const auto& reg = fixtures::registry(3, 2);
  auto a = build({1, 1});
  auto sp = reconstruct::spectral_subspace(a, reg, reg.pi_id());
  EXPECT_EQ(sp.corr.dim(), 6);
  EXPECT_LT(sp.route_discrepancy, 1e-9);
}

TEST(Reconstruct, SeedChangeGivesEquivalentAlgebra) {
  auto a = build({2});
  auto b = build({2}, 4242);
  EXPECT_EQ(dims(a), dims(b));
  EXPECT_EQ(reconstruct::gauge_invariant_summary(a), reconstruct::gauge_invariant_summary(b));
  auto eq = reconstruct::bundle_equivalence(a, b);
  EXPECT_TRUE(eq.found);
  EXPECT_LT(eq.residual, 1e-7);
}

TEST(Reconstruct, RoundTripGivesTypePiDatum) {
  auto cat = fixtures::catalog(3, 4);
  const auto& reg = fixtures::registry(3, 4);
  auto d = typepi::trivial_type_pi(fixtures::algebra({1, 1}), 3, 4, cat);
  auto a = reconstruct::build_algebra(d, reg, reconstruct::cutoff_from_spins(reg, {0, 1, 2}));
  auto rt = reconstruct::round_trip(a, reg, 2, cat);
  EXPECT_TRUE(rt.pass) << rt.max_residual;
}

TEST(Reconstruct, CutoffMustContainPiAndTrivial) {
  auto cat = fixtures::catalog(3, 2);
  const auto& reg = fixtures::registry(3, 2);
  auto d = typepi::trivial_type_pi(fixtures::algebra({1}), 3, 2, cat);
  EXPECT_THROW(reconstruct::build_algebra(d, reg, reconstruct::cutoff_from_spins(reg, {0, 2})), InvalidCutoffError);
  EXPECT_THROW(reconstruct::cutoff_from_spins(reg, {5}), InvalidCutoffError);
}

TEST(Reconstruct, TruncatedProductsAreFlagged) {
  auto a = build({1});
  const auto& reg = fixtures::registry(3, 2);
  const int s2 = *reg.id_for_spin(2);
  EXPECT_TRUE(a.block(s2, s2).truncated);
  EXPECT_FALSE(a.block(reg.pi_id(), reg.pi_id()).truncated);
}
