#include <gtest/gtest.h>

#include "ncfb/gamma.hpp"
#include "ncfb/typepi.hpp"
#include "support.hpp"

using namespace ncfb;
using typepi::Mutation;

namespace {

const std::vector<Mutation> kSingleConditionMutations = {Mutation::Composition, Mutation::Adjoint,
                                                         Mutation::Unit,        Mutation::Tensor,
                                                         Mutation::Injectivity, Mutation::Adjointability};

}  // namespace

TEST(TypePi, CannedValidDataPass) {
  auto cat = fixtures::catalog(3, 3);
  auto data = typepi::canned_valid_data(cat);
  ASSERT_EQ(data.size(), 5u);
  for (const auto& d : data) {
    auto r = typepi::validate(d);
    for (const auto& c : r.conditions) EXPECT_TRUE(c.pass) << d.kind << " " << c.name << " " << c.residual;
  }
}

TEST(TypePi, EachMutationTripsItsCondition) {
  auto cat = fixtures::catalog(3, 3);
  for (Mutation m : kSingleConditionMutations) {
    auto d = typepi::canned_mutation(m, cat);
    auto r = typepi::validate(d);
    const auto& c = r.get(typepi::mutation_condition(m));
    EXPECT_FALSE(c.pass) << typepi::mutation_name(m);
    EXPECT_FALSE(r.pass());
  }
}

TEST(TypePi, FlipIdentityMutationIsDetected) {
  auto cat = fixtures::catalog(3, 3);
  auto r = typepi::validate(typepi::canned_mutation(Mutation::FlipIdentity, cat));
  EXPECT_FALSE(r.pass());
  EXPECT_FALSE(r.get(typepi::mutation_condition(Mutation::FlipIdentity)).pass);
}

TEST(TypePi, MutationNamesRoundTrip) {
  for (Mutation m : kSingleConditionMutations) EXPECT_EQ(typepi::parse_mutation(typepi::mutation_name(m)), m);
  EXPECT_FALSE(typepi::parse_mutation("nonsense").has_value());
}

TEST(TypePi, TablesReproduceTrivialDatum) {
  auto cat = fixtures::catalog(3, 2);
  auto b = fixtures::algebra({1});
  auto reference = typepi::trivial_type_pi(b, 3, 2, cat);
  auto m = hilbmod::free_module(b, 3);
  std::map<std::pair<int, int>, std::vector<typepi::PlainImage>> tables;
  for (int k = 0; k <= 2; ++k)
    for (int l = 0; l <= 2; ++l)
      for (const auto& t : cat->space(k, l).basis) tables[{k, l}].push_back({t, t});
  auto d = typepi::datum_from_tables(m, Matrix::Identity(3, 3), 3, 2, cat, tables);
  EXPECT_TRUE(typepi::validate(d).pass());
  // carriers differ between the two data, so compare on the balanced tensor powers
  auto pulled = [](const typepi::TypePiDatum& x, int k, int l, size_t j) -> Matrix {
    Matrix m = x.phi[k][l][j];
    if (l == 2) m = x.mult_map(1, 1).adjoint() * m;
    if (k == 2) m = m * x.mult_map(1, 1);
    return m;
  };
  for (int k = 0; k <= 2; ++k)
    for (int l = 0; l <= 2; ++l) {
      ASSERT_EQ(d.phi[k][l].size(), reference.phi[k][l].size());
      for (size_t j = 0; j < d.phi[k][l].size(); ++j)
        EXPECT_LT((pulled(d, k, l, j) - pulled(reference, k, l, j)).norm(), 1e-9) << k << l << j;
    }
}

TEST(TypePi, MissingTableIsReported) {
  auto cat = fixtures::catalog(3, 2);
  auto b = fixtures::algebra({1});
  std::map<std::pair<int, int>, std::vector<typepi::PlainImage>> tables;
  tables[{0, 0}].push_back({Matrix::Identity(1, 1), Matrix::Identity(1, 1)});
  EXPECT_THROW(typepi::datum_from_tables(hilbmod::free_module(b, 3), Matrix::Identity(3, 3), 3, 2, cat, tables),
               IncompleteDatumError);
}

TEST(TypePi, DeficientGeneratorsDemandTables) {
  auto cat = fixtures::catalog(3, 2);
  auto b = fixtures::algebra({1});
  typepi::Generators gens;
  Matrix flip = Matrix::Zero(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) flip(j * 3 + i, i * 3 + j) = 1.0;
  gens.flip = flip;
  EXPECT_THROW(typepi::datum_from_generators(hilbmod::free_module(b, 3), Matrix::Identity(3, 3), 3, 2, cat, gens),
               Error);
}

TEST(TypePi, PhiApplyRejectsNonIntertwiners) {
  auto cat = fixtures::catalog(3, 2);
  auto d = typepi::trivial_type_pi(fixtures::algebra({1}), 3, 2, cat);
  Matrix t = Matrix::Zero(3, 3);
  t(0, 1) = 1.0;
  EXPECT_THROW(d.phi_apply(t, 1, 1), Error);
  EXPECT_LT((d.phi_apply(Matrix::Identity(3, 3), 1, 1) - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(TypePi, BundleRequiresOneTransitionPerPoint) {
  EXPECT_THROW(typepi::bundle_type_pi(2, {liegroup::GroupElement::identity(3)}, 3, 1), ShapeError);
}

class FunctorLaws : public ::testing::TestWithParam<int> {};

TEST_P(FunctorLaws, AllLawsHoldAtKThree) {
  auto cat = fixtures::catalog(3, 3);
  const auto& reg = fixtures::registry(3, 3);
  auto d = typepi::canned_valid_data(cat)[GetParam()];
  auto rep = gamma::verify_functor(d, reg, 1e-9);
  EXPECT_GT(rep.objects_checked, 0);
  for (const auto& l : rep.laws) EXPECT_LT(l.residual, 1e-8) << d.kind << " " << l.law << " " << l.detail;
}

INSTANTIATE_TEST_SUITE_P(CannedData, FunctorLaws, ::testing::Range(0, 5));

TEST(Gamma, TrivialDatumGivesFreeModules) {
  auto cat = fixtures::catalog(3, 2);
  const auto& reg = fixtures::registry(3, 2);
  auto b = fixtures::algebra({2});
  auto d = typepi::trivial_type_pi(b, 3, 2, cat);
  for (const auto& e : reg.entries()) {
    auto g = gamma::gamma_object(d, reg, e.id);
    EXPECT_EQ(g.dim(), b.dim() * e.dim) << e.id;
  }
}

TEST(Gamma, MultiplicationMapIsUnitary) {
  auto cat = fixtures::catalog(3, 2);
  const auto& reg = fixtures::registry(3, 2);
  auto d = typepi::bundle_type_pi(2, liegroup::random_group_elements(3, 2, 5), 3, 2, cat);
  auto pi = gamma::gamma_object(d, reg, reg.pi_id());
  auto m = gamma::mult_map(d, pi, pi);
  const Matrix& u = m.unitary;
  EXPECT_LT((u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())).norm(), 1e-9);
  EXPECT_LT((u * u.adjoint() - Matrix::Identity(u.rows(), u.rows())).norm(), 1e-9);
}
