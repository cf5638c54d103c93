#include <gtest/gtest.h>

#include "ncfb/liegroup.hpp"
#include "ncfb/numeric.hpp"
#include "support.hpp"

using namespace ncfb;

TEST(Numeric, NullSpaceOfRankDeficientCommutatorSystem) {
  // kron(I, P) - kron(P^T, I) for a rank-3 projection P on C^6 has a null space of dimension 9 + 9.
  Matrix p = Matrix::Zero(6, 6);
  p.topLeftCorner(3, 3).setIdentity();
  Matrix q = Matrix::Identity(6, 6) - p;
  Matrix id = Matrix::Identity(6, 6);
  Matrix sys(4 * 36, 36);
  sys << numeric::kron(id, p) - numeric::kron(p.transpose(), id), numeric::kron(id, q) - numeric::kron(q.transpose(), id),
      numeric::kron(id, p) - numeric::kron(p.transpose(), id), numeric::kron(id, q) - numeric::kron(q.transpose(), id);
  Matrix ns = numeric::null_space(sys, 1e-7, 1.0);
  EXPECT_EQ(ns.cols(), 18);
  EXPECT_TRUE(ns.allFinite());
  EXPECT_LT((sys * ns).norm(), 1e-10);
  EXPECT_LT((ns.adjoint() * ns - Matrix::Identity(18, 18)).norm(), 1e-10);
}

TEST(Numeric, OpNormMatchesJacobi) {
  numeric::Rng rng(7);
  for (int rows : {3, 20, 200}) {
    Matrix a(rows, 17);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.complex_normal();
    Eigen::JacobiSVD<Matrix> svd(a);
    EXPECT_NEAR(numeric::op_norm(a), svd.singularValues()(0), 1e-8 * svd.singularValues()(0));
  }
}

TEST(Numeric, RankAndColumnSpace) {
  Matrix a(4, 3);
  a << 1, 2, 3, 2, 4, 6, 0, 1, 1, 1, 3, 4;
  EXPECT_EQ(numeric::rank(a, 1e-10), 2);
  Matrix c = numeric::column_space(a, 1e-10);
  EXPECT_EQ(c.cols(), 2);
  EXPECT_LT((a - c * c.adjoint() * a).norm(), 1e-10);
}

TEST(Numeric, PolarUnitaryAndSquareRoots) {
  numeric::Rng rng(11);
  Matrix f(5, 5);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.complex_normal();
  Matrix u = numeric::polar_unitary(f);
  EXPECT_LT((u.adjoint() * u - Matrix::Identity(5, 5)).norm(), 1e-10);
  Matrix pos = f.adjoint() * f + Matrix::Identity(5, 5);
  Matrix s = numeric::psd_sqrt(pos);
  EXPECT_LT((s * s - pos).norm(), 1e-9);
  EXPECT_LT((numeric::psd_inv_sqrt(pos, 1e-12) * s - Matrix::Identity(5, 5)).norm(), 1e-9);
}

TEST(Numeric, KronMixedProduct) {
  numeric::Rng rng(3);
  auto random = [&](int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.complex_normal();
    return m;
  };
  Matrix a = random(2, 3), b = random(3, 2), c = random(3, 4), d = random(2, 5);
  EXPECT_LT((numeric::kron(a, b) * numeric::kron(c, d) - numeric::kron(a * c, b * d)).norm(), 1e-10);
}

TEST(LieGroup, BasisSatisfiesBracketRelations) {
  for (int n : {2, 3, 4}) {
    auto rep = liegroup::standard_rep(n);
    EXPECT_EQ(static_cast<int>(liegroup::so_basis(n).generators.size()), n * (n - 1) / 2);
    EXPECT_LT(rep.structure_residual(), 1e-12);
  }
}

TEST(LieGroup, ExponentialIsSpecialOrthogonal) {
  auto g = liegroup::random_group_element(4, 99);
  const RealMatrix& m = g.matrix();
  EXPECT_LT((m.transpose() * m - RealMatrix::Identity(4, 4)).norm(), 1e-12);
  EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
  auto back = liegroup::GroupElement::from_matrix(liegroup::so_basis(4), m);
  EXPECT_LT((back.matrix() - m).norm(), 1e-10);
}

TEST(LieGroup, FromMatrixRejectsReflections) {
  RealMatrix r = RealMatrix::Identity(3, 3);
  r(0, 0) = -1.0;
  EXPECT_THROW(liegroup::GroupElement::from_matrix(liegroup::so_basis(3), r), Error);
}

TEST(LieGroup, TensorPowersAndConjugates) {
  auto v = liegroup::standard_rep(3);
  auto v3 = liegroup::tensor_power(v, 3);
  EXPECT_EQ(v3.dim(), 27);
  EXPECT_LT(v3.structure_residual(), 1e-11);
  auto g = liegroup::random_group_element(3, 5);
  Matrix lhs = liegroup::rep_matrix(liegroup::tensor(v, v), g);
  Matrix rv = liegroup::rep_matrix(v, g);
  EXPECT_LT((lhs - numeric::kron(rv, rv)).norm(), 1e-10);
  Matrix conj = liegroup::rep_matrix(liegroup::conjugate(v), g);
  EXPECT_LT((conj - rv.conjugate()).norm(), 1e-10);
}

TEST(LieGroup, CasimirIsScalarOnSpinTwo) {
  const auto& reg = fixtures::registry(3, 2);
  auto id = reg.id_for_spin(2);
  ASSERT_TRUE(id.has_value());
  Matrix c = liegroup::casimir(reg.entry(*id).rep);
  const Complex lambda = c(0, 0);
  EXPECT_LT((c - lambda * Matrix::Identity(c.rows(), c.cols())).norm(), 1e-9);
}
