#include <gtest/gtest.h>

#include "ncfb/hilbmod.hpp"
#include "ncfb/numeric.hpp"
#include "ncfb/so2.hpp"
#include "ncfb/typepi.hpp"
#include "support.hpp"

using namespace ncfb;
using hilbmod::Correspondence;
using hilbmod::FiniteCStarAlgebra;

namespace {

Vector random_vector(numeric::Rng& rng, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.complex_normal();
  return v;
}

// B-valued inner product of plain tensors in M (x)_alg N: <x (x) y, x' (x) y'> = <y, <x,x'>.y'>.
Vector plain_inner(const Correspondence& m, const Correspondence& n, const Matrix& w1, const Matrix& w2) {
  Vector out = Vector::Zero(m.algebra().dim());
  for (int x = 0; x < m.dim(); ++x)
    for (int xp = 0; xp < m.dim(); ++xp) {
      Vector b = m.inner_product(Vector::Unit(m.dim(), x), Vector::Unit(m.dim(), xp));
      Matrix act = n.left_action(b);
      for (int y = 0; y < n.dim(); ++y)
        for (int yp = 0; yp < n.dim(); ++yp) {
          const Complex c = std::conj(w1(x, y)) * w2(xp, yp);
          if (c == Complex(0.0)) continue;
          out += c * n.inner_product(Vector::Unit(n.dim(), y), act.col(yp));
        }
    }
  return out;
}

// Brute-force dimension of the completed balanced tensor: rank of the trace of the Gram form on M (x)_alg N.
int brute_force_dim(const Correspondence& m, const Correspondence& n) {
  const int dm = m.dim(), dn = n.dim();
  Matrix gram(dm * dn, dm * dn);
  for (int i = 0; i < dm * dn; ++i)
    for (int j = 0; j < dm * dn; ++j) {
      Matrix a = Matrix::Zero(dm, dn), b = Matrix::Zero(dm, dn);
      a(i / dn, i % dn) = 1.0;
      b(j / dn, j % dn) = 1.0;
      gram(i, j) = m.algebra().trace(plain_inner(m, n, a, b));
    }
  return numeric::rank(gram, 1e-10);
}

struct Pair {
  const char* name;
  Correspondence m, n;
};

std::vector<Pair> tensor_pairs() {
  auto b = fixtures::algebra({2, 1});
  auto c2 = fixtures::algebra({1, 1});
  auto perm = so2::permutation_bimodule({1, 2, 0}).corr;
  auto cat = fixtures::catalog(3, 1);
  auto bundle = typepi::bundle_type_pi(2, liegroup::random_group_elements(3, 2, 17), 3, 1, cat).M();
  return {
      {"algebra-free", hilbmod::algebra_bimodule(b), hilbmod::free_module(b, 2)},
      {"free-algebra", hilbmod::free_module(c2, 3), hilbmod::algebra_bimodule(c2)},
      {"permutation-square", perm, perm},
      {"bundle-square", bundle, bundle},
      {"zero-left", hilbmod::zero_module(c2), hilbmod::free_module(c2, 2)},
  };
}

}  // namespace

TEST(Algebra, MultiplicationMatchesBlocks) {
  auto b = fixtures::algebra({2, 1});
  EXPECT_EQ(b.dim(), 5);
  numeric::Rng rng(1);
  Vector x = random_vector(rng, 5), y = random_vector(rng, 5);
  auto bx = b.to_blocks(x), by = b.to_blocks(y);
  auto prod = b.to_blocks(b.multiply(x, y));
  for (size_t i = 0; i < bx.size(); ++i) EXPECT_LT((prod[i] - bx[i] * by[i]).norm(), 1e-12);
  auto adj = b.to_blocks(b.adjoint(x));
  for (size_t i = 0; i < bx.size(); ++i) EXPECT_LT((adj[i] - bx[i].adjoint()).norm(), 1e-12);
  EXPECT_LT((b.multiply(b.unit(), x) - x).norm(), 1e-12);
}

TEST(Algebra, RejectsEmptyBlocks) { EXPECT_THROW(FiniteCStarAlgebra(std::vector<int>{2, 0}), Error); }

TEST(Correspondence, CannedModulesSatisfyAxioms) {
  auto b = fixtures::algebra({2, 1});
  for (const auto& m : {hilbmod::algebra_bimodule(b), hilbmod::free_module(b, 3)})
    for (const auto& a : hilbmod::check_axioms(m)) EXPECT_TRUE(a.pass) << a.axiom << " " << a.residual;
}

TEST(Correspondence, NormalizationRejectsNegativeInnerProduct) {
  auto b = fixtures::algebra({1});
  std::vector<Matrix> left{Matrix::Identity(2, 2)}, right{Matrix::Identity(2, 2)}, inner{-Matrix::Identity(2, 2)};
  EXPECT_THROW(hilbmod::normalize_correspondence(b, 2, left, right, inner), AxiomViolation);
}

TEST(Correspondence, NormalizationRecoordinatizes) {
  auto b = fixtures::algebra({1});
  Matrix g(2, 2);
  g << 2.0, 0.5, 0.5, 1.0;
  std::vector<Matrix> left{Matrix::Identity(2, 2)}, right{Matrix::Identity(2, 2)}, inner{g};
  auto norm = hilbmod::normalize_correspondence(b, 2, left, right, inner);
  numeric::Rng rng(4);
  Vector x = random_vector(rng, 2), y = random_vector(rng, 2);
  Complex raw = x.dot(g * y);
  Vector nb = norm.corr.inner_product(norm.to_new * x, norm.to_new * y);
  EXPECT_NEAR(std::abs(nb(0) - raw), 0.0, 1e-12);
  EXPECT_LT((norm.to_old * norm.to_new - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(BalancedTensor, DimensionMatchesBruteForceQuotient) {
  for (const auto& p : tensor_pairs()) {
    auto t = hilbmod::tensor_over_B(p.m, p.n);
    EXPECT_EQ(t.dim(), brute_force_dim(p.m, p.n)) << p.name;
  }
}

TEST(BalancedTensor, SurjectionIsIsometricAndKillsRelations) {
  numeric::Rng rng(9);
  for (const auto& p : tensor_pairs()) {
    auto t = hilbmod::tensor_over_B(p.m, p.n);
    const int dm = p.m.dim(), dn = p.n.dim();
    if (dm == 0 || dn == 0) continue;
    for (int trial = 0; trial < 3; ++trial) {
      Matrix w1(dm, dn), w2(dm, dn);
      for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = rng.complex_normal();
      for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = rng.complex_normal();
      Vector lhs = t.product().inner_product(t.apply_surjection(w1), t.apply_surjection(w2));
      EXPECT_LT((lhs - plain_inner(p.m, p.n, w1, w2)).norm(), 1e-9) << p.name;
    }
    for (int beta = 0; beta < p.m.algebra().dim(); ++beta) {
      Vector e = p.m.algebra().basis_vector(beta);
      for (int x = 0; x < dm; ++x)
        for (int y = 0; y < dn; ++y) {
          // x.b (x) y - x (x) b.y
          Matrix rel = Matrix::Zero(dm, dn);
          rel += p.m.right_action(e).col(x) * Vector::Unit(dn, y).transpose();
          rel -= Vector::Unit(dm, x) * p.n.left_action(e).col(y).transpose();
          EXPECT_LT(t.apply_surjection(rel).norm(), 1e-10) << p.name;
        }
    }
  }
}

TEST(BalancedTensor, LiftIsARightInverse) {
  numeric::Rng rng(2);
  for (const auto& p : tensor_pairs()) {
    auto t = hilbmod::tensor_over_B(p.m, p.n);
    if (t.dim() == 0) continue;
    Vector v = random_vector(rng, t.dim());
    EXPECT_LT((t.apply_surjection(t.lift(v)) - v).norm(), 1e-10) << p.name;
  }
}

TEST(BalancedTensor, AssociatorAndUnitorsAreUnitary) {
  auto b = fixtures::algebra({2, 1});
  auto m = hilbmod::free_module(b, 2);
  auto bb = hilbmod::algebra_bimodule(b);
  auto mn = hilbmod::tensor_over_B(m, bb);
  auto mn_p = hilbmod::tensor_over_B(mn.product(), m);
  auto np = hilbmod::tensor_over_B(bb, m);
  auto m_np = hilbmod::tensor_over_B(m, np.product());
  Matrix a = hilbmod::associator(mn, mn_p, np, m_np);
  EXPECT_LT((a.adjoint() * a - Matrix::Identity(a.cols(), a.cols())).norm(), 1e-10);
  EXPECT_LT(hilbmod::left_linearity_residual(a, mn_p.product(), m_np.product()), 1e-10);
  EXPECT_LT(hilbmod::inner_preservation_residual(a, mn_p.product(), m_np.product()), 1e-10);
  Matrix lu = hilbmod::left_unitor(np, m);
  Matrix ru = hilbmod::right_unitor(mn, m);
  EXPECT_LT(hilbmod::inner_preservation_residual(lu, np.product(), m), 1e-10);
  EXPECT_LT(hilbmod::inner_preservation_residual(ru, mn.product(), m), 1e-10);
  EXPECT_LT(hilbmod::right_linearity_residual(lu, np.product(), m), 1e-10);
}

TEST(Fullness, ZeroModuleIsNotFull) {
  auto b = fixtures::algebra({1, 1});
  EXPECT_FALSE(hilbmod::full_span_check(hilbmod::zero_module(b)).full);
  auto f = hilbmod::full_span_check(hilbmod::free_module(b, 1));
  EXPECT_TRUE(f.full);
  EXPECT_EQ(f.rank, 2);
}

TEST(Fullness, HalfSupportedModuleIsNotFull) {
  auto b = fixtures::algebra({1, 1});
  // C supported on the first point only.
  std::vector<Matrix> left{Matrix::Identity(1, 1), Matrix::Zero(1, 1)};
  auto m = hilbmod::make_correspondence(b, 1, left, left, left);
  auto f = hilbmod::full_span_check(m);
  EXPECT_FALSE(f.full);
  EXPECT_EQ(f.rank, 1);
}

TEST(BimoduleUnitary, FindsConjugatedCopy) {
  auto b = fixtures::algebra({2, 1});
  auto m = hilbmod::free_module(b, 2);
  numeric::Rng rng(21);
  Matrix g(m.dim(), m.dim());
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.complex_normal();
  Matrix w = numeric::polar_unitary(g);
  std::vector<Matrix> left, right, inner;
  for (int beta = 0; beta < b.dim(); ++beta) {
    left.push_back(w * m.left()[beta] * w.adjoint());
    right.push_back(w * m.right()[beta] * w.adjoint());
    inner.push_back(w * m.inner()[beta] * w.adjoint());
  }
  auto copy = Correspondence::unchecked(b, m.dim(), left, right, inner);
  auto iso = hilbmod::find_bimodule_unitary(m, copy, 1e-9);
  ASSERT_TRUE(iso.found);
  EXPECT_LT(iso.bimodule_residual, 1e-9);
  EXPECT_LT(iso.inner_residual, 1e-9);
}

TEST(BimoduleUnitary, DistinguishesNonIsomorphicModules) {
  auto b = fixtures::algebra({1, 1});
  auto perm = so2::permutation_bimodule({1, 0}).corr;
  auto plain = hilbmod::algebra_bimodule(b);
  EXPECT_FALSE(hilbmod::find_bimodule_unitary(perm, plain, 1e-9).found);
}
