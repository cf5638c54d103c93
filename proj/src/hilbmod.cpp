#include "ncfb/hilbmod.hpp"

#include <algorithm>
#include <cmath>

#include "ncfb/numeric.hpp"

namespace ncfb::hilbmod {

FiniteCStarAlgebra::FiniteCStarAlgebra(std::vector<int> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidDimensionError("algebra needs at least one block");
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b) {
    if (blocks_[b] < 1) throw InvalidDimensionError("algebra blocks must be positive");
    offsets_.push_back(dim_);
    for (int p = 0; p < blocks_[b]; ++p)
      for (int q = 0; q < blocks_[b]; ++q) units_.push_back({b, p, q});
    dim_ += blocks_[b] * blocks_[b];
  }
}

FiniteCStarAlgebra make_algebra(const std::vector<int>& blocks) { return FiniteCStarAlgebra(blocks); }

int FiniteCStarAlgebra::star_index(int beta) const {
  MatrixUnit u = units_[beta];
  return index(u.block, u.q, u.p);
}

Vector FiniteCStarAlgebra::unit() const {
  Vector u = Vector::Zero(dim_);
  for (int b = 0; b < block_count(); ++b)
    for (int p = 0; p < blocks_[b]; ++p) u(index(b, p, p)) = 1.0;
  return u;
}

Vector FiniteCStarAlgebra::basis_vector(int beta) const {
  Vector e = Vector::Zero(dim_);
  e(beta) = 1.0;
  return e;
}

std::vector<Matrix> FiniteCStarAlgebra::to_blocks(const Vector& a) const {
  if (a.size() != dim_) throw ShapeError("algebra coordinate vector has wrong length");
  std::vector<Matrix> out;
  for (int b = 0; b < block_count(); ++b) {
    Matrix m(blocks_[b], blocks_[b]);
    for (int p = 0; p < blocks_[b]; ++p)
      for (int q = 0; q < blocks_[b]; ++q) m(p, q) = a(index(b, p, q));
    out.push_back(m);
  }
  return out;
}

Vector FiniteCStarAlgebra::from_blocks(const std::vector<Matrix>& blocks) const {
  if (static_cast<int>(blocks.size()) != block_count()) throw ShapeError("block count mismatch");
  Vector a(dim_);
  for (int b = 0; b < block_count(); ++b) {
    if (blocks[b].rows() != blocks_[b] || blocks[b].cols() != blocks_[b]) throw ShapeError("block shape mismatch");
    for (int p = 0; p < blocks_[b]; ++p)
      for (int q = 0; q < blocks_[b]; ++q) a(index(b, p, q)) = blocks[b](p, q);
  }
  return a;
}

Vector FiniteCStarAlgebra::multiply(const Vector& a, const Vector& b) const {
  auto ba = to_blocks(a), bb = to_blocks(b);
  for (size_t i = 0; i < ba.size(); ++i) ba[i] = (ba[i] * bb[i]).eval();
  return from_blocks(ba);
}

Vector FiniteCStarAlgebra::adjoint(const Vector& a) const {
  auto ba = to_blocks(a);
  for (auto& m : ba) m = m.adjoint().eval();
  return from_blocks(ba);
}

double FiniteCStarAlgebra::trace(const Vector& a) const {
  Complex t = 0.0;
  for (int b = 0; b < block_count(); ++b)
    for (int p = 0; p < blocks_[b]; ++p) t += a(index(b, p, p));
  return t.real();
}

bool FiniteCStarAlgebra::is_positive(const Vector& a, double tol) const {
  for (const auto& m : to_blocks(a)) {
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (!numeric::is_hermitian(m, tol)) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    if (es.eigenvalues().minCoeff() < -tol * scale) return false;
  }
  return true;
}

AlgebraElement::AlgebraElement(FiniteCStarAlgebra algebra, std::vector<Matrix> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  (void)algebra_.from_blocks(blocks_);
}

AlgebraElement AlgebraElement::from_coordinates(const FiniteCStarAlgebra& algebra, const Vector& coords) {
  return AlgebraElement(algebra, algebra.to_blocks(coords));
}

AlgebraElement AlgebraElement::unit(const FiniteCStarAlgebra& algebra) {
  return from_coordinates(algebra, algebra.unit());
}

AlgebraElement AlgebraElement::operator*(const AlgebraElement& other) const {
  if (algebra_ != other.algebra_) throw ShapeError("product of elements of different algebras");
  std::vector<Matrix> out;
  for (size_t i = 0; i < blocks_.size(); ++i) out.push_back(blocks_[i] * other.blocks_[i]);
  return AlgebraElement(algebra_, std::move(out));
}

AlgebraElement AlgebraElement::operator+(const AlgebraElement& other) const {
  if (algebra_ != other.algebra_) throw ShapeError("sum of elements of different algebras");
  std::vector<Matrix> out;
  for (size_t i = 0; i < blocks_.size(); ++i) out.push_back(blocks_[i] + other.blocks_[i]);
  return AlgebraElement(algebra_, std::move(out));
}

AlgebraElement AlgebraElement::adjoint() const {
  std::vector<Matrix> out;
  for (const auto& b : blocks_) out.push_back(b.adjoint());
  return AlgebraElement(algebra_, std::move(out));
}

bool AlgebraElement::is_positive(double tol) const { return algebra_.is_positive(coordinates(), tol); }

double AlgebraElement::distance(const AlgebraElement& other) const {
  double d = 0.0;
  for (size_t i = 0; i < blocks_.size(); ++i) d = std::max(d, numeric::op_norm(blocks_[i] - other.blocks_[i]));
  return d;
}

Correspondence Correspondence::unchecked(FiniteCStarAlgebra algebra, int dim, std::vector<Matrix> left,
                                         std::vector<Matrix> right, std::vector<Matrix> inner) {
  const auto n = static_cast<size_t>(algebra.dim());
  if (left.size() != n || right.size() != n || inner.size() != n)
    throw ShapeError("structure tensors need one matrix per algebra basis element");
  for (size_t b = 0; b < n; ++b)
    for (const Matrix* m : {&left[b], &right[b], &inner[b]})
      if (m->rows() != dim || m->cols() != dim) throw ShapeError("structure tensor matrices must be d x d");
  Correspondence c;
  c.algebra_ = std::move(algebra);
  c.dim_ = dim;
  c.left_ = std::move(left);
  c.right_ = std::move(right);
  c.inner_ = std::move(inner);
  return c;
}

Matrix Correspondence::left_action(const Vector& b) const {
  Matrix m = Matrix::Zero(dim_, dim_);
  for (int beta = 0; beta < algebra_.dim(); ++beta)
    if (b(beta) != 0.0) m += b(beta) * left_[beta];
  return m;
}

Matrix Correspondence::right_action(const Vector& b) const {
  Matrix m = Matrix::Zero(dim_, dim_);
  for (int beta = 0; beta < algebra_.dim(); ++beta)
    if (b(beta) != 0.0) m += b(beta) * right_[beta];
  return m;
}

Vector Correspondence::inner_product(const Vector& x, const Vector& y) const {
  Vector out(algebra_.dim());
  for (int beta = 0; beta < algebra_.dim(); ++beta) out(beta) = x.dot(inner_[beta] * y);
  return out;
}

namespace {

double norm_or_zero(const Matrix& m) { return m.size() ? numeric::op_norm(m) : 0.0; }

}  // namespace

std::vector<AxiomCheck> check_axioms(const FiniteCStarAlgebra& alg, int d, const std::vector<Matrix>& left,
                                     const std::vector<Matrix>& right, const std::vector<Matrix>& inner, double tol) {
  const int nb = alg.dim();
  if (static_cast<int>(left.size()) != nb || static_cast<int>(right.size()) != nb ||
      static_cast<int>(inner.size()) != nb)
    throw ShapeError("structure tensors need one matrix per algebra basis element");
  for (int b = 0; b < nb; ++b)
    for (const Matrix* m : {&left[b], &right[b], &inner[b]})
      if (m->rows() != d || m->cols() != d) throw ShapeError("structure tensor matrices must be d x d");

  double scale = 1.0;
  for (int b = 0; b < nb; ++b)
    scale = std::max({scale, norm_or_zero(left[b]), norm_or_zero(right[b]), norm_or_zero(inner[b])});
  const Matrix id = Matrix::Identity(d, d);
  double r_mod = 0, r_unit = 0, l_hom = 0, l_unit = 0, bimod = 0, l_adj = 0, blin = 0, herm = 0, pos = 0, nondeg = 0;

  Matrix sum_r = Matrix::Zero(d, d), sum_l = Matrix::Zero(d, d), gram = Matrix::Zero(d, d);
  for (int bl = 0; bl < alg.block_count(); ++bl)
    for (int p = 0; p < alg.blocks()[bl]; ++p) {
      sum_r += right[alg.index(bl, p, p)];
      sum_l += left[alg.index(bl, p, p)];
      gram += inner[alg.index(bl, p, p)];
    }
  r_unit = norm_or_zero(sum_r - id);
  l_unit = norm_or_zero(sum_l - id);

  for (int b = 0; b < nb; ++b) {
    MatrixUnit ub = alg.unit_of(b);
    for (int c = 0; c < nb; ++c) {
      MatrixUnit uc = alg.unit_of(c);
      Matrix prod_r = Matrix::Zero(d, d), prod_l = Matrix::Zero(d, d);
      if (ub.block == uc.block && ub.q == uc.p) {
        int bc = alg.index(ub.block, ub.p, uc.q);
        prod_r = right[bc];
        prod_l = left[bc];
      }
      r_mod = std::max(r_mod, norm_or_zero(right[c] * right[b] - prod_r));
      l_hom = std::max(l_hom, norm_or_zero(left[b] * left[c] - prod_l));
      bimod = std::max(bimod, norm_or_zero(left[b] * right[c] - right[c] * left[b]));
      l_adj = std::max(l_adj, norm_or_zero(left[b].adjoint() * inner[c] - inner[c] * left[alg.star_index(b)]));
      // <x, y.e_b>_c = [<x,y> e_b]_c
      Matrix expect = Matrix::Zero(d, d);
      if (uc.block == ub.block && uc.q == ub.q) expect = inner[alg.index(uc.block, uc.p, ub.p)];
      blin = std::max(blin, norm_or_zero(inner[c] * right[b] - expect));
    }
    herm = std::max(herm, norm_or_zero(inner[alg.star_index(b)] - inner[b].adjoint()));
  }

  for (int bl = 0; bl < alg.block_count(); ++bl) {
    const int n = alg.blocks()[bl];
    Matrix big(d * n, d * n);
    for (int a = 0; a < d; ++a)
      for (int p = 0; p < n; ++p)
        for (int bb = 0; bb < d; ++bb)
          for (int q = 0; q < n; ++q) big(a * n + p, bb * n + q) = inner[alg.index(bl, p, q)](a, bb);
    if (big.size()) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (big + big.adjoint()), Eigen::EigenvaluesOnly);
      pos = std::max(pos, std::max(0.0, -es.eigenvalues().minCoeff()));
    }
  }
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.adjoint()), Eigen::EigenvaluesOnly);
    double emin = es.eigenvalues().minCoeff();
    double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    nondeg = emin > tol * std::max(emax, 1e-300) * 10 ? 0.0 : std::max(1.0, -emin);
  }

  const double limit = tol * scale * 10;
  auto mk = [limit](const char* name, double r) { return AxiomCheck{name, r, r <= limit}; };
  return {mk("right-module", r_mod),       mk("right-unit", r_unit),   mk("left-homomorphism", l_hom),
          mk("left-unit", l_unit),         mk("bimodule", bimod),      mk("left-adjointable", l_adj),
          mk("B-linearity", blin),         mk("inner-hermitian", herm), mk("positivity", pos),
          mk("nondegeneracy", nondeg)};
}

std::vector<AxiomCheck> check_axioms(const Correspondence& m, double tol) {
  return check_axioms(m.algebra(), m.dim(), m.left(), m.right(), m.inner(), tol);
}

Normalized normalize_correspondence(const FiniteCStarAlgebra& alg, int d, const std::vector<Matrix>& left,
                                    const std::vector<Matrix>& right, const std::vector<Matrix>& inner, double tol) {
  for (const auto& c : check_axioms(alg, d, left, right, inner, tol))
    if (!c.pass) throw AxiomViolation(c.axiom, "residual " + std::to_string(c.residual));
  Matrix gram = Matrix::Zero(d, d);
  for (int bl = 0; bl < alg.block_count(); ++bl)
    for (int p = 0; p < alg.blocks()[bl]; ++p) gram += inner[alg.index(bl, p, p)];
  Normalized out;
  out.to_new = numeric::psd_sqrt(gram);
  out.to_old = d ? numeric::psd_inv_sqrt(gram, 1e-14) : Matrix(0, 0);
  std::vector<Matrix> l, r, in;
  for (int b = 0; b < alg.dim(); ++b) {
    l.push_back(out.to_new * left[b] * out.to_old);
    r.push_back(out.to_new * right[b] * out.to_old);
    in.push_back(out.to_old * inner[b] * out.to_old);
  }
  out.corr = Correspondence::unchecked(alg, d, std::move(l), std::move(r), std::move(in));
  return out;
}

Correspondence make_correspondence(const FiniteCStarAlgebra& alg, int d, const std::vector<Matrix>& left,
                                   const std::vector<Matrix>& right, const std::vector<Matrix>& inner, double tol) {
  return normalize_correspondence(alg, d, left, right, inner, tol).corr;
}

Correspondence algebra_bimodule(const FiniteCStarAlgebra& alg) {
  const int n = alg.dim();
  std::vector<Matrix> l(n, Matrix::Zero(n, n)), r(n, Matrix::Zero(n, n)), in(n, Matrix::Zero(n, n));
  for (int b = 0; b < n; ++b) {
    MatrixUnit ub = alg.unit_of(b);
    for (int c = 0; c < n; ++c) {
      MatrixUnit uc = alg.unit_of(c);
      if (ub.block == uc.block && ub.q == uc.p) l[b](alg.index(ub.block, ub.p, uc.q), c) = 1.0;
      if (uc.block == ub.block && uc.q == ub.p) r[b](alg.index(uc.block, uc.p, ub.q), c) = 1.0;
      // e_b^* e_c = e_(q_b p_b) e_c
      if (ub.block == uc.block && ub.p == uc.p) in[alg.index(ub.block, ub.q, uc.q)](b, c) = 1.0;
    }
  }
  return Correspondence::unchecked(alg, n, std::move(l), std::move(r), std::move(in));
}

Correspondence free_module(const FiniteCStarAlgebra& alg, int multiplicity) {
  Correspondence b = algebra_bimodule(alg);
  Matrix id = Matrix::Identity(multiplicity, multiplicity);
  std::vector<Matrix> l, r, in;
  for (int beta = 0; beta < alg.dim(); ++beta) {
    l.push_back(numeric::kron(b.left()[beta], id));
    r.push_back(numeric::kron(b.right()[beta], id));
    in.push_back(numeric::kron(b.inner()[beta], id));
  }
  return Correspondence::unchecked(alg, alg.dim() * multiplicity, std::move(l), std::move(r), std::move(in));
}

Correspondence zero_module(const FiniteCStarAlgebra& alg) {
  std::vector<Matrix> z(alg.dim(), Matrix(0, 0));
  return Correspondence::unchecked(alg, 0, z, z, z);
}

BalancedTensor tensor_over_B(const Correspondence& m, const Correspondence& n) {
  if (m.algebra() != n.algebra()) throw IncompatibilityError("tensor product over different algebras");
  const FiniteCStarAlgebra& alg = m.algebra();
  BalancedTensor t;
  t.dm_ = m.dim();
  t.dn_ = n.dim();
  int total = 0;
  for (int i = 0; i < alg.block_count(); ++i) {
    const int e11 = alg.index(i, 0, 0);
    Matrix x = m.dim() ? numeric::projection_range(m.right()[e11]) : Matrix(0, 0);
    Matrix y = n.dim() ? numeric::projection_range(n.left()[e11]) : Matrix(0, 0);
    if (!m.dim()) x = Matrix(0, 0);
    if (!n.dim()) y = Matrix(0, 0);
    std::vector<Matrix> as, bs;
    for (int p = 0; p < alg.blocks()[i]; ++p) {
      as.push_back(x.adjoint() * m.right()[alg.index(i, p, 0)]);
      bs.push_back(y.adjoint() * n.left()[alg.index(i, 0, p)]);
    }
    t.offsets_.push_back(total);
    total += static_cast<int>(x.cols() * y.cols());
    t.x_.push_back(std::move(x));
    t.y_.push_back(std::move(y));
    t.a_.push_back(std::move(as));
    t.b_.push_back(std::move(bs));
  }
  std::vector<Matrix> l, r, in;
  for (int beta = 0; beta < alg.dim(); ++beta) {
    Matrix lb = Matrix::Zero(total, total), rb = Matrix::Zero(total, total), ib = Matrix::Zero(total, total);
    for (int i = 0; i < alg.block_count(); ++i) {
      const Matrix& x = t.x_[i];
      const Matrix& y = t.y_[i];
      const auto a = x.cols(), b = y.cols();
      if (a * b == 0) continue;
      const int o = t.offsets_[i];
      lb.block(o, o, a * b, a * b) = numeric::kron(x.adjoint() * m.left()[beta] * x, Matrix::Identity(b, b));
      rb.block(o, o, a * b, a * b) = numeric::kron(Matrix::Identity(a, a), y.adjoint() * n.right()[beta] * y);
      ib.block(o, o, a * b, a * b) = numeric::kron(Matrix::Identity(a, a), y.adjoint() * n.inner()[beta] * y);
    }
    l.push_back(std::move(lb));
    r.push_back(std::move(rb));
    in.push_back(std::move(ib));
  }
  t.product_ = Correspondence::unchecked(alg, total, std::move(l), std::move(r), std::move(in));
  return t;
}

Vector BalancedTensor::apply_surjection(const Matrix& w) const {
  Vector out = Vector::Zero(dim());
  for (size_t i = 0; i < x_.size(); ++i) {
    const auto a = x_[i].cols(), b = y_[i].cols();
    if (a * b == 0) continue;
    Matrix acc = Matrix::Zero(a, b);
    for (size_t p = 0; p < a_[i].size(); ++p) acc += a_[i][p] * w * b_[i][p].transpose();
    for (Eigen::Index s = 0; s < a; ++s)
      for (Eigen::Index u = 0; u < b; ++u) out(offsets_[i] + s * b + u) = acc(s, u);
  }
  return out;
}

Matrix BalancedTensor::lift(const Vector& v) const {
  Matrix w = Matrix::Zero(dm_, dn_);
  for (size_t i = 0; i < x_.size(); ++i) {
    const auto a = x_[i].cols(), b = y_[i].cols();
    if (a * b == 0) continue;
    Matrix vi(a, b);
    for (Eigen::Index s = 0; s < a; ++s)
      for (Eigen::Index u = 0; u < b; ++u) vi(s, u) = v(offsets_[i] + s * b + u);
    w += x_[i] * vi * y_[i].transpose();
  }
  return w;
}

Matrix BalancedTensor::surjection() const {
  Matrix q = Matrix::Zero(dim(), static_cast<Eigen::Index>(dm_) * dn_);
  for (size_t i = 0; i < x_.size(); ++i) {
    const auto a = x_[i].cols(), b = y_[i].cols();
    if (a * b == 0) continue;
    for (size_t p = 0; p < a_[i].size(); ++p) q.middleRows(offsets_[i], a * b) += numeric::kron(a_[i][p], b_[i][p]);
  }
  return q;
}

Matrix BalancedTensor::embedding() const {
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(dm_) * dn_, dim());
  for (size_t i = 0; i < x_.size(); ++i) {
    const auto a = x_[i].cols(), b = y_[i].cols();
    if (a * b == 0) continue;
    s.middleCols(offsets_[i], a * b) = numeric::kron(x_[i], y_[i]);
  }
  return s;
}

Matrix tensor_maps(const Matrix& f, const Matrix& g, const BalancedTensor& src, const BalancedTensor& tgt) {
  if (f.rows() != tgt.left_dim() || f.cols() != src.left_dim() || g.rows() != tgt.right_dim() ||
      g.cols() != src.right_dim())
    throw ShapeError("tensor_maps: factor shapes do not match the balanced tensors");
  Matrix out = Matrix::Zero(tgt.dim(), src.dim());
  const int nblocks = src.product().algebra().block_count();
  for (int i = 0; i < nblocks; ++i) {
    const auto sa = src.left_basis(i).cols(), sb = src.right_basis(i).cols();
    const auto ta = tgt.left_basis(i).cols(), tb = tgt.right_basis(i).cols();
    if (sa * sb == 0 || ta * tb == 0) continue;
    out.block(tgt.block_offset(i), src.block_offset(i), ta * tb, sa * sb) =
        numeric::kron(tgt.left_basis(i).adjoint() * f * src.left_basis(i),
                      tgt.right_basis(i).adjoint() * g * src.right_basis(i));
  }
  return out;
}

Matrix associator(const BalancedTensor& mn, const BalancedTensor& mn_p, const BalancedTensor& np,
                  const BalancedTensor& m_np) {
  const int dm = mn.left_dim(), dn = mn.right_dim(), dp = np.right_dim();
  if (mn_p.left_dim() != mn.dim() || m_np.right_dim() != np.dim() || m_np.left_dim() != dm ||
      np.left_dim() != dn || mn_p.right_dim() != dp)
    throw ShapeError("associator: balanced tensors are not compatible");
  const int dmn = mn.dim();
  // rows_by_x[x] has row u equal to row x of the plain lift of basis vector u of M (x) N.
  std::vector<Matrix> rows_by_x(dm, Matrix(dmn, dn));
  for (int u = 0; u < dmn; ++u) {
    Vector e = Vector::Zero(dmn);
    e(u) = 1.0;
    Matrix lu = mn.lift(e);
    for (int x = 0; x < dm; ++x) rows_by_x[x].row(u) = lu.row(x);
  }
  Matrix out(m_np.dim(), mn_p.dim());
  for (int c = 0; c < mn_p.dim(); ++c) {
    Vector e = Vector::Zero(mn_p.dim());
    e(c) = 1.0;
    Matrix w1 = mn_p.lift(e);
    Matrix w2(dm, np.dim());
    for (int x = 0; x < dm; ++x) w2.row(x) = np.apply_surjection(rows_by_x[x].transpose() * w1).transpose();
    out.col(c) = m_np.apply_surjection(w2);
  }
  return out;
}

Matrix left_unitor(const BalancedTensor& bm, const Correspondence& m) {
  Matrix out(m.dim(), bm.dim());
  for (int c = 0; c < bm.dim(); ++c) {
    Vector e = Vector::Zero(bm.dim());
    e(c) = 1.0;
    Matrix w = bm.lift(e);
    Vector acc = Vector::Zero(m.dim());
    for (int g = 0; g < m.algebra().dim(); ++g) acc += m.left()[g] * w.row(g).transpose();
    out.col(c) = acc;
  }
  return out;
}

Matrix right_unitor(const BalancedTensor& mb, const Correspondence& m) {
  Matrix out(m.dim(), mb.dim());
  for (int c = 0; c < mb.dim(); ++c) {
    Vector e = Vector::Zero(mb.dim());
    e(c) = 1.0;
    Matrix w = mb.lift(e);
    Vector acc = Vector::Zero(m.dim());
    for (int g = 0; g < m.algebra().dim(); ++g) acc += m.right()[g] * w.col(g);
    out.col(c) = acc;
  }
  return out;
}

DirectSum direct_sum_corr(const std::vector<Correspondence>& parts) {
  if (parts.empty()) throw ShapeError("direct sum of an empty list");
  const FiniteCStarAlgebra& alg = parts[0].algebra();
  DirectSum out;
  int total = 0;
  for (const auto& p : parts) {
    if (p.algebra() != alg) throw ShapeError("direct sum over different algebras");
    out.offsets.push_back(total);
    total += p.dim();
  }
  std::vector<Matrix> l, r, in;
  for (int b = 0; b < alg.dim(); ++b) {
    Matrix lb = Matrix::Zero(total, total), rb = Matrix::Zero(total, total), ib = Matrix::Zero(total, total);
    for (size_t k = 0; k < parts.size(); ++k) {
      const int o = out.offsets[k], d = parts[k].dim();
      lb.block(o, o, d, d) = parts[k].left()[b];
      rb.block(o, o, d, d) = parts[k].right()[b];
      ib.block(o, o, d, d) = parts[k].inner()[b];
    }
    l.push_back(std::move(lb));
    r.push_back(std::move(rb));
    in.push_back(std::move(ib));
  }
  out.sum = Correspondence::unchecked(alg, total, std::move(l), std::move(r), std::move(in));
  return out;
}

double right_linearity_residual(const Matrix& f, const Correspondence& s, const Correspondence& t) {
  double r = 0.0;
  if (f.size() == 0) return 0.0;
  for (int b = 0; b < s.algebra().dim(); ++b) r = std::max(r, numeric::op_norm(f * s.right()[b] - t.right()[b] * f));
  return r;
}

double left_linearity_residual(const Matrix& f, const Correspondence& s, const Correspondence& t) {
  double r = 0.0;
  if (f.size() == 0) return 0.0;
  for (int b = 0; b < s.algebra().dim(); ++b) r = std::max(r, numeric::op_norm(f * s.left()[b] - t.left()[b] * f));
  return r;
}

double adjointability_residual(const Matrix& f, const Correspondence& s, const Correspondence& t) {
  double r = 0.0;
  if (f.size() == 0) return 0.0;
  Matrix fa = f.adjoint();
  for (int b = 0; b < s.algebra().dim(); ++b) r = std::max(r, numeric::op_norm(fa * t.inner()[b] - s.inner()[b] * fa));
  return r;
}

double inner_preservation_residual(const Matrix& u, const Correspondence& s, const Correspondence& t) {
  double r = 0.0;
  if (u.size() == 0) return 0.0;
  for (int b = 0; b < s.algebra().dim(); ++b)
    r = std::max(r, numeric::op_norm(u.adjoint() * t.inner()[b] * u - s.inner()[b]));
  return r;
}

AdjointableMap adjoint_map(const Matrix& f, const Correspondence& s, const Correspondence& t, double tol) {
  if (f.rows() != t.dim() || f.cols() != s.dim()) throw ShapeError("map shape does not match correspondences");
  double res = std::max(right_linearity_residual(f, s, t), adjointability_residual(f, s, t));
  double scale = std::max(1.0, f.size() ? numeric::op_norm(f) : 0.0);
  if (res > tol * scale * 100) throw ValidationError("map is not adjointable (residual " + std::to_string(res) + ")");
  return AdjointableMap{f};
}

SpanReport full_span_check(const Correspondence& m, double tol) {
  SpanReport rep;
  rep.algebra_dim = m.algebra().dim();
  if (m.dim() == 0) return rep;
  const int d = m.dim();
  Matrix s(m.algebra().dim(), static_cast<Eigen::Index>(d) * d);
  for (int b = 0; b < m.algebra().dim(); ++b) s.row(b) = Eigen::Map<const Vector>(m.inner()[b].data(), d * d).transpose();
  rep.rank = numeric::rank(s, std::max(tol, 1e-12) * 1e3);
  rep.full = rep.rank == rep.algebra_dim;
  return rep;
}

BimoduleIsomorphism find_bimodule_unitary(const Correspondence& src, const Correspondence& tgt, double tol,
                                          std::uint64_t seed) {
  BimoduleIsomorphism out;
  if (src.algebra() != tgt.algebra() || src.dim() != tgt.dim()) return out;
  const int d = src.dim();
  if (d == 0) {
    out.found = true;
    out.unitary = Matrix(0, 0);
    return out;
  }
  const int nb = src.algebra().dim();
  Matrix sys(2 * nb * d * d, d * d);
  Matrix id = Matrix::Identity(d, d);
  for (int b = 0; b < nb; ++b) {
    sys.middleRows((2 * b) * d * d, d * d) = numeric::kron(id, tgt.left()[b]) - numeric::kron(src.left()[b].transpose(), id);
    sys.middleRows((2 * b + 1) * d * d, d * d) =
        numeric::kron(id, tgt.right()[b]) - numeric::kron(src.right()[b].transpose(), id);
  }
  Matrix ns = numeric::null_space(sys, std::max(tol, 1e-12) * 100, 1.0);
  if (ns.cols() == 0) return out;
  numeric::Rng rng(seed);
  Vector coeff(ns.cols());
  for (Eigen::Index j = 0; j < coeff.size(); ++j) coeff(j) = rng.complex_normal();
  Vector f = ns * coeff;
  Matrix fm = Eigen::Map<Matrix>(f.data(), d, d);
  const RealVector sv = numeric::singular_values(fm);
  if (sv(sv.size() - 1) <= 1e-8 * sv(0)) return out;
  out.unitary = numeric::polar_unitary(fm);
  out.bimodule_residual = std::max(right_linearity_residual(out.unitary, src, tgt),
                                   left_linearity_residual(out.unitary, src, tgt));
  out.inner_residual = inner_preservation_residual(out.unitary, src, tgt);
  out.found = out.bimodule_residual <= std::max(tol * 10, 1e-8) && out.inner_residual <= std::max(tol * 10, 1e-8);
  return out;
}

}  // namespace ncfb::hilbmod
