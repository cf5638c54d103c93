#include "ncfb/so2.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ncfb/numeric.hpp"

namespace ncfb::so2 {

namespace {

using numeric::kron;

Matrix identity(int d) { return Matrix::Identity(d, d); }

double norm_or_zero(const Matrix& m) { return m.size() == 0 ? 0.0 : numeric::op_norm(m); }

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

int sign(int k) { return k > 0 ? 1 : (k < 0 ? -1 : 0); }

Vector random_vector(int d, numeric::Rng& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.complex_normal();
  if (d > 0) v /= v.norm();
  return v;
}

// Span of the vectors <x_i, y_j> inside B.
int span_rank(const std::vector<Vector>& values, int nb) {
  if (values.empty()) return 0;
  Matrix m(nb, static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = values[i];
  return numeric::rank(m, 1e-9);
}

}  // namespace

Vector MoritaBimodule::left_product(const Vector& x, const Vector& y) const {
  Vector out(algebra().dim());
  for (int b = 0; b < algebra().dim(); ++b) out(b) = y.dot(left_inner[b] * x);
  return out;
}

std::vector<MoritaCheck> check_morita(const MoritaBimodule& n, double tol) {
  std::vector<MoritaCheck> out;
  const auto& alg = n.algebra();
  const int nb = alg.dim();
  const int d = n.dim();
  for (const auto& a : hilbmod::check_axioms(n.corr, tol)) out.push_back({"right-" + a.axiom, a.residual, a.pass});
  if (static_cast<int>(n.left_inner.size()) != nb) throw ShapeError("left inner product needs one matrix per basis element");
  for (const auto& m : n.left_inner)
    if (m.rows() != d || m.cols() != d) throw ShapeError("left inner product matrices must be d x d");

  auto e = [&](int i) {
    Vector v = Vector::Zero(d);
    v(i) = 1.0;
    return v;
  };
  double lin = 0.0, herm = 0.0, compat = 0.0, imprim = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Vector x = e(i), y = e(j);
      Vector xy = n.left_product(x, y);
      herm = std::max(herm, max_abs(alg.adjoint(xy) - n.left_product(y, x)));
      for (int b = 0; b < nb; ++b) {
        Vector eb = alg.basis_vector(b);
        lin = std::max(lin, max_abs(n.left_product(n.corr.left()[b] * x, y) - alg.multiply(eb, xy)));
        compat = std::max(compat, max_abs(n.left_product(n.corr.right()[b] * x, y) -
                                          n.left_product(x, n.corr.right_action(alg.adjoint(eb)) * y)));
      }
      for (int k = 0; k < d; ++k) {
        Vector z = e(k);
        imprim = std::max(imprim, max_abs(n.corr.left_action(xy) * z - n.corr.right_action(n.right_product(y, z)) * x));
      }
    }
  out.push_back({"left-linearity", lin, lin <= tol});
  out.push_back({"left-hermitian", herm, herm <= tol});
  out.push_back({"left-compatibility", compat, compat <= tol});
  out.push_back({"imprimitivity", imprim, imprim <= tol});

  // Positivity of <x,x> for the left product on basis and random vectors.
  double pos = 0.0;
  numeric::Rng rng(0x90F);
  for (int k = 0; k < d + 4; ++k) {
    Vector x = k < d ? e(k) : random_vector(d, rng);
    for (const auto& blk : alg.to_blocks(n.left_product(x, x))) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (blk + blk.adjoint()), Eigen::EigenvaluesOnly);
      pos = std::max(pos, std::max(0.0, -es.eigenvalues().minCoeff()));
    }
  }
  out.push_back({"left-positivity", pos, pos <= tol});

  std::vector<Vector> lv, rv;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      lv.push_back(n.left_product(e(i), e(j)));
      rv.push_back(n.right_product(e(i), e(j)));
    }
  const int lr = span_rank(lv, nb), rr = span_rank(rv, nb);
  out.push_back({"left-fullness", static_cast<double>(nb - lr), lr == nb});
  out.push_back({"right-fullness", static_cast<double>(nb - rr), rr == nb});
  return out;
}

MoritaBimodule make_morita(const Correspondence& corr, const std::vector<Matrix>& left_inner, double tol) {
  MoritaBimodule n{corr, left_inner};
  for (const auto& c : check_morita(n, tol))
    if (!c.pass) throw AxiomViolation(c.axiom, "residual " + std::to_string(c.residual));
  return n;
}

MoritaBimodule make_morita(const Correspondence& corr, double tol) {
  const auto& alg = corr.algebra();
  const int nb = alg.dim();
  const int d = corr.dim();
  // Solve sum_b l_b L(e_b) = (z -> x.<y,z>) for each basis pair.
  Matrix sys(static_cast<Eigen::Index>(d) * d, nb);
  for (int b = 0; b < nb; ++b) sys.col(b) = Eigen::Map<const Vector>(corr.left()[b].data(), d * d);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sys);
  std::vector<Matrix> lin(nb, Matrix::Zero(d, d));
  double res = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Matrix t = Matrix::Zero(d, d);
      for (int b = 0; b < nb; ++b) t += corr.right()[b].col(i) * corr.inner()[b].row(j);
      Vector rhs = Eigen::Map<const Vector>(t.data(), d * d);
      Vector l = cod.solve(rhs);
      res = std::max(res, (sys * l - rhs).norm());
      for (int b = 0; b < nb; ++b) lin[b](j, i) = l(b);
    }
  if (res > std::max(tol, 1e-9) * 1e3) throw AxiomViolation("imprimitivity", "no left inner product solves the relation");
  return make_morita(corr, lin, std::max(tol, 1e-9));
}

Dual dual(const MoritaBimodule& n, double tol) {
  const auto& alg = n.algebra();
  const int nb = alg.dim();
  std::vector<Matrix> left, right, inner, lin;
  for (int b = 0; b < nb; ++b) {
    const int bs = alg.star_index(b);
    left.push_back(n.corr.right()[bs].conjugate());
    right.push_back(n.corr.left()[bs].conjugate());
    inner.push_back(n.left_inner[b].transpose());
    lin.push_back(n.corr.inner()[b].transpose());
  }
  auto norm = hilbmod::normalize_correspondence(alg, n.dim(), left, right, inner, std::max(tol, 1e-9));
  for (auto& m : lin) m = norm.to_old.adjoint() * m * norm.to_old;
  Dual out;
  out.module = make_morita(norm.corr, lin, std::max(tol, 1e-9));
  out.conj_map = norm.to_new;
  return out;
}

MoritaBimodule permutation_bimodule(const std::vector<int>& perm) {
  const int m = static_cast<int>(perm.size());
  if (m == 0) throw InvalidDimensionError("permutation bimodule needs at least one point");
  std::vector<int> seen(m, 0);
  for (int p : perm) {
    if (p < 0 || p >= m || seen[p]) throw InputError("not a permutation");
    seen[p] = 1;
  }
  FiniteCStarAlgebra alg(std::vector<int>(m, 1));
  std::vector<Matrix> left(m, Matrix::Zero(m, m)), right(m, Matrix::Zero(m, m)), inner(m, Matrix::Zero(m, m)),
      lin(m, Matrix::Zero(m, m));
  for (int i = 0; i < m; ++i) {
    left[perm[i]](i, i) = 1.0;
    right[i](i, i) = 1.0;
    inner[i](i, i) = 1.0;
    lin[perm[i]](i, i) = 1.0;
  }
  auto corr = Correspondence::unchecked(alg, m, left, right, inner);
  return make_morita(corr, lin);
}

std::vector<std::string> canned_morita_kinds() { return {"trivial", "permutation", "matrix"}; }

MoritaBimodule canned_morita(const std::string& kind) {
  if (kind == "trivial") return make_morita(hilbmod::algebra_bimodule(FiniteCStarAlgebra(std::vector<int>{1})));
  if (kind == "permutation") return permutation_bimodule({1, 2, 0});
  if (kind == "matrix") return make_morita(hilbmod::algebra_bimodule(FiniteCStarAlgebra(std::vector<int>{2})));
  throw InputError("unknown Morita example: " + kind);
}

const Correspondence& FactorSystem::level(int k) const {
  auto it = levels.find(k);
  if (it == levels.end()) throw TruncationError("level " + std::to_string(k) + " is beyond the cutoff");
  return it->second;
}

const BalancedTensor& FactorSystem::product(int k1, int k2) const {
  auto it = products.find({k1, k2});
  if (it == products.end())
    throw TruncationError("product (" + std::to_string(k1) + "," + std::to_string(k2) + ") is beyond the cutoff");
  return it->second;
}

const Matrix& FactorSystem::map(int k1, int k2) const {
  auto it = psi.find({k1, k2});
  if (it == psi.end())
    throw TruncationError("Psi(" + std::to_string(k1) + "," + std::to_string(k2) + ") is beyond the cutoff");
  return it->second;
}

FactorSystem factor_system(const MoritaBimodule& n, int cutoff, double tol) {
  if (cutoff < 1) throw InvalidCutoffError("the factor system needs cutoff >= 1");
  FactorSystem fs;
  fs.cutoff = cutoff;
  fs.N = n;
  fs.Nbar = dual(n, tol);
  const auto& alg = n.algebra();
  const int nb = alg.dim();
  fs.levels[0] = hilbmod::algebra_bimodule(alg);
  fs.levels[1] = n.corr;
  fs.levels[-1] = fs.Nbar.module.corr;
  for (int k = 2; k <= cutoff; ++k)
    for (int s : {1, -1}) {
      auto bt = hilbmod::tensor_over_B(fs.levels.at(s * (k - 1)), fs.levels.at(s));
      fs.levels[s * k] = bt.product();
      fs.products.emplace(std::make_pair(s * (k - 1), s), std::move(bt));
    }
  for (int a = -cutoff; a <= cutoff; ++a)
    for (int b = -cutoff; b <= cutoff; ++b) {
      if (!fs.in_range(a + b) || fs.products.count({a, b})) continue;
      fs.products.emplace(std::make_pair(a, b), hilbmod::tensor_over_B(fs.levels.at(a), fs.levels.at(b)));
    }

  const Matrix cinv = fs.Nbar.conj_map.inverse();
  auto base = [&](int s) {
    const BalancedTensor& bt = fs.product(s, -s);
    const int d1 = bt.left_dim(), d2 = bt.right_dim();
    Matrix plain(nb, static_cast<Eigen::Index>(d1) * d2);
    for (int b = 0; b < nb; ++b) {
      // s = 1: x (x) ybar -> left <x,y>;  s = -1: xbar (x) y -> right <x,y>.
      Matrix c = s == 1 ? Matrix(cinv.transpose() * n.left_inner[b]) : Matrix(cinv.transpose() * n.corr.inner()[b]);
      for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d2; ++j) plain(b, i * d2 + j) = s == 1 ? c(j, i) : c(i, j);
    }
    return Matrix(plain * bt.embedding());
  };

  std::function<const Matrix&(int, int)> psi = [&](int k1, int k2) -> const Matrix& {
    auto it = fs.psi.find({k1, k2});
    if (it != fs.psi.end()) return it->second;
    Matrix m;
    const BalancedTensor& p12 = fs.product(k1, k2);
    if (k1 == 0) {
      m = hilbmod::left_unitor(p12, fs.level(k2));
    } else if (k2 == 0) {
      m = hilbmod::right_unitor(p12, fs.level(k1));
    } else if (sign(k1) == sign(k2)) {
      const int s = sign(k2);
      if (k2 == s) {
        m = identity(p12.dim());
      } else {
        const BalancedTensor& mn = fs.product(k1, k2 - s);
        auto mn_p = hilbmod::tensor_over_B(mn.product(), fs.level(s));
        const BalancedTensor& np = fs.product(k2 - s, s);
        Matrix a = hilbmod::associator(mn, mn_p, np, p12);
        Matrix t = hilbmod::tensor_maps(psi(k1, k2 - s), identity(fs.level(s).dim()), mn_p, fs.product(k1 + k2 - s, s));
        m = t * a.adjoint();
      }
    } else if (std::abs(k1) == 1) {
      const int s = k1;
      if (k2 == -s) {
        m = base(s);
      } else {
        const BalancedTensor& np = fs.product(-s, k2 + s);
        auto m_np = hilbmod::tensor_over_B(fs.level(s), np.product());
        Matrix step1 = hilbmod::tensor_maps(identity(fs.level(s).dim()), psi(-s, k2 + s).adjoint(), p12, m_np);
        const BalancedTensor& mn = fs.product(s, -s);
        auto mn_p = hilbmod::tensor_over_B(mn.product(), fs.level(k2 + s));
        Matrix a = hilbmod::associator(mn, mn_p, np, m_np);
        Matrix step3 =
            hilbmod::tensor_maps(psi(s, -s), identity(fs.level(k2 + s).dim()), mn_p, fs.product(0, k2 + s));
        m = psi(0, k2 + s) * step3 * a.adjoint() * step1;
      }
    } else {
      const int s = sign(k1);
      const BalancedTensor& mn = fs.product(k1 - s, s);
      const BalancedTensor& np = fs.product(s, k2);
      auto m_np = hilbmod::tensor_over_B(fs.level(k1 - s), np.product());
      Matrix a = hilbmod::associator(mn, p12, np, m_np);
      Matrix step2 =
          hilbmod::tensor_maps(identity(fs.level(k1 - s).dim()), psi(s, k2), m_np, fs.product(k1 - s, k2 + s));
      m = psi(k1 - s, k2 + s) * step2 * a;
    }
    return fs.psi.emplace(std::make_pair(k1, k2), std::move(m)).first->second;
  };
  for (const auto& kv : fs.products) psi(kv.first.first, kv.first.second);
  return fs;
}

NamedResidual associativity_check(const FactorSystem& fs, double tol) {
  double res = 0.0;
  int triples = 0;
  const int c = fs.cutoff;
  for (int a = -c; a <= c; ++a)
    for (int b = -c; b <= c; ++b)
      for (int k = -c; k <= c; ++k) {
        if (!fs.in_range(a + b) || !fs.in_range(b + k) || !fs.in_range(a + b + k)) continue;
        const BalancedTensor& ab = fs.product(a, b);
        auto ab_k = hilbmod::tensor_over_B(ab.product(), fs.level(k));
        const BalancedTensor& bk = fs.product(b, k);
        auto a_bk = hilbmod::tensor_over_B(fs.level(a), bk.product());
        Matrix assoc = hilbmod::associator(ab, ab_k, bk, a_bk);
        Matrix lhs = fs.map(a + b, k) *
                     hilbmod::tensor_maps(fs.map(a, b), identity(fs.level(k).dim()), ab_k, fs.product(a + b, k));
        Matrix rhs = fs.map(a, b + k) *
                     hilbmod::tensor_maps(identity(fs.level(a).dim()), fs.map(b, k), a_bk, fs.product(a, b + k)) * assoc;
        res = std::max(res, norm_or_zero(lhs - rhs));
        ++triples;
      }
  return {"associativity", res, res <= tol, std::to_string(triples) + " triples"};
}

std::vector<NamedResidual> flatness_checks(const FactorSystem& fs, double tol) {
  std::vector<NamedResidual> out;
  for (int s : {1, -1}) {
    // (Psi(s,-s) (x) id_s) = (id_s (x) Psi(-s,s)) up to the unitors and the associator.
    const BalancedTensor& mn = fs.product(s, -s);
    auto mn_p = hilbmod::tensor_over_B(mn.product(), fs.level(s));
    const BalancedTensor& np = fs.product(-s, s);
    auto m_np = hilbmod::tensor_over_B(fs.level(s), np.product());
    Matrix assoc = hilbmod::associator(mn, mn_p, np, m_np);
    const int ds = fs.level(s).dim();
    Matrix lhs = fs.map(0, s) * hilbmod::tensor_maps(fs.map(s, -s), identity(ds), mn_p, fs.product(0, s));
    Matrix rhs = fs.map(s, 0) * hilbmod::tensor_maps(identity(ds), fs.map(-s, s), m_np, fs.product(s, 0)) * assoc;
    double res = norm_or_zero(lhs - rhs);
    out.push_back({s == 1 ? "flatness-N" : "flatness-Nbar", res, res <= tol, ""});
  }
  return out;
}

NamedResidual psi_unitarity_check(const FactorSystem& fs, double tol) {
  double res = 0.0;
  for (const auto& [key, m] : fs.psi) {
    const BalancedTensor& bt = fs.product(key.first, key.second);
    const Correspondence& tgt = fs.level(key.first + key.second);
    if (m.rows() != m.cols()) {
      res = std::max(res, 1.0);
      continue;
    }
    res = std::max(res, norm_or_zero(m.adjoint() * m - identity(static_cast<int>(m.cols()))));
    res = std::max(res, hilbmod::left_linearity_residual(m, bt.product(), tgt));
    res = std::max(res, hilbmod::right_linearity_residual(m, bt.product(), tgt));
    res = std::max(res, hilbmod::inner_preservation_residual(m, bt.product(), tgt));
  }
  return {"psi-unitary", res, res <= tol, std::to_string(fs.psi.size()) + " maps"};
}

std::vector<std::pair<int, int>> So2Algebra::level_dims() const {
  std::vector<std::pair<int, int>> out;
  for (int k = -cutoff(); k <= cutoff(); ++k) out.emplace_back(k, level_dim(k));
  return out;
}

Vector So2Algebra::multiply(int k1, const Vector& a, int k2, const Vector& b) const {
  if (!fs.in_range(k1) || !fs.in_range(k2) || !fs.in_range(k1 + k2))
    throw TruncationError("product lands beyond the cutoff");
  const BalancedTensor& bt = fs.product(k1, k2);
  return fs.map(k1, k2) * bt.apply_surjection(a * b.transpose());
}

Vector So2Algebra::involution(int k, const Vector& a) const {
  return star.at(k) * a.conjugate();
}

Complex So2Algebra::weight(int k, double theta) const { return std::polar(1.0, k * theta); }

So2Algebra build_so2_algebra(const FactorSystem& fs) {
  So2Algebra a;
  a.fs = fs;
  const auto& alg = fs.algebra();
  Matrix s0 = Matrix::Zero(alg.dim(), alg.dim());
  for (int b = 0; b < alg.dim(); ++b) s0(b, alg.star_index(b)) = 1.0;
  a.star[0] = s0;
  a.star[1] = fs.Nbar.conj_map;
  a.star[-1] = fs.Nbar.conj_map.inverse().conjugate();
  for (int k = 2; k <= fs.cutoff; ++k)
    for (int s : {1, -1}) {
      // (u (x) e_j)^* = e_j^* (x) u^*, landing in N(-s) (x) N(-s(k-1)).
      const BalancedTensor& src = fs.product(s * (k - 1), s);
      const BalancedTensor& tgt = fs.product(-s, -s * (k - 1));
      const Matrix& psi = fs.map(-s, -s * (k - 1));
      Matrix st(fs.level(-s * k).dim(), src.dim());
      for (int c = 0; c < src.dim(); ++c) {
        Vector e = Vector::Zero(src.dim());
        e(c) = 1.0;
        Matrix w = src.lift(e);
        Matrix p = a.star.at(s) * w.conjugate().transpose() * a.star.at(s * (k - 1)).transpose();
        st.col(c) = psi * tgt.apply_surjection(p);
      }
      a.star[s * k] = st;
    }
  return a;
}

SplitReport standard_split(const So2Algebra& a, double tol) {
  SplitReport out;
  const int c = a.cutoff();
  const auto& alg = a.fs.algebra();
  const int nb = alg.dim();
  std::map<int, int> off;
  int ambient = 0;
  for (int k = -c; k <= c; ++k) {
    off[k] = ambient;
    ambient += 2 * a.level_dim(k);
  }
  // Derivative of alpha (x) pi at the generator; invariants are its kernel.
  Matrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  Matrix gen = Matrix::Zero(ambient, ambient);
  for (int k = -c; k <= c; ++k) {
    const int d = a.level_dim(k);
    gen.block(off[k], off[k], 2 * d, 2 * d) =
        kron(identity(d), j) + Complex(0.0, k) * identity(2 * d);
  }
  Matrix e = numeric::null_space(gen, 1e-10);
  out.gamma_dim = static_cast<int>(e.cols());
  out.n_dim = a.fs.N.dim();

  Vector vp(2), vm(2);
  vp << 1.0, Complex(0.0, 1.0);
  vm << 1.0, Complex(0.0, -1.0);
  vp /= std::sqrt(2.0);
  vm /= std::sqrt(2.0);
  const int d1 = a.level_dim(1), dm1 = a.level_dim(-1);
  Matrix p_plus = Matrix::Zero(ambient, d1), p_minus = Matrix::Zero(ambient, dm1);
  p_plus.block(off[1], 0, 2 * d1, d1) = kron(identity(d1), vp);
  p_minus.block(off[-1], 0, 2 * dm1, dm1) = kron(identity(dm1), vm);
  Matrix proj = p_plus * p_plus.adjoint() + p_minus * p_minus.adjoint();
  out.split_residual = e.size() == 0 ? 0.0 : (e - proj * e).norm();
  out.plus_dim = e.size() == 0 ? 0 : numeric::rank(p_plus.adjoint() * e, 1e-9);
  out.minus_dim = e.size() == 0 ? 0 : numeric::rank(p_minus.adjoint() * e, 1e-9);

  // Bimodule structure of Gamma(pi) from the algebra; compare with N + Nbar.
  const int g = out.gamma_dim;
  if (g > 0) {
    auto components = [&](const Vector& x) {
      std::vector<std::pair<int, std::vector<Vector>>> parts;
      for (int k = -c; k <= c; ++k) {
        const int d = a.level_dim(k);
        std::vector<Vector> comp(2, Vector::Zero(d));
        for (int i = 0; i < d; ++i)
          for (int s = 0; s < 2; ++s) comp[s](i) = x(off[k] + 2 * i + s);
        parts.emplace_back(k, comp);
      }
      return parts;
    };
    std::vector<Matrix> left(nb, Matrix::Zero(g, g)), right(nb, Matrix::Zero(g, g)), inner(nb, Matrix::Zero(g, g));
    for (int col = 0; col < g; ++col) {
      auto xp = components(e.col(col));
      for (int b = 0; b < nb; ++b) {
        Vector eb = alg.basis_vector(b);
        Vector lx = Vector::Zero(ambient), rx = Vector::Zero(ambient);
        for (const auto& [k, comp] : xp)
          for (int s = 0; s < 2; ++s) {
            if (comp[s].norm() < 1e-14) continue;
            Vector l = a.multiply(0, eb, k, comp[s]);
            Vector r = a.multiply(k, comp[s], 0, eb);
            for (int i = 0; i < l.size(); ++i) {
              lx(off[k] + 2 * i + s) += l(i);
              rx(off[k] + 2 * i + s) += r(i);
            }
          }
        left[b].col(col) = e.adjoint() * lx;
        right[b].col(col) = e.adjoint() * rx;
      }
      for (int row = 0; row < g; ++row) {
        auto yp = components(e.col(row));
        Vector acc = Vector::Zero(nb);
        for (size_t q = 0; q < xp.size(); ++q) {
          const int k = xp[q].first;
          for (int s = 0; s < 2; ++s) {
            if (yp[q].second[s].norm() < 1e-14 || xp[q].second[s].norm() < 1e-14) continue;
            acc += a.multiply(-k, a.involution(k, yp[q].second[s]), k, xp[q].second[s]);
          }
        }
        for (int b = 0; b < nb; ++b) inner[b](row, col) = acc(b);
      }
    }
    try {
      auto norm = hilbmod::normalize_correspondence(alg, g, left, right, inner, std::max(tol, 1e-9));
      auto target = hilbmod::direct_sum_corr({a.fs.N.corr, a.fs.Nbar.module.corr}).sum;
      auto iso = hilbmod::find_bimodule_unitary(norm.corr, target, std::max(tol, 1e-9));
      out.iso_residual = iso.found ? std::max(iso.bimodule_residual, iso.inner_residual) : 1.0;
    } catch (const Error&) {
      out.iso_residual = 1.0;
    }
  } else {
    out.iso_residual = 1.0;
  }
  out.pass = out.gamma_dim == 2 * out.n_dim && out.plus_dim == out.n_dim && out.minus_dim == out.n_dim &&
             out.split_residual <= 1e-8 && out.iso_residual <= 1e-8;
  return out;
}

bool So2Report::pass() const {
  return split.pass && std::all_of(checks.begin(), checks.end(), [](const NamedResidual& r) { return r.pass; });
}

const NamedResidual& So2Report::get(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw InputError("no check named " + name);
}

So2Report check_so2(const So2Algebra& a, double tol) {
  So2Report out;
  const auto& alg = a.fs.algebra();
  const int nb = alg.dim();
  const int c = a.cutoff();
  numeric::Rng rng(0x502);
  out.level_dims = a.level_dims();

  {
    double res = 0.0;
    for (int b = 0; b < nb; ++b)
      for (int bb = 0; bb < nb; ++bb) {
        Vector x = alg.basis_vector(b), y = alg.basis_vector(bb);
        res = std::max(res, max_abs(a.multiply(0, x, 0, y) - alg.multiply(x, y)));
      }
    for (int b = 0; b < nb; ++b) {
      Vector x = alg.basis_vector(b);
      res = std::max(res, max_abs(a.involution(0, x) - alg.adjoint(x)));
    }
    out.checks.push_back({"fixed-level", res, res <= tol, "level 0 is B"});
  }
  {
    double res = 0.0;
    const auto& n = a.fs.N;
    for (int b = 0; b < nb; ++b) {
      Vector eb = alg.basis_vector(b);
      for (int i = 0; i < n.dim(); ++i) {
        Vector x = Vector::Zero(n.dim());
        x(i) = 1.0;
        res = std::max(res, max_abs(a.multiply(0, eb, 1, x) - n.corr.left()[b] * x));
        res = std::max(res, max_abs(a.multiply(1, x, 0, eb) - n.corr.right()[b] * x));
      }
    }
    for (int k = 0; k < 3; ++k) {
      Vector x = random_vector(n.dim(), rng), y = random_vector(n.dim(), rng);
      res = std::max(res, max_abs(a.multiply(-1, a.involution(1, x), 1, y) - n.right_product(x, y)));
      res = std::max(res, max_abs(a.multiply(1, x, -1, a.involution(1, y)) - n.left_product(x, y)));
    }
    out.checks.push_back({"level-one", res, res <= tol, "level 1 is N with both inner products"});
  }
  {
    double inv = 0.0, anti = 0.0, inner = 0.0;
    for (int k = -c; k <= c; ++k) {
      Vector x = random_vector(a.level_dim(k), rng), y = random_vector(a.level_dim(k), rng);
      inv = std::max(inv, max_abs(a.involution(-k, a.involution(k, x)) - x));
      inner = std::max(inner, max_abs(a.multiply(-k, a.involution(k, x), k, y) - a.fs.level(k).inner_product(x, y)));
      for (int l = -c; l <= c; ++l) {
        if (!a.fs.in_range(k + l)) continue;
        Vector z = random_vector(a.level_dim(l), rng);
        Vector lhs = a.involution(k + l, a.multiply(k, x, l, z));
        Vector rhs = a.multiply(-l, a.involution(l, z), -k, a.involution(k, x));
        anti = std::max(anti, max_abs(lhs - rhs));
      }
    }
    out.checks.push_back({"involutive", inv, inv <= tol, ""});
    out.checks.push_back({"anti-multiplicative", anti, anti <= tol, ""});
    out.checks.push_back({"inner-product", inner, inner <= tol, "x^* y is the right inner product on every level"});
  }
  {
    double res = 0.0;
    for (double theta : {0.3, 1.1, 2.7})
      for (int k = -c; k <= c; ++k)
        for (int l = -c; l <= c; ++l) {
          if (!a.fs.in_range(k + l)) continue;
          Vector x = random_vector(a.level_dim(k), rng), z = random_vector(a.level_dim(l), rng);
          Vector lhs = a.weight(k + l, theta) * a.multiply(k, x, l, z);
          Vector rhs = a.multiply(k, a.weight(k, theta) * x, l, a.weight(l, theta) * z);
          res = std::max(res, max_abs(lhs - rhs));
        }
    out.checks.push_back({"grading", res, res <= tol, "weight k on level k"});
  }
  {
    std::string bad;
    double worst = 0.0;
    for (int k = -c; k <= c; ++k) {
      const int d = a.level_dim(k);
      std::vector<Vector> vals;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          Vector x = Vector::Zero(d), y = Vector::Zero(d);
          x(i) = 1.0;
          y(j) = 1.0;
          vals.push_back(a.multiply(-k, a.involution(k, x), k, y));
        }
      const int r = span_rank(vals, nb);
      if (r != nb) {
        bad += (bad.empty() ? "" : ",") + std::to_string(k);
        worst = std::max(worst, static_cast<double>(nb - r));
      }
    }
    out.checks.push_back({"freeness", worst, bad.empty(), bad.empty() ? "all levels full" : "not full at " + bad});
  }
  out.checks.push_back(associativity_check(a.fs, tol));
  for (auto& f : flatness_checks(a.fs, tol)) out.checks.push_back(f);
  out.checks.push_back(psi_unitarity_check(a.fs, std::max(tol, 1e-10)));
  out.split = standard_split(a, tol);
  return out;
}

NamedResidual round_trip(const So2Algebra& a, double tol) {
  const auto& alg = a.fs.algebra();
  const int nb = alg.dim();
  const int d = a.level_dim(1);
  // Level one of A_N as a Morita bimodule, read off from the algebra.
  std::vector<Matrix> left(nb, Matrix::Zero(d, d)), right(nb, Matrix::Zero(d, d)), inner(nb, Matrix::Zero(d, d));
  for (int j = 0; j < d; ++j) {
    Vector x = Vector::Zero(d);
    x(j) = 1.0;
    for (int b = 0; b < nb; ++b) {
      Vector eb = alg.basis_vector(b);
      left[b].col(j) = a.multiply(0, eb, 1, x);
      right[b].col(j) = a.multiply(1, x, 0, eb);
    }
    for (int i = 0; i < d; ++i) {
      Vector y = Vector::Zero(d);
      y(i) = 1.0;
      Vector v = a.multiply(-1, a.involution(1, y), 1, x);
      for (int b = 0; b < nb; ++b) inner[b](i, j) = v(b);
    }
  }
  auto norm = hilbmod::normalize_correspondence(alg, d, left, right, inner, std::max(tol, 1e-9));
  MoritaBimodule n1 = make_morita(norm.corr, std::max(tol, 1e-9));
  FactorSystem fs2 = factor_system(n1, a.cutoff(), std::max(tol, 1e-9));

  auto iso = hilbmod::find_bimodule_unitary(a.fs.N.corr, n1.corr, std::max(tol, 1e-9));
  if (!iso.found) return {"so2-round-trip", 1.0, false, "no bimodule unitary between N and level one"};
  std::map<int, Matrix> u;
  u[0] = identity(nb);
  u[1] = iso.unitary;
  u[-1] = fs2.Nbar.conj_map * iso.unitary.conjugate() * a.fs.Nbar.conj_map.inverse();
  for (int k = 2; k <= a.cutoff(); ++k)
    for (int s : {1, -1})
      u[s * k] = hilbmod::tensor_maps(u.at(s * (k - 1)), u.at(s), a.fs.product(s * (k - 1), s),
                                      fs2.product(s * (k - 1), s));
  double res = 0.0;
  for (const auto& [key, m] : a.fs.psi) {
    const int k1 = key.first, k2 = key.second;
    Matrix lhs = fs2.map(k1, k2) * hilbmod::tensor_maps(u.at(k1), u.at(k2), a.fs.product(k1, k2), fs2.product(k1, k2));
    Matrix rhs = u.at(k1 + k2) * m;
    res = std::max(res, norm_or_zero(lhs - rhs));
  }
  return {"so2-round-trip", res, res <= tol, std::to_string(a.fs.psi.size()) + " maps compared"};
}

}  // namespace ncfb::so2
