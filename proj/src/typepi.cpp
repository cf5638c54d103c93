#include "ncfb/typepi.hpp"

#include <algorithm>
#include <cmath>

#include "ncfb/numeric.hpp"

namespace ncfb::typepi {

using hilbmod::algebra_bimodule;
using hilbmod::tensor_over_B;

namespace {

/// Expansion of products T'T in the basis of C_{k,m}, via a right sketch in V^k.
class CompositionExpander {
 public:
  CompositionExpander(const repcat::IntertwinerSpace& target, int dim_vk, std::uint64_t salt) : target_(target) {
    const int dm = target.target.dim();
    const int cols = std::max(2, (2 * target.dim() + dm - 1) / std::max(dm, 1));
    z_ = numeric::probe_basis(dim_vk, cols, cols, 0xFACADEULL ^ salt);
    Matrix ub(static_cast<Eigen::Index>(dm) * z_.cols(), target.dim());
    for (int r = 0; r < target.dim(); ++r) {
      Matrix uz = target.basis[r] * z_;
      ub.col(r) = Eigen::Map<const Vector>(uz.data(), uz.size());
    }
    if (target.dim() && numeric::rank(ub, 1e-10) < target.dim()) {
      z_ = Matrix::Identity(dim_vk, dim_vk);
      ub.resize(static_cast<Eigen::Index>(dm) * dim_vk, target.dim());
      for (int r = 0; r < target.dim(); ++r) ub.col(r) = Eigen::Map<const Vector>(target.basis[r].data(), target.basis[r].size());
    }
    pinv_ = target.dim() ? Matrix(ub.completeOrthogonalDecomposition().pseudoInverse()) : Matrix(0, ub.rows());
  }
  const Matrix& z() const { return z_; }
  Vector coefficients(const Matrix& prod_times_z) const {
    return pinv_ * Eigen::Map<const Vector>(prod_times_z.data(), prod_times_z.size());
  }

 private:
  const repcat::IntertwinerSpace& target_;
  Matrix z_;
  Matrix pinv_;
};

}  // namespace

const Matrix& IntertwinerCatalog::composition_constants(int k, int l, int m) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto key = std::make_tuple(k, l, m);
  auto it = composition_cache_.find(key);
  if (it != composition_cache_.end()) return it->second;
  const auto& skl = space(k, l);
  const auto& slm = space(l, m);
  const auto& skm = space(k, m);
  Matrix out = Matrix::Zero(skm.dim(), static_cast<Eigen::Index>(skl.dim()) * slm.dim());
  if (out.size()) {
    CompositionExpander expander(skm, dim_power(k), 17u * k + m);
    for (int i = 0; i < skl.dim(); ++i) {
      Matrix tz = skl.basis[i] * expander.z();
      for (int j = 0; j < slm.dim(); ++j) out.col(i + skl.dim() * j) = expander.coefficients(slm.basis[j] * tz);
    }
  }
  return composition_cache_.emplace(key, std::move(out)).first->second;
}

const Matrix& IntertwinerCatalog::tensor_constants(int k, int l) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto key = std::make_pair(k, l);
  auto it = tensor_cache_.find(key);
  if (it != tensor_cache_.end()) return it->second;
  const auto& sk = space(k, k);
  const auto& sl = space(l, l);
  const auto& skl = space(k + l, k + l);
  Matrix out(skl.dim(), static_cast<Eigen::Index>(sk.dim()) * sl.dim());
  for (int i = 0; i < sk.dim(); ++i)
    for (int j = 0; j < sl.dim(); ++j) out.col(i + sk.dim() * j) = skl.coefficients(numeric::kron(sk.basis[i], sl.basis[j]));
  return tensor_cache_.emplace(key, std::move(out)).first->second;
}

const repcat::IntertwinerSpace& IntertwinerCatalog::space(int k, int l) const {
  if (k < 0 || l < 0 || k > K || l > K) throw TruncationError("intertwiner space index exceeds K");
  return spaces[k][l];
}

std::shared_ptr<const IntertwinerCatalog> build_catalog(int n, int K, std::uint64_t seed, double tol) {
  if (K < 0) throw InvalidDimensionError("negative truncation level");
  auto cat = std::make_shared<IntertwinerCatalog>();
  cat->n = n;
  cat->K = K;
  cat->seed = seed;
  cat->tol = tol;
  liegroup::Representation pi = liegroup::standard_rep(n);
  for (int k = 0; k <= K; ++k) cat->powers.push_back(liegroup::tensor_power(pi, k));
  cat->spaces.resize(K + 1);
  for (int k = 0; k <= K; ++k)
    for (int l = 0; l <= K; ++l) {
      auto sp = repcat::intertwiner_space(cat->powers[k], cat->powers[l], tol, seed + 131u * k + l);
      for (auto& b : sp.basis) numeric::fix_phase(b);
      cat->spaces[k].push_back(std::move(sp));
    }
  return cat;
}

const BalancedTensor& TypePiDatum::product(int k, int l) const {
  auto it = products.find({k, l});
  if (it == products.end()) throw TruncationError("balanced tensor M^" + std::to_string(k) + " (x) M^" + std::to_string(l) + " not available");
  return it->second;
}

const Matrix& TypePiDatum::mult_map(int k, int l) const {
  auto it = mult.find({k, l});
  if (it == mult.end()) throw TruncationError("multiplication map m(" + std::to_string(k) + "," + std::to_string(l) + ") not available");
  return it->second;
}

Matrix TypePiDatum::phi_combination(const Vector& c, int k, int l) const {
  if (k > K || l > K) throw TruncationError("phi index exceeds K");
  const auto& table = phi.at(k).at(l);
  Matrix out = Matrix::Zero(powers[l].dim(), powers[k].dim());
  for (size_t j = 0; j < table.size(); ++j)
    if (c(j) != 0.0) out += c(j) * table[j];
  return out;
}

Matrix TypePiDatum::phi_apply(const Matrix& t, int k, int l, double tol) const {
  if (k > K || l > K) throw TruncationError("phi index exceeds K");
  const auto& sp = catalog->space(k, l);
  if (t.rows() != sp.target.dim() || t.cols() != sp.source.dim()) throw ShapeError("phi_apply: intertwiner has wrong shape");
  Vector c = sp.coefficients(t);
  double res = (t - sp.combine(c)).norm();
  if (res > tol * std::max(1.0, t.norm()) * 100)
    throw ValidationError("phi_apply: T is not in C_{k,l} (residual " + std::to_string(res) + ")");
  return phi_combination(c, k, l);
}

namespace {

struct ProductEntry {
  int a, b, c;
};

std::vector<ProductEntry> product_table(const FiniteCStarAlgebra& B) {
  std::vector<ProductEntry> out;
  for (int a = 0; a < B.dim(); ++a)
    for (int b = 0; b < B.dim(); ++b) {
      auto ua = B.unit_of(a), ub = B.unit_of(b);
      if (ua.block == ub.block && ua.q == ub.p) out.push_back({a, b, B.index(ua.block, ua.p, ub.q)});
    }
  return out;
}

/// (b (x) v) (x) (b' (x) w) -> bb' (x) v (x) w on free modules B (x) C^vk and B (x) C^vl.
Matrix free_mult(const FiniteCStarAlgebra& B, int vk, int vl, const BalancedTensor& t) {
  auto table = product_table(B);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(B.dim()) * vk * vl, t.dim());
  for (int c = 0; c < t.dim(); ++c) {
    Vector e = Vector::Zero(t.dim());
    e(c) = 1.0;
    Matrix w = t.lift(e);
    for (const auto& pe : table)
      for (int v = 0; v < vk; ++v)
        for (int u = 0; u < vl; ++u) out(static_cast<Eigen::Index>(pe.c) * vk * vl + v * vl + u, c) += w(pe.a * vk + v, pe.b * vl + u);
  }
  return out;
}

Matrix kron_power(const Matrix& g, int k) {
  Matrix out = Matrix::Identity(1, 1);
  for (int i = 0; i < k; ++i) out = numeric::kron(out, g);
  return out;
}

/// Free datum with carriers B (x) V^k and phi(T) = G_l (id (x) T) G_k^*.
TypePiDatum free_datum(const FiniteCStarAlgebra& B, int n, int K, std::shared_ptr<const IntertwinerCatalog> catalog,
                       const std::vector<Matrix>& twists, std::string kind) {
  if (!catalog) catalog = build_catalog(n, K);
  if (catalog->n != n || catalog->K < K) throw IncompatibilityError("catalog does not cover (n, K)");
  TypePiDatum d;
  d.n = n;
  d.K = K;
  d.B = B;
  d.kind = std::move(kind);
  d.catalog = catalog;
  std::vector<int> vdim;
  for (int k = 0; k <= K; ++k) {
    vdim.push_back(catalog->dim_power(k));
    d.powers.push_back(hilbmod::free_module(B, vdim[k]));
  }
  for (int k = 0; k <= K; ++k)
    for (int l = 0; k + l <= K; ++l) {
      BalancedTensor t = tensor_over_B(d.powers[k], d.powers[l]);
      d.mult[{k, l}] = free_mult(B, vdim[k], vdim[l], t);
      d.products.emplace(std::make_pair(k, l), std::move(t));
    }
  d.phi.assign(K + 1, std::vector<std::vector<Matrix>>(K + 1));
  const Matrix ib = Matrix::Identity(B.dim(), B.dim());
  for (int k = 0; k <= K; ++k)
    for (int l = 0; l <= K; ++l)
      for (const auto& t : catalog->space(k, l).basis) {
        Matrix img = numeric::kron(ib, t);
        if (!twists.empty()) img = twists[l] * img * twists[k].adjoint();
        d.phi[k][l].push_back(std::move(img));
      }
  return d;
}

}  // namespace

TypePiDatum trivial_type_pi(const FiniteCStarAlgebra& B, int n, int K, std::shared_ptr<const IntertwinerCatalog> catalog) {
  return free_datum(B, n, K, std::move(catalog), {}, "trivial");
}

TypePiDatum bundle_type_pi(int m, const std::vector<liegroup::GroupElement>& transitions, int n, int K,
                           std::shared_ptr<const IntertwinerCatalog> catalog) {
  if (m < 1) throw InvalidDimensionError("bundle needs at least one point");
  if (static_cast<int>(transitions.size()) != m) throw ShapeError("one transition per point required");
  liegroup::LieAlgebraBasis basis = liegroup::so_basis(n);
  std::vector<RealMatrix> g;
  for (const auto& t : transitions) {
    if (t.n() != n) throw IncompatibilityError("transition of the wrong size");
    g.push_back(liegroup::GroupElement::from_matrix(basis, t.matrix()).matrix());
  }
  FiniteCStarAlgebra B(std::vector<int>(m, 1));
  std::vector<Matrix> twists;
  for (int k = 0; k <= K; ++k) {
    const int vk = static_cast<int>(std::pow(n, k) + 0.5);
    Matrix gk = Matrix::Zero(m * vk, m * vk);
    for (int x = 0; x < m; ++x) gk.block(x * vk, x * vk, vk, vk) = kron_power(g[x].cast<Complex>(), k);
    twists.push_back(gk);
  }
  return free_datum(B, n, K, std::move(catalog), twists, "bundle");
}

TypePiDatum skeleton_datum(const Correspondence& M, int n, int K, std::shared_ptr<const IntertwinerCatalog> catalog) {
  if (K < 1) throw InvalidDimensionError("a datum built from M needs K >= 1");
  if (!catalog) catalog = build_catalog(n, K);
  if (catalog->n != n || catalog->K < K) throw IncompatibilityError("catalog does not cover (n, K)");
  TypePiDatum d;
  d.n = n;
  d.K = K;
  d.B = M.algebra();
  d.kind = "user";
  d.catalog = catalog;
  d.powers.resize(K + 1);
  d.powers[0] = algebra_bimodule(d.B);
  d.powers[1] = M;
  for (int s = 0; s <= K; ++s) {
    if (s >= 1) {
      BalancedTensor t = tensor_over_B(d.powers[s - 1], d.powers[1]);
      if (s >= 2) d.powers[s] = t.product();
      d.products.emplace(std::make_pair(s - 1, 1), std::move(t));
    }
    for (int k = 0; k <= s; ++k) {
      const int l = s - k;
      if (l == 1) continue;
      d.products.emplace(std::make_pair(k, l), tensor_over_B(d.powers[k], d.powers[l]));
    }
  }
  for (int s = 0; s <= K; ++s)
    for (int l = 0; l <= s; ++l) {
      const int k = s - l;
      const BalancedTensor& t = d.products.at({k, l});
      if (k == 0) {
        d.mult[{k, l}] = hilbmod::left_unitor(t, d.powers[l]);
      } else if (l == 0) {
        d.mult[{k, l}] = hilbmod::right_unitor(t, d.powers[k]);
      } else if (l == 1) {
        d.mult[{k, l}] = Matrix::Identity(t.dim(), t.dim());
      } else {
        const BalancedTensor& mn = d.products.at({k, l - 1});
        BalancedTensor mn_p = tensor_over_B(mn.product(), d.powers[1]);
        const BalancedTensor& np = d.products.at({l - 1, 1});
        Matrix a = hilbmod::associator(mn, mn_p, np, t);
        Matrix x = hilbmod::tensor_maps(d.mult.at({k, l - 1}), Matrix::Identity(M.dim(), M.dim()), mn_p,
                                        d.products.at({k + l - 1, 1}));
        d.mult[{k, l}] = x * a.adjoint();
      }
    }
  d.phi.assign(K + 1, std::vector<std::vector<Matrix>>(K + 1));
  return d;
}

namespace {

/// Surjection from plain raw coordinates (C^d)^{(x)k} (B for k = 0) onto M^k coordinates, and its right inverse.
struct PlainMaps {
  std::vector<Matrix> q, s;
};

PlainMaps plain_maps(const TypePiDatum& d, const Matrix& to_new) {
  PlainMaps pm;
  const int nb = d.B.dim();
  pm.q.push_back(Matrix::Identity(nb, nb));
  pm.s.push_back(Matrix::Identity(nb, nb));
  if (d.K >= 1) {
    pm.q.push_back(to_new);
    pm.s.push_back(to_new.inverse());
  }
  for (int k = 2; k <= d.K; ++k) {
    const BalancedTensor& t = d.product(k - 1, 1);
    const long plain = static_cast<long>(pm.q[k - 1].cols()) * to_new.cols();
    if (plain > 4096) throw InputError("plain tensor power too large for extensional phi input");
    pm.q.push_back(t.surjection() * numeric::kron(pm.q[k - 1], to_new));
    pm.s.push_back(numeric::kron(pm.s[k - 1], pm.s[1]) * t.embedding());
  }
  return pm;
}

}  // namespace

TypePiDatum datum_from_tables(const Correspondence& M, const Matrix& to_new, int n, int K,
                              std::shared_ptr<const IntertwinerCatalog> catalog,
                              const std::map<std::pair<int, int>, std::vector<PlainImage>>& tables, double tol) {
  TypePiDatum d = skeleton_datum(M, n, K, std::move(catalog));
  PlainMaps pm = plain_maps(d, to_new);
  for (int k = 0; k <= K; ++k)
    for (int l = 0; l <= K; ++l) {
      const auto& sp = d.catalog->space(k, l);
      if (sp.dim() == 0) continue;
      auto it = tables.find({k, l});
      if (it == tables.end())
        throw IncompleteDatumError("missing phi table for (" + std::to_string(k) + "," + std::to_string(l) + ")");
      const auto& pairs = it->second;
      Matrix coeff(sp.dim(), static_cast<Eigen::Index>(pairs.size()));
      std::vector<Matrix> images;
      for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& pr = pairs[i];
        if (pr.t.rows() != sp.target.dim() || pr.t.cols() != sp.source.dim())
          throw ShapeError("phi table entry T has the wrong shape at (" + std::to_string(k) + "," + std::to_string(l) + ")");
        if (pr.image.rows() != pm.q[l].cols() || pr.image.cols() != pm.s[k].rows())
          throw ShapeError("phi table image has the wrong shape at (" + std::to_string(k) + "," + std::to_string(l) + ")");
        Vector c = sp.coefficients(pr.t);
        if ((pr.t - sp.combine(c)).norm() > tol * 100 * std::max(1.0, pr.t.norm()))
          throw ValidationError("phi table entry T is not an intertwiner");
        coeff.col(i) = c;
        images.push_back(pm.q[l] * pr.image * pm.s[k]);
      }
      if (numeric::rank(coeff, 1e-8) < sp.dim())
        throw IncompleteDatumError("phi table entries do not span C_{" + std::to_string(k) + "," + std::to_string(l) + "}");
      Matrix pinv = coeff.completeOrthogonalDecomposition().pseudoInverse();
      for (int j = 0; j < sp.dim(); ++j) {
        Matrix img = Matrix::Zero(d.powers[l].dim(), d.powers[k].dim());
        for (size_t i = 0; i < images.size(); ++i) img += pinv(i, j) * images[i];
        d.phi[k][l].push_back(std::move(img));
      }
    }
  return d;
}

namespace {

struct SpanEntry {
  Matrix t;
  Matrix image;
};

bool add_to_span(std::vector<SpanEntry>& span, Matrix t, Matrix image) {
  for (const auto& e : span) {
    Complex c = (e.t.adjoint() * t).trace();
    t -= c * e.t;
    image -= c * e.image;
  }
  double nrm = t.norm();
  if (nrm <= 1e-8) return false;
  span.push_back({t / nrm, image / nrm});
  return true;
}

}  // namespace

TypePiDatum datum_from_generators(const Correspondence& M, const Matrix& to_new, int n, int K,
                                  std::shared_ptr<const IntertwinerCatalog> catalog, const Generators& gens,
                                  double tol) {
  (void)tol;
  TypePiDatum d = skeleton_datum(M, n, K, std::move(catalog));
  PlainMaps pm = plain_maps(d, to_new);
  std::vector<std::vector<std::vector<SpanEntry>>> span(K + 1, std::vector<std::vector<SpanEntry>>(K + 1));
  for (int k = 0; k <= K; ++k)
    add_to_span(span[k][k], Matrix::Identity(d.catalog->dim_power(k), d.catalog->dim_power(k)),
                Matrix::Identity(d.powers[k].dim(), d.powers[k].dim()));
  const int vn = n;
  Vector r = Vector::Zero(vn * vn);
  for (int i = 0; i < vn; ++i) r(i * vn + i) = 1.0;
  auto add_gen = [&](const std::optional<Matrix>& img, const Matrix& t, int k, int l) {
    if (!img || k > K || l > K) return;
    if (img->rows() != pm.q[l].cols() || img->cols() != pm.s[k].rows()) throw ShapeError("generator image has the wrong shape");
    add_to_span(span[k][l], t, pm.q[l] * *img * pm.s[k]);
  };
  add_gen(gens.flip, numeric::flip_matrix(vn, vn), 2, 2);
  add_gen(gens.r, Matrix(r), 0, 2);
  add_gen(gens.r_adj, Matrix(r.adjoint()), 2, 0);
  if (gens.eps && n <= K) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(std::pow(n, n) + 0.5));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    do {
      int sign = 1;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (perm[i] > perm[j]) sign = -sign;
      long idx = 0;
      for (int i = 0; i < n; ++i) idx = idx * n + perm[i];
      e(idx) = sign;
    } while (std::next_permutation(perm.begin(), perm.end()));
    add_gen(gens.eps, Matrix(e), 0, n);
  }
  const Matrix im = Matrix::Identity(M.dim(), M.dim());
  const Matrix iv = Matrix::Identity(n, n);
  for (int round = 0; round < 32; ++round) {
    bool changed = false;
    for (int k = 0; k <= K; ++k)
      for (int l = 0; l <= K; ++l) {
        std::vector<SpanEntry> current = span[k][l];
        for (const auto& e : current) {
          changed |= add_to_span(span[l][k], e.t.adjoint(), e.image.adjoint());
          if (k + 1 <= K && l + 1 <= K) {
            Matrix img_r = d.mult_map(l, 1) *
                           hilbmod::tensor_maps(e.image, im, d.product(k, 1), d.product(l, 1)) *
                           d.mult_map(k, 1).adjoint();
            changed |= add_to_span(span[k + 1][l + 1], numeric::kron(e.t, iv), img_r);
            Matrix img_l = d.mult_map(1, l) *
                           hilbmod::tensor_maps(im, e.image, d.product(1, k), d.product(1, l)) *
                           d.mult_map(1, k).adjoint();
            changed |= add_to_span(span[k + 1][l + 1], numeric::kron(iv, e.t), img_l);
          }
          for (int m = 0; m <= K; ++m) {
            std::vector<SpanEntry> next = span[l][m];
            for (const auto& f : next) changed |= add_to_span(span[k][m], f.t * e.t, f.image * e.image);
          }
        }
      }
    if (!changed) break;
  }
  for (int k = 0; k <= K; ++k)
    for (int l = 0; l <= K; ++l) {
      const auto& sp = d.catalog->space(k, l);
      if (static_cast<int>(span[k][l].size()) < sp.dim())
        throw IncompleteDatumError("generator span deficient for C_{" + std::to_string(k) + "," + std::to_string(l) +
                                   "}; supply extensional phi tables");
      for (const auto& u : sp.basis) {
        Matrix img = Matrix::Zero(d.powers[l].dim(), d.powers[k].dim());
        for (const auto& e : span[k][l]) img += (e.t.adjoint() * u).trace() * e.image;
        d.phi[k][l].push_back(std::move(img));
      }
    }
  return d;
}

bool ValidationReport::pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.pass; });
}

const ConditionResult& ValidationReport::get(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw ValidationError("no condition named " + name);
}

namespace {

constexpr int kExactLimit = 64;
constexpr int kProbes = 8;

Matrix probe(int d, std::uint64_t salt) { return numeric::probe_basis(d, kExactLimit, kProbes, 0xBADC0DEULL ^ (salt * 0x9E3779B97F4A7C15ULL)); }

double sketch(const Matrix& ex) { return ex.size() ? numeric::op_norm(ex) : 0.0; }

}  // namespace


ValidationReport validate(const TypePiDatum& d, double tol) {
  const int K = d.K;
  const auto& cat = *d.catalog;
  for (int k = 0; k <= K; ++k)
    for (int l = 0; l <= K; ++l)
      if (static_cast<int>(d.phi.at(k).at(l).size()) != cat.space(k, l).dim())
        throw IncompleteDatumError("phi table (" + std::to_string(k) + "," + std::to_string(l) + ") is incomplete");
  std::vector<Matrix> probes;
  for (int k = 0; k <= K; ++k) probes.push_back(probe(d.powers[k].dim(), k + 1));

  ValidationReport rep;
  auto record = [&rep, tol](const std::string& name, double r, std::string detail) {
    rep.conditions.push_back({name, r, r <= tol, std::move(detail)});
  };

  // (U)
  {
    double r = 0.0;
    std::string where;
    for (int k = 0; k <= K; ++k) {
      const int dv = cat.dim_power(k);
      Matrix img = d.phi_apply(Matrix::Identity(dv, dv), k, k);
      double e = sketch((img - Matrix::Identity(img.rows(), img.cols())) * probes[k]);
      if (e > r) {
        r = e;
        where = "k=" + std::to_string(k);
      }
    }
    record("U", r, where);
  }

  // (A)
  {
    std::vector<std::vector<std::vector<Matrix>>> px(K + 1, std::vector<std::vector<Matrix>>(K + 1));
    for (int k = 0; k <= K; ++k)
      for (int l = 0; l <= K; ++l)
        for (const auto& img : d.phi[k][l]) px[k][l].push_back(img * probes[k]);
    double r = 0.0;
    std::string where;
    for (int k = 0; k <= K; ++k)
      for (int l = 0; l <= K; ++l) {
        const auto& sp = cat.space(k, l);
        const auto& back = cat.space(l, k);
        for (int j = 0; j < sp.dim(); ++j) {
          Vector c = back.coefficients(sp.basis[j].adjoint());
          Matrix e = d.phi[k][l][j].adjoint() * probes[l];
          for (int q = 0; q < back.dim(); ++q)
            if (c(q) != 0.0) e -= c(q) * px[l][k][q];
          double v = sketch(e);
          if (v > r) {
            r = v;
            where = "(" + std::to_string(k) + "," + std::to_string(l) + ") basis " + std::to_string(j);
          }
        }
      }
    record("A", r, where);
  }

  // (C)
  {
    double r = 0.0;
    std::string where;
    for (int k = 0; k <= K; ++k)
      for (int m = 0; m <= K; ++m) {
        const auto& skm = cat.space(k, m);
        const Matrix& xk = probes[k];
        const Matrix& ym = probes[m];
        std::vector<Matrix> target_sk;
        for (int q = 0; q < skm.dim(); ++q) target_sk.push_back(ym.adjoint() * d.phi[k][m][q] * xk);
        for (int l = 0; l <= K; ++l) {
          const auto& skl = cat.space(k, l);
          const auto& slm = cat.space(l, m);
          if (skl.dim() == 0 || slm.dim() == 0) continue;
          const Matrix& coeff = cat.composition_constants(k, l, m);
          std::vector<Matrix> left_sk, right_sk;
          for (int j = 0; j < slm.dim(); ++j) left_sk.push_back(ym.adjoint() * d.phi[l][m][j]);
          for (int i = 0; i < skl.dim(); ++i) right_sk.push_back(d.phi[k][l][i] * xk);
          for (int i = 0; i < skl.dim(); ++i)
            for (int j = 0; j < slm.dim(); ++j) {
              Matrix lhs = left_sk[j] * right_sk[i];
              const auto c = coeff.col(i + skl.dim() * j);
              for (int q = 0; q < skm.dim(); ++q)
                if (std::abs(c(q)) > 1e-14) lhs -= c(q) * target_sk[q];
              double e = sketch(lhs);
              if (e > r) {
                r = e;
                where = "(" + std::to_string(k) + "," + std::to_string(l) + "," + std::to_string(m) + ")";
              }
            }
        }
      }
    record("C", r, where);
  }

  // (T)
  {
    double r = 0.0;
    std::string where;
    for (int k = 0; k <= K; ++k)
      for (int l = 0; k + l <= K; ++l) {
        const BalancedTensor& t = d.product(k, l);
        const Matrix& m = d.mult_map(k, l);
        Matrix x = probe(t.dim(), 1000u + 10u * k + l);
        Matrix mx = m * x;
        const auto& sk = cat.space(k, k);
        const auto& sl = cat.space(l, l);
        const auto& skl = cat.space(k + l, k + l);
        const Matrix& tconst = cat.tensor_constants(k, l);
        std::vector<Matrix> phimx;
        for (const auto& img : d.phi[k + l][k + l]) phimx.push_back(img * mx);
        for (int i = 0; i < sk.dim(); ++i)
          for (int j = 0; j < sl.dim(); ++j) {
            Matrix lhs = m * (hilbmod::tensor_maps(d.phi[k][k][i], d.phi[l][l][j], t, t) * x);
            const auto c = tconst.col(i + sk.dim() * j);
            for (int q = 0; q < skl.dim(); ++q)
              if (c(q) != 0.0) lhs -= c(q) * phimx[q];
            double e = sketch(lhs);
            if (e > r) {
              r = e;
              where = "(" + std::to_string(k) + "," + std::to_string(l) + ")";
            }
          }
      }
    record("T", r, where);
  }

  // injectivity
  {
    double worst = 0.0;
    std::string where;
    for (int k = 0; k <= K; ++k)
      for (int l = 0; l <= K; ++l) {
        const auto& sp = cat.space(k, l);
        if (sp.dim() == 0) continue;
        const Matrix& x = probes[k];
        Matrix cols(static_cast<Eigen::Index>(d.powers[l].dim()) * x.cols(), sp.dim());
        for (int j = 0; j < sp.dim(); ++j) {
          Matrix v = d.phi[k][l][j] * x;
          cols.col(j) = Eigen::Map<const Vector>(v.data(), v.size());
        }
        int rk = cols.size() ? numeric::rank(cols, 1e-6) : 0;
        if (rk < sp.dim()) {
          worst = std::max(worst, static_cast<double>(sp.dim() - rk));
          where = "rank deficit at (" + std::to_string(k) + "," + std::to_string(l) + ")";
        }
      }
    rep.conditions.push_back({"injectivity", worst, worst == 0.0, where});
  }

  // adjointability and B-bilinearity of every image
  {
    double r = 0.0;
    std::string where;
    for (int k = 0; k <= K; ++k)
      for (int l = 0; l <= K; ++l) {
        const auto& s = d.powers[k];
        const auto& t = d.powers[l];
        for (size_t j = 0; j < d.phi[k][l].size(); ++j) {
          const Matrix& f = d.phi[k][l][j];
          if (f.size() == 0) continue;
          const Matrix& x = probes[k];
          const Matrix& y = probes[l];
          Matrix fx = f * x;
          Matrix fay = f.adjoint() * y;
          double e = 0.0;
          for (int b = 0; b < d.B.dim(); ++b) {
            e = std::max(e, sketch(f * (s.right()[b] * x) - t.right()[b] * fx));
            e = std::max(e, sketch(f * (s.left()[b] * x) - t.left()[b] * fx));
            e = std::max(e, sketch(f.adjoint() * (t.inner()[b] * y) - s.inner()[b] * fay));
          }
          if (e > r) {
            r = e;
            where = "(" + std::to_string(k) + "," + std::to_string(l) + ") basis " + std::to_string(j);
          }
        }
      }
    record("adjointability", r, where);
  }

  // multiplication maps: unitary, B-bilinear, mixed associativity
  {
    double r = 0.0;
    std::string where;
    for (const auto& [kl, m] : d.mult) {
      const BalancedTensor& t = d.product(kl.first, kl.second);
      const Correspondence& tgt = d.powers[kl.first + kl.second];
      if (m.size() == 0) continue;
      Matrix x = probe(t.dim(), 2000u + kl.first * 10u + kl.second);
      double e = sketch((m.adjoint() * (m * x)) - x);
      e = std::max(e, sketch(m * (m.adjoint() * probe(tgt.dim(), 3000u + kl.first)) - probe(tgt.dim(), 3000u + kl.first)));
      for (int b = 0; b < d.B.dim(); ++b) {
        Matrix mx = m * x;
        e = std::max(e, sketch(m * (t.product().left()[b] * x) - tgt.left()[b] * mx));
        e = std::max(e, sketch(m * (t.product().right()[b] * x) - tgt.right()[b] * mx));
      }
      if (e > r) {
        r = e;
        where = "m(" + std::to_string(kl.first) + "," + std::to_string(kl.second) + ")";
      }
    }
    record("mult-unitary", r, where);
  }
  {
    double r = 0.0;
    std::string where;
    for (int k = 1; k <= K; ++k)
      for (int l = 1; k + l <= K; ++l)
        for (int m = 1; k + l + m <= K; ++m) {
          const BalancedTensor& kl = d.product(k, l);
          const BalancedTensor& lm = d.product(l, m);
          BalancedTensor kl_m = tensor_over_B(kl.product(), d.powers[m]);
          BalancedTensor k_lm = tensor_over_B(d.powers[k], lm.product());
          Matrix a = hilbmod::associator(kl, kl_m, lm, k_lm);
          const Matrix ik = Matrix::Identity(d.powers[k].dim(), d.powers[k].dim());
          const Matrix imm = Matrix::Identity(d.powers[m].dim(), d.powers[m].dim());
          Matrix x = probe(kl_m.dim(), 4000u + 100u * k + 10u * l + m);
          Matrix lhs = d.mult_map(k, l + m) * (hilbmod::tensor_maps(ik, d.mult_map(l, m), k_lm, d.product(k, l + m)) * (a * x));
          Matrix rhs = d.mult_map(k + l, m) * (hilbmod::tensor_maps(d.mult_map(k, l), imm, kl_m, d.product(k + l, m)) * x);
          double e = sketch(lhs - rhs);
          if (e > r) {
            r = e;
            where = "(" + std::to_string(k) + "," + std::to_string(l) + "," + std::to_string(m) + ")";
          }
        }
    record("mult-associativity", r, where);
  }
  return rep;
}

std::string mutation_name(Mutation m) {
  switch (m) {
    case Mutation::Composition: return "composition";
    case Mutation::Adjoint: return "adjoint";
    case Mutation::Unit: return "unit";
    case Mutation::Tensor: return "tensor";
    case Mutation::Injectivity: return "injectivity";
    case Mutation::Adjointability: return "adjointability";
    case Mutation::FlipIdentity: return "flip-identity";
  }
  return "?";
}

std::optional<Mutation> parse_mutation(const std::string& name) {
  for (Mutation m : {Mutation::Composition, Mutation::Adjoint, Mutation::Unit, Mutation::Tensor, Mutation::Injectivity,
                     Mutation::Adjointability, Mutation::FlipIdentity})
    if (mutation_name(m) == name) return m;
  return std::nullopt;
}

std::string mutation_condition(Mutation m) {
  switch (m) {
    case Mutation::Composition: return "C";
    case Mutation::Adjoint: return "A";
    case Mutation::Unit: return "U";
    case Mutation::Tensor: return "T";
    case Mutation::Injectivity: return "injectivity";
    case Mutation::Adjointability: return "adjointability";
    case Mutation::FlipIdentity: return "C";
  }
  return "?";
}

TypePiDatum mutate(const TypePiDatum& base, Mutation mut) {
  if (base.K < 2) throw TruncationError("mutations need K >= 2");
  TypePiDatum d = base;
  const bool free = d.kind == "trivial" || d.kind == "bundle";
  const int n = d.n;
  switch (mut) {
    case Mutation::Composition:
      for (auto& img : d.phi[0][2]) img *= 2.0;
      for (auto& img : d.phi[2][0]) img *= 2.0;
      break;
    case Mutation::Adjoint: {
      if (!free) throw ValidationError("adjoint mutation needs a free datum");
      Matrix a = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) a(i, i) = 1.0 + i;
      std::vector<Matrix> s;
      Matrix ak = Matrix::Identity(1, 1);
      for (int k = 0; k <= d.K; ++k) {
        s.push_back(numeric::kron(Matrix::Identity(d.B.dim(), d.B.dim()), ak));
        ak = numeric::kron(ak, a);
      }
      for (int k = 0; k <= d.K; ++k)
        for (int l = 0; l <= d.K; ++l)
          for (auto& img : d.phi[k][l]) img = s[l] * img * s[k].inverse();
      break;
    }
    case Mutation::Unit: {
      if (!free || d.B.block_count() < 2 || d.B.dim() != d.B.block_count())
        throw ValidationError("unit mutation needs a free datum over C^m with m >= 2");
      std::vector<Matrix> p;
      for (int k = 0; k <= d.K; ++k) {
        Matrix e1 = Matrix::Zero(d.B.dim(), d.B.dim());
        e1(0, 0) = 1.0;
        p.push_back(numeric::kron(e1, Matrix::Identity(d.catalog->dim_power(k), d.catalog->dim_power(k))));
      }
      for (int k = 0; k <= d.K; ++k)
        for (int l = 0; l <= d.K; ++l)
          for (auto& img : d.phi[k][l]) img = p[l] * img * p[k];
      break;
    }
    case Mutation::Tensor: {
      if (!free || d.K < 3) throw ValidationError("tensor mutation needs a free datum with K >= 3");
      Matrix a = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) a(i, i) = std::polar(1.0, 0.7 * i);
      Matrix w = numeric::kron(numeric::kron(Matrix::Identity(d.B.dim(), d.B.dim()), a), Matrix::Identity(n, n));
      const BalancedTensor& t = d.product(2, 1);
      d.mult[{2, 1}] = d.mult[{2, 1}] * hilbmod::tensor_maps(w, Matrix::Identity(d.M().dim(), d.M().dim()), t, t);
      break;
    }
    case Mutation::Injectivity:
      if (d.phi[2][2].size() < 2) throw ValidationError("injectivity mutation needs dim C_{2,2} >= 2");
      d.phi[2][2][1] = d.phi[2][2][0];
      break;
    case Mutation::Adjointability: {
      if (!free || d.B.block_count() < 2 || d.B.dim() != d.B.block_count())
        throw ValidationError("adjointability mutation needs a free datum over C^m with m >= 2");
      Matrix sw = Matrix::Zero(d.B.dim(), d.B.dim());
      for (int x = 0; x < d.B.dim(); ++x) sw((x + 1) % d.B.dim(), x) = 1.0;
      const int v2 = d.catalog->dim_power(2);
      Matrix s2 = numeric::kron(sw, Matrix::Identity(v2, v2));
      for (auto& img : d.phi[0][2]) img = s2 * img;
      for (auto& img : d.phi[2][0]) img = img * s2.adjoint();
      break;
    }
    case Mutation::FlipIdentity: {
      Matrix flip = numeric::flip_matrix(n, n);
      const auto& sp = d.catalog->space(2, 2);
      Matrix phi_flip = base.phi_apply(flip, 2, 2);
      Matrix delta = Matrix::Identity(phi_flip.rows(), phi_flip.cols()) - phi_flip;
      for (int j = 0; j < sp.dim(); ++j) d.phi[2][2][j] += ((flip.adjoint() * sp.basis[j]).trace() / double(n * n)) * delta;
      break;
    }
  }
  return d;
}

TypePiDatum canned_mutation(Mutation m, std::shared_ptr<const IntertwinerCatalog> catalog) {
  const int n = catalog->n;
  const int K = std::min(catalog->K, 3);
  const bool two_points = m == Mutation::Unit || m == Mutation::Adjointability;
  TypePiDatum base = trivial_type_pi(FiniteCStarAlgebra(two_points ? std::vector<int>{1, 1} : std::vector<int>{1}), n, K, catalog);
  return mutate(base, m);
}

std::vector<TypePiDatum> canned_valid_data(std::shared_ptr<const IntertwinerCatalog> catalog) {
  const int n = catalog->n;
  const int K = std::min(catalog->K, 3);
  liegroup::LieAlgebraBasis basis = liegroup::so_basis(n);
  RealVector zrot = RealVector::Zero(static_cast<Eigen::Index>(basis.generators.size()));
  zrot(0) = 1.0;
  std::vector<TypePiDatum> out;
  out.push_back(trivial_type_pi(FiniteCStarAlgebra({1}), n, K, catalog));
  out.push_back(trivial_type_pi(FiniteCStarAlgebra({1, 1}), n, K, catalog));
  out.push_back(trivial_type_pi(FiniteCStarAlgebra({2}), n, K, catalog));
  out.push_back(bundle_type_pi(2, {liegroup::GroupElement::identity(n), liegroup::exp_generator(basis, zrot)}, n, K, catalog));
  out.push_back(bundle_type_pi(3, liegroup::random_group_elements(n, 3, 0x3A3A), n, K, catalog));
  return out;
}

}  // namespace ncfb::typepi
