#include "ncfb/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ncfb/numeric.hpp"

namespace ncfb::gamma {

namespace {

Correspondence compress(const Correspondence& m, const Matrix& q) {
  std::vector<Matrix> left, right, inner;
  for (int b = 0; b < m.algebra().dim(); ++b) {
    left.push_back(q.adjoint() * m.left()[b] * q);
    right.push_back(q.adjoint() * m.right()[b] * q);
    inner.push_back(q.adjoint() * m.inner()[b] * q);
  }
  return Correspondence::unchecked(m.algebra(), static_cast<int>(q.cols()), std::move(left), std::move(right),
                                   std::move(inner));
}

double op(const Matrix& a) { return a.size() ? numeric::op_norm(a) : 0.0; }

}  // namespace

GammaObject gamma_subobject(const TypePiDatum& datum, int level, const Matrix& v_embedding, std::string label) {
  if (level > datum.K) throw TruncationError("object " + label + " lives at level " + std::to_string(level) + " > K");
  if (v_embedding.rows() != datum.catalog->dim_power(level)) throw ShapeError("embedding does not match V^{(x)k}");
  GammaObject g;
  g.label = std::move(label);
  g.level = level;
  g.v_embedding = v_embedding;
  g.projection = datum.phi_apply(v_embedding * v_embedding.adjoint(), level, level);
  const int d = static_cast<int>(g.projection.rows());
  if ((g.projection - Matrix::Identity(d, d)).norm() <= 1e-12 * std::max(1, d))
    g.inclusion = Matrix::Identity(d, d);
  else
    g.inclusion = numeric::projection_range(g.projection);
  g.carrier = compress(datum.powers[level], g.inclusion);
  return g;
}

GammaObject gamma_object(const TypePiDatum& datum, const repcat::IrrepRegistry& registry, int sigma) {
  const auto& e = registry.entry(sigma);
  return gamma_subobject(datum, e.level, e.embedding, "irrep" + std::to_string(sigma));
}

GammaObject gamma_power(const TypePiDatum& datum, int k) {
  const int d = datum.catalog->dim_power(k);
  return gamma_subobject(datum, k, Matrix::Identity(d, d), "pi^" + std::to_string(k));
}

GammaObject gamma_tensor(const TypePiDatum& datum, const GammaObject& a, const GammaObject& b) {
  return gamma_subobject(datum, a.level + b.level, numeric::kron(a.v_embedding, b.v_embedding),
                         "(" + a.label + ")x(" + b.label + ")");
}

Matrix gamma_morphism(const TypePiDatum& datum, const Matrix& t, const GammaObject& src, const GammaObject& tgt,
                      double tol) {
  if (t.rows() != tgt.v_dim() || t.cols() != src.v_dim()) throw ShapeError("morphism has the wrong shape");
  Matrix w = tgt.v_embedding * t * src.v_embedding.adjoint();
  return tgt.inclusion.adjoint() * datum.phi_apply(w, src.level, tgt.level, tol) * src.inclusion;
}

MultMap mult_map(const TypePiDatum& datum, const GammaObject& a, const GammaObject& b) {
  MultMap m;
  m.domain = hilbmod::tensor_over_B(a.carrier, b.carrier);
  m.target = gamma_tensor(datum, a, b);
  const BalancedTensor& prod = datum.product(a.level, b.level);
  Matrix restrict = hilbmod::tensor_maps(a.inclusion, b.inclusion, m.domain, prod);
  m.unitary = m.target.inclusion.adjoint() * (m.target.projection * (datum.mult_map(a.level, b.level) * restrict));
  return m;
}

Matrix mult_map_alternative(const TypePiDatum& datum, const MultMap& m, const GammaObject& a, const GammaObject& b) {
  const BalancedTensor& prod = datum.product(a.level, b.level);
  Matrix restrict = hilbmod::tensor_maps(a.inclusion, b.inclusion, m.domain, prod);
  Matrix pp = hilbmod::tensor_maps(a.projection, b.projection, prod, prod);
  return m.target.inclusion.adjoint() * (datum.mult_map(a.level, b.level) * (pp * restrict));
}

GammaSum sum_object(std::vector<GammaObject> parts) {
  if (parts.empty()) throw InvalidDimensionError("empty formal sum");
  GammaSum s;
  std::vector<Correspondence> carriers;
  for (const auto& p : parts) {
    if (p.carrier.algebra() != parts.front().carrier.algebra()) throw IncompatibilityError("summands over different algebras");
    carriers.push_back(p.carrier);
  }
  s.parts = std::move(parts);
  s.sum = hilbmod::direct_sum_corr(carriers);
  return s;
}

Matrix sum_morphism(const TypePiDatum& datum, const std::vector<std::vector<Matrix>>& blocks, const GammaSum& src,
                    const GammaSum& tgt, double tol) {
  if (blocks.size() != tgt.parts.size()) throw ShapeError("block morphism row count differs from target parts");
  Matrix out = Matrix::Zero(tgt.carrier().dim(), src.carrier().dim());
  for (size_t i = 0; i < tgt.parts.size(); ++i) {
    if (blocks[i].size() != src.parts.size()) throw ShapeError("block morphism column count differs from source parts");
    for (size_t j = 0; j < src.parts.size(); ++j) {
      if (blocks[i][j].size() == 0) continue;
      out.block(tgt.sum.offsets[i], src.sum.offsets[j], tgt.parts[i].dim(), src.parts[j].dim()) =
          gamma_morphism(datum, blocks[i][j], src.parts[j], tgt.parts[i], tol);
    }
  }
  return out;
}

SumMult sum_mult(const TypePiDatum& datum, const GammaSum& a, const GammaSum& b) {
  SumMult out;
  out.domain = hilbmod::tensor_over_B(a.carrier(), b.carrier());
  std::vector<MultMap> parts;
  std::vector<GammaObject> targets;
  for (const auto& pa : a.parts)
    for (const auto& pb : b.parts) {
      parts.push_back(mult_map(datum, pa, pb));
      targets.push_back(parts.back().target);
    }
  out.target = sum_object(std::move(targets));
  out.unitary = Matrix::Zero(out.target.carrier().dim(), out.domain.dim());
  for (int c = 0; c < out.domain.dim(); ++c) {
    Vector e = Vector::Zero(out.domain.dim());
    e(c) = 1.0;
    Matrix w = out.domain.lift(e);
    size_t idx = 0;
    for (size_t i = 0; i < a.parts.size(); ++i)
      for (size_t j = 0; j < b.parts.size(); ++j, ++idx) {
        Matrix wij = w.block(a.sum.offsets[i], b.sum.offsets[j], a.parts[i].dim(), b.parts[j].dim());
        const MultMap& m = parts[idx];
        if (m.unitary.size() == 0) continue;
        out.unitary.col(c).segment(out.target.sum.offsets[idx], m.target.dim()) =
            m.unitary * m.domain.apply_surjection(wij);
      }
  }
  return out;
}

bool FunctorReport::pass() const {
  return std::all_of(laws.begin(), laws.end(), [](const LawResult& l) { return l.pass; });
}

const LawResult& FunctorReport::get(const std::string& law) const {
  for (const auto& l : laws)
    if (l.law == law) return l;
  throw ValidationError("no law named " + law);
}

namespace {

struct Worst {
  double value = 0.0;
  std::string where;
  void update(double v, const std::string& w) {
    if (v > value || (where.empty() && v >= value)) {
      value = v;
      where = w;
    }
  }
};

struct Copy {
  int id;
  int level;
  Matrix s;
};

}  // namespace

FunctorReport verify_functor(const TypePiDatum& datum, const repcat::IrrepRegistry& registry, double tol) {
  if (registry.n() != datum.n) throw IncompatibilityError("registry and datum use different n");
  const int K = std::min(datum.K, registry.K());
  FunctorReport rep;
  std::map<int, GammaObject> irreps;
  for (const auto& e : registry.entries())
    if (e.level <= K) irreps.emplace(e.id, gamma_object(datum, registry, e.id));
  std::vector<GammaObject> powers;
  for (int j = 0; j <= K; ++j) powers.push_back(gamma_power(datum, j));
  rep.objects_checked = static_cast<int>(irreps.size() + powers.size());

  std::vector<std::vector<Copy>> copies(K + 1);
  for (int j = 0; j <= K; ++j)
    for (auto& rs : registry.decompose(registry.power(j)))
      if (rs.id >= 0 && irreps.count(rs.id)) copies[j].push_back({rs.id, j, std::move(rs.embedding)});

  Worst identity, projection, unit_object;
  for (const auto& [id, g] : irreps) {
    const int d = g.v_dim();
    Matrix gid = gamma_morphism(datum, Matrix::Identity(d, d), g, g, tol);
    identity.update(op(gid - Matrix::Identity(g.dim(), g.dim())), g.label);
    Matrix p = g.projection;
    projection.update(std::max(op(p * p - p), op(p - p.adjoint())), g.label);
    ++rep.morphisms_checked;
  }
  {
    const GammaObject& one = irreps.at(registry.trivial_id());
    Correspondence b = hilbmod::algebra_bimodule(datum.B);
    double r = one.dim() == b.dim() ? 0.0 : 1.0;
    if (r == 0.0)
      for (int beta = 0; beta < datum.B.dim(); ++beta)
        r = std::max({r, op(one.carrier.left()[beta] - b.left()[beta]), op(one.carrier.right()[beta] - b.right()[beta]),
                      op(one.carrier.inner()[beta] - b.inner()[beta])});
    unit_object.update(r, one.label);
  }

  // functoriality and adjoints on the isometric copies of irreps inside the tensor powers
  Worst functoriality, adjoint;
  std::vector<std::vector<Matrix>> g_copy(K + 1), g_copy_adj(K + 1);
  for (int j = 0; j <= K; ++j) {
    const GammaObject& pj = powers[j];
    for (const auto& c : copies[j]) {
      const GammaObject& g = irreps.at(c.id);
      g_copy[j].push_back(gamma_morphism(datum, c.s, g, pj, tol));
      g_copy_adj[j].push_back(gamma_morphism(datum, c.s.adjoint(), pj, g, tol));
      rep.morphisms_checked += 2;
    }
    for (size_t a = 0; a < copies[j].size(); ++a) {
      adjoint.update(op(g_copy[j][a].adjoint() - g_copy_adj[j][a]), "copy " + std::to_string(a) + " in pi^" + std::to_string(j));
      for (size_t b = 0; b < copies[j].size(); ++b) {
        const GammaObject& ga = irreps.at(copies[j][a].id);
        const GammaObject& gb = irreps.at(copies[j][b].id);
        Matrix lhs = g_copy_adj[j][a] * g_copy[j][b];
        Matrix rhs = Matrix::Zero(ga.dim(), gb.dim());
        if (copies[j][a].id == copies[j][b].id)
          rhs = gamma_morphism(datum, copies[j][a].s.adjoint() * copies[j][b].s, gb, ga, tol);
        functoriality.update(op(lhs - rhs), "copies " + std::to_string(a) + "," + std::to_string(b) + " in pi^" + std::to_string(j));
      }
    }
    Matrix x = numeric::probe_basis(pj.dim(), 64, 8, 0x5EEDULL + j);
    const int dv = pj.v_dim();
    Matrix full = gamma_morphism(datum, Matrix::Identity(dv, dv), pj, pj, tol) * x;
    for (size_t a = 0; a < copies[j].size(); ++a) full -= g_copy[j][a] * (g_copy_adj[j][a] * x);
    functoriality.update(op(full), "completeness in pi^" + std::to_string(j));
  }

  // multiplication maps on irreducible pairs
  Worst unitarity, order_gap, kernel, unit_left, unit_right;
  std::map<std::pair<int, int>, MultMap> mults;
  for (const auto& [ia, ga] : irreps)
    for (const auto& [ib, gb] : irreps) {
      if (ga.level + gb.level > K) continue;
      MultMap m = mult_map(datum, ga, gb);
      const std::string where = "(" + ga.label + "," + gb.label + ")";
      const Matrix& u = m.unitary;
      double r = std::max(op(u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())),
                          op(u * u.adjoint() - Matrix::Identity(u.rows(), u.rows())));
      for (int beta = 0; beta < datum.B.dim(); ++beta) {
        r = std::max(r, op(u * m.domain.product().left()[beta] - m.target.carrier.left()[beta] * u));
        r = std::max(r, op(u * m.domain.product().right()[beta] - m.target.carrier.right()[beta] * u));
      }
      unitarity.update(r, where);
      order_gap.update(op(u - mult_map_alternative(datum, m, ga, gb)), where);
      const BalancedTensor& prod = datum.product(ga.level, gb.level);
      Matrix pp = hilbmod::tensor_maps(ga.projection, gb.projection, prod, prod);
      Matrix a = m.target.projection * datum.mult_map(ga.level, gb.level);
      Matrix xk = numeric::probe_basis(prod.dim(), 64, 8, 0xC0DEULL + 7u * ia + ib);
      double rank_gap = std::abs(m.target.projection.trace().real() - pp.trace().real());
      kernel.update(std::max(op(a * (xk - pp * xk)), rank_gap), where);
      if (ia == registry.trivial_id()) {
        Matrix lhs = m.target.inclusion * u;
        Matrix rhs = gb.inclusion * hilbmod::left_unitor(m.domain, gb.carrier);
        unit_left.update(op(lhs - rhs), gb.label);
      }
      if (ib == registry.trivial_id()) {
        Matrix lhs = m.target.inclusion * u;
        Matrix rhs = ga.inclusion * hilbmod::right_unitor(m.domain, ga.carrier);
        unit_right.update(op(lhs - rhs), ga.label);
      }
      mults.emplace(std::make_pair(ia, ib), std::move(m));
    }

  // naturality against the isometric copies S_a (x) S_b
  Worst naturality;
  for (int j = 0; j <= K; ++j)
    for (int jp = 0; j + jp <= K; ++jp)
      for (size_t a = 0; a < copies[j].size(); ++a)
        for (size_t b = 0; b < copies[jp].size(); ++b) {
          const auto& ca = copies[j][a];
          const auto& cb = copies[jp][b];
          const GammaObject& ga = irreps.at(ca.id);
          const GammaObject& gb = irreps.at(cb.id);
          const MultMap& m = mults.at({ca.id, cb.id});
          const BalancedTensor& prod = datum.product(j, jp);
          Matrix lhs = datum.mult_map(j, jp) * hilbmod::tensor_maps(g_copy[j][a], g_copy[jp][b], m.domain, prod);
          Matrix rhs = gamma_morphism(datum, numeric::kron(ca.s, cb.s), m.target, powers[j + jp], tol) * m.unitary;
          naturality.update(op(lhs - rhs), "(" + ga.label + "->pi^" + std::to_string(j) + "," + gb.label + "->pi^" +
                                               std::to_string(jp) + ")");
          ++rep.morphisms_checked;
        }

  // associativity on irreducible triples
  Worst assoc;
  for (const auto& [i1, g1] : irreps)
    for (const auto& [i2, g2] : irreps)
      for (const auto& [i3, g3] : irreps) {
        if (g1.level + g2.level + g3.level > K) continue;
        const MultMap& m12 = mults.at({i1, i2});
        const MultMap& m23 = mults.at({i2, i3});
        MultMap m1_23 = mult_map(datum, g1, m23.target);
        MultMap m12_3 = mult_map(datum, m12.target, g3);
        BalancedTensor left_first = hilbmod::tensor_over_B(m12.domain.product(), g3.carrier);
        BalancedTensor right_first = hilbmod::tensor_over_B(g1.carrier, m23.domain.product());
        Matrix a = hilbmod::associator(m12.domain, left_first, m23.domain, right_first);
        Matrix lhs = m1_23.target.inclusion *
                     (m1_23.unitary *
                      (hilbmod::tensor_maps(Matrix::Identity(g1.dim(), g1.dim()), m23.unitary, right_first, m1_23.domain) * a));
        Matrix rhs = m12_3.target.inclusion *
                     (m12_3.unitary *
                      hilbmod::tensor_maps(m12.unitary, Matrix::Identity(g3.dim(), g3.dim()), left_first, m12_3.domain));
        assoc.update(op(lhs - rhs), "(" + g1.label + "," + g2.label + "," + g3.label + ")");
      }

  auto add = [&](const std::string& law, const Worst& w) {
    rep.laws.push_back({law, w.value, w.value <= tol, w.where});
  };
  add("unit-object", unit_object);
  add("identity", identity);
  add("projection", projection);
  add("functoriality", functoriality);
  add("adjoint", adjoint);
  add("naturality", naturality);
  add("unit-left", unit_left);
  add("unit-right", unit_right);
  add("unitarity", unitarity);
  add("projection-order", order_gap);
  add("kernel-identity", kernel);
  add("associativity", assoc);
  return rep;
}

}  // namespace ncfb::gamma
