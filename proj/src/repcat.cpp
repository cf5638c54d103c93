#include "ncfb/repcat.hpp"

#include <algorithm>
#include <cmath>

#include "ncfb/numeric.hpp"

namespace ncfb::repcat {

using liegroup::RepLabel;

Vector IntertwinerSpace::coefficients(const Matrix& t) const {
  Vector c(dim());
  for (int i = 0; i < dim(); ++i) c(i) = (basis[i].adjoint() * t).trace();
  return c;
}

Matrix IntertwinerSpace::combine(const Vector& coefficients) const {
  Matrix t = Matrix::Zero(target.dim(), source.dim());
  for (int i = 0; i < dim(); ++i) t += coefficients(i) * basis[i];
  return t;
}

double equivariance_residual(const Representation& sigma, const Representation& tau, const Matrix& t) {
  double res = 0.0;
  for (size_t a = 0; a < sigma.generators().size(); ++a)
    res = std::max(res, numeric::op_norm(tau.generator(a) * t - t * sigma.generator(a)));
  return res;
}

namespace {

Matrix equivariance_system(const Representation& sigma, const Representation& tau) {
  const int ds = sigma.dim(), dt = tau.dim();
  const int m = static_cast<int>(sigma.generators().size());
  Matrix sys(m * ds * dt, ds * dt);
  Matrix is = Matrix::Identity(ds, ds), it = Matrix::Identity(dt, dt);
  for (int a = 0; a < m; ++a)
    sys.middleRows(a * ds * dt, ds * dt) =
        numeric::kron(is, tau.generator(a)) - numeric::kron(sigma.generator(a).transpose(), it);
  return sys;
}

Matrix unvec(const Vector& v, int rows, int cols) {
  Matrix t(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) t(r, c) = v(c * rows + r);
  return t;
}

double generator_scale(const Representation& rho) {
  double s = 0.0;
  for (const auto& g : rho.generators())
    if (g.size()) s = std::max(s, g.cwiseAbs().maxCoeff());
  return std::max(s, 1.0);
}

/// Smallest invariant subspace containing `start`, in the coordinates of the restricted generators.
Matrix krylov_closure(const std::vector<Matrix>& gens, const Vector& start, double scale) {
  const Eigen::Index m = start.size();
  Matrix q(m, 1);
  q.col(0) = start.normalized();
  Eigen::Index processed = 0;
  while (processed < q.cols()) {
    Vector v0 = q.col(processed);
    ++processed;
    for (const auto& g : gens) {
      Vector v = g * v0;
      for (int pass = 0; pass < 2; ++pass) v -= q * (q.adjoint() * v);
      if (v.norm() > 1e-6 * scale) {
        q.conservativeResize(m, q.cols() + 1);
        q.col(q.cols() - 1) = v.normalized();
      }
    }
  }
  return q;
}

struct BlockSplitResult {
  std::vector<std::vector<Matrix>> classes;
};

/// Splits an invariant subspace (orthonormal columns w) into irreducible copies grouped by class.
void split_block(const Representation& rho, const Matrix& w_in, numeric::Rng& rng,
                 std::vector<std::vector<Matrix>>& classes) {
  Matrix w = w_in;
  const double scale = generator_scale(rho);
  int attempts = 0;
  while (w.cols() > 0) {
    std::vector<Matrix> gens;
    for (const auto& g : rho.generators()) gens.push_back(w.adjoint() * g * w);
    const Eigen::Index m = w.cols();
    Matrix h = Matrix::Zero(m, m);
    for (const auto& g : gens) h += rng.normal() * g;
    h = (Complex(0, 1) * h).eval();
    h = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const auto& ev = es.eigenvalues();
    const double top = ev(m - 1);
    const double span = std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> cluster;
    for (Eigen::Index i = m - 1; i >= 0; --i)
      if (top - ev(i) <= 1e-7 * span) cluster.push_back(i);

    std::vector<Matrix> copies;
    bool ok = true;
    for (Eigen::Index idx : cluster) {
      Matrix q = krylov_closure(gens, es.eigenvectors().col(idx), scale);
      if (!copies.empty() && q.cols() != copies[0].cols()) ok = false;
      copies.push_back(q);
    }
    Matrix all(m, 0);
    if (ok) {
      Eigen::Index total = 0;
      for (const auto& q : copies) total += q.cols();
      all.resize(m, total);
      Eigen::Index off = 0;
      for (const auto& q : copies) {
        all.middleCols(off, q.cols()) = q;
        off += q.cols();
      }
      double orth = (all.adjoint() * all - Matrix::Identity(total, total)).cwiseAbs().maxCoeff();
      if (orth > 1e-6 || total > m) ok = false;
    }
    if (!ok) {
      if (++attempts > 8) throw DecompositionFailure("irreducible splitting did not converge");
      continue;
    }
    attempts = 0;
    std::vector<Matrix> cls;
    for (const auto& q : copies) cls.push_back(w * q);
    classes.push_back(std::move(cls));
    Matrix complement = numeric::null_space(all.adjoint(), 1e-8);
    if (all.cols() == m) break;
    w = w * complement;
  }
}

}  // namespace

Decomposition decompose(const Representation& rho, std::uint64_t seed, double tol) {
  (void)tol;
  Decomposition out;
  const int d = rho.dim();
  if (d == 0) return out;
  numeric::Rng rng(seed);
  Matrix c = -liegroup::casimir(rho);
  c = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  const auto& ev = es.eigenvalues();
  const double span = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<std::vector<Matrix>> classes;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= d; ++i) {
    if (i == d || ev(i) - ev(i - 1) > 1e-6 * span) {
      split_block(rho, es.eigenvectors().middleCols(start, i - start), rng, classes);
      start = i;
    }
  }
  for (size_t k = 0; k < classes.size(); ++k) {
    out.class_dims.push_back(static_cast<int>(classes[k][0].cols()));
    for (auto& q : classes[k]) out.summands.push_back({static_cast<int>(k), q});
  }
  return out;
}

std::optional<Matrix> irreducible_equivalence(const Representation& from, const Representation& to, double tol) {
  if (from.dim() != to.dim() || from.n() != to.n()) return std::nullopt;
  const int d = from.dim();
  Matrix sys = equivariance_system(from, to);
  Matrix ns = numeric::null_space(sys, std::max(tol, 1e-10) * 100, 1.0);
  if (ns.cols() == 0) return std::nullopt;
  if (ns.cols() > 1) throw InternalError("equivalence test on a reducible representation");
  Matrix u = unvec(ns.col(0), d, d);
  u *= std::sqrt(static_cast<double>(d)) / u.norm();
  return u;
}

IntertwinerSpace intertwiner_space_direct(const Representation& sigma, const Representation& tau, double tol) {
  if (sigma.n() != tau.n()) throw IncompatibilityError("intertwiners between different SO(n)");
  IntertwinerSpace out{sigma, tau, {}};
  if (sigma.dim() == 0 || tau.dim() == 0) return out;
  Matrix ns = numeric::null_space(equivariance_system(sigma, tau), tol, 1.0);
  for (Eigen::Index j = 0; j < ns.cols(); ++j) out.basis.push_back(unvec(ns.col(j), tau.dim(), sigma.dim()));
  return out;
}

IntertwinerSpace intertwiner_space_by_decomposition(const Representation& sigma, const Representation& tau,
                                                    double tol, std::uint64_t seed) {
  if (sigma.n() != tau.n()) throw IncompatibilityError("intertwiners between different SO(n)");
  IntertwinerSpace out{sigma, tau, {}};
  if (sigma.dim() == 0 || tau.dim() == 0) return out;
  Decomposition ds = decompose(sigma, seed, tol);
  Decomposition dt = decompose(tau, seed ^ 0xA5A5A5A5ULL, tol);
  auto rep_of = [](const Representation& r, const Matrix& q) { return liegroup::restrict(r, q, r.label()); };

  for (size_t cs = 0; cs < ds.class_dims.size(); ++cs) {
    std::vector<const Summand*> s_copies, t_copies;
    for (const auto& s : ds.summands)
      if (s.cls == static_cast<int>(cs)) s_copies.push_back(&s);
    Representation canon = rep_of(sigma, s_copies[0]->embedding);
    int matched = -1;
    for (size_t ct = 0; ct < dt.class_dims.size() && matched < 0; ++ct) {
      if (dt.class_dims[ct] != ds.class_dims[cs]) continue;
      const Summand* first = nullptr;
      for (const auto& t : dt.summands)
        if (t.cls == static_cast<int>(ct)) {
          first = &t;
          break;
        }
      if (irreducible_equivalence(canon, rep_of(tau, first->embedding), tol)) matched = static_cast<int>(ct);
    }
    if (matched < 0) continue;
    for (const auto& t : dt.summands)
      if (t.cls == matched) t_copies.push_back(&t);
    const double d = ds.class_dims[cs];
    std::vector<Matrix> js, jt;
    for (const Summand* s : s_copies)
      js.push_back(s->embedding * *irreducible_equivalence(canon, rep_of(sigma, s->embedding), tol));
    for (const Summand* t : t_copies)
      jt.push_back(t->embedding * *irreducible_equivalence(canon, rep_of(tau, t->embedding), tol));
    for (const auto& b : jt)
      for (const auto& a : js) out.basis.push_back(b * a.adjoint() / std::sqrt(d));
  }
  return out;
}

IntertwinerSpace intertwiner_space(const Representation& sigma, const Representation& tau, double tol,
                                   std::uint64_t seed) {
  if (static_cast<long>(sigma.dim()) * tau.dim() <= 400) return intertwiner_space_direct(sigma, tau, tol);
  return intertwiner_space_by_decomposition(sigma, tau, tol, seed);
}

IrrepRegistry IrrepRegistry::build(int n, int K, std::uint64_t seed, double tol) {
  if (K < 1) throw InvalidDimensionError("registry requires K >= 1");
  IrrepRegistry reg;
  reg.n_ = n;
  reg.K_ = K;
  reg.seed_ = seed;
  reg.tol_ = tol;
  Representation pi = liegroup::standard_rep(n);
  for (int k = 0; k <= K; ++k) reg.powers_.push_back(liegroup::tensor_power(pi, k));

  auto add_entry = [&reg](int level, Matrix j) {
    IrrepEntry e;
    e.id = static_cast<int>(reg.entries_.size());
    e.level = level;
    e.dim = static_cast<int>(j.cols());
    e.embedding = std::move(j);
    e.projection = e.embedding * e.embedding.adjoint();
    e.rep = liegroup::restrict(reg.powers_[level], e.embedding, RepLabel{RepLabel::Kind::Irrep, e.id, {}});
    if (reg.n_ == 3) e.spin = (e.dim - 1) / 2;
    reg.entries_.push_back(std::move(e));
  };

  add_entry(0, Matrix::Identity(1, 1));
  for (int k = 1; k <= K; ++k) {
    Decomposition dec = repcat::decompose(reg.powers_[k], seed + static_cast<std::uint64_t>(k), tol);
    if (k == 1 && dec.summands.size() == 1) {
      reg.pi_id_ = static_cast<int>(reg.entries_.size());
      add_entry(1, Matrix::Identity(n, n));
      continue;
    }
    for (const auto& s : dec.summands) {
      Representation r = liegroup::restrict(reg.powers_[k], s.embedding, RepLabel{});
      if (reg.match(r)) continue;
      Matrix j = s.embedding;
      numeric::fix_phase(j);
      add_entry(k, j);
    }
  }
  for (auto& e : reg.entries_) {
    auto m = reg.match(liegroup::conjugate(e.rep));
    e.conjugate_id = m ? m->first : -1;
  }
  return reg;
}

const IrrepEntry& IrrepRegistry::entry(int id) const {
  if (id < 0 || id >= size()) throw ValidationError("unknown irrep identifier " + std::to_string(id));
  return entries_[id];
}

const Representation& IrrepRegistry::power(int k) const {
  if (k < 0 || k > K_) throw TruncationError("tensor power " + std::to_string(k) + " exceeds K");
  return powers_[k];
}

std::optional<int> IrrepRegistry::id_for_spin(int spin) const {
  for (const auto& e : entries_)
    if (e.spin == spin) return e.id;
  return std::nullopt;
}

std::optional<std::pair<int, Matrix>> IrrepRegistry::match(const Representation& irreducible) const {
  for (const auto& e : entries_) {
    if (e.dim != irreducible.dim()) continue;
    auto u = irreducible_equivalence(e.rep, irreducible, tol_);
    if (u) return std::make_pair(e.id, *u);
  }
  return std::nullopt;
}

std::vector<RegisteredSummand> IrrepRegistry::decompose(const Representation& rho) const {
  std::vector<RegisteredSummand> out;
  Decomposition dec = repcat::decompose(rho, seed_ ^ 0x5151ULL, tol_);
  for (const auto& s : dec.summands) {
    Representation r = liegroup::restrict(rho, s.embedding, RepLabel{});
    auto m = match(r);
    RegisteredSummand rs;
    if (m) {
      rs.id = m->first;
      rs.embedding = s.embedding * m->second;
      numeric::fix_phase(rs.embedding);
    } else {
      rs.embedding = s.embedding;
    }
    out.push_back(std::move(rs));
  }
  return out;
}

bool IsometricIntertwinerSet::complete_in_registry() const {
  return std::all_of(members.begin(), members.end(), [](const IsometricMember& m) { return m.id >= 0; });
}

IsometricIntertwinerSet isometric_set(int sigma, int tau, const IrrepRegistry& registry) {
  const IrrepEntry& s = registry.entry(sigma);
  const IrrepEntry& t = registry.entry(tau);
  IsometricIntertwinerSet out{sigma, tau, {}};
  for (auto& rs : registry.decompose(liegroup::tensor(s.rep, t.rep)))
    out.members.push_back({rs.id, std::move(rs.embedding)});
  return out;
}

double ConjugateSolution::conjugate_equation_residual() const {
  const int ds = static_cast<int>(C.cols());
  const int db = static_cast<int>(C.rows());
  Matrix r = R;
  Matrix rb = Rbar;
  Matrix lhs1 = numeric::kron(rb.adjoint(), Matrix::Identity(db, db)) * numeric::kron(Matrix::Identity(db, db), r);
  Matrix lhs2 = numeric::kron(r.adjoint(), Matrix::Identity(ds, ds)) * numeric::kron(Matrix::Identity(ds, ds), rb);
  return std::max(numeric::op_norm(lhs1 - Matrix::Identity(db, db)), numeric::op_norm(lhs2 - Matrix::Identity(ds, ds)));
}

namespace {

Vector invariant_pairing(const IrrepEntry& s, const IrrepEntry& sb, double tol) {
  Representation rt = liegroup::tensor(s.rep, sb.rep);
  Representation triv = liegroup::trivial_rep(s.rep.n());
  IntertwinerSpace inv = intertwiner_space_direct(triv, rt, std::max(tol, 1e-10) * 100);
  if (inv.dim() != 1) throw InternalError("conjugate pairing space has dimension " + std::to_string(inv.dim()));
  Matrix r = inv.basis[0];
  r *= std::sqrt(static_cast<double>(s.dim)) / r.norm();
  numeric::fix_phase(r);
  return r.col(0);
}

}  // namespace

ConjugateSolution conjugate_solution(int sigma, const IrrepRegistry& registry) {
  const IrrepEntry& s = registry.entry(sigma);
  if (s.conjugate_id < 0) throw ValidationError("irrep " + std::to_string(sigma) + " has no registered conjugate");
  const IrrepEntry& sb = registry.entry(s.conjugate_id);
  ConjugateSolution out;
  out.sigma = sigma;
  out.sigma_bar = sb.id;
  if (sb.id >= s.id) {
    out.R = invariant_pairing(s, sb, registry.tol());
  } else {
    out.R = numeric::flip(invariant_pairing(sb, s, registry.tol()), sb.dim, s.dim);
  }
  out.Rbar = numeric::flip(out.R, s.dim, sb.dim);
  Matrix rm(s.dim, sb.dim);
  for (int i = 0; i < s.dim; ++i)
    for (int j = 0; j < sb.dim; ++j) rm(i, j) = out.R(i * sb.dim + j);
  out.C = rm.transpose();
  out.norm = out.R.norm();
  return out;
}

Matrix w_map(const Matrix& t, const IrrepEntry& sigma, const IrrepEntry& tau, double tol) {
  if (t.rows() != tau.dim || t.cols() != sigma.dim) throw ShapeError("intertwiner has wrong shape for w_map");
  double res = equivariance_residual(sigma.rep, tau.rep, t);
  if (res > tol * std::max(1.0, numeric::op_norm(t)) * 100)
    throw ValidationError("w_map input is not equivariant (residual " + std::to_string(res) + ")");
  return tau.embedding * t * sigma.embedding.adjoint();
}

}  // namespace ncfb::repcat
