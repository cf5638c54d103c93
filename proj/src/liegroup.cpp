#include "ncfb/liegroup.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "ncfb/numeric.hpp"

namespace ncfb::liegroup {

LieAlgebraBasis so_basis(int n) {
  if (n < 2) throw InvalidDimensionError("so(n) requires n >= 2, got " + std::to_string(n));
  LieAlgebraBasis basis;
  basis.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      RealMatrix x = RealMatrix::Zero(n, n);
      x(i, j) = 1.0;
      x(j, i) = -1.0;
      basis.generators.push_back(x);
    }
  return basis;
}

std::string RepLabel::str() const {
  auto join = [this](const char* sep) {
    std::string s;
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i) s += sep;
      s += parts[i].str();
    }
    return s;
  };
  switch (kind) {
    case Kind::Standard: return "pi";
    case Kind::Trivial: return "1";
    case Kind::Tensor: return "(" + join(" x ") + ")";
    case Kind::Power: return "pi^" + std::to_string(index);
    case Kind::Sum: return "(" + join(" + ") + ")";
    case Kind::Irrep: return "irrep" + std::to_string(index);
    case Kind::Conjugate: return "conj(" + join("") + ")";
    case Kind::Restricted: return "sub(" + join("") + ")";
  }
  return "?";
}

Representation::Representation(int n, std::vector<Matrix> generator_images, RepLabel label)
    : n_(n), gens_(std::move(generator_images)), label_(std::move(label)) {
  const size_t count = static_cast<size_t>(n * (n - 1) / 2);
  if (gens_.size() != count)
    throw ShapeError("representation of SO(" + std::to_string(n) + ") needs " + std::to_string(count) + " generators");
  dim_ = gens_.empty() ? 0 : static_cast<int>(gens_[0].rows());
  for (const auto& g : gens_)
    if (g.rows() != dim_ || g.cols() != dim_) throw ShapeError("generator images must be square of equal size");
}

double Representation::structure_residual() const {
  double res = 0.0;
  for (const auto& g : gens_)
    if (g.size()) res = std::max(res, (g + g.adjoint()).cwiseAbs().maxCoeff());
  // so(n) brackets: [X_ij, X_kl] expressed in the basis, evaluated through the defining rep.
  LieAlgebraBasis basis = so_basis(n_);
  const int m = static_cast<int>(basis.generators.size());
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      RealMatrix br = basis.generators[a] * basis.generators[b] - basis.generators[b] * basis.generators[a];
      Matrix lhs = Matrix::Zero(dim_, dim_);
      int idx = 0;
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j, ++idx)
          if (br(i, j) != 0.0) lhs += br(i, j) * gens_[idx];
      Matrix rhs = gens_[a] * gens_[b] - gens_[b] * gens_[a];
      if (dim_) res = std::max(res, numeric::op_norm(lhs - rhs));
    }
  return res;
}

Representation standard_rep(int n) {
  LieAlgebraBasis basis = so_basis(n);
  std::vector<Matrix> gens;
  for (const auto& x : basis.generators) gens.push_back(x.cast<Complex>());
  return Representation(n, std::move(gens), RepLabel{RepLabel::Kind::Standard, 0, {}});
}

Representation trivial_rep(int n) {
  if (n < 2) throw InvalidDimensionError("SO(n) requires n >= 2");
  std::vector<Matrix> gens(static_cast<size_t>(n * (n - 1) / 2), Matrix::Zero(1, 1));
  return Representation(n, std::move(gens), RepLabel{RepLabel::Kind::Trivial, 0, {}});
}

Representation tensor(const Representation& rho, const Representation& tau) {
  if (rho.n() != tau.n()) throw IncompatibilityError("tensor of representations of different SO(n)");
  std::vector<Matrix> gens;
  Matrix i1 = Matrix::Identity(rho.dim(), rho.dim());
  Matrix i2 = Matrix::Identity(tau.dim(), tau.dim());
  for (size_t a = 0; a < rho.generators().size(); ++a)
    gens.push_back(numeric::kron(rho.generators()[a], i2) + numeric::kron(i1, tau.generators()[a]));
  return Representation(rho.n(), std::move(gens), RepLabel{RepLabel::Kind::Tensor, 0, {rho.label(), tau.label()}});
}

Representation tensor_power(const Representation& rho, int k) {
  if (k < 0) throw InvalidDimensionError("negative tensor power");
  Representation out = trivial_rep(rho.n());
  for (int i = 0; i < k; ++i) out = (i == 0) ? rho : tensor(out, rho);
  std::vector<Matrix> gens = out.generators();
  RepLabel label = rho.label().kind == RepLabel::Kind::Standard
                       ? RepLabel{RepLabel::Kind::Power, k, {}}
                       : RepLabel{RepLabel::Kind::Power, k, {rho.label()}};
  if (k == 0) label = RepLabel{RepLabel::Kind::Trivial, 0, {}};
  return Representation(rho.n(), std::move(gens), label);
}

Representation direct_sum(const std::vector<Representation>& reps) {
  if (reps.empty()) throw ShapeError("direct sum of an empty list");
  const int n = reps[0].n();
  int dim = 0;
  RepLabel label{RepLabel::Kind::Sum, 0, {}};
  for (const auto& r : reps) {
    if (r.n() != n) throw IncompatibilityError("direct sum of representations of different SO(n)");
    dim += r.dim();
    label.parts.push_back(r.label());
  }
  std::vector<Matrix> gens;
  for (size_t a = 0; a < reps[0].generators().size(); ++a) {
    Matrix g = Matrix::Zero(dim, dim);
    int off = 0;
    for (const auto& r : reps) {
      g.block(off, off, r.dim(), r.dim()) = r.generators()[a];
      off += r.dim();
    }
    gens.push_back(g);
  }
  return Representation(n, std::move(gens), label);
}

Representation conjugate(const Representation& rho) {
  std::vector<Matrix> gens;
  for (const auto& g : rho.generators()) gens.push_back(g.conjugate());
  return Representation(rho.n(), std::move(gens), RepLabel{RepLabel::Kind::Conjugate, 0, {rho.label()}});
}

Representation restrict(const Representation& rho, const Matrix& basis, RepLabel label) {
  std::vector<Matrix> gens;
  for (const auto& g : rho.generators()) gens.push_back(basis.adjoint() * g * basis);
  return Representation(rho.n(), std::move(gens), std::move(label));
}

Matrix exp_skew(const Matrix& a) {
  if (a.rows() == 0) return a;
  Matrix h = Complex(0, 1) * a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  Vector phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(Complex(0, -es.eigenvalues()(i)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

GroupElement GroupElement::exp_generator(const LieAlgebraBasis& basis, const RealVector& coefficients) {
  if (static_cast<size_t>(coefficients.size()) != basis.generators.size())
    throw ShapeError("coefficient count does not match the so(n) basis");
  Matrix x = Matrix::Zero(basis.n, basis.n);
  for (Eigen::Index a = 0; a < coefficients.size(); ++a) x += coefficients(a) * basis.generators[a].cast<Complex>();
  GroupElement g;
  g.matrix_ = exp_skew(x).real();
  g.coords_ = coefficients;
  return g;
}

GroupElement GroupElement::identity(int n) {
  GroupElement g;
  g.matrix_ = RealMatrix::Identity(n, n);
  g.coords_ = RealVector::Zero(n * (n - 1) / 2);
  return g;
}

GroupElement GroupElement::from_matrix(const LieAlgebraBasis& basis, const RealMatrix& m, double tol) {
  if (m.rows() != basis.n || m.cols() != basis.n) throw ShapeError("group element has wrong size");
  const double orth = (m.transpose() * m - RealMatrix::Identity(basis.n, basis.n)).cwiseAbs().maxCoeff();
  if (orth > tol * basis.n * 10) throw ValidationError("matrix is not orthogonal (residual " + std::to_string(orth) + ")");
  if (std::abs(m.determinant() - 1.0) > tol * 10) throw ValidationError("matrix does not have determinant 1");
  RealMatrix x = m.log();
  x = 0.5 * (x - x.transpose()).eval();
  GroupElement g;
  g.matrix_ = m;
  g.coords_.resize(static_cast<Eigen::Index>(basis.generators.size()));
  int idx = 0;
  for (int i = 0; i < basis.n; ++i)
    for (int j = i + 1; j < basis.n; ++j) g.coords_(idx++) = x(i, j);
  return g;
}

GroupElement exp_generator(const LieAlgebraBasis& basis, const RealVector& coefficients) {
  return GroupElement::exp_generator(basis, coefficients);
}

GroupElement random_group_element(int n, std::uint64_t seed) {
  LieAlgebraBasis basis = so_basis(n);
  numeric::Rng rng(seed);
  RealVector c(static_cast<Eigen::Index>(basis.generators.size()));
  for (Eigen::Index a = 0; a < c.size(); ++a) c(a) = rng.normal();
  double norm = c.norm();
  if (norm == 0.0) return GroupElement::identity(n);
  // Rotation angle with the Haar density (1 - cos t)/pi on [0, pi].
  double angle = 0.0;
  for (;;) {
    double t = std::numbers::pi * rng.uniform();
    if (2.0 * rng.uniform() <= 1.0 - std::cos(t)) {
      angle = t;
      break;
    }
  }
  return GroupElement::exp_generator(basis, c * (angle / norm));
}

std::vector<GroupElement> random_group_elements(int n, int count, std::uint64_t seed) {
  std::vector<GroupElement> out;
  for (int i = 0; i < count; ++i) out.push_back(random_group_element(n, seed + 0x9E3779B97F4A7C15ULL * (i + 1)));
  return out;
}

Matrix rep_matrix(const Representation& rho, const GroupElement& g) {
  if (g.n() != rho.n()) throw IncompatibilityError("group element and representation belong to different SO(n)");
  if (rho.label().kind == RepLabel::Kind::Standard) return g.matrix().cast<Complex>();
  Matrix x = Matrix::Zero(rho.dim(), rho.dim());
  for (Eigen::Index a = 0; a < g.coordinates().size(); ++a) x += g.coordinates()(a) * rho.generators()[a];
  return exp_skew(x);
}

Matrix casimir(const Representation& rho) {
  Matrix c = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& g : rho.generators()) c += g * g;
  return c;
}

}  // namespace ncfb::liegroup
