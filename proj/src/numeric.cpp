#include "ncfb/numeric.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace ncfb::numeric {

namespace {

struct Svd {
  RealVector s;
  Matrix u, v;
};

bool svd_usable(const Matrix& a, const Svd& d) {
  if (!d.s.allFinite() || !d.u.allFinite() || !d.v.allFinite()) return false;
  const Eigen::Index r = d.s.size();
  const double scale = std::max(1.0, r ? d.s(0) : 0.0);
  const Matrix vt = d.v.leftCols(r);
  if ((vt.adjoint() * vt - Matrix::Identity(r, r)).norm() > 1e-8) return false;
  return (a * vt - d.u.leftCols(r) * d.s.asDiagonal()).norm() <= 1e-8 * scale;
}

/// Thin U and V (full V on request); BDCSVD first, JacobiSVD when its output fails the consistency check.
Svd checked_svd(const Matrix& a, bool full_v) {
  const unsigned opts = Eigen::ComputeThinU | (full_v ? Eigen::ComputeFullV : Eigen::ComputeThinV);
  {
    Eigen::BDCSVD<Matrix> svd(a, opts);
    Svd d{svd.singularValues(), svd.matrixU(), svd.matrixV()};
    if (svd_usable(a, d)) return d;
  }
  if (full_v) {
    Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

}  // namespace

double op_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (static_cast<long>(a.rows()) * a.cols() <= 160L * 160L || std::min(a.rows(), a.cols()) <= 8) {
    Matrix gram = a.rows() < a.cols() ? Matrix(a * a.adjoint()) : Matrix(a.adjoint() * a);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.adjoint()), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  Rng rng(0x5EED);
  Vector x(a.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.complex_normal();
  x.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vector y = a * x;
    Vector z = a.adjoint() * y;
    double nz = z.norm();
    if (nz == 0.0) return 0.0;
    double next = std::sqrt(nz);
    x = z / nz;
    if (it > 5 && std::abs(next - estimate) <= 1e-10 * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return (a * x).norm();
}

Matrix null_space(const Matrix& a, double rel_tol, double scale) {
  const Eigen::Index n = a.cols();
  if (n == 0) return Matrix(0, 0);
  if (a.rows() == 0) return Matrix::Identity(n, n);
  const Svd svd = checked_svd(a, true);
  const auto& s = svd.s;
  double smax = std::max(s.size() ? s(0) : 0.0, scale);
  if (smax == 0.0) return Matrix::Identity(n, n);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > rel_tol * smax) ++r;
  return svd.v.rightCols(n - r);
}

Matrix column_space(const Matrix& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
  const Svd svd = checked_svd(a, false);
  const auto& s = svd.s;
  double smax = s.size() ? s(0) : 0.0;
  if (smax == 0.0) return Matrix(a.rows(), 0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > rel_tol * smax) ++r;
  return svd.u.leftCols(r);
}

int rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const Svd svd = checked_svd(a, false);
  const auto& s = svd.s;
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
  return r;
}

Matrix projection_range(const Matrix& p) {
  if (p.rows() == 0) return Matrix(0, 0);
  Matrix h = 0.5 * (p + p.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& ev = es.eigenvalues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
    if (ev(i) > 0.5) keep.push_back(i);
  Matrix out(p.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c) out.col(c) = es.eigenvectors().col(keep[c]);
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix psd_inv_sqrt(const Matrix& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  const auto& ev = es.eigenvalues();
  double emax = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  if (ev.size() && ev.minCoeff() <= rel_tol * emax)
    throw ValidationError("matrix is not positive definite (min eigenvalue " + std::to_string(ev.minCoeff()) + ")");
  RealVector inv = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

RealVector singular_values(const Matrix& a) {
  if (a.size() == 0) return RealVector(0);
  return checked_svd(a, false).s;
}

Matrix polar_unitary(const Matrix& f) {
  const Svd svd = checked_svd(f, false);
  return svd.u * svd.v.adjoint();
}

void fix_phase(Matrix& a, double rel_tol) {
  if (a.size() == 0) return;
  double m = a.cwiseAbs().maxCoeff();
  if (m == 0.0) return;
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      Complex z = a(r, c);
      if (std::abs(z) > rel_tol * m) {
        a *= std::conj(z) / std::abs(z);
        return;
      }
    }
}

Matrix gaussian(int rows, int cols, Rng& rng) {
  Matrix g(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) g(r, c) = rng.complex_normal();
  return g;
}

Matrix random_isometry(int rows, int cols, Rng& rng) {
  Matrix g = gaussian(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

Matrix probe_basis(int d, int exact_limit, int probes, std::uint64_t seed) {
  if (d <= exact_limit || probes >= d) return Matrix::Identity(d, d);
  Rng rng(seed);
  return random_isometry(d, probes, rng);
}

Vector flip(const Vector& v, int d1, int d2) {
  Vector out(v.size());
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d2; ++j) out(j * d1 + i) = v(i * d2 + j);
  return out;
}

Matrix flip_matrix(int d1, int d2) {
  Matrix p = Matrix::Zero(d1 * d2, d1 * d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d2; ++j) p(j * d1 + i, i * d2 + j) = 1.0;
  return p;
}

bool is_hermitian(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace ncfb::numeric
