#pragma once

#include <cstdint>
#include <random>

#include "ncfb/common.hpp"

namespace ncfb::numeric {

/// Seeded random source shared by every sampling routine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Complex complex_normal() { return {normal(), normal()}; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Largest singular value; exact for moderate sizes, power iteration beyond.
double op_norm(const Matrix& a);

/// Orthonormal basis of the null space, singular values below rel_tol * max(sigma_max, scale) count as zero.
Matrix null_space(const Matrix& a, double rel_tol, double scale = 0.0);

/// Orthonormal basis of the column space with the same thresholding rule.
Matrix column_space(const Matrix& a, double rel_tol);

/// Numerical rank with the same thresholding rule.
int rank(const Matrix& a, double rel_tol);

/// Orthonormal basis of the range of a (nearly) hermitian projection.
Matrix projection_range(const Matrix& p);

Matrix kron(const Matrix& a, const Matrix& b);

/// Positive square root and inverse square root of a positive definite hermitian matrix.
Matrix psd_sqrt(const Matrix& a);
Matrix psd_inv_sqrt(const Matrix& a, double rel_tol);

RealVector singular_values(const Matrix& a);
/// Unitary factor of the polar decomposition.
Matrix polar_unitary(const Matrix& f);

/// Multiply by a unit scalar so the first significant entry (column-major) is real positive.
void fix_phase(Matrix& a, double rel_tol = 1e-8);

Matrix gaussian(int rows, int cols, Rng& rng);
Matrix random_isometry(int rows, int cols, Rng& rng);

/// Identity when d <= exact_limit, else a seeded random isometry with `probes` columns.
Matrix probe_basis(int d, int exact_limit, int probes, std::uint64_t seed);

/// Vector of V1 (x) V2 reordered as a vector of V2 (x) V1.
Vector flip(const Vector& v, int d1, int d2);

/// Permutation matrix V1 (x) V2 -> V2 (x) V1.
Matrix flip_matrix(int d1, int d2);

bool is_hermitian(const Matrix& a, double tol);

}  // namespace ncfb::numeric
