#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ncfb/common.hpp"

namespace ncfb::liegroup {

/// Ordered elementary rotations E_ij - E_ji (i < j, lexicographic) spanning so(n).
struct LieAlgebraBasis {
  int n = 0;
  std::vector<RealMatrix> generators;
};

LieAlgebraBasis so_basis(int n);

/// Structured tag describing how a representation was obtained.
struct RepLabel {
  enum class Kind { Standard, Trivial, Tensor, Power, Sum, Irrep, Conjugate, Restricted };
  Kind kind = Kind::Trivial;
  int index = 0;
  std::vector<RepLabel> parts;

  std::string str() const;
};

/// Finite-dimensional unitary representation of SO(n), stored by its derivative on the basis.
class Representation {
 public:
  Representation() = default;
  Representation(int n, std::vector<Matrix> generator_images, RepLabel label);

  int n() const { return n_; }
  int dim() const { return dim_; }
  const std::vector<Matrix>& generators() const { return gens_; }
  const Matrix& generator(int a) const { return gens_[a]; }
  const RepLabel& label() const { return label_; }

  /// Largest bracket-relation and skew-hermiticity residual.
  double structure_residual() const;

 private:
  int n_ = 0;
  int dim_ = 0;
  std::vector<Matrix> gens_;
  RepLabel label_;
};

Representation standard_rep(int n);
Representation trivial_rep(int n);
Representation tensor(const Representation& rho, const Representation& tau);
Representation tensor_power(const Representation& rho, int k);
Representation direct_sum(const std::vector<Representation>& reps);
Representation conjugate(const Representation& rho);
/// Restriction to an invariant subspace with orthonormal basis columns `basis`.
Representation restrict(const Representation& rho, const Matrix& basis, RepLabel label);

/// Element of SO(n) together with the Lie-algebra coordinates that produced it.
class GroupElement {
 public:
  int n() const { return static_cast<int>(matrix_.rows()); }
  const RealMatrix& matrix() const { return matrix_; }
  const RealVector& coordinates() const { return coords_; }

  static GroupElement exp_generator(const LieAlgebraBasis& basis, const RealVector& coefficients);
  /// Validates orthogonality and determinant, then recovers coordinates through the logarithm.
  static GroupElement from_matrix(const LieAlgebraBasis& basis, const RealMatrix& m, double tol = kDefaultTolerance);
  static GroupElement identity(int n);

 private:
  RealMatrix matrix_;
  RealVector coords_;
};

GroupElement exp_generator(const LieAlgebraBasis& basis, const RealVector& coefficients);
GroupElement random_group_element(int n, std::uint64_t seed);
std::vector<GroupElement> random_group_elements(int n, int count, std::uint64_t seed);

/// exp of a skew-hermitian matrix, computed through the hermitian eigendecomposition of iA.
Matrix exp_skew(const Matrix& a);

Matrix rep_matrix(const Representation& rho, const GroupElement& g);

Matrix casimir(const Representation& rho);

}  // namespace ncfb::liegroup
