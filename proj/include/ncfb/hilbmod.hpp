#pragma once

#include <string>
#include <vector>

#include "ncfb/common.hpp"

namespace ncfb::hilbmod {

struct MatrixUnit {
  int block = 0;
  int p = 0;
  int q = 0;
};

/// B = M_{n_1} + ... + M_{n_r}, with basis the matrix units e^i_{pq} ordered block-major, then row-major.
class FiniteCStarAlgebra {
 public:
  FiniteCStarAlgebra() = default;
  explicit FiniteCStarAlgebra(std::vector<int> blocks);

  const std::vector<int>& blocks() const { return blocks_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  int dim() const { return dim_; }
  int offset(int block) const { return offsets_[block]; }
  int index(int block, int p, int q) const { return offsets_[block] + p * blocks_[block] + q; }
  MatrixUnit unit_of(int beta) const { return units_[beta]; }
  int star_index(int beta) const;

  Vector unit() const;
  Vector multiply(const Vector& a, const Vector& b) const;
  Vector adjoint(const Vector& a) const;
  double trace(const Vector& a) const;
  bool is_positive(const Vector& a, double tol = kDefaultTolerance) const;
  std::vector<Matrix> to_blocks(const Vector& a) const;
  Vector from_blocks(const std::vector<Matrix>& blocks) const;
  Vector basis_vector(int beta) const;

  bool operator==(const FiniteCStarAlgebra& other) const { return blocks_ == other.blocks_; }
  bool operator!=(const FiniteCStarAlgebra& other) const { return !(*this == other); }

 private:
  std::vector<int> blocks_;
  std::vector<int> offsets_;
  std::vector<MatrixUnit> units_;
  int dim_ = 0;
};

FiniteCStarAlgebra make_algebra(const std::vector<int>& blocks);

class AlgebraElement {
 public:
  AlgebraElement(FiniteCStarAlgebra algebra, std::vector<Matrix> blocks);
  static AlgebraElement from_coordinates(const FiniteCStarAlgebra& algebra, const Vector& coords);
  static AlgebraElement unit(const FiniteCStarAlgebra& algebra);

  const FiniteCStarAlgebra& algebra() const { return algebra_; }
  const std::vector<Matrix>& blocks() const { return blocks_; }
  Vector coordinates() const { return algebra_.from_blocks(blocks_); }

  AlgebraElement operator*(const AlgebraElement& other) const;
  AlgebraElement operator+(const AlgebraElement& other) const;
  AlgebraElement adjoint() const;
  bool is_positive(double tol = kDefaultTolerance) const;
  double distance(const AlgebraElement& other) const;

 private:
  FiniteCStarAlgebra algebra_;
  std::vector<Matrix> blocks_;
};

/// B-bimodule with B-valued inner product, realized on C^d.
/// left[b], right[b] are the actions of the basis element e_b (x.(bb') = R(b')R(b)x), and
/// the b-coordinate of <x,y>_B is x^* inner[b] y.  Coordinates are orthonormal for the trace
/// of the inner product, so adjoints of right-linear maps are conjugate transposes.
class Correspondence {
 public:
  Correspondence() = default;
  /// Trusted constructor for already normalized structure tensors (no validation).
  static Correspondence unchecked(FiniteCStarAlgebra algebra, int dim, std::vector<Matrix> left,
                                  std::vector<Matrix> right, std::vector<Matrix> inner);

  const FiniteCStarAlgebra& algebra() const { return algebra_; }
  int dim() const { return dim_; }
  const std::vector<Matrix>& left() const { return left_; }
  const std::vector<Matrix>& right() const { return right_; }
  const std::vector<Matrix>& inner() const { return inner_; }

  Matrix left_action(const Vector& b) const;
  Matrix right_action(const Vector& b) const;
  Vector inner_product(const Vector& x, const Vector& y) const;

 private:
  FiniteCStarAlgebra algebra_;
  int dim_ = 0;
  std::vector<Matrix> left_, right_, inner_;
};

struct AxiomCheck {
  std::string axiom;
  double residual = 0.0;
  bool pass = true;
};

/// Evaluates every correspondence axiom on raw (possibly unnormalized) structure tensors.
std::vector<AxiomCheck> check_axioms(const FiniteCStarAlgebra& algebra, int dim, const std::vector<Matrix>& left,
                                     const std::vector<Matrix>& right, const std::vector<Matrix>& inner,
                                     double tol = kDefaultTolerance);
std::vector<AxiomCheck> check_axioms(const Correspondence& m, double tol = kDefaultTolerance);

struct Normalized {
  Correspondence corr;
  Matrix to_new;  // new coordinates = to_new * old coordinates
  Matrix to_old;
};

/// Validates raw tensors (throws AxiomViolation naming the first failing axiom) and re-coordinatizes.
Normalized normalize_correspondence(const FiniteCStarAlgebra& algebra, int dim, const std::vector<Matrix>& left,
                                    const std::vector<Matrix>& right, const std::vector<Matrix>& inner,
                                    double tol = kDefaultTolerance);
Correspondence make_correspondence(const FiniteCStarAlgebra& algebra, int dim, const std::vector<Matrix>& left,
                                   const std::vector<Matrix>& right, const std::vector<Matrix>& inner,
                                   double tol = kDefaultTolerance);

/// B as a bimodule over itself with <a,b> = a^*b.
Correspondence algebra_bimodule(const FiniteCStarAlgebra& algebra);
/// B (x) C^m with <b(x)v, b'(x)v'> = <v,v'> b^*b'.
Correspondence free_module(const FiniteCStarAlgebra& algebra, int multiplicity);
Correspondence zero_module(const FiniteCStarAlgebra& algebra);

/// M (x)_B N realized as the sum over blocks i of (M e^i_11) (x)_C (e^i_11 N).
class BalancedTensor {
 public:
  const Correspondence& product() const { return product_; }
  int left_dim() const { return dm_; }
  int right_dim() const { return dn_; }
  int dim() const { return product_.dim(); }
  int block_offset(int i) const { return offsets_[i]; }
  const Matrix& left_basis(int i) const { return x_[i]; }
  const Matrix& right_basis(int i) const { return y_[i]; }

  /// Class of the plain tensor w (dm x dn matrix, entry (x,y) is the coefficient of e_x (x) e_y).
  Vector apply_surjection(const Matrix& w) const;
  /// Plain tensor representing v (a right inverse of the surjection).
  Matrix lift(const Vector& v) const;
  Matrix surjection() const;
  Matrix embedding() const;

  friend BalancedTensor tensor_over_B(const Correspondence& m, const Correspondence& n);

 private:
  Correspondence product_;
  int dm_ = 0, dn_ = 0;
  std::vector<Matrix> x_, y_;
  std::vector<int> offsets_;
  std::vector<std::vector<Matrix>> a_, b_;
};

BalancedTensor tensor_over_B(const Correspondence& m, const Correspondence& n);

/// F (x) G between balanced tensors; F right-linear M1 -> M2, G left-linear N1 -> N2.
Matrix tensor_maps(const Matrix& f, const Matrix& g, const BalancedTensor& source, const BalancedTensor& target);

/// Unitary (M (x) N) (x) P -> M (x) (N (x) P).
Matrix associator(const BalancedTensor& mn, const BalancedTensor& mn_p, const BalancedTensor& np,
                  const BalancedTensor& m_np);

/// b (x) x -> b.x on B (x)_B M, and x (x) b -> x.b on M (x)_B B.
Matrix left_unitor(const BalancedTensor& bm, const Correspondence& m);
Matrix right_unitor(const BalancedTensor& mb, const Correspondence& m);

struct DirectSum {
  Correspondence sum;
  std::vector<int> offsets;
};
DirectSum direct_sum_corr(const std::vector<Correspondence>& parts);

/// Bounded right-linear map with adjoint; in normalized coordinates the adjoint is F^*.
struct AdjointableMap {
  Matrix matrix;
  Matrix adjoint() const { return matrix.adjoint(); }
};
AdjointableMap adjoint_map(const Matrix& f, const Correspondence& source, const Correspondence& target,
                           double tol = kDefaultTolerance);
double right_linearity_residual(const Matrix& f, const Correspondence& source, const Correspondence& target);
double left_linearity_residual(const Matrix& f, const Correspondence& source, const Correspondence& target);
double adjointability_residual(const Matrix& f, const Correspondence& source, const Correspondence& target);
double inner_preservation_residual(const Matrix& u, const Correspondence& source, const Correspondence& target);

struct SpanReport {
  bool full = false;
  int rank = 0;
  int algebra_dim = 0;
};
SpanReport full_span_check(const Correspondence& m, double tol = kDefaultTolerance);

struct BimoduleIsomorphism {
  bool found = false;
  Matrix unitary;
  double bimodule_residual = 0.0;
  double inner_residual = 0.0;
};
/// Solves for B-bilinear maps N -> M, takes a seeded generic combination and polar-corrects it.
BimoduleIsomorphism find_bimodule_unitary(const Correspondence& source, const Correspondence& target,
                                          double tol = kDefaultTolerance, std::uint64_t seed = kDefaultSeed);

}  // namespace ncfb::hilbmod
