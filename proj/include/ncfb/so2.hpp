#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ncfb/common.hpp"
#include "ncfb/hilbmod.hpp"

namespace ncfb::so2 {

using hilbmod::BalancedTensor;
using hilbmod::Correspondence;
using hilbmod::FiniteCStarAlgebra;

/// Correspondence with an additional left B-valued inner product.
/// The beta-coordinate of the left product <x,y> is y^* left_inner[beta] x (linear in x).
struct MoritaBimodule {
  Correspondence corr;
  std::vector<Matrix> left_inner;

  const FiniteCStarAlgebra& algebra() const { return corr.algebra(); }
  int dim() const { return corr.dim(); }
  Vector left_product(const Vector& x, const Vector& y) const;
  Vector right_product(const Vector& x, const Vector& y) const { return corr.inner_product(x, y); }
};

struct MoritaCheck {
  std::string axiom;
  double residual = 0.0;
  bool pass = true;
};

std::vector<MoritaCheck> check_morita(const MoritaBimodule& n, double tol = kDefaultTolerance);

/// Validates every Morita axiom; throws AxiomViolation naming the first failure.
MoritaBimodule make_morita(const Correspondence& corr, const std::vector<Matrix>& left_inner,
                           double tol = kDefaultTolerance);
/// Left inner product forced by the imprimitivity relation on a full correspondence.
MoritaBimodule make_morita(const Correspondence& corr, double tol = kDefaultTolerance);

struct Dual {
  MoritaBimodule module;
  /// Coordinates of xbar are conj_map * conj(x).
  Matrix conj_map;
};

Dual dual(const MoritaBimodule& n, double tol = kDefaultTolerance);

/// "trivial" (B = C, N = C), "permutation" (3-cycle over C^3) and "matrix" (M_2 over itself).
MoritaBimodule canned_morita(const std::string& kind);
std::vector<std::string> canned_morita_kinds();

/// Bimodule twisted by a permutation of the points of C^m: b.e_i = b_{perm[i]} e_i, e_i.b = b_i e_i.
MoritaBimodule permutation_bimodule(const std::vector<int>& perm);

class FactorSystem {
 public:
  int cutoff = 0;
  MoritaBimodule N;
  Dual Nbar;
  std::map<int, Correspondence> levels;
  std::map<std::pair<int, int>, BalancedTensor> products;
  std::map<std::pair<int, int>, Matrix> psi;

  const FiniteCStarAlgebra& algebra() const { return N.algebra(); }
  const Correspondence& level(int k) const;
  const BalancedTensor& product(int k1, int k2) const;
  const Matrix& map(int k1, int k2) const;
  bool in_range(int k) const { return k >= -cutoff && k <= cutoff; }
};

FactorSystem factor_system(const MoritaBimodule& n, int cutoff = 3, double tol = kDefaultTolerance);

struct NamedResidual {
  std::string name;
  double residual = 0.0;
  bool pass = true;
  std::string detail;
};

/// Associativity of Psi over every in-range triple.
NamedResidual associativity_check(const FactorSystem& fs, double tol = 1e-10);
std::vector<NamedResidual> flatness_checks(const FactorSystem& fs, double tol = 1e-10);
/// Psi maps are bilinear unitaries.
NamedResidual psi_unitarity_check(const FactorSystem& fs, double tol = 1e-10);

/// Graded algebra A_N truncated at |k| <= cutoff.
class So2Algebra {
 public:
  FactorSystem fs;
  /// x^* = star[k] * conj(x) maps level k to level -k.
  std::map<int, Matrix> star;

  int cutoff() const { return fs.cutoff; }
  int level_dim(int k) const { return fs.level(k).dim(); }
  std::vector<std::pair<int, int>> level_dims() const;
  Vector multiply(int k1, const Vector& a, int k2, const Vector& b) const;
  Vector involution(int k, const Vector& a) const;
  /// alpha_theta on level k.
  Complex weight(int k, double theta) const;
};

So2Algebra build_so2_algebra(const FactorSystem& fs);

struct SplitReport {
  int gamma_dim = 0;
  int n_dim = 0;
  int plus_dim = 0;   // part in A(1) (x) C(1,i)
  int minus_dim = 0;  // part in A(-1) (x) C(1,-i)
  double split_residual = 0.0;
  double iso_residual = 0.0;
  bool pass = false;
};

/// Gamma_A(pi) for the standard representation of SO(2), compared with N + Nbar.
SplitReport standard_split(const So2Algebra& a, double tol = kDefaultTolerance);

struct So2Report {
  std::vector<NamedResidual> checks;
  std::vector<std::pair<int, int>> level_dims;
  SplitReport split;
  bool pass() const;
  const NamedResidual& get(const std::string& name) const;
};

/// Fixed level, level one, products, involution, grading, freeness, associativity, flatness and the split.
So2Report check_so2(const So2Algebra& a, double tol = 1e-10);

/// Rebuilds the factor system from level one of A_N and compares the Psi maps through a bimodule unitary.
NamedResidual round_trip(const So2Algebra& a, double tol = 1e-10);

}  // namespace ncfb::so2
