#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ncfb/common.hpp"
#include "ncfb/liegroup.hpp"

namespace ncfb::repcat {

using liegroup::Representation;

/// Hilbert-Schmidt orthonormal basis of Hom_G(source, target).
struct IntertwinerSpace {
  Representation source;
  Representation target;
  std::vector<Matrix> basis;

  int dim() const { return static_cast<int>(basis.size()); }
  /// Hilbert-Schmidt coefficients of t in the basis.
  Vector coefficients(const Matrix& t) const;
  Matrix combine(const Vector& coefficients) const;
};

/// Null space of the vectorized equivariance system.
IntertwinerSpace intertwiner_space_direct(const Representation& sigma, const Representation& tau,
                                          double tol = kDefaultTolerance);
/// Built from matched irreducible decompositions of both sides.
IntertwinerSpace intertwiner_space_by_decomposition(const Representation& sigma, const Representation& tau,
                                                    double tol = kDefaultTolerance,
                                                    std::uint64_t seed = kDefaultSeed);
/// Uses the direct route for small systems and the decomposition route otherwise.
IntertwinerSpace intertwiner_space(const Representation& sigma, const Representation& tau,
                                   double tol = kDefaultTolerance, std::uint64_t seed = kDefaultSeed);

double equivariance_residual(const Representation& sigma, const Representation& tau, const Matrix& t);

struct Summand {
  int cls = 0;
  Matrix embedding;
};

struct Decomposition {
  std::vector<Summand> summands;
  std::vector<int> class_dims;
};

/// Complete orthogonal family of irreducible isometric embeddings; `cls` groups equivalent summands.
Decomposition decompose(const Representation& rho, std::uint64_t seed = kDefaultSeed,
                        double tol = kDefaultTolerance);

/// Unitary U with to(X) U = U from(X) when both irreducible and equivalent.
std::optional<Matrix> irreducible_equivalence(const Representation& from, const Representation& to,
                                              double tol = kDefaultTolerance);

struct IrrepEntry {
  int id = 0;
  int level = 0;
  int dim = 0;
  int conjugate_id = -1;
  int spin = -1;
  Matrix embedding;
  Matrix projection;
  Representation rep;
};

struct RegisteredSummand {
  int id = -1;
  Matrix embedding;
};

class IrrepRegistry {
 public:
  static IrrepRegistry build(int n, int K, std::uint64_t seed = kDefaultSeed, double tol = kDefaultTolerance);

  int n() const { return n_; }
  int K() const { return K_; }
  std::uint64_t seed() const { return seed_; }
  double tol() const { return tol_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<IrrepEntry>& entries() const { return entries_; }
  const IrrepEntry& entry(int id) const;
  int trivial_id() const { return 0; }
  int pi_id() const { return pi_id_; }
  const Representation& power(int k) const;
  std::optional<int> id_for_spin(int spin) const;

  /// Registry class of an irreducible together with a unitary intertwiner V_entry -> V_rep.
  std::optional<std::pair<int, Matrix>> match(const Representation& irreducible) const;
  /// Decomposition whose embeddings intertwine the registry representatives; id -1 for unregistered classes.
  std::vector<RegisteredSummand> decompose(const Representation& rho) const;

 private:
  int n_ = 0;
  int K_ = 0;
  int pi_id_ = 1;
  std::uint64_t seed_ = kDefaultSeed;
  double tol_ = kDefaultTolerance;
  std::vector<Representation> powers_;
  std::vector<IrrepEntry> entries_;
};

struct IsometricMember {
  int id = -1;
  Matrix isometry;
};

struct IsometricIntertwinerSet {
  int sigma = 0;
  int tau = 0;
  std::vector<IsometricMember> members;

  bool complete_in_registry() const;
};

IsometricIntertwinerSet isometric_set(int sigma, int tau, const IrrepRegistry& registry);

/// R in V_sigma (x) V_sigmabar and Rbar = flip(R); C identifies conj(V_sigma) with V_sigmabar.
struct ConjugateSolution {
  int sigma = 0;
  int sigma_bar = 0;
  Vector R;
  Vector Rbar;
  Matrix C;
  double norm = 0.0;

  double conjugate_equation_residual() const;
};

ConjugateSolution conjugate_solution(int sigma, const IrrepRegistry& registry);

/// W_T = J_tau T J_sigma^*.
Matrix w_map(const Matrix& t, const IrrepEntry& sigma, const IrrepEntry& tau, double tol = kDefaultTolerance);

}  // namespace ncfb::repcat
