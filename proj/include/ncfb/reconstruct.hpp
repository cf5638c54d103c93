#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncfb/common.hpp"
#include "ncfb/gamma.hpp"
#include "ncfb/hilbmod.hpp"
#include "ncfb/liegroup.hpp"
#include "ncfb/repcat.hpp"
#include "ncfb/typepi.hpp"

namespace ncfb::reconstruct {

using hilbmod::Correspondence;
using hilbmod::FiniteCStarAlgebra;

/// Level sigma of A_M: Gamma_M(sigmabar) (x) V_sigma, basis index i * dim V_sigma + v.
struct Level {
  int sigma = 0;
  int sigma_bar = 0;
  int v_dim = 0;
  gamma::GammaObject gamma_bar;  // Gamma_M(sigmabar)
  liegroup::Representation rep;  // sigma
  Matrix v_embedding;            // J_sigma into V^{(x)level}
  Matrix conj_id;                // C_sigma: conj(V_sigma) -> V_sigmabar
  Matrix involution;             // x -> x^+ on Gamma_M(sigmabar) is involution * conj(x); empty when truncated
  bool involution_available = false;

  int gamma_dim() const { return gamma_bar.dim(); }
  int dim() const { return gamma_dim() * v_dim; }
};

struct ProductComponent {
  int target = 0;
  Matrix gamma_part;  // Gamma(Sbar_k)^* m(sigmabar, taubar) on plain Gamma(sigmabar) (x) Gamma(taubar) indices
  Matrix v_part;      // S_k^* on V_sigma (x) V_tau
};

struct ProductBlock {
  int sigma = 0;
  int tau = 0;
  bool computed = false;
  bool truncated = false;
  std::vector<int> dropped;  // irrep ids outside the cutoff (-1 for classes outside the registry)
  std::vector<ProductComponent> components;
};

/// Truncated A_M over a cutoff of irreps; elements of a level are coefficient vectors.
class TruncatedFrameBundle {
 public:
  int n = 3;
  int K = 0;
  std::string datum_kind;
  FiniteCStarAlgebra B;
  Correspondence M;
  std::vector<int> cutoff;
  std::map<int, Level> levels;
  std::map<std::pair<int, int>, ProductBlock> products;
  /// ||R_sigma|| of the conjugate pairing used for the involution on each level.
  std::map<int, double> r_norms;

  const Level& level(int sigma) const;
  const ProductBlock& block(int sigma, int tau) const;
  bool in_cutoff(int sigma) const { return levels.count(sigma) > 0; }
  int total_dim() const;
  std::vector<std::pair<int, int>> level_dims() const;

  /// Product of a in level sigma and b in level tau; components keyed by target level.
  std::map<int, Vector> multiply(int sigma, const Vector& a, int tau, const Vector& b) const;
  Vector involution(int sigma, const Vector& a) const;
  /// (I (x) sigma(g)) on level sigma.
  Matrix action(int sigma, const liegroup::GroupElement& g) const;
  /// Level sigma as a B-correspondence with <x (x) v, y (x) w> = <x,y>_B <v,w>.
  Correspondence level_correspondence(int sigma) const;
  /// 1/||R_sigma||^2: the trivial component of x^+ y equals this multiple of the level inner product.
  double inner_weight(int sigma) const;
};

TruncatedFrameBundle build_algebra(const typepi::TypePiDatum& datum, const repcat::IrrepRegistry& registry,
                                   const std::vector<int>& cutoff, double tol = kDefaultTolerance);

/// Cutoff given as spins (SO(3)) or registry ids.
std::vector<int> cutoff_from_spins(const repcat::IrrepRegistry& registry, const std::vector<int>& spins);

/// Copy of the bundle with the level sigma (and its conjugate) emptied.
TruncatedFrameBundle degenerate_fixture(const TruncatedFrameBundle& bundle, int sigma);

struct CheckRecord {
  std::string name;
  double residual = 0.0;
  bool pass = true;
  std::string detail;
};

struct BundleChecks {
  std::vector<CheckRecord> records;
  bool pass() const;
  const CheckRecord& get(const std::string& name) const;
};

/// Unit level, involutivity, anti-multiplicativity, associativity, covariance and the lambda adjoint identity.
BundleChecks check_structure(const TruncatedFrameBundle& bundle, const repcat::IrrepRegistry& registry,
                             double tol = kDefaultTolerance, std::uint64_t seed = kDefaultSeed);

struct SpectralSubspace {
  int sigma = 0;
  Correspondence corr;      // normalized coordinates
  Matrix basis;             // columns in (sum over levels rho) L_rho (x) V_sigma, raw invariant basis
  std::vector<int> offsets; // offsets of each cutoff level inside the ambient space
  std::string inner_route;  // "algebra" or "hilbert"
  double route_discrepancy = 0.0;
};

SpectralSubspace spectral_subspace(const TruncatedFrameBundle& bundle, const repcat::IrrepRegistry& registry,
                                   int sigma, double tol = kDefaultTolerance);

struct IsomorphismReport {
  bool success = false;
  double bimodule_residual = 0.0;
  double inner_residual = 0.0;
  int spectral_dim = 0;
  int module_dim = 0;
  Matrix unitary;
};

IsomorphismReport check_recovery(const TruncatedFrameBundle& bundle, const repcat::IrrepRegistry& registry,
                                 double tol = kDefaultTolerance);

struct FreenessEntry {
  int sigma = 0;
  bool full = false;
  int rank = 0;
  int spectral_dim = 0;
};

struct FreenessReport {
  bool free = false;
  std::vector<FreenessEntry> entries;
  std::vector<int> offending;
};

FreenessReport check_freeness(const TruncatedFrameBundle& bundle, const repcat::IrrepRegistry& registry,
                              double tol = kDefaultTolerance);

struct CommutativityReport {
  bool commutative = false;
  double residual = 0.0;
  std::optional<std::pair<int, int>> witness;
  bool peter_weyl_checked = false;
  bool peter_weyl_match = false;
  std::vector<std::pair<int, int>> level_dims;
};

CommutativityReport check_classical(const TruncatedFrameBundle& bundle, double tol = kDefaultTolerance,
                                    std::uint64_t seed = kDefaultSeed);

struct EquivalenceReport {
  bool found = false;
  double residual = 0.0;
  bool dims_match = false;
};

/// Explicit level-wise unitary between two builds of the same datum with different registry seeds.
EquivalenceReport bundle_equivalence(const TruncatedFrameBundle& a, const TruncatedFrameBundle& b,
                                     double tol = 1e-7, std::uint64_t seed = kDefaultSeed);

/// Gauge-invariant summary: level dims and rounded singular values of every product component.
std::string gauge_invariant_summary(const TruncatedFrameBundle& bundle);

struct RoundTripReport {
  typepi::ValidationReport validation;
  double max_residual = 0.0;
  bool pass = false;
  int K = 0;
};

/// Re-derives a datum from the spectral tensor powers of A_M up to level K_rt and validates it.
RoundTripReport round_trip(const TruncatedFrameBundle& bundle, const repcat::IrrepRegistry& registry, int K_rt,
                           std::shared_ptr<const typepi::IntertwinerCatalog> catalog, double tol = 1e-7);

}  // namespace ncfb::reconstruct
