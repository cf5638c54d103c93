#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncfb/common.hpp"
#include "ncfb/hilbmod.hpp"
#include "ncfb/liegroup.hpp"
#include "ncfb/repcat.hpp"

namespace ncfb::typepi {

using hilbmod::BalancedTensor;
using hilbmod::Correspondence;
using hilbmod::FiniteCStarAlgebra;

/// Bases of C_{k,l} = Hom_G(V^k, V^l) for k, l <= K.
struct IntertwinerCatalog {
  int n = 3;
  int K = 0;
  std::uint64_t seed = kDefaultSeed;
  double tol = kDefaultTolerance;
  std::vector<liegroup::Representation> powers;
  std::vector<std::vector<repcat::IntertwinerSpace>> spaces;

  const repcat::IntertwinerSpace& space(int k, int l) const;
  int dim_power(int k) const { return powers.at(k).dim(); }

  /// Column i + dim C_{k,l} * j holds the coefficients of U'_j U_i in C_{k,m}, U in C_{k,l}, U' in C_{l,m}.
  const Matrix& composition_constants(int k, int l, int m) const;
  /// Column i + dim C_{k,k} * j holds the coefficients of U_i (x) U'_j in C_{k+l,k+l}.
  const Matrix& tensor_constants(int k, int l) const;

 private:
  mutable std::mutex cache_mutex_;
  mutable std::map<std::tuple<int, int, int>, Matrix> composition_cache_;
  mutable std::map<std::pair<int, int>, Matrix> tensor_cache_;
};

std::shared_ptr<const IntertwinerCatalog> build_catalog(int n, int K, std::uint64_t seed = kDefaultSeed,
                                                        double tol = kDefaultTolerance);

/// A correspondence M with tensor powers, multiplication maps m(k,l) and tables phi_{k,l}.
class TypePiDatum {
 public:
  int n = 3;
  int K = 0;
  FiniteCStarAlgebra B;
  std::string kind;
  std::shared_ptr<const IntertwinerCatalog> catalog;
  std::vector<Correspondence> powers;
  std::map<std::pair<int, int>, BalancedTensor> products;
  std::map<std::pair<int, int>, Matrix> mult;
  /// phi[k][l][j] is the image of basis element j of C_{k,l}.
  std::vector<std::vector<std::vector<Matrix>>> phi;

  const Correspondence& M() const { return powers.at(1); }
  const BalancedTensor& product(int k, int l) const;
  const Matrix& mult_map(int k, int l) const;
  /// Linear extension of the stored table; rejects T outside C_{k,l}.
  Matrix phi_apply(const Matrix& t, int k, int l, double tol = kDefaultTolerance) const;
  Matrix phi_combination(const Vector& coefficients, int k, int l) const;
};

/// M = B (x) V with phi(T) = id_B (x) T.
TypePiDatum trivial_type_pi(const FiniteCStarAlgebra& B, int n, int K,
                            std::shared_ptr<const IntertwinerCatalog> catalog = nullptr);

/// B = C^m, M = sum over points of V, phi acting fibrewise through the frame twists g_x.
TypePiDatum bundle_type_pi(int m, const std::vector<liegroup::GroupElement>& transitions, int n, int K,
                           std::shared_ptr<const IntertwinerCatalog> catalog = nullptr);

/// Plain-coordinate images: a map on (C^d)^{(x)k} -> (C^d)^{(x)l}, in the coordinates of the raw input tensors.
struct PlainImage {
  Matrix t;
  Matrix image;
};

struct Generators {
  std::optional<Matrix> flip;   // image of the flip V(x)V -> V(x)V
  std::optional<Matrix> r;      // image of r: C -> V(x)V, r = sum e_i (x) e_i
  std::optional<Matrix> r_adj;  // image of r^*
  std::optional<Matrix> eps;    // image of the epsilon tensor C -> V^{(x)n}
};

/// Tensor powers and multiplication maps built from M alone; phi left empty.
TypePiDatum skeleton_datum(const Correspondence& M, int n, int K, std::shared_ptr<const IntertwinerCatalog> catalog);

/// Fills phi_{k,l} from plain-coordinate (T, image) pairs spanning each C_{k,l}. `to_new` maps raw
/// carrier coordinates to the normalized coordinates of M.
TypePiDatum datum_from_tables(const Correspondence& M, const Matrix& to_new, int n, int K,
                              std::shared_ptr<const IntertwinerCatalog> catalog,
                              const std::map<std::pair<int, int>, std::vector<PlainImage>>& tables,
                              double tol = kDefaultTolerance);

/// Fills phi by closing the generator images under composition, adjoints and tensoring with id_1.
TypePiDatum datum_from_generators(const Correspondence& M, const Matrix& to_new, int n, int K,
                                  std::shared_ptr<const IntertwinerCatalog> catalog, const Generators& gens,
                                  double tol = kDefaultTolerance);

struct ConditionResult {
  std::string name;
  double residual = 0.0;
  bool pass = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ConditionResult> conditions;
  bool pass() const;
  const ConditionResult& get(const std::string& name) const;
};

/// Checks (C), (A), (U), (T), injectivity, adjointability and mixed multiplication associativity.
ValidationReport validate(const TypePiDatum& datum, double tol = kDefaultTolerance);

enum class Mutation { Composition, Adjoint, Unit, Tensor, Injectivity, Adjointability, FlipIdentity };

std::string mutation_name(Mutation m);
std::optional<Mutation> parse_mutation(const std::string& name);
/// The validator condition each canned mutation must trip.
std::string mutation_condition(Mutation m);

/// Applies a single-condition mutation to a valid datum (requires K >= 2, and B = C^2 for Unit/Adjointability).
TypePiDatum mutate(const TypePiDatum& datum, Mutation m);

/// Canned base datum used for a mutation and the five canned valid data.
TypePiDatum canned_mutation(Mutation m, std::shared_ptr<const IntertwinerCatalog> catalog);
std::vector<TypePiDatum> canned_valid_data(std::shared_ptr<const IntertwinerCatalog> catalog);

}  // namespace ncfb::typepi
