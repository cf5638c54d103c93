#pragma once

#include <string>
#include <vector>

#include "ncfb/common.hpp"
#include "ncfb/hilbmod.hpp"
#include "ncfb/repcat.hpp"
#include "ncfb/typepi.hpp"

namespace ncfb::gamma {

using hilbmod::BalancedTensor;
using hilbmod::Correspondence;
using typepi::TypePiDatum;

/// Gamma_M of a subrepresentation of pi^{(x)k} given by an isometric embedding J: V_obj -> V^{(x)k}.
struct GammaObject {
  std::string label;
  int level = 0;
  Matrix v_embedding;  // J
  Matrix projection;   // phi_{k,k}(J J^*) on M^{(x)k}
  Matrix inclusion;    // orthonormal basis of the range (columns)
  Correspondence carrier;

  int dim() const { return carrier.dim(); }
  int v_dim() const { return static_cast<int>(v_embedding.cols()); }
};

GammaObject gamma_subobject(const TypePiDatum& datum, int level, const Matrix& v_embedding, std::string label);
GammaObject gamma_object(const TypePiDatum& datum, const repcat::IrrepRegistry& registry, int sigma);
/// Gamma_M(pi^{(x)k}) = M^{(x)k} with the identity inclusion.
GammaObject gamma_power(const TypePiDatum& datum, int k);
/// The object sigma (x) tau realized inside pi^{(x)(k+l)} with embedding J_sigma (x) J_tau.
GammaObject gamma_tensor(const TypePiDatum& datum, const GammaObject& a, const GammaObject& b);

/// Gamma_M(T) for an intertwiner T: V_src -> V_tgt of the object representations.
Matrix gamma_morphism(const TypePiDatum& datum, const Matrix& t, const GammaObject& src, const GammaObject& tgt,
                      double tol = kDefaultTolerance);

struct MultMap {
  BalancedTensor domain;  // Gamma(a) (x)_B Gamma(b)
  GammaObject target;     // Gamma(a (x) b)
  Matrix unitary;
};

/// phi(P_a (x) P_b) m(k,l) restricted to Gamma(a) (x) Gamma(b).
MultMap mult_map(const TypePiDatum& datum, const GammaObject& a, const GammaObject& b);
/// m(k,l)(phi(P_a) (x) phi(P_b)) restricted; same domain and target as mult_map.
Matrix mult_map_alternative(const TypePiDatum& datum, const MultMap& m, const GammaObject& a, const GammaObject& b);

struct GammaSum {
  std::vector<GammaObject> parts;
  hilbmod::DirectSum sum;
  const Correspondence& carrier() const { return sum.sum; }
};

GammaSum sum_object(std::vector<GammaObject> parts);
/// Block morphism (Gamma(T_ij)); blocks[i][j] maps part j of src to part i of tgt (empty matrix = zero).
Matrix sum_morphism(const TypePiDatum& datum, const std::vector<std::vector<Matrix>>& blocks, const GammaSum& src,
                    const GammaSum& tgt, double tol = kDefaultTolerance);

struct SumMult {
  BalancedTensor domain;
  GammaSum target;  // parts ordered (i, j) row-major
  Matrix unitary;
};
SumMult sum_mult(const TypePiDatum& datum, const GammaSum& a, const GammaSum& b);

struct LawResult {
  std::string law;
  double residual = 0.0;
  bool pass = true;
  std::string detail;
};

struct FunctorReport {
  std::vector<LawResult> laws;
  int objects_checked = 0;
  int morphisms_checked = 0;
  bool pass() const;
  const LawResult& get(const std::string& law) const;
};

/// Functoriality, adjoints, naturality, unit laws, unitarity, agreement of the two projection orders, the kernel identity
/// and associativity over every registered irrep whose levels fit in K.
FunctorReport verify_functor(const TypePiDatum& datum, const repcat::IrrepRegistry& registry,
                             double tol = kDefaultTolerance);

}  // namespace ncfb::gamma
