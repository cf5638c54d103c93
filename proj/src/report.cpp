#include "ncfb/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>

#include <openssl/evp.h>

namespace ncfb::report {

namespace {

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_double(std::string& out, double x) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &x, sizeof bits);
  append_u64(out, bits);
}

const std::map<std::string, std::string>& anchors() {
  static const std::map<std::string, std::string> table = {
      // decomposition
      {"decomposition-complete", "pi^{(x)k} = sum of irreducibles"},
      {"intertwiner-dims", "C_{k,k} = Hom(V^k, V^k)"},
      // type pi conditions
      {"C", "(C) phi respects composition"},
      {"A", "(A) phi respects adjoints"},
      {"U", "(U) phi is unital"},
      {"T", "(T) phi respects tensor products through m(k,l)"},
      {"injectivity", "phi_{k,l} injective"},
      {"adjointability", "phi(T) adjointable, B-bilinear"},
      {"mult-unitary", "m(k,l) unitary"},
      {"mult-associativity", "m(k+l,p)(m(k,l) (x) id) = m(k,l+p)(id (x) m(l,p))"},
      // functor laws
      {"unit-object", "Gamma_M(trivial) = B"},
      {"identity", "Gamma_M(id) = id"},
      {"projection", "Gamma_M(sigma) = phi(P_sigma) M^{(x)k}"},
      {"functoriality", "Gamma_M(ST) = Gamma_M(S) Gamma_M(T)"},
      {"adjoint", "Gamma_M(T^*) = Gamma_M(T)^*"},
      {"naturality", "m(sigma,tau) natural in sigma and tau"},
      {"unit-left", "m(trivial,sigma) = left unitor"},
      {"unit-right", "m(sigma,trivial) = right unitor"},
      {"unitarity", "m(sigma,tau) unitary"},
      {"projection-order", "phi(P_a (x) P_b) m = m (phi(P_a) (x) phi(P_b))"},
      {"kernel-identity", "ker m(k,l) = kernel of the balanced quotient"},
      {"associativity", "unitary tensor functor associativity"},
      // algebra
      {"unit-level", "A_M(trivial) = B"},
      {"involutive", "(x^+)^+ = x"},
      {"anti-multiplicative", "(xy)^+ = y^+ x^+"},
      {"associative", "A_M is associative"},
      {"covariant", "alpha_g(xy) = alpha_g(x) alpha_g(y)"},
      {"lambda-adjoint", "<z, a.y> = <a^+.z, y>"},
      {"inner-weight", "<x,y>_B = trivial component of x^+ y"},
      {"recovery", "Gamma_{A_M}(pi) = M"},
      {"freeness", "free C*-dynamical system"},
      {"commutativity", "m(sigma,tau) = flip(m(tau,sigma)) for trivial data"},
      {"peter-weyl", "A_M = B (x) C(SO(n)) for trivial data"},
      {"seed-independence", "A_M independent of choices up to isomorphism"},
      {"round-trip", "Gamma_{A_M}(pi) is of type pi"},
      // SO(2)
      {"fixed-level", "A_N(0) = B"},
      {"level-one", "A_N(1) = N"},
      {"inner-product", "<x,y>_B = x^* y"},
      {"grading", "alpha_z acts by z^k on A_N(k)"},
      {"flatness-N", "Psi_{1,-1} (x) id_N = id_N (x) Psi_{-1,1}"},
      {"flatness-Nbar", "Psi_{-1,1} (x) id_Nbar = id_Nbar (x) Psi_{1,-1}"},
      {"psi-unitary", "Psi_{k1,k2} isomorphisms of Morita bimodules"},
      {"factor-associativity", "Psi_{k1+k2,k3}(Psi_{k1,k2} (x) id) = Psi_{k1,k2+k3}(id (x) Psi_{k2,k3})"},
      {"standard-split", "Gamma_{A_N}(pi) = N + Nbar"},
      {"so2-round-trip", "Ext(B,SO(2)) -> Pic(B) is a bijection"},
      {"morita", "Morita equivalence B-bimodule"},
      // pipeline stages
      {"registry", "irreducible representations of SO(n) inside pi^{(x)k}"},
      {"catalog", "C_{k,l} = Hom(V^k, V^l)"},
      {"datum", "M tensorial of type pi"},
      {"algebra", "A_M = sum of Gamma_M(sigmabar) (x) V_sigma"},
      {"factor-system", "factor system (N, Psi) of a Morita bimodule"},
  };
  return table;
}

}  // namespace

std::string anchor_for(const std::string& check_name) {
  auto it = anchors().find(check_name);
  return it == anchors().end() ? check_name : it->second;
}

CheckRecord make_record(const std::string& name, double residual, bool pass, const std::string& detail) {
  return {name, anchor_for(name), residual, pass, detail};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw InternalError("SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

double canonical(double x) {
  double r = std::round(x * 1e12) / 1e12;
  return r == 0.0 ? 0.0 : r;
}

std::string digest(const std::vector<Matrix>& matrices) {
  std::string bytes;
  append_u64(bytes, matrices.size());
  for (const auto& m : matrices) {
    append_u64(bytes, static_cast<std::uint64_t>(m.rows()));
    append_u64(bytes, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        append_double(bytes, canonical(m(i, j).real()));
        append_double(bytes, canonical(m(i, j).imag()));
      }
  }
  return sha256_hex(bytes);
}

std::string digest(const Matrix& m) { return digest(std::vector<Matrix>{m}); }

std::string digest_text(const std::string& text) { return sha256_hex(text); }

}  // namespace ncfb::report
