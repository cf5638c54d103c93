#pragma once

#include <string>
#include <vector>

#include "ncfb/common.hpp"

namespace ncfb::report {

struct CheckRecord {
  std::string name;
  std::string anchor;
  double residual = 0.0;
  bool pass = true;
  std::string detail;
};

/// Statement a check refers to, e.g. "Gamma_{A_M}(pi) = M" for the recovery check.
std::string anchor_for(const std::string& check_name);

CheckRecord make_record(const std::string& name, double residual, bool pass, const std::string& detail = "");

std::string sha256_hex(const std::string& bytes);

/// SHA-256 over the shapes and the values rounded to 1e-12, serialized as little-endian IEEE doubles.
std::string digest(const std::vector<Matrix>& matrices);
std::string digest(const Matrix& m);
std::string digest_text(const std::string& text);

/// Value rounded to the digest grid, with -0 mapped to 0.
double canonical(double x);

}  // namespace ncfb::report
