#pragma once

#include <map>
#include <memory>
#include <tuple>
#include <utility>
#include <vector>

#include "ncfb/hilbmod.hpp"
#include "ncfb/repcat.hpp"
#include "ncfb/typepi.hpp"

namespace ncfb::fixtures {

inline std::shared_ptr<const typepi::IntertwinerCatalog> catalog(int n, int K) {
  static std::map<std::pair<int, int>, std::shared_ptr<const typepi::IntertwinerCatalog>> cache;
  auto& slot = cache[{n, K}];
  if (!slot) slot = typepi::build_catalog(n, K);
  return slot;
}

inline const repcat::IrrepRegistry& registry(int n, int K, std::uint64_t seed = kDefaultSeed) {
  static std::map<std::tuple<int, int, std::uint64_t>, std::unique_ptr<repcat::IrrepRegistry>> cache;
  auto& slot = cache[{n, K, seed}];
  if (!slot) slot = std::make_unique<repcat::IrrepRegistry>(repcat::IrrepRegistry::build(n, K, seed));
  return *slot;
}

inline hilbmod::FiniteCStarAlgebra algebra(std::vector<int> blocks) {
  return hilbmod::FiniteCStarAlgebra(std::move(blocks));
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace ncfb::fixtures
