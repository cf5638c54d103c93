#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ncfb/common.hpp"
#include "ncfb/report.hpp"
#include "ncfb/typepi.hpp"

namespace ncfb::cli {

using Json = nlohmann::ordered_json;

struct ExampleSpec {
  std::string kind;  // trivial | bundle | morita
  int points = 0;
  std::vector<std::vector<double>> angles;  // Lie algebra coordinates of each bundle transition
  std::string name;                         // morita kind
};

struct CorrespondenceSpec {
  int dim = 0;
  std::vector<Matrix> left, right, inner;
};

struct Problem {
  std::string mode;  // decompose | validate | build | check | so2
  int n = 3;
  int K = 0;
  std::optional<std::vector<int>> cutoff;  // spins for SO(3), registry ids otherwise
  double tolerance = kDefaultTolerance;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::vector<int>> blocks;
  std::optional<ExampleSpec> example;
  std::optional<CorrespondenceSpec> correspondence;
  std::map<std::pair<int, int>, std::vector<typepi::PlainImage>> phi;
  std::optional<typepi::Generators> generators;
  std::optional<std::string> mutation;
  std::optional<int> degenerate;
  std::optional<int> round_trip_K;
  bool export_structure = false;
  int threads = 1;

  std::vector<int> algebra_blocks() const;
};

/// Raised for unusable problem files; always maps to exit code 2.
class ProblemError : public InputError {
 public:
  using InputError::InputError;
};

Problem parse_problem_text(const std::string& text, const std::string& origin = "<input>");
Problem parse_problem(const std::string& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<int> threads;
};

void apply_overrides(Problem& problem, const Overrides& overrides);

struct Report {
  std::string mode;
  Json environment = Json::object();
  std::vector<report::CheckRecord> checks;
  Json tables = Json::object();

  bool pass() const;
  const report::CheckRecord* find(const std::string& name) const;
  Json to_json() const;
  std::string dump() const;
  std::string summary() const;
};

/// Error raised while running a pipeline, carrying the exit code and the stage it happened in.
class RunError : public std::runtime_error {
 public:
  RunError(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

Report run(const Problem& problem);
void emit(const Report& report, const std::string& path);

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitInternalError = 3;

int exit_code_for(const std::exception& e);

/// Complete command-line entry point.
int main_entry(int argc, char** argv);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& field);

}  // namespace ncfb::cli
