#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "ncfb/cli.hpp"
#include "ncfb/report.hpp"

using namespace ncfb;
using cli::Json;

namespace {

cli::Problem parse(const std::string& text) { return cli::parse_problem_text(text); }

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const cli::ProblemError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Parse, MinimalDecomposeProblem) {
  auto p = parse(R"({"mode": "decompose", "n": 3, "K": 2})");
  EXPECT_EQ(p.mode, "decompose");
  EXPECT_EQ(p.n, 3);
  EXPECT_EQ(p.K, 2);
  EXPECT_EQ(p.seed, kDefaultSeed);
  EXPECT_DOUBLE_EQ(p.tolerance, kDefaultTolerance);
}

TEST(Parse, MissingFieldIsNamed) {
  const std::string err = error_of(R"({"mode": "decompose", "K": 2})");
  EXPECT_NE(err.find("'n'"), std::string::npos) << err;
  EXPECT_NE(err.find("missing"), std::string::npos) << err;
}

TEST(Parse, UnknownFieldsAreRejected) {
  EXPECT_NE(error_of(R"({"mode": "decompose", "n": 3, "K": 2, "colour": 1})").find("'colour'"), std::string::npos);
  EXPECT_NE(error_of(R"({"mode": "build", "n": 3, "K": 2, "example": {"kind": "trivial", "x": 1}})").find("example.x"),
            std::string::npos);
}

TEST(Parse, SyntaxErrorsReportTheLine) {
  const std::string err = error_of("{\n  \"mode\": \"decompose\",\n  \"n\": 3,\n  \"K\": ,\n}");
  EXPECT_NE(err.find("line 4"), std::string::npos) << err;
}

TEST(Parse, TrivialExampleCarriesTheAlgebra) {
  auto p = parse(R"({"mode": "build", "n": 3, "K": 2, "algebra": {"blocks": [2, 1]}, "example": {"kind": "trivial"}})");
  EXPECT_EQ(hilbmod::FiniteCStarAlgebra(p.algebra_blocks()).dim(), 5);
}

TEST(Parse, BundleAlgebraIsCommutative) {
  auto p = parse(R"({"mode": "build", "n": 3, "K": 2, "example": {"kind": "bundle", "points": 3}})");
  EXPECT_EQ(p.algebra_blocks(), (std::vector<int>{1, 1, 1}));
  EXPECT_NE(error_of(R"({"mode": "build", "n": 3, "K": 2, "algebra": {"blocks": [2]},
                         "example": {"kind": "bundle", "points": 1}})"),
            "");
}

TEST(Parse, ComplexEntriesAndShapes) {
  Matrix m = cli::matrix_from_json(Json::parse(R"([[[1, 2], 3], [[0, -1], [4.5, 0]]])"), "m");
  EXPECT_EQ(m(0, 0), Complex(1, 2));
  EXPECT_EQ(m(0, 1), Complex(3, 0));
  EXPECT_EQ(m(1, 0), Complex(0, -1));
  EXPECT_THROW(cli::matrix_from_json(Json::parse(R"([[1, 2], [3]])"), "m"), cli::ProblemError);
  EXPECT_THROW(cli::matrix_from_json(Json::parse(R"([[[1, 2, 3]]])"), "m"), cli::ProblemError);
  EXPECT_LT((cli::matrix_from_json(cli::matrix_to_json(m), "m") - m).norm(), 1e-15);
}

TEST(Parse, CorrespondenceShapeErrorsNameTheTensor) {
  const std::string err = error_of(R"({"mode": "validate", "n": 3, "K": 1,
      "correspondence": {"dim": 2, "left": [[[1, 0], [0, 1]]], "right": [[[1, 0], [0, 1]]], "inner": [[[1, 0, 0]]]},
      "generators": {}})");
  EXPECT_NE(err.find("correspondence.inner[0]"), std::string::npos) << err;
}

TEST(Parse, ModeRequirements) {
  EXPECT_NE(error_of(R"({"mode": "build", "n": 3, "K": 2})"), "");
  EXPECT_NE(error_of(R"({"mode": "so2", "n": 3})"), "");
  EXPECT_NE(error_of(R"({"mode": "frobnicate", "n": 3, "K": 2})"), "");
  EXPECT_NE(error_of(R"({"mode": "validate", "n": 3, "K": 2, "mutation": "bogus"})"), "");
  EXPECT_EQ(error_of(R"({"mode": "so2", "example": {"kind": "morita", "name": "matrix"}})"), "");
}

TEST(Parse, OverridesWin) {
  auto p = parse(R"({"mode": "decompose", "n": 3, "K": 2, "seed": 5, "tolerance": 1e-6})");
  cli::Overrides o;
  o.seed = 77;
  o.tolerance = 1e-10;
  o.threads = 3;
  cli::apply_overrides(p, o);
  EXPECT_EQ(p.seed, 77u);
  EXPECT_DOUBLE_EQ(p.tolerance, 1e-10);
  EXPECT_EQ(p.threads, 3);
}

TEST(Run, DecomposeTables) {
  auto r = cli::run(parse(R"({"mode": "decompose", "n": 3, "K": 3})"));
  EXPECT_TRUE(r.pass());
  const Json& decs = r.tables["decompositions"];
  ASSERT_EQ(decs.size(), 3u);
  std::map<int, int> k3;
  for (const auto& s : decs[2]["summands"]) k3[s["dim"].get<int>()] = s["multiplicity"].get<int>();
  EXPECT_EQ(k3, (std::map<int, int>{{1, 1}, {3, 3}, {5, 2}, {7, 1}}));
  std::vector<int> k2;
  for (const auto& s : decs[1]["summands"]) k2.push_back(s["dim"].get<int>());
  std::sort(k2.begin(), k2.end());
  EXPECT_EQ(k2, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(r.tables["intertwiner_dims"][3][3].get<int>(), 15);
}

TEST(Run, BuildTrivialPassesWithPeterWeylDims) {
  auto r = cli::run(parse(R"({"mode": "build", "n": 3, "K": 2, "cutoff": [0, 1, 2], "example": {"kind": "trivial"}})"));
  EXPECT_TRUE(r.pass());
  std::vector<int> dims;
  for (const auto& l : r.tables["level_dims"]) dims.push_back(l["level_dim"].get<int>());
  EXPECT_EQ(dims, (std::vector<int>{1, 9, 25}));
  for (const auto& c : r.checks) EXPECT_FALSE(c.anchor.empty()) << c.name;
  EXPECT_TRUE(r.environment.contains("r_normalization"));
}

TEST(Run, MutatedDatumFailsNamingTheCondition) {
  auto r = cli::run(parse(R"({"mode": "validate", "n": 3, "K": 3, "example": {"kind": "trivial"}, "mutation": "tensor"})"));
  EXPECT_FALSE(r.pass());
  const auto* t = r.find("T");
  ASSERT_NE(t, nullptr);
  EXPECT_FALSE(t->pass);
}

TEST(Run, ReportsAreDeterministicAcrossThreadCounts) {
  const std::string text = R"({"mode": "check", "n": 3, "K": 2, "cutoff": [0, 1, 2],
                               "example": {"kind": "bundle", "points": 2}})";
  auto p = parse(text);
  const std::string one = cli::run(p).dump();
  EXPECT_EQ(one, cli::run(p).dump());
  p.threads = 3;
  EXPECT_EQ(one, cli::run(p).dump());
}

TEST(Run, So2ModeUsesFactorAssociativityAnchor) {
  auto r = cli::run(parse(R"({"mode": "so2", "K": 2, "example": {"kind": "morita", "name": "permutation"}})"));
  EXPECT_TRUE(r.pass());
  const auto* a = r.find("factor-associativity");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->anchor, report::anchor_for("factor-associativity"));
}

TEST(Run, PipelineErrorsCarryExitCodeAndStage) {
  auto p = parse(R"({"mode": "build", "n": 3, "K": 2, "cutoff": [0, 2], "example": {"kind": "trivial"}})");
  try {
    cli::run(p);
    FAIL() << "expected an error";
  } catch (const cli::RunError& e) {
    EXPECT_EQ(e.code(), cli::kExitInputError);
    EXPECT_NE(std::string(e.what()).find("algebra"), std::string::npos) << e.what();
  }
}

TEST(ExitCodes, Classification) {
  EXPECT_EQ(cli::exit_code_for(InputError("x")), cli::kExitInputError);
  EXPECT_EQ(cli::exit_code_for(ShapeError("x")), cli::kExitInputError);
  EXPECT_EQ(cli::exit_code_for(InternalError("x")), cli::kExitInternalError);
  EXPECT_EQ(cli::exit_code_for(std::runtime_error("x")), cli::kExitInternalError);
}

TEST(ExitCodes, MainEntry) {
  const std::string dir = ::testing::TempDir();
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir + name) << text;
    return dir + name;
  };
  auto call = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main_entry(static_cast<int>(argv.size()), argv.data());
  };
  const std::string good = write("good.json", R"({"mode": "decompose", "n": 3, "K": 2})");
  const std::string bad = write("bad.json", R"({"mode": "decompose", "K": 2})");
  const std::string failing =
      write("fail.json", R"({"mode": "validate", "n": 3, "K": 2, "example": {"kind": "trivial"}, "mutation": "unit",
                            "algebra": {"blocks": [1, 1]}})");
  const std::string out = dir + "report.json";
  EXPECT_EQ(call({"ncfb", "--problem", good, "--out", out, "--seed", "12"}), cli::kExitPass);
  std::ifstream in(out);
  Json j = Json::parse(in);
  EXPECT_EQ(j["environment"]["seed"].get<std::uint64_t>(), 12u);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(call({"ncfb", "--problem", bad}), cli::kExitInputError);
  EXPECT_EQ(call({"ncfb", "--problem", failing}), cli::kExitCheckFailure);
  EXPECT_EQ(call({"ncfb", "--problem", dir + "missing.json"}), cli::kExitInputError);
  EXPECT_EQ(call({"ncfb", "--problem", good, "--seed", "-4"}), cli::kExitInputError);
}

TEST(Digest, RoundingAbsorbsLastBitDrift) {
  Matrix a(2, 2);
  a << Complex(0.1, -0.0), Complex(1.0 / 3.0, 2.0), Complex(-0.0, 0.0), Complex(5.0, 1e-14);
  Matrix b = a;
  b(0, 1) += 1e-15;
  b(1, 1) = Complex(5.0, 0.0);
  EXPECT_EQ(report::digest(a), report::digest(b));
  b(0, 0) += 1e-9;
  EXPECT_NE(report::digest(a), report::digest(b));
  EXPECT_EQ(report::canonical(-0.0), 0.0);
  EXPECT_FALSE(std::signbit(report::canonical(-1e-14)));
}

TEST(Digest, Sha256KnownValue) {
  EXPECT_EQ(report::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
