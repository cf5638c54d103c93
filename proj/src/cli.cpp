#include "ncfb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "ncfb/gamma.hpp"
#include "ncfb/hilbmod.hpp"
#include "ncfb/liegroup.hpp"
#include "ncfb/reconstruct.hpp"
#include "ncfb/repcat.hpp"
#include "ncfb/so2.hpp"

namespace ncfb::cli {

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ProblemError("field '" + field + "': " + message);
}

class Fields {
 public:
  Fields(const Json& obj, std::string path, std::set<std::string> allowed) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!allowed.count(it.key())) fail(name(it.key()), "unknown field");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  const Json& get(const std::string& key) const {
    if (!has(key)) fail(name(key), "missing required field");
    return obj_.at(key);
  }

  int get_int(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_number_integer()) fail(name(key), "expected an integer");
    return v.get<int>();
  }

  double get_double(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_number()) fail(name(key), "expected a number");
    return v.get<double>();
  }

  std::string get_string(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_string()) fail(name(key), "expected a string");
    return v.get<std::string>();
  }

  bool get_bool(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_boolean()) fail(name(key), "expected true or false");
    return v.get<bool>();
  }

  std::vector<int> get_int_list(const std::string& key) const {
    const Json& v = get(key);
    if (!v.is_array()) fail(name(key), "expected an array of integers");
    std::vector<int> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) fail(name(key), "expected an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  }

 private:
  const Json& obj_;
  std::string path_;
};

Complex complex_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  fail(field, "expected a number or a pair [re, im]");
}

std::uint64_t seed_from_json(const Json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<long long>() < 0) fail(field, "seed must be non-negative");
    return static_cast<std::uint64_t>(j.get<long long>());
  }
  if (j.is_string()) {
    try {
      size_t used = 0;
      const std::string s = j.get<std::string>();
      std::uint64_t v = std::stoull(s, &used, 0);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  fail(field, "expected an unsigned integer");
}

std::vector<Matrix> matrix_list(const Json& j, const std::string& field, int count, int rows, int cols) {
  if (!j.is_array()) fail(field, "expected an array of matrices");
  if (static_cast<int>(j.size()) != count)
    fail(field, "expected " + std::to_string(count) + " matrices, one per basis element of B, got " +
                    std::to_string(j.size()));
  std::vector<Matrix> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    Matrix m = matrix_from_json(j[i], f);
    if (m.rows() != rows || m.cols() != cols)
      fail(f, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    out.push_back(std::move(m));
  }
  return out;
}

const std::set<std::string> kModes = {"decompose", "validate", "build", "check", "so2"};

Problem problem_from_json(const Json& root) {
  Fields f(root, "",
           {"mode", "n", "K", "cutoff", "tolerance", "seed", "algebra", "example", "correspondence", "phi",
            "generators", "mutation", "degenerate", "round_trip_K", "export_structure", "threads"});
  Problem p;
  p.mode = f.get_string("mode");
  if (!kModes.count(p.mode)) fail("mode", "unknown mode '" + p.mode + "'");
  const bool so2 = p.mode == "so2";

  if (so2) {
    p.n = f.has("n") ? f.get_int("n") : 2;
    if (p.n != 2) fail("n", "so2 mode works with SO(2); n must be 2");
    p.K = f.has("K") ? f.get_int("K") : 3;
    if (p.K < 1) fail("K", "the graded cutoff must be at least 1");
  } else {
    p.n = f.get_int("n");
    if (p.n < 2) fail("n", "n must be at least 2");
    p.K = f.get_int("K");
    if (p.K < 1) fail("K", "K must be at least 1");
  }
  if (f.has("cutoff")) p.cutoff = f.get_int_list("cutoff");
  if (f.has("tolerance")) {
    p.tolerance = f.get_double("tolerance");
    if (!(p.tolerance > 0.0)) fail("tolerance", "must be positive");
  }
  if (f.has("seed")) p.seed = seed_from_json(f.get("seed"), "seed");
  if (f.has("threads")) {
    p.threads = f.get_int("threads");
    if (p.threads < 1) fail("threads", "must be at least 1");
  }
  if (f.has("algebra")) {
    Fields a(f.get("algebra"), "algebra", {"blocks"});
    p.blocks = a.get_int_list("blocks");
    if (p.blocks->empty()) fail("algebra.blocks", "at least one block required");
    for (int b : *p.blocks)
      if (b < 1) fail("algebra.blocks", "block sizes must be positive");
  }
  if (f.has("example")) {
    Fields e(f.get("example"), "example", {"kind", "points", "angles", "name"});
    ExampleSpec ex;
    ex.kind = e.get_string("kind");
    if (ex.kind == "trivial") {
      if (e.has("points") || e.has("angles") || e.has("name")) fail("example", "the trivial example takes no parameters");
    } else if (ex.kind == "bundle") {
      ex.points = e.get_int("points");
      if (ex.points < 1) fail("example.points", "at least one point required");
      if (e.has("name")) fail("example.name", "only morita examples are named");
      if (e.has("angles")) {
        const Json& a = e.get("angles");
        if (!a.is_array() || static_cast<int>(a.size()) != ex.points)
          fail("example.angles", "expected one coordinate list per point");
        const int dim = p.n * (p.n - 1) / 2;
        for (size_t i = 0; i < a.size(); ++i) {
          const std::string fi = "example.angles[" + std::to_string(i) + "]";
          if (!a[i].is_array() || static_cast<int>(a[i].size()) != dim)
            fail(fi, "expected " + std::to_string(dim) + " Lie algebra coordinates");
          std::vector<double> row;
          for (const auto& x : a[i]) {
            if (!x.is_number()) fail(fi, "expected numbers");
            row.push_back(x.get<double>());
          }
          ex.angles.push_back(std::move(row));
        }
      }
      if (p.blocks && *p.blocks != std::vector<int>(ex.points, 1))
        fail("algebra.blocks", "a bundle over m points has B = C^m, blocks must be m ones");
    } else if (ex.kind == "morita") {
      ex.name = e.get_string("name");
      const auto kinds = so2::canned_morita_kinds();
      if (std::find(kinds.begin(), kinds.end(), ex.name) == kinds.end()) fail("example.name", "unknown Morita example '" + ex.name + "'");
      if (!so2) fail("example.kind", "morita examples need mode so2");
      if (p.blocks) fail("algebra", "morita examples fix their own algebra");
    } else {
      fail("example.kind", "expected trivial, bundle or morita");
    }
    if (so2 && ex.kind != "morita") fail("example.kind", "so2 mode needs a morita example or a correspondence");
    p.example = ex;
  }
  if (f.has("correspondence")) {
    if (p.example) fail("correspondence", "give either an example or a correspondence, not both");
    Fields c(f.get("correspondence"), "correspondence", {"dim", "left", "right", "inner"});
    CorrespondenceSpec cs;
    cs.dim = c.get_int("dim");
    if (cs.dim < 1) fail("correspondence.dim", "must be positive");
    hilbmod::FiniteCStarAlgebra B(p.algebra_blocks());
    cs.left = matrix_list(c.get("left"), "correspondence.left", B.dim(), cs.dim, cs.dim);
    cs.right = matrix_list(c.get("right"), "correspondence.right", B.dim(), cs.dim, cs.dim);
    cs.inner = matrix_list(c.get("inner"), "correspondence.inner", B.dim(), cs.dim, cs.dim);
    p.correspondence = std::move(cs);
  }
  if (f.has("phi")) {
    if (!p.correspondence) fail("phi", "phi tables only accompany a correspondence");
    const Json& t = f.get("phi");
    if (!t.is_array()) fail("phi", "expected an array of tables");
    for (size_t i = 0; i < t.size(); ++i) {
      const std::string fi = "phi[" + std::to_string(i) + "]";
      Fields e(t[i], fi, {"k", "l", "pairs"});
      const int k = e.get_int("k"), l = e.get_int("l");
      if (k < 0 || l < 0 || k > p.K || l > p.K) fail(fi, "k and l must lie in [0, K]");
      if (p.phi.count({k, l})) fail(fi, "duplicate table for (" + std::to_string(k) + "," + std::to_string(l) + ")");
      const Json& pairs = e.get("pairs");
      if (!pairs.is_array()) fail(fi + ".pairs", "expected an array of {t, image}");
      std::vector<typepi::PlainImage> images;
      for (size_t j = 0; j < pairs.size(); ++j) {
        const std::string fj = fi + ".pairs[" + std::to_string(j) + "]";
        Fields pr(pairs[j], fj, {"t", "image"});
        typepi::PlainImage im;
        im.t = matrix_from_json(pr.get("t"), fj + ".t");
        const long rows = std::lround(std::pow(p.n, l)), cols = std::lround(std::pow(p.n, k));
        if (im.t.rows() != rows || im.t.cols() != cols)
          fail(fj + ".t", "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " intertwiner");
        im.image = matrix_from_json(pr.get("image"), fj + ".image");
        images.push_back(std::move(im));
      }
      p.phi[{k, l}] = std::move(images);
    }
  }
  if (f.has("generators")) {
    if (!p.correspondence) fail("generators", "generators only accompany a correspondence");
    if (!p.phi.empty()) fail("generators", "give either phi tables or generators, not both");
    Fields g(f.get("generators"), "generators", {"flip", "r", "r_adj", "eps"});
    typepi::Generators gens;
    if (g.has("flip")) gens.flip = matrix_from_json(g.get("flip"), "generators.flip");
    if (g.has("r")) gens.r = matrix_from_json(g.get("r"), "generators.r");
    if (g.has("r_adj")) gens.r_adj = matrix_from_json(g.get("r_adj"), "generators.r_adj");
    if (g.has("eps")) gens.eps = matrix_from_json(g.get("eps"), "generators.eps");
    p.generators = std::move(gens);
  }
  if (f.has("mutation")) {
    p.mutation = f.get_string("mutation");
    if (!typepi::parse_mutation(*p.mutation)) fail("mutation", "unknown mutation '" + *p.mutation + "'");
    if (p.mode != "validate") fail("mutation", "mutations are only applied in validate mode");
    if (p.example && p.example->kind != "trivial") fail("mutation", "mutations apply to trivial examples or canned data");
  }
  if (f.has("degenerate")) {
    p.degenerate = f.get_int("degenerate");
    if (p.mode != "build" && p.mode != "check") fail("degenerate", "only used in build and check modes");
  }
  if (f.has("round_trip_K")) {
    p.round_trip_K = f.get_int("round_trip_K");
    if (*p.round_trip_K < 0 || *p.round_trip_K > p.K) fail("round_trip_K", "must lie in [0, K]");
  }
  if (f.has("export_structure")) p.export_structure = f.get_bool("export_structure");

  const bool needs_datum = p.mode == "validate" || p.mode == "build" || p.mode == "check";
  if (needs_datum && !p.example && !p.correspondence && !(p.mode == "validate" && p.mutation))
    fail("example", "mode " + p.mode + " needs an example or a correspondence");
  if (so2 && !p.example && !p.correspondence) fail("example", "so2 mode needs a morita example or a correspondence");
  if (p.correspondence && !so2 && p.phi.empty() && !p.generators)
    fail("phi", "a correspondence needs phi tables or generators");
  if (p.mode == "decompose" && (p.example || p.correspondence)) fail("mode", "decompose takes no datum");
  return p;
}

// ---------------------------------------------------------------- helpers

struct Section {
  std::vector<report::CheckRecord> records;
  Json tables = Json::object();
};

using Task = std::function<Section()>;

std::vector<Section> run_tasks(const std::vector<std::pair<std::string, Task>>& tasks, int threads) {
  auto guarded = [](const std::string& stage, const Task& task) -> Section {
    try {
      return task();
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(exit_code_for(e), "during " + stage + " [" + report::anchor_for(stage) + "]: " + e.what());
    }
  };
  std::vector<Section> out(tasks.size());
  if (threads <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) out[i] = guarded(tasks[i].first, tasks[i].second);
    return out;
  }
  for (size_t start = 0; start < tasks.size(); start += static_cast<size_t>(threads)) {
    std::vector<std::future<Section>> running;
    const size_t stop = std::min(tasks.size(), start + static_cast<size_t>(threads));
    for (size_t i = start; i < stop; ++i)
      running.push_back(std::async(std::launch::async, guarded, tasks[i].first, tasks[i].second));
    for (size_t i = start; i < stop; ++i) out[i] = running[i - start].get();
  }
  return out;
}

report::CheckRecord record(const std::string& name, double residual, bool pass, const std::string& detail = "") {
  return report::make_record(name, residual, pass, detail);
}

std::string irrep_label(const repcat::IrrepRegistry& reg, int id) {
  const auto& e = reg.entry(id);
  std::string s = "irrep " + std::to_string(id);
  if (e.spin >= 0) s += " (spin " + std::to_string(e.spin) + ")";
  return s;
}

Json irrep_json(const repcat::IrrepRegistry& reg, int id) {
  const auto& e = reg.entry(id);
  Json j = Json::object();
  j["irrep"] = id;
  if (e.spin >= 0) j["spin"] = e.spin;
  j["dim"] = e.dim;
  j["level"] = e.level;
  j["conjugate"] = e.conjugate_id;
  return j;
}

std::vector<int> resolve_cutoff(const Problem& p, const repcat::IrrepRegistry& reg) {
  if (p.cutoff) return reconstruct::cutoff_from_spins(reg, *p.cutoff);
  std::vector<int> ids;
  for (const auto& e : reg.entries())
    if (e.level <= std::min(p.K, 2)) ids.push_back(e.id);
  return ids;
}

typepi::TypePiDatum make_datum(const Problem& p, std::shared_ptr<const typepi::IntertwinerCatalog> cat) {
  if (p.example && p.example->kind == "trivial")
    return typepi::trivial_type_pi(hilbmod::FiniteCStarAlgebra(p.algebra_blocks()), p.n, p.K, cat);
  if (p.example && p.example->kind == "bundle") {
    std::vector<liegroup::GroupElement> transitions;
    if (p.example->angles.empty()) {
      transitions = liegroup::random_group_elements(p.n, p.example->points, p.seed);
    } else {
      const auto basis = liegroup::so_basis(p.n);
      for (const auto& a : p.example->angles)
        transitions.push_back(liegroup::exp_generator(basis, Eigen::Map<const RealVector>(a.data(), a.size())));
    }
    return typepi::bundle_type_pi(p.example->points, transitions, p.n, p.K, cat);
  }
  if (p.correspondence) {
    const auto& c = *p.correspondence;
    hilbmod::FiniteCStarAlgebra B(p.algebra_blocks());
    auto norm = hilbmod::normalize_correspondence(B, c.dim, c.left, c.right, c.inner, p.tolerance);
    if (!p.phi.empty()) return typepi::datum_from_tables(norm.corr, norm.to_new, p.n, p.K, cat, p.phi, p.tolerance);
    return typepi::datum_from_generators(norm.corr, norm.to_new, p.n, p.K, cat, *p.generators, p.tolerance);
  }
  throw ProblemError("no datum given");
}

std::vector<Matrix> all_phi(const typepi::TypePiDatum& d) {
  std::vector<Matrix> out;
  for (const auto& row : d.phi)
    for (const auto& cell : row)
      for (const auto& m : cell) out.push_back(m);
  return out;
}

Section validation_section(const typepi::TypePiDatum& d, double tol) {
  Section s;
  const auto vr = typepi::validate(d, tol);
  for (const auto& c : vr.conditions) s.records.push_back(record(c.name, c.residual, c.pass, c.detail));
  Json datum = Json::object();
  datum["kind"] = d.kind;
  datum["algebra_blocks"] = d.B.blocks();
  datum["algebra_dim"] = d.B.dim();
  datum["module_dim"] = d.M().dim();
  Json powers = Json::array();
  for (const auto& c : d.powers) powers.push_back(c.dim());
  datum["tensor_power_dims"] = powers;
  std::vector<Matrix> mults;
  for (const auto& [key, m] : d.mult) mults.push_back(m);
  datum["phi_digest"] = report::digest(all_phi(d));
  datum["mult_digest"] = report::digest(mults);
  s.tables["datum"] = datum;
  return s;
}

std::string product_digest(const reconstruct::TruncatedFrameBundle& A) {
  std::vector<Matrix> parts;
  for (const auto& [key, block] : A.products)
    for (const auto& c : block.components) {
      parts.push_back(c.gamma_part);
      parts.push_back(c.v_part);
    }
  return report::digest(parts);
}

Json level_table(const reconstruct::TruncatedFrameBundle& A, const repcat::IrrepRegistry& reg) {
  Json out = Json::array();
  for (const auto& [sigma, dim] : A.level_dims()) {
    Json j = irrep_json(reg, sigma);
    j["level_dim"] = dim;
    j["gamma_dim"] = A.level(sigma).gamma_dim();
    out.push_back(j);
  }
  return out;
}

Json structure_export(const reconstruct::TruncatedFrameBundle& A) {
  Json out = Json::array();
  for (const auto& [key, block] : A.products) {
    Json b = Json::object();
    b["sigma"] = key.first;
    b["tau"] = key.second;
    b["truncated"] = block.truncated;
    Json comps = Json::array();
    for (const auto& c : block.components) {
      Json cj = Json::object();
      cj["target"] = c.target;
      cj["gamma_part"] = matrix_to_json(c.gamma_part);
      cj["v_part"] = matrix_to_json(c.v_part);
      comps.push_back(cj);
    }
    b["components"] = comps;
    out.push_back(b);
  }
  return out;
}

bool commutative_algebra(const hilbmod::FiniteCStarAlgebra& B) {
  return std::all_of(B.blocks().begin(), B.blocks().end(), [](int b) { return b == 1; });
}

Section classical_section(const reconstruct::TruncatedFrameBundle& A, double tol, std::uint64_t seed) {
  Section s;
  const auto cr = reconstruct::check_classical(A, tol, seed);
  const bool expected = commutative_algebra(A.B) && (A.datum_kind == "trivial" || A.datum_kind == "bundle");
  Json c = Json::object();
  c["commutative"] = cr.commutative;
  c["residual"] = cr.residual;
  if (cr.witness) c["witness"] = Json::array({cr.witness->first, cr.witness->second});
  s.tables["commutativity"] = c;
  if (expected) {
    std::string detail;
    if (cr.witness) detail = "worst pair (" + std::to_string(cr.witness->first) + "," + std::to_string(cr.witness->second) + ")";
    s.records.push_back(record("commutativity", cr.residual, cr.commutative, detail));
  }
  if (cr.peter_weyl_checked)
    s.records.push_back(record("peter-weyl", cr.peter_weyl_match ? 0.0 : 1.0, cr.peter_weyl_match,
                               "level dims against dim B * (dim V_sigma)^2"));
  return s;
}

Section freeness_section(const reconstruct::TruncatedFrameBundle& A, const repcat::IrrepRegistry& reg, double tol) {
  Section s;
  const auto fr = reconstruct::check_freeness(A, reg, tol);
  std::string detail;
  for (int id : fr.offending) detail += (detail.empty() ? "not full at " : ", ") + irrep_label(reg, id);
  s.records.push_back(record("freeness", static_cast<double>(fr.offending.size()), fr.free, detail));
  Json t = Json::array();
  for (const auto& e : fr.entries) {
    Json j = Json::object();
    j["irrep"] = e.sigma;
    j["full"] = e.full;
    j["rank"] = e.rank;
    j["spectral_dim"] = e.spectral_dim;
    t.push_back(j);
  }
  s.tables["freeness"] = t;
  return s;
}

// ---------------------------------------------------------------- pipelines

void echo_environment(Report& r, const Problem& p) {
  r.environment["seed"] = p.seed;
  r.environment["tolerance"] = p.tolerance;
  r.environment["n"] = p.n;
  r.environment["K"] = p.K;
}

Json r_normalization(const std::map<int, double>& norms) {
  Json j = Json::object();
  j["convention"] = "||R_sigma||^2 = dim V_sigma";
  Json vals = Json::array();
  for (const auto& [id, v] : norms) {
    Json e = Json::object();
    e["irrep"] = id;
    e["norm"] = report::canonical(v);
    vals.push_back(e);
  }
  j["values"] = vals;
  return j;
}

void run_decompose(const Problem& p, Report& r, std::string& stage) {
  stage = "registry";
  const auto reg = repcat::IrrepRegistry::build(p.n, p.K, p.seed, p.tolerance);
  stage = "catalog";
  const auto cat = typepi::build_catalog(p.n, p.K, p.seed, p.tolerance);
  stage = "decomposition-complete";

  Json irreps = Json::array();
  for (const auto& e : reg.entries()) irreps.push_back(irrep_json(reg, e.id));
  r.tables["irreps"] = irreps;

  std::vector<std::map<int, int>> mult(p.K + 1);
  mult[0][reg.trivial_id()] = 1;
  double completeness = 0.0;
  int unregistered = 0;
  Json powers = Json::array();
  for (int k = 1; k <= p.K; ++k) {
    const auto& rho = reg.power(k);
    const auto summands = reg.decompose(rho);
    Matrix E(rho.dim(), 0);
    for (const auto& sm : summands) {
      if (sm.id < 0) {
        ++unregistered;
        continue;
      }
      ++mult[k][sm.id];
      Matrix grown(rho.dim(), E.cols() + sm.embedding.cols());
      grown << E, sm.embedding;
      E = std::move(grown);
    }
    const double res = E.cols() == rho.dim()
                           ? (E.adjoint() * E - Matrix::Identity(E.cols(), E.cols())).norm()
                           : 1.0;
    completeness = std::max(completeness, res);
    Json pk = Json::object();
    pk["k"] = k;
    pk["dim"] = rho.dim();
    Json list = Json::array();
    for (const auto& [id, m] : mult[k]) {
      Json j = irrep_json(reg, id);
      j["multiplicity"] = m;
      list.push_back(j);
    }
    pk["summands"] = list;
    powers.push_back(pk);
  }
  r.tables["decompositions"] = powers;
  r.checks.push_back(record("decomposition-complete", completeness,
                            completeness <= 100 * p.tolerance && unregistered == 0,
                            unregistered ? std::to_string(unregistered) + " unregistered summands" : ""));

  stage = "intertwiner-dims";
  Json dims = Json::array();
  int worst = 0;
  for (int k = 0; k <= p.K; ++k) {
    Json row = Json::array();
    for (int l = 0; l <= p.K; ++l) {
      const int d = cat->space(k, l).dim();
      int oracle = 0;
      for (const auto& [id, m] : mult[k])
        if (mult[l].count(id)) oracle += m * mult[l].at(id);
      worst = std::max(worst, std::abs(d - oracle));
      row.push_back(d);
    }
    dims.push_back(row);
  }
  r.tables["intertwiner_dims"] = dims;
  r.checks.push_back(record("intertwiner-dims", worst, worst == 0,
                            "dim C_{k,l} against sum of multiplicity products"));
}

void run_validate(const Problem& p, Report& r, std::string& stage) {
  stage = "catalog";
  const auto cat = typepi::build_catalog(p.n, p.K, p.seed, p.tolerance);
  stage = "datum";
  typepi::TypePiDatum d = [&] {
    if (p.mutation && !p.example && !p.correspondence) return typepi::canned_mutation(*typepi::parse_mutation(*p.mutation), cat);
    return make_datum(p, cat);
  }();
  if (p.mutation) {
    const auto m = *typepi::parse_mutation(*p.mutation);
    if (p.example || p.correspondence) d = typepi::mutate(d, m);
    r.environment["mutation"] = typepi::mutation_name(m);
  }
  stage = "datum";
  Section s = validation_section(d, p.tolerance);
  r.checks = s.records;
  r.tables = s.tables;
}

void run_bundle_modes(const Problem& p, Report& r, std::string& stage) {
  const bool full = p.mode == "check";
  stage = "registry";
  const auto reg = repcat::IrrepRegistry::build(p.n, p.K, p.seed, p.tolerance);
  stage = "catalog";
  const auto cat = typepi::build_catalog(p.n, p.K, p.seed, p.tolerance);
  stage = "datum";
  const auto d = make_datum(p, cat);
  const auto cutoff = resolve_cutoff(p, reg);
  if (p.cutoff) r.environment["cutoff"] = *p.cutoff;
  r.environment["cutoff_ids"] = cutoff;

  stage = "algebra";
  auto A = reconstruct::build_algebra(d, reg, cutoff, p.tolerance);
  if (p.degenerate) {
    const auto ids = reconstruct::cutoff_from_spins(reg, {*p.degenerate});
    A = reconstruct::degenerate_fixture(A, ids.front());
    r.environment["degenerate"] = ids.front();
  }
  r.environment["r_normalization"] = r_normalization(A.r_norms);

  std::vector<std::pair<std::string, Task>> tasks;
  tasks.push_back({"datum", [&] { return validation_section(d, p.tolerance); }});
  tasks.push_back({"algebra", [&] {
                     Section s;
                     const auto ch = reconstruct::check_structure(A, reg, p.tolerance, p.seed);
                     for (const auto& c : ch.records) s.records.push_back(record(c.name, c.residual, c.pass, c.detail));
                     return s;
                   }});
  tasks.push_back({"commutativity", [&] { return classical_section(A, p.tolerance, p.seed); }});
  if (full) {
    tasks.push_back({"associativity", [&] {
                       Section s;
                       const auto fr = gamma::verify_functor(d, reg, p.tolerance);
                       for (const auto& l : fr.laws) s.records.push_back(record(l.law, l.residual, l.pass, l.detail));
                       s.tables["functor"] = Json{{"objects", fr.objects_checked}, {"morphisms", fr.morphisms_checked}};
                       return s;
                     }});
    tasks.push_back({"recovery", [&] {
                       Section s;
                       const auto rec = reconstruct::check_recovery(A, reg, p.tolerance);
                       const double res = std::max(rec.bimodule_residual, rec.inner_residual);
                       s.records.push_back(record("recovery", res, rec.success && res < 1e-8,
                                                  "spectral dim " + std::to_string(rec.spectral_dim) + ", module dim " +
                                                      std::to_string(rec.module_dim)));
                       return s;
                     }});
  }
  if (full || p.degenerate) tasks.push_back({"freeness", [&] { return freeness_section(A, reg, p.tolerance); }});
  if (full) {
    tasks.push_back({"seed-independence", [&] {
                       Section s;
                       const std::uint64_t other_seed = p.seed + 1;
                       const auto reg2 = repcat::IrrepRegistry::build(p.n, p.K, other_seed, p.tolerance);
                       auto A2 = reconstruct::build_algebra(d, reg2, resolve_cutoff(p, reg2), p.tolerance);
                       if (p.degenerate)
                         A2 = reconstruct::degenerate_fixture(A2, reconstruct::cutoff_from_spins(reg2, {*p.degenerate}).front());
                       const auto eq = reconstruct::bundle_equivalence(A, A2, 1e-7, p.seed);
                       const std::string sa = reconstruct::gauge_invariant_summary(A);
                       const std::string sb = reconstruct::gauge_invariant_summary(A2);
                       s.records.push_back(record("seed-independence", eq.residual, eq.found && eq.dims_match,
                                                  sa == sb ? "gauge-invariant summaries agree"
                                                           : "gauge-invariant summaries differ"));
                       s.tables["seed_independence"] =
                           Json{{"other_seed", other_seed}, {"summary_digest", report::digest_text(sb)}};
                       return s;
                     }});
    const int krt = p.round_trip_K.value_or(std::min(2, p.K / 2));
    if (krt > 0)
      tasks.push_back({"round-trip", [&, krt] {
                         Section s;
                         const auto rt = reconstruct::round_trip(A, reg, krt, cat, std::max(p.tolerance, 1e-7));
                         s.records.push_back(record("round-trip", rt.max_residual, rt.pass,
                                                    "levels up to " + std::to_string(rt.K)));
                         return s;
                       }});
  }
  stage = "checks";
  const auto sections = run_tasks(tasks, p.threads);

  r.tables["level_dims"] = level_table(A, reg);
  int truncated = 0;
  for (const auto& [key, b] : A.products) truncated += b.truncated ? 1 : 0;
  r.tables["truncated_products"] = truncated;
  r.tables["digests"] = Json{{"structure_constants", product_digest(A)},
                             {"gauge_invariant", report::digest_text(reconstruct::gauge_invariant_summary(A))}};
  for (const auto& s : sections) {
    r.checks.insert(r.checks.end(), s.records.begin(), s.records.end());
    for (auto it = s.tables.begin(); it != s.tables.end(); ++it) r.tables[it.key()] = it.value();
  }
  if (p.export_structure) r.tables["structure_constants"] = structure_export(A);
}

void run_so2(const Problem& p, Report& r, std::string& stage) {
  stage = "morita";
  so2::MoritaBimodule N = [&] {
    if (p.example) return so2::canned_morita(p.example->name);
    const auto& c = *p.correspondence;
    hilbmod::FiniteCStarAlgebra B(p.algebra_blocks());
    auto norm = hilbmod::normalize_correspondence(B, c.dim, c.left, c.right, c.inner, p.tolerance);
    return so2::make_morita(norm.corr, p.tolerance);
  }();
  for (const auto& m : so2::check_morita(N, p.tolerance)) {
    report::CheckRecord rec = record("morita", m.residual, m.pass);
    rec.name = "morita:" + m.axiom;
    r.checks.push_back(rec);
  }
  r.environment["cutoff"] = p.K;
  r.environment["algebra_blocks"] = N.algebra().blocks();

  stage = "factor-system";
  const auto fs = so2::factor_system(N, p.K, p.tolerance);
  const auto a = so2::build_so2_algebra(fs);
  const auto rep = so2::check_so2(a, p.tolerance);
  for (const auto& c : rep.checks) {
    const std::string name = c.name == "associativity" ? "factor-associativity" : c.name;
    r.checks.push_back(record(name, c.residual, c.pass, c.detail));
  }
  const auto& sp = rep.split;
  r.checks.push_back(record("standard-split", std::max(sp.split_residual, sp.iso_residual), sp.pass,
                            "plus " + std::to_string(sp.plus_dim) + ", minus " + std::to_string(sp.minus_dim)));
  stage = "so2-round-trip";
  const auto rt = so2::round_trip(a, p.tolerance);
  r.checks.push_back(record("so2-round-trip", rt.residual, rt.pass, rt.detail));

  Json dims = Json::array();
  for (const auto& [k, d] : rep.level_dims) dims.push_back(Json{{"k", k}, {"dim", d}});
  r.tables["level_dims"] = dims;
  r.tables["split"] = Json{{"gamma_dim", sp.gamma_dim}, {"n_dim", sp.n_dim}, {"plus_dim", sp.plus_dim},
                           {"minus_dim", sp.minus_dim}};
  std::vector<Matrix> psi;
  for (const auto& [key, m] : fs.psi) psi.push_back(m);
  r.tables["digests"] = Json{{"psi", report::digest(psi)}};
}

}  // namespace

// ---------------------------------------------------------------- public API

std::vector<int> Problem::algebra_blocks() const {
  if (blocks) return *blocks;
  if (example && example->kind == "bundle") return std::vector<int>(example->points, 1);
  return {1};
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({report::canonical(m(i, j).real()), report::canonical(m(i, j).imag())}));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) fail(field, "row " + std::to_string(i) + " is not an array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols || cols == 0) fail(field, "rows must have equal, non-zero length");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows; ++i)
    for (size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          complex_from_json(j[i][k], field + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  return m;
}

Problem parse_problem_text(const std::string& text, const std::string& origin) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::string msg = e.what();
    const auto pos = msg.find("] ");
    if (pos != std::string::npos) msg = msg.substr(pos + 2);
    throw ProblemError(origin + ": " + msg);
  }
  try {
    return problem_from_json(root);
  } catch (const ProblemError& e) {
    throw ProblemError(origin + ": " + e.what());
  }
}

Problem parse_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError(path + ": cannot open problem file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str(), path);
}

void apply_overrides(Problem& problem, const Overrides& overrides) {
  if (overrides.seed) problem.seed = *overrides.seed;
  if (overrides.tolerance) {
    if (!(*overrides.tolerance > 0.0)) throw ProblemError("--tol must be positive");
    problem.tolerance = *overrides.tolerance;
  }
  if (overrides.threads) {
    if (*overrides.threads < 1) throw ProblemError("--threads must be at least 1");
    problem.threads = *overrides.threads;
  }
}

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const report::CheckRecord& c) { return c.pass; });
}

const report::CheckRecord* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

Json Report::to_json() const {
  Json j = Json::object();
  j["mode"] = mode;
  j["environment"] = environment;
  Json cs = Json::array();
  for (const auto& c : checks) {
    Json e = Json::object();
    e["name"] = c.name;
    e["anchor"] = c.anchor;
    e["residual"] = c.residual;
    e["pass"] = c.pass;
    if (!c.detail.empty()) e["detail"] = c.detail;
    cs.push_back(e);
  }
  j["checks"] = cs;
  j["tables"] = tables;
  j["pass"] = pass();
  return j;
}

std::string Report::dump() const { return to_json().dump(2) + "\n"; }

std::string Report::summary() const {
  std::ostringstream out;
  int passed = 0;
  for (const auto& c : checks) passed += c.pass ? 1 : 0;
  out << "mode " << mode << ": " << (pass() ? "PASS" : "FAIL") << " (" << passed << "/" << checks.size()
      << " checks)\n";
  for (const auto& c : checks) {
    out << "  " << (c.pass ? "pass" : "FAIL") << "  " << std::left << std::setw(26) << c.name << " "
        << std::scientific << std::setprecision(2) << c.residual << "  " << c.anchor;
    if (!c.detail.empty() && !c.pass) out << "  [" << c.detail << "]";
    out << "\n";
  }
  return out.str();
}

Report run(const Problem& problem) {
  Report r;
  r.mode = problem.mode;
  echo_environment(r, problem);
  std::string stage = "setup";
  try {
    if (problem.mode == "decompose") {
      run_decompose(problem, r, stage);
    } else if (problem.mode == "validate") {
      run_validate(problem, r, stage);
    } else if (problem.mode == "build" || problem.mode == "check") {
      run_bundle_modes(problem, r, stage);
    } else if (problem.mode == "so2") {
      run_so2(problem, r, stage);
    } else {
      throw ProblemError("unknown mode '" + problem.mode + "'");
    }
  } catch (const RunError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError(exit_code_for(e), "during " + stage + " [" + report::anchor_for(stage) + "]: " + e.what());
  }
  return r;
}

void emit(const Report& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot write report");
  out << report.dump();
}

int exit_code_for(const std::exception& e) {
  if (const auto* r = dynamic_cast<const RunError*>(&e)) return r->code();
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const InvalidDimensionError*>(&e) || dynamic_cast<const IncompatibilityError*>(&e) ||
      dynamic_cast<const InvalidCutoffError*>(&e) || dynamic_cast<const IncompleteDatumError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const AxiomViolation*>(&e) ||
      dynamic_cast<const TruncationError*>(&e))
    return kExitInputError;
  return kExitInternalError;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Truncated noncommutative frame bundles: decomposition, validation, construction and checks"};
  std::string problem_path, out_path;
  std::string seed_text;
  std::optional<double> tol;
  std::optional<int> threads;
  app.add_option("--problem", problem_path, "Problem file (JSON)")->required();
  app.add_option("--out", out_path, "Report file (JSON)");
  app.add_option("--seed", seed_text, "Seed (unsigned 64-bit), overrides the problem file");
  app.add_option("--tol", tol, "Tolerance, overrides the problem file");
  app.add_option("--threads", threads, "Worker threads for independent checks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInputError;
  }

  auto write_error = [&](int code, const std::string& message) {
    std::cerr << "error: " << message << "\n";
    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      Json j = Json::object();
      j["error"] = Json{{"code", code}, {"message", message}};
      j["pass"] = false;
      out << j.dump(2) << "\n";
    }
    return code;
  };

  Problem problem;
  try {
    problem = parse_problem(problem_path);
    Overrides o;
    if (!seed_text.empty()) {
      size_t used = 0;
      std::uint64_t v = 0;
      try {
        v = std::stoull(seed_text, &used, 0);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != seed_text.size() || seed_text.front() == '-') throw ProblemError("--seed expects an unsigned integer");
      o.seed = v;
    }
    o.tolerance = tol;
    o.threads = threads;
    apply_overrides(problem, o);
  } catch (const std::exception& e) {
    return write_error(kExitInputError, e.what());
  }

  try {
    const Report r = run(problem);
    std::cout << r.summary();
    if (!out_path.empty()) emit(r, out_path);
    return r.pass() ? kExitPass : kExitCheckFailure;
  } catch (const std::exception& e) {
    return write_error(exit_code_for(e), e.what());
  }
}

}  // namespace ncfb::cli
