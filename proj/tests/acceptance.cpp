#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "ncfb/gamma.hpp"
#include "ncfb/reconstruct.hpp"
#include "ncfb/report.hpp"
#include "ncfb/so2.hpp"
#include "ncfb/typepi.hpp"

using namespace ncfb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

long peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6));
  return -1;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

std::map<int, int> spin_multiplicities(const repcat::IrrepRegistry& reg, int k) {
  std::map<int, int> out;
  for (const auto& s : reg.decompose(reg.power(k))) ++out[s.id >= 0 ? reg.entry(s.id).spin : -1];
  return out;
}

std::string show(const std::map<int, int>& m) {
  std::string s = "{";
  for (auto [k, v] : m) s += (s.size() > 1 ? "," : "") + std::to_string(k) + ":" + std::to_string(v);
  return s + "}";
}

std::vector<int> level_dims(const reconstruct::TruncatedFrameBundle& a) {
  std::vector<int> out;
  for (auto [s, d] : a.level_dims()) out.push_back(d);
  return out;
}

std::string show(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

}  // namespace

int main() {
  const auto cat3 = typepi::build_catalog(3, 3);
  const auto reg3 = repcat::IrrepRegistry::build(3, 3);
  const auto canned = typepi::canned_valid_data(cat3);
  const auto cutoff3 = reconstruct::cutoff_from_spins(reg3, {0, 1, 2});

  criterion(1, "SO(3) multiplicities of pi^(x)k", [] {
    const auto t0 = Clock::now();
    const auto reg = repcat::IrrepRegistry::build(3, 4);
    const std::map<int, std::map<int, int>> expected = {
        {2, {{0, 1}, {1, 1}, {2, 1}}}, {3, {{0, 1}, {1, 3}, {2, 2}, {3, 1}}}, {4, {{0, 3}, {1, 6}, {2, 6}, {3, 3}, {4, 1}}}};
    bool ok = true;
    std::string detail;
    for (const auto& [k, m] : expected) {
      auto got = spin_multiplicities(reg, k);
      ok = ok && got == m;
      detail += "k=" + std::to_string(k) + " " + show(got) + " ";
    }
    const double t = seconds_since(t0);
    ok = ok && t < 60.0;
    return Outcome{ok, detail + "in " + fmt(t) + " s"};
  });

  criterion(2, "dim C_kk = 1, 3, 15, 91", [] {
    const auto cat = typepi::build_catalog(3, 4);
    std::vector<int> got;
    for (int k = 1; k <= 4; ++k) got.push_back(cat->space(k, k).dim());
    return Outcome{got == std::vector<int>{1, 3, 15, 91}, show(got)};
  });

  criterion(3, "unitary tensor functor laws (trivial C, C^2, M_2 and bundles m<=3, K=3)", [&] {
    std::vector<typepi::TypePiDatum> data = {canned[0], canned[1], canned[2], canned[3], canned[4],
                                             typepi::bundle_type_pi(1, liegroup::random_group_elements(3, 1, 31), 3, 3, cat3)};
    double worst = 0.0;
    std::string where;
    for (const auto& d : data) {
      auto rep = gamma::verify_functor(d, reg3, 1e-9);
      for (const auto& l : rep.laws)
        if (l.residual >= worst) {
          worst = l.residual;
          where = d.kind + "/" + l.law;
        }
    }
    return Outcome{worst < 1e-8, "max residual " + fmt(worst) + " at " + where};
  });

  criterion(4, "type-pi validator: six mutations detected, no false positives", [&] {
    int detected = 0, false_pos = 0;
    std::string missed;
    for (auto m : {typepi::Mutation::Composition, typepi::Mutation::Adjoint, typepi::Mutation::Unit,
                   typepi::Mutation::Tensor, typepi::Mutation::Injectivity, typepi::Mutation::Adjointability}) {
      auto r = typepi::validate(typepi::canned_mutation(m, cat3));
      if (!r.get(typepi::mutation_condition(m)).pass)
        ++detected;
      else
        missed += typepi::mutation_name(m) + " ";
    }
    for (const auto& d : canned) false_pos += typepi::validate(d).pass() ? 0 : 1;
    return Outcome{detected == 6 && false_pos == 0, std::to_string(detected) + "/6 detected, " +
                                                        std::to_string(false_pos) + "/5 false positives " + missed};
  });

  criterion(5, "level dims and commutativity", [&] {
    const auto cat = typepi::build_catalog(3, 2);
    const auto reg = repcat::IrrepRegistry::build(3, 2);
    const auto cut = reconstruct::cutoff_from_spins(reg, {0, 1, 2});
    auto build = [&](std::vector<int> blocks) {
      return reconstruct::build_algebra(typepi::trivial_type_pi(hilbmod::FiniteCStarAlgebra(blocks), 3, 2, cat), reg, cut);
    };
    auto c = build({1}), c2 = build({1, 1}), m2 = build({2});
    auto cc = reconstruct::check_classical(c), cc2 = reconstruct::check_classical(c2), cm = reconstruct::check_classical(m2);
    const bool ok = level_dims(c) == std::vector<int>{1, 9, 25} && level_dims(c2) == std::vector<int>{2, 18, 50} &&
                    cc.commutative && cc2.commutative && cc.residual < 1e-8 && cc2.residual < 1e-8 && !cm.commutative &&
                    cm.witness.has_value();
    std::string w = cm.witness ? "(" + std::to_string(cm.witness->first) + "," + std::to_string(cm.witness->second) + ")" : "none";
    return Outcome{ok, "C: " + show(level_dims(c)) + "; C^2: " + show(level_dims(c2)) + "; residual " +
                           fmt(std::max(cc.residual, cc2.residual)) + "; M_2 witness " + w + " residual " + fmt(cm.residual)};
  });

  criterion(6, "recovery Gamma_{A_M}(pi) = M on canned data", [&] {
    double worst = 0.0;
    bool ok = true;
    for (const auto& d : canned) {
      auto a = reconstruct::build_algebra(d, reg3, cutoff3);
      auto r = reconstruct::check_recovery(a, reg3);
      ok = ok && r.success;
      worst = std::max({worst, r.bimodule_residual, r.inner_residual});
    }
    return Outcome{ok && worst < 1e-8, "max residual " + fmt(worst)};
  });

  criterion(7, "freeness on canned data and the degenerate fixture", [&] {
    int free = 0;
    for (const auto& d : canned) free += reconstruct::check_freeness(reconstruct::build_algebra(d, reg3, cutoff3), reg3).free;
    const int spin2 = *reg3.id_for_spin(2);
    auto bad = reconstruct::degenerate_fixture(reconstruct::build_algebra(canned[0], reg3, cutoff3), spin2);
    auto fr = reconstruct::check_freeness(bad, reg3);
    const bool named = !fr.free && fr.offending.size() == 1 && fr.offending[0] == spin2;
    return Outcome{free == 5 && named, std::to_string(free) + "/5 free; fixture offending irrep " +
                                           (fr.offending.empty() ? "none" : std::to_string(fr.offending[0]))};
  });

  criterion(8, "seed independence", [&] {
    const auto other = repcat::IrrepRegistry::build(3, 3, 0xBADC0DE);
    const auto cut_other = reconstruct::cutoff_from_spins(other, {0, 1, 2});
    bool ok = true;
    double worst = 0.0;
    int same_digest = 0;
    for (const auto& d : canned) {
      auto a = reconstruct::build_algebra(d, reg3, cutoff3);
      auto b = reconstruct::build_algebra(d, other, cut_other);
      const bool dims = level_dims(a) == level_dims(b);
      const bool digest = report::digest_text(reconstruct::gauge_invariant_summary(a)) ==
                          report::digest_text(reconstruct::gauge_invariant_summary(b));
      auto eq = reconstruct::bundle_equivalence(a, b, 1e-7);
      worst = std::max(worst, eq.residual);
      same_digest += digest;
      ok = ok && dims && (digest || (eq.found && eq.residual < 1e-7));
    }
    return Outcome{ok, std::to_string(same_digest) + "/5 equal gauge-invariant digests; unitary residual " + fmt(worst)};
  });

  criterion(9, "SO(2) factor systems", [] {
    double worst = 0.0;
    bool ok = true;
    std::string dims;
    for (const std::string kind : so2::canned_morita_kinds()) {
      auto n = so2::canned_morita(kind);
      auto a = so2::build_so2_algebra(so2::factor_system(n, 3, 1e-10));
      auto rep = so2::check_so2(a, 1e-10);
      const auto& assoc = rep.get("associativity");
      worst = std::max(worst, assoc.residual);
      ok = ok && assoc.residual < 1e-10 && rep.split.pass && rep.pass();
      if (kind != "permutation") {
        for (auto [k, d] : a.level_dims()) ok = ok && d == n.algebra().dim();
        dims += kind + " levels dim " + std::to_string(n.algebra().dim()) + "; ";
      }
    }
    return Outcome{ok, "associativity " + fmt(worst) + "; split N + Nbar verified; " + dims};
  });

  criterion(10, "full suite n=3, K=4, dim B <= 4, 5 irreps", [] {
    const auto t0 = Clock::now();
    const int K = 4;
    const auto cat = typepi::build_catalog(3, K);
    const auto reg = repcat::IrrepRegistry::build(3, K);
    const auto reg2 = repcat::IrrepRegistry::build(3, K, 0xBADC0DE);
    const auto cut = reconstruct::cutoff_from_spins(reg, {0, 1, 2, 3, 4});
    const auto cut2 = reconstruct::cutoff_from_spins(reg2, {0, 1, 2, 3, 4});
    std::vector<typepi::TypePiDatum> data = {
        typepi::trivial_type_pi(hilbmod::FiniteCStarAlgebra(std::vector<int>{1}), 3, K, cat),
        typepi::trivial_type_pi(hilbmod::FiniteCStarAlgebra(std::vector<int>{1, 1}), 3, K, cat),
        typepi::trivial_type_pi(hilbmod::FiniteCStarAlgebra(std::vector<int>{2}), 3, K, cat),
        typepi::bundle_type_pi(3, liegroup::random_group_elements(3, 3, 0x3A3A), 3, K, cat)};
    bool ok = true;
    std::string failed;
    auto note = [&](bool pass, const std::string& what) {
      if (!pass) {
        ok = false;
        failed += what + " ";
      }
    };
    for (const auto& d : data) {
      const std::string tag = d.kind + "/dimB=" + std::to_string(d.B.dim()) + ":";
      note(typepi::validate(d).pass(), tag + "validate");
      note(gamma::verify_functor(d, reg).pass(), tag + "functor");
      auto a = reconstruct::build_algebra(d, reg, cut);
      note(reconstruct::check_structure(a, reg).pass(), tag + "structure");
      auto cl = reconstruct::check_classical(a);
      note(!cl.peter_weyl_checked || cl.peter_weyl_match, tag + "peter-weyl");
      note(cl.commutative == (d.B.dim() != 4), tag + "commutativity");
      note(reconstruct::check_recovery(a, reg).success, tag + "recovery");
      note(reconstruct::check_freeness(a, reg).free, tag + "freeness");
      auto b = reconstruct::build_algebra(d, reg2, cut2);
      note(reconstruct::bundle_equivalence(a, b).found, tag + "seed");
      note(reconstruct::round_trip(a, reg, 2, cat).pass, tag + "round-trip");
    }
    const double t = seconds_since(t0);
    const long rss = peak_rss_kb();
    ok = ok && t < 300.0 && rss > 0 && rss < 2L * 1024 * 1024;
    return Outcome{ok, fmt(t) + " s, peak RSS " + std::to_string(rss / 1024) + " MiB " + failed};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", failures);
  return failures == 0 ? 0 : 1;
}
