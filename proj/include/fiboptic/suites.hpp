#pragma once

// Named law and equivalence suites with deterministic JSON reports.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "fiboptic/fibre.hpp"
#include "fiboptic/fincat.hpp"
#include "fiboptic/indexed.hpp"
#include "fiboptic/laws.hpp"
#include "fiboptic/lens.hpp"
#include "fiboptic/optic.hpp"
#include "fiboptic/pullback.hpp"

namespace fiboptic {

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "fincat-laws",         "lens-laws",      "optic-collapse",   "indexed-equivalence", "polynomial-count",
      "fibre-beckchevalley", "dmark-validity", "fibre-specialise", "cosmic-cube",         "dependent-cube"};
  return names;
}

struct SuiteConfig {
  std::string suite;
  std::size_t max_size = 2;
  std::size_t residual_bound = 2;
  std::size_t entry_bound = 2;
  std::size_t probe_bound = 2;
  std::vector<int> denominators{1, 2, 3};
  std::uint64_t ceiling = kDefaultCeiling;
  std::uint64_t seed = 0;
  // representative pairs per hom above which a case is sampled, and the sample size
  std::uint64_t pair_budget = 64;
  std::uint64_t samples = 8;
  std::uint64_t multirow_samples = 64;
  // representatives per hom above which a round trip is sampled, and the sample size
  std::uint64_t roundtrip_budget = 1024;
  std::uint64_t roundtrip_samples = 64;
  std::string format = "json";
  bool timing = false;
  std::optional<json> instances;

  void validate() const {
    if (max_size == 0 || residual_bound == 0 || entry_bound == 0 || probe_bound == 0 || samples == 0 ||
        roundtrip_samples == 0)
      throw ShapeError("SuiteConfig: bounds must be positive");
    if (ceiling < 1) throw ShapeError("SuiteConfig: ceiling must be at least 1");
    if (denominators.empty()) throw ShapeError("SuiteConfig: the denominator grid is empty");
    for (int d : denominators)
      if (d < 1) throw ShapeError("SuiteConfig: denominators must be positive");
    if (format != "json" && format != "text") throw ShapeError("SuiteConfig: format must be json or text");
  }
};

inline void to_json(json& j, const SuiteConfig& c) {
  j = json{{"suite", c.suite},
           {"max_size", c.max_size},
           {"residual_bound", c.residual_bound},
           {"entry_bound", c.entry_bound},
           {"probe_bound", c.probe_bound},
           {"denominators", c.denominators},
           {"ceiling", c.ceiling},
           {"seed", c.seed},
           {"pair_budget", c.pair_budget},
           {"samples", c.samples},
           {"multirow_samples", c.multirow_samples},
           {"roundtrip_budget", c.roundtrip_budget},
           {"roundtrip_samples", c.roundtrip_samples},
           {"format", c.format}};
  if (c.instances) j["instances"] = *c.instances;
}

struct SuiteCase {
  std::string key;
  std::string mode;  // exhaustive | sampled
  bool pass = false;
  bool skipped = false;
  json detail;
};

inline void to_json(json& j, const SuiteCase& c) {
  j = json{{"key", c.key}, {"mode", c.mode}, {"pass", c.pass}, {"detail", c.detail}};
  if (c.skipped) j["skipped"] = true;
}

struct SuiteReport {
  std::string suite;
  SuiteConfig config;
  std::vector<SuiteCase> cases;
  std::optional<std::int64_t> duration_ms;

  std::uint64_t passed() const {
    return std::count_if(cases.begin(), cases.end(), [](const SuiteCase& c) { return !c.skipped && c.pass; });
  }
  std::uint64_t failed() const {
    return std::count_if(cases.begin(), cases.end(), [](const SuiteCase& c) { return !c.skipped && !c.pass; });
  }
  std::uint64_t skipped() const {
    return std::count_if(cases.begin(), cases.end(), [](const SuiteCase& c) { return c.skipped; });
  }
  std::uint64_t instances() const { return passed() + failed(); }
  bool ok() const { return failed() == 0 && skipped() == 0; }

  const SuiteCase* find(const std::string& key) const {
    for (const auto& c : cases)
      if (c.key == key) return &c;
    return nullptr;
  }
};

inline void to_json(json& j, const SuiteReport& r) {
  json counterexamples = json::array();
  for (const auto& c : r.cases)
    if (!c.skipped && !c.pass) counterexamples.push_back(json{{"key", c.key}, {"witness", c.detail}});
  j = json{{"suite", r.suite},
           {"config", r.config},
           {"instances", r.instances()},
           {"passed", r.passed()},
           {"failed", r.failed()},
           {"skipped", r.skipped()},
           {"counterexamples", counterexamples},
           {"cases", r.cases},
           {"duration_ms", r.duration_ms ? json(*r.duration_ms) : json(nullptr)}};
}

inline std::string render_text(const SuiteReport& r) {
  std::string s = "suite " + r.suite + ": " + std::to_string(r.instances()) + " instances, " +
                  std::to_string(r.passed()) + " passed, " + std::to_string(r.failed()) + " failed, " +
                  std::to_string(r.skipped()) + " skipped";
  if (r.duration_ms) s += ", " + std::to_string(*r.duration_ms) + " ms";
  s += "\n";
  for (const auto& c : r.cases) {
    s += std::string(c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL")) + " [" + c.mode + "] " + c.key + "\n";
    if (!c.pass || c.skipped) s += "  " + c.detail.dump() + "\n";
  }
  return s;
}

namespace suites {

using Row = std::tuple<std::vector<FinSet>, FiniteFunction, FiniteFunction>;
using CIOptic = IndexedOptic<FinSetCategory>;

inline SuiteCase law_case(std::string key, const LawReport& r) {
  return SuiteCase{std::move(key), "exhaustive", r.passed(), false, json(r)};
}

/// Runs `body`, turning an enumeration ceiling into a skipped case.
inline void guarded(std::vector<SuiteCase>& out, const std::string& key, const std::string& mode,
                    const std::function<SuiteCase()>& body) {
  try {
    out.push_back(body());
  } catch (const EnumerationLimit& e) {
    out.push_back(SuiteCase{key, mode, false, true, json{{"error", e.what()}}});
  }
}

/// Row enumerations memoised by (source component, target family).
class RowCache {
 public:
  RowCache(std::size_t entry_bound, std::uint64_t ceiling) : bound_(entry_bound), ceiling_(ceiling) {}

  const std::vector<Row>& rows(const Boundary& b, const IndexedFamily& tgt) {
    auto key = std::pair{b, tgt};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(key, enumerate_indexed_row(CartesianAction{}, b, tgt, bound_, ceiling_)).first->second;
  }

  /// Number of representatives src → tgt.
  std::uint64_t count(const IndexedFamily& src, const IndexedFamily& tgt) {
    std::uint64_t n = 1;
    for (const auto& c : src.components) {
      auto m = checked_mul(n, rows(c, tgt).size());
      if (!m) return std::numeric_limits<std::uint64_t>::max();
      n = *m;
    }
    return n;
  }

  CIOptic at(const IndexedFamily& src, const IndexedFamily& tgt, std::uint64_t k) {
    std::vector<Row> picked(src.size());
    for (std::size_t i = src.size(); i-- > 0;) {
      const auto& r = rows(src[i], tgt);
      picked[i] = r[k % r.size()];
      k /= r.size();
    }
    return assemble_indexed<FinSetCategory>(src, tgt, picked);
  }

  CIOptic random(const IndexedFamily& src, const IndexedFamily& tgt, std::mt19937_64& rng) {
    std::vector<Row> picked;
    for (const auto& c : src.components) {
      const auto& r = rows(c, tgt);
      picked.push_back(r[rng() % r.size()]);
    }
    return assemble_indexed<FinSetCategory>(src, tgt, picked);
  }

 private:
  std::size_t bound_;
  std::uint64_t ceiling_;
  std::map<std::pair<Boundary, IndexedFamily>, std::vector<Row>> cache_;
};

inline std::string arrow(const std::string& a, const std::string& b) { return a + "->" + b; }
inline std::string arrow(const std::string& a, const std::string& b, const std::string& c) {
  return a + "->" + b + "->" + c;
}

/// Visits pairs (o1, o2) of representatives a → b → c: every pair when
/// there are at most `budget` of them, otherwise `samples` seeded draws.
/// Returns the mode used.
template <class Visit>
std::string for_pairs(RowCache& cache, const IndexedFamily& a, const IndexedFamily& b, const IndexedFamily& c,
                      const SuiteConfig& cfg, std::mt19937_64& rng, Visit&& visit) {
  auto n1 = cache.count(a, b), n2 = cache.count(b, c);
  auto total = checked_mul(n1, n2);
  if (total && *total <= cfg.pair_budget) {
    for (std::uint64_t i = 0; i < n1; ++i) {
      auto o1 = cache.at(a, b, i);
      for (std::uint64_t j = 0; j < n2; ++j)
        if (!visit(o1, cache.at(b, c, j))) return "exhaustive";
    }
    return "exhaustive";
  }
  if (n1 == 0 || n2 == 0) return "exhaustive";
  for (std::uint64_t s = 0; s < cfg.samples; ++s)
    if (!visit(cache.random(a, b, rng), cache.random(b, c, rng))) break;
  return "sampled";
}

using PairCheck = std::function<bool(const CIOptic&, const CIOptic&, json&)>;

/// Composable pairs a -> b -> c. Both composition and the comparison act
/// row by row on the source, so sources of index <= 1 are enough: one case
/// per (a, b) covering every target c, each triple exhaustive within the
/// pair budget and sampled above it. Seeded multi-row triples are checked
/// as well.
inline std::vector<SuiteCase> composable_cases(const std::string& prefix, const SuiteConfig& cfg, RowCache& cache,
                                               std::mt19937_64& rng, const PairCheck& check) {
  std::vector<SuiteCase> out;
  auto all = all_families(cfg.max_size, cfg.max_size);
  for (const auto& a : all) {
    if (a.size() > 1) continue;
    for (const auto& b : all) {
      auto key = prefix + arrow(to_string(a), to_string(b), "*");
      guarded(out, key, "exhaustive", [&] {
        std::uint64_t pairs = 0, exhaustive = 0, sampled = 0;
        json witness;
        for (const auto& c : all) {
          auto mode = for_pairs(cache, a, b, c, cfg, rng, [&](const CIOptic& o1, const CIOptic& o2) {
            ++pairs;
            return check(o1, o2, witness);
          });
          ++(mode == "exhaustive" ? exhaustive : sampled);
          if (!witness.is_null()) break;
        }
        json d{{"pairs", pairs}, {"exhaustive_targets", exhaustive}, {"sampled_targets", sampled}};
        if (!witness.is_null()) d["witness"] = witness;
        return SuiteCase{key, sampled ? "sampled" : "exhaustive", witness.is_null(), false, d};
      });
    }
  }
  for (std::uint64_t s = 0; s < cfg.multirow_samples; ++s) {
    const auto& a = all[rng() % all.size()];
    const auto& b = all[rng() % all.size()];
    const auto& c = all[rng() % all.size()];
    char tag[32];
    std::snprintf(tag, sizeof tag, "multirow-%04llu:", static_cast<unsigned long long>(s));
    auto key = prefix + tag + arrow(to_string(a), to_string(b), to_string(c));
    guarded(out, key, "sampled", [&] {
      json witness;
      std::uint64_t pairs = 0;
      if (cache.count(a, b) && cache.count(b, c))
        for (std::uint64_t k = 0; k < cfg.samples && witness.is_null(); ++k, ++pairs)
          check(cache.random(a, b, rng), cache.random(b, c, rng), witness);
      json d{{"pairs", pairs}};
      if (!witness.is_null()) d["witness"] = witness;
      return SuiteCase{key, "sampled", witness.is_null(), false, d};
    });
  }
  return out;
}

/// Number of Fam fibre optics between the families, counted on the fibre
/// side: residual grids times hom sizes of the pushed-forward objects.
inline std::uint64_t fibre_hom_count(const FamInstance& fi, const IndexedFamily& s, const IndexedFamily& t,
                                     std::size_t entry_bound) {
  auto [x, xd] = fam_objects(s);
  auto [y, yd] = fam_objects(t);
  auto IJ = product(s.index, t.index);
  auto power = [](std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    for (std::uint64_t k = 0; k < e; ++k) {
      auto m = checked_mul(r, b);
      if (!m) throw EnumerationLimit("fibre_hom_count: overflow");
      r = *m;
    }
    return r;
  };
  std::uint64_t total = 0;
  std::vector<std::size_t> radices(IJ.size(), entry_bound + 1);
  for_each_tuple(radices, [&](const std::vector<Index>& grid) {
    std::vector<FinSet> fam;
    for (auto e : grid) fam.emplace_back(e);
    FamObject m(IJ, fam);
    auto fwd = fibre_forward_object(fi, s.index, t.index, m, y);
    auto bwd = fibre_backward_object(fi, s.index, t.index, yd, m);
    std::uint64_t n = 1;
    for (Index i = 0; i < s.size(); ++i) {
      auto f = checked_mul(power(fwd.family[i].size(), x.family[i].size()),
                           power(xd.family[i].size(), bwd.family[i].size()));
      auto g = f ? checked_mul(n, *f) : std::nullopt;
      if (!g) throw EnumerationLimit("fibre_hom_count: overflow");
      n = *g;
    }
    total += n;
  });
  return total;
}

// -------------------------------------------------------------------------- suites

inline std::vector<SuiteCase> fincat_laws(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  guarded(out, "category/finset", "exhaustive", [&] {
    return law_case("category/finset", check_category_laws(FinSetCategory{cfg.ceiling}, cfg.max_size, cfg.ceiling, "finset"));
  });
  guarded(out, "category/kernel", "exhaustive", [&] {
    KernelCategory kc;
    kc.denominators = cfg.denominators;
    kc.ceiling = cfg.ceiling;
    return law_case("category/kernel", check_category_laws(kc, cfg.max_size, cfg.ceiling, "kernel"));
  });
  guarded(out, "action/cartesian", "exhaustive",
          [&] { return law_case("action/cartesian", check_action_laws(CartesianAction{}, cfg.max_size)); });
  guarded(out, "action/stochastic", "exhaustive", [&] {
    StochasticAction act;
    act.cat.denominators = cfg.denominators;
    act.cat.ceiling = cfg.ceiling;
    return law_case("action/stochastic", check_action_laws(act, cfg.max_size));
  });
  return out;
}

inline std::vector<SuiteCase> lens_laws(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  guarded(out, "category/lens", "exhaustive", [&] {
    return law_case("category/lens", check_category_laws(LensCategory{cfg.ceiling}, cfg.max_size, cfg.ceiling, "lens"));
  });
  guarded(out, "category/deplens", "exhaustive", [&] {
    return law_case("category/deplens",
                    check_category_laws(DepLensCategory{cfg.ceiling}, cfg.max_size, cfg.ceiling, "deplens"));
  });
  return out;
}

inline std::vector<std::pair<Boundary, Boundary>> boundary_pairs(const SuiteConfig& cfg) {
  std::vector<std::pair<Boundary, Boundary>> out;
  if (cfg.instances) {
    for (const auto& inst : *cfg.instances)
      out.emplace_back(inst.at("source").get<Boundary>(), inst.at("target").get<Boundary>());
    return out;
  }
  for (const auto& s : all_boundaries(cfg.max_size))
    for (const auto& t : all_boundaries(cfg.max_size)) out.emplace_back(s, t);
  return out;
}

inline std::vector<std::pair<IndexedFamily, IndexedFamily>> family_pairs(const SuiteConfig& cfg,
                                                                         const std::vector<IndexedFamily>& fams) {
  std::vector<std::pair<IndexedFamily, IndexedFamily>> out;
  if (cfg.instances) {
    for (const auto& inst : *cfg.instances)
      out.emplace_back(inst.at("source").get<IndexedFamily>(), inst.at("target").get<IndexedFamily>());
    return out;
  }
  for (const auto& s : fams)
    for (const auto& t : fams) out.emplace_back(s, t);
  return out;
}

inline std::vector<SuiteCase> optic_collapse(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  for (const auto& [s, t] : boundary_pairs(cfg)) {
    auto key = "collapse/" + arrow(to_string(s), to_string(t));
    guarded(out, key, "exhaustive", [&, s = s, t = t] {
      auto bound = std::max(cfg.residual_bound, s.forward.size());
      SlidingGraph<FinSetCategory> g(CartesianAction{}, s, t, bound, cfg.ceiling, false);
      auto lenses = count_lens_hom(s, t);
      json d{{"source", s},
             {"target", t},
             {"residual_bound", bound},
             {"vertices", g.vertex_count()},
             {"edges", g.edge_count()},
             {"components", g.component_count()},
             {"lens_count", lenses}};
      return SuiteCase{key, "exhaustive", g.component_count() == lenses, false, d};
    });
  }
  return out;
}

inline std::vector<SuiteCase> indexed_equivalence(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  // classes per row, memoised
  std::map<std::pair<Boundary, IndexedFamily>, std::pair<std::uint64_t, std::uint64_t>> rows;
  auto row = [&](const Boundary& b, const IndexedFamily& t) {
    auto key = std::pair{b, t};
    auto it = rows.find(key);
    if (it != rows.end()) return it->second;
    IndexedRowGraph<FinSetCategory> g(CartesianAction{}, b, t, cfg.entry_bound, cfg.ceiling);
    return rows.emplace(key, std::pair<std::uint64_t, std::uint64_t>{g.component_count(), g.vertex_count()})
        .first->second;
  };
  auto fams = all_families(cfg.max_size, cfg.max_size);
  for (const auto& [s, t] : family_pairs(cfg, fams)) {
    auto key = "classes/" + arrow(to_string(s), to_string(t));
    guarded(out, key, "exhaustive", [&, s = s, t = t] {
      std::uint64_t classes = 1, reps = 1;
      for (const auto& c : s.components) {
        auto [k, v] = row(c, t);
        auto a = checked_mul(classes, k), b = checked_mul(reps, v);
        if (!a || !b) throw EnumerationLimit("indexed-equivalence: class count overflow");
        classes = *a;
        reps = *b;
      }
      auto expected = count_dlens_hom(family_container(s), family_container(t));
      json d{{"source", s},       {"target", t},         {"classes", classes},
             {"representatives", reps}, {"dlens_count", expected}};
      return SuiteCase{key, "exhaustive", classes == expected, false, d};
    });
  }
  if (cfg.instances) return out;

  std::mt19937_64 rng(cfg.seed);
  RowCache cache(cfg.entry_bound, cfg.ceiling);
  CartesianAction act;
  for (auto& c : composable_cases("functor/", cfg, cache, rng, [&](const CIOptic& o1, const CIOptic& o2, json& w) {
         auto lhs = iopt_to_dlens(iopt_compose(o1, o2, act));
         auto rhs = dlens_compose(iopt_to_dlens(o1), iopt_to_dlens(o2));
         if (lhs == rhs) return true;
         w = json{{"o1", o1}, {"o2", o2}, {"composite", lhs}, {"expected", rhs}};
         return false;
       }))
    out.push_back(std::move(c));
  guarded(out, "functor/identities", "exhaustive", [&] {
    std::uint64_t n = 0;
    json bad = json::array();
    for (const auto& f : fams) {
      ++n;
      if (!(iopt_to_dlens(identity_indexed_optic(act, f)) == DepLens::identity(family_container(f))))
        bad.push_back(to_string(f));
    }
    return SuiteCase{"functor/identities", "exhaustive", bad.empty(), false, json{{"families", n}, {"failures", bad}}};
  });
  return out;
}

inline std::vector<SuiteCase> polynomial_count(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  std::vector<IndexedFamily> fams;
  for (std::size_t n = 0; n <= cfg.max_size; ++n) {
    if (n == 0) {
      fams.emplace_back(FinSet(0), std::vector<Boundary>{});
      continue;
    }
    for (const auto& b : all_boundaries(cfg.max_size)) fams.emplace_back(FinSet(n), std::vector<Boundary>(n, b));
  }
  for (const auto& [s, t] : family_pairs(cfg, fams)) {
    auto key = "constant/" + arrow(to_string(s), to_string(t));
    guarded(out, key, "exhaustive", [&, s = s, t = t] {
      auto p = count_polynomial_nat(s, t, cfg.probe_bound, cfg.ceiling);
      auto expected = count_dlens_hom(family_container(s), family_container(t));
      json d{{"source", s},
             {"target", t},
             {"value", p.value},
             {"probe_bound", p.probe_bound},
             {"probe_elements", p.probe_elements},
             {"probe_relative", p.probe_relative},
             {"dlens_count", expected}};
      return SuiteCase{key, "exhaustive", p.value == expected, false, d};
    });
  }
  return out;
}

inline std::string square_key(const PullbackSquare& s) {
  auto t = [](const FiniteFunction& f) {
    std::string r = std::to_string(f.dom().size()) + ">" + std::to_string(f.cod().size()) + ":";
    for (auto v : f.table()) r += std::to_string(v);
    return r;
  };
  return "p" + t(s.p) + ",q" + t(s.q) + ",f" + t(s.f) + ",g" + t(s.g);
}

inline std::vector<SuiteCase> fibre_beckchevalley(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  FamInstance fi{cfg.ceiling};
  DMarkInstance dm;
  dm.denominators = cfg.denominators;
  dm.ceiling = cfg.ceiling;
  guarded(out, "adjunction/fam", "exhaustive",
          [&] { return law_case("adjunction/fam", check_adjunction(fi, cfg.max_size, cfg.max_size)); });
  guarded(out, "adjunction/dmark", "exhaustive",
          [&] { return law_case("adjunction/dmark", check_adjunction(dm, cfg.max_size, cfg.max_size)); });
  guarded(out, "pullback-functor/fam", "exhaustive", [&] {
    return law_case("pullback-functor/fam", check_pullback_functorial(fi, cfg.max_size, cfg.max_size));
  });
  guarded(out, "pullback-functor/dmark", "exhaustive", [&] {
    return law_case("pullback-functor/dmark", check_pullback_functorial(dm, cfg.max_size, cfg.max_size));
  });
  for (const auto& s : all_pullback_squares(cfg.max_size)) {
    auto k = square_key(s);
    guarded(out, "beck-chevalley/fam/" + k, "exhaustive", [&] {
      auto r = check_beck_chevalley(fi, s, cfg.max_size);
      return SuiteCase{"beck-chevalley/fam/" + k, "exhaustive", r.passed(), false, json{{"square", s}, {"law", r}}};
    });
    guarded(out, "beck-chevalley/dmark/" + k, "exhaustive", [&] {
      auto r = check_beck_chevalley(dm, s, cfg.max_size);
      return SuiteCase{"beck-chevalley/dmark/" + k, "exhaustive", r.passed(), false, json{{"square", s}, {"law", r}}};
    });
  }
  return out;
}

inline std::string bundle_key(const DMarkObject& b) {
  std::string r = std::to_string(b.base().size()) + "<";
  for (auto v : b.bundle.table()) r += std::to_string(v);
  return r;
}

inline std::vector<SuiteCase> dmark_validity(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  KernelCategory kc;
  kc.denominators = cfg.denominators;
  kc.ceiling = cfg.ceiling;
  std::vector<DMarkObject> objs;
  for (std::size_t n = 0; n <= cfg.max_size; ++n)
    for (auto& o : all_bundles(FinSet(n), cfg.max_size)) objs.push_back(o);

  std::map<std::pair<std::size_t, std::size_t>, std::vector<DMarkMorphism>> valid;
  for (std::size_t i = 0; i < objs.size(); ++i)
    for (std::size_t j = 0; j < objs.size(); ++j) {
      const auto& src = objs[i];
      const auto& tgt = objs[j];
      auto key = "oracle/" + arrow(bundle_key(src), bundle_key(tgt));
      guarded(out, key, "exhaustive", [&] {
        std::uint64_t total = 0, accepted = 0;
        json witness;
        auto kernels = kc.homs(src.carrier(), tgt.carrier());
        for (const auto& f : all_functions(src.base(), tgt.base(), cfg.ceiling))
          for (const auto& k : kernels) {
            ++total;
            // probability mass landing outside the fibre over f(p(a))
            Rational off(0);
            for (Index a = 0; a < src.carrier().size(); ++a)
              for (Index b = 0; b < tgt.carrier().size(); ++b)
                if (tgt.bundle(b) != f(src.bundle(a))) off += k.weight(a, b);
            DMarkMorphism m{k, f};
            bool v = validate_dmark(m, src, tgt);
            if (v != (off == Rational(0)) && witness.is_null())
              witness = json{{"morphism", m}, {"off_fibre_mass", to_string(off)}, {"validated", v}};
            if (v) {
              ++accepted;
              valid[{i, j}].push_back(m);
            }
          }
        json d{{"morphisms", total}, {"accepted", accepted}};
        if (!witness.is_null()) d["witness"] = witness;
        return SuiteCase{key, "exhaustive", witness.is_null(), false, d};
      });
    }
  for (std::size_t i = 0; i < objs.size(); ++i)
    for (std::size_t j = 0; j < objs.size(); ++j)
      for (std::size_t l = 0; l < objs.size(); ++l) {
        const auto& ab = valid[{i, j}];
        const auto& bc = valid[{j, l}];
        if (ab.empty() || bc.empty()) continue;
        auto key = "closure/" + arrow(bundle_key(objs[i]), bundle_key(objs[j]), bundle_key(objs[l]));
        guarded(out, key, "exhaustive", [&] {
          std::uint64_t pairs = 0;
          json witness;
          for (const auto& m1 : ab) {
            for (const auto& m2 : bc) {
              ++pairs;
              if (!validate_dmark(dmark_compose(m1, m2), objs[i], objs[l])) {
                witness = json{{"m1", m1}, {"m2", m2}};
                break;
              }
            }
            if (!witness.is_null()) break;
          }
          json d{{"pairs", pairs}};
          if (!witness.is_null()) d["witness"] = witness;
          return SuiteCase{key, "exhaustive", witness.is_null(), false, d};
        });
      }
  return out;
}

inline std::vector<SuiteCase> fibre_specialise(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  FamInstance fi{cfg.ceiling};
  CartesianAction act;
  auto fams = all_families(cfg.max_size, cfg.max_size);
  for (const auto& f : fams) {
    auto key = "identity/" + to_string(f);
    guarded(out, key, "exhaustive", [&] {
      auto [x, xd] = fam_objects(f);
      bool ok = fibre_to_indexed(identity_fibre_optic(fi, x, xd)) == identity_indexed_optic(act, f);
      return SuiteCase{key, "exhaustive", ok, false, json{{"family", f}}};
    });
  }

  std::mt19937_64 rng(cfg.seed);
  RowCache cache(cfg.entry_bound, cfg.ceiling);
  auto roundtrip = [&](const CIOptic& o, json& witness) {
    auto fo = indexed_to_fibre(o);
    if (fibre_to_indexed(fo) == o && indexed_to_fibre(fibre_to_indexed(fo)) == fo) return true;
    witness = json{{"optic", o}};
    return false;
  };
  for (const auto& [s, t] : family_pairs(cfg, fams)) {
    auto key = "bijection/" + arrow(to_string(s), to_string(t));
    guarded(out, key, "exhaustive", [&, s = s, t = t] {
      // left inverse on every checked representative, and equal counts on
      // both sides, make the translation a bijection
      auto n = cache.count(s, t);
      auto fibre_side = fibre_hom_count(fi, s, t, cfg.entry_bound);
      json witness;
      if (n != fibre_side) witness = json{{"indexed_count", n}, {"fibre_count", fibre_side}};
      std::uint64_t checked = 0;
      std::string mode = "exhaustive";
      if (n <= cfg.roundtrip_budget) {
        for (std::uint64_t k = 0; k < n && witness.is_null(); ++k, ++checked) roundtrip(cache.at(s, t, k), witness);
      } else {
        mode = "sampled";
        for (std::uint64_t k = 0; k < cfg.roundtrip_samples && witness.is_null(); ++k, ++checked)
          roundtrip(cache.random(s, t, rng), witness);
      }
      json d{{"representatives", n}, {"fibre_count", fibre_side}, {"checked", checked}};
      if (!witness.is_null()) d["witness"] = witness;
      return SuiteCase{key, mode, witness.is_null(), false, d};
    });
  }
  if (cfg.instances) return out;

  for (auto& c : composable_cases("compose/", cfg, cache, rng, [&](const CIOptic& o1, const CIOptic& o2, json& w) {
         auto fibre = fibre_to_indexed(fibre_optic_compose(indexed_to_fibre(o1), indexed_to_fibre(o2), fi));
         auto direct = iopt_compose(o1, o2, act);
         if (fibre == direct) return true;
         w = json{{"o1", o1}, {"o2", o2}, {"fibre", fibre}, {"indexed", direct}};
         return false;
       }))
    out.push_back(std::move(c));
  return out;
}

inline std::string sizes_key(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<SuiteCase> cosmic_cube(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  guarded(out, "cube", "exhaustive", [&] {
    auto r = check_cosmic_cube(cfg.max_size, &copy_functor, cfg.ceiling);
    for (const auto& f : r.faces)
      out.push_back(SuiteCase{f.face + "/" + sizes_key(f.object_sizes), "exhaustive", f.pass, false, json(f)});
    // the control passes when the corrupted copy is caught; below size 2
    // the corruption is the identity, so it always runs at size >= 2
    auto neg_bound = std::max<std::size_t>(cfg.max_size, 2);
    auto neg = check_cosmic_cube(neg_bound, &copy_without_diagonal, cfg.ceiling);
    return SuiteCase{"negative-control/copy-without-diagonal", "exhaustive", !neg.passed(), false,
                     json{{"size_bound", neg_bound}, {"violations", neg.law.violation_count}}};
  });
  return out;
}

inline std::vector<SuiteCase> dependent_cube(const SuiteConfig& cfg) {
  std::vector<SuiteCase> out;
  guarded(out, "dependent", "exhaustive", [&] {
    auto r = check_dependent_cube(cfg.max_size, cfg.ceiling);
    std::uint64_t agree = 0;
    for (const auto& f : r.faces) {
      agree += f.pass;
      // reported, not asserted: agreement is the recorded finding
      json d = f;
      d["agree"] = f.pass;
      d["experimental"] = true;
      out.push_back(SuiteCase{"dependent/" + sizes_key(f.object_sizes), "exhaustive", true, false, d});
    }
    // internal consistency: flags match counts, and single-position
    // containers (the terminal slice) reproduce the lens counts
    bool consistent = r.experimental && r.law.violation_count == r.faces.size() - agree;
    for (const auto& f : r.faces) {
      consistent = consistent && f.pass == (f.left_count == f.right_count);
      const auto& z = f.object_sizes;
      if (z.size() == 4 && z[0] == 1 && z[2] == 1)
        consistent = consistent &&
                     f.left_count == count_lens_hom(Boundary{FinSet(1), FinSet(z[1])}, Boundary{FinSet(1), FinSet(z[3])});
    }
    return SuiteCase{"summary", "exhaustive", consistent, false,
                     json{{"experimental", true}, {"faces", r.faces.size()}, {"agreeing", agree}}};
  });
  return out;
}

}  // namespace suites

/// Runs a named suite. Throws ShapeError on an unknown suite or bad config.
inline SuiteReport run_suite(const SuiteConfig& cfg) {
  cfg.validate();
  using Runner = std::vector<SuiteCase> (*)(const SuiteConfig&);
  static const std::map<std::string, Runner> runners{
      {"fincat-laws", &suites::fincat_laws},
      {"lens-laws", &suites::lens_laws},
      {"optic-collapse", &suites::optic_collapse},
      {"indexed-equivalence", &suites::indexed_equivalence},
      {"polynomial-count", &suites::polynomial_count},
      {"fibre-beckchevalley", &suites::fibre_beckchevalley},
      {"dmark-validity", &suites::dmark_validity},
      {"fibre-specialise", &suites::fibre_specialise},
      {"cosmic-cube", &suites::cosmic_cube},
      {"dependent-cube", &suites::dependent_cube}};
  auto it = runners.find(cfg.suite);
  if (it == runners.end()) throw ShapeError("unknown suite: " + cfg.suite);
  static const std::vector<std::string> with_instances{"optic-collapse", "indexed-equivalence", "polynomial-count",
                                                       "fibre-specialise"};
  if (cfg.instances && std::find(with_instances.begin(), with_instances.end(), cfg.suite) == with_instances.end())
    throw ShapeError("suite " + cfg.suite + " does not take an instance file");
  if (cfg.instances && !cfg.instances->is_array()) throw ShapeError("instance file must hold a JSON array");

  auto start = std::chrono::steady_clock::now();
  SuiteReport r;
  r.suite = cfg.suite;
  r.config = cfg;
  r.cases = it->second(cfg);
  std::stable_sort(r.cases.begin(), r.cases.end(), [](const SuiteCase& a, const SuiteCase& b) { return a.key < b.key; });
  if (cfg.timing)
    r.duration_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace fiboptic
