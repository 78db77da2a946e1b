#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "fiboptic/fincat.hpp"

namespace fiboptic {

struct LawViolation {
  std::string law;
  json witness;
};

/// Outcome of an exhaustive law check. At most `kMaxWitnesses` violations are
/// kept verbatim; `violation_count` counts all of them.
struct LawReport {
  static constexpr std::size_t kMaxWitnesses = 16;

  std::string subject;
  std::uint64_t checked = 0;
  std::uint64_t violation_count = 0;
  std::vector<LawViolation> violations;

  bool passed() const noexcept { return violation_count == 0; }

  void fail(std::string law, json witness) {
    ++violation_count;
    if (violations.size() < kMaxWitnesses) violations.push_back({std::move(law), std::move(witness)});
  }

  void merge(const LawReport& other) {
    checked += other.checked;
    violation_count += other.violation_count;
    for (const auto& v : other.violations)
      if (violations.size() < kMaxWitnesses) violations.push_back(v);
  }
};

inline void to_json(json& j, const LawViolation& v) { j = json{{"law", v.law}, {"witness", v.witness}}; }

inline void to_json(json& j, const LawReport& r) {
  j = json{{"subject", r.subject},
           {"checked", r.checked},
           {"passed", r.passed()},
           {"violation_count", r.violation_count},
           {"violations", r.violations}};
}

template <class C>
concept EnumerableCategory = requires(const C& c, const typename C::Object& o, const typename C::Morphism& m) {
  { c.objects(std::size_t{}) } -> std::convertible_to<std::vector<typename C::Object>>;
  { c.homs(o, o) } -> std::convertible_to<std::vector<typename C::Morphism>>;
  { c.identity(o) } -> std::convertible_to<typename C::Morphism>;
  { c.compose(m, m) } -> std::convertible_to<typename C::Morphism>;
  { c.equal(m, m) } -> std::convertible_to<bool>;
};

/// Checks the unit and associativity laws over every composable triple of
/// morphisms between the objects `cat.objects(size_bound)`. Throws
/// EnumerationLimit if the enumerated morphisms exceed `ceiling`.
template <EnumerableCategory C>
LawReport check_category_laws(const C& cat, std::size_t size_bound, std::uint64_t ceiling = kDefaultCeiling,
                              std::string subject = "category") {
  using Morphism = typename C::Morphism;
  LawReport report;
  report.subject = std::move(subject);

  auto objs = cat.objects(size_bound);
  const std::size_t n = objs.size();
  std::vector<std::vector<std::vector<Morphism>>> hom(n, std::vector<std::vector<Morphism>>(n));
  std::uint64_t total = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      hom[a][b] = cat.homs(objs[a], objs[b]);
      total += hom[a][b].size();
      if (total > ceiling) throw EnumerationLimit("check_category_laws: morphism count exceeds the ceiling");
    }

  for (std::size_t a = 0; a < n; ++a) {
    auto id_a = cat.identity(objs[a]);
    for (std::size_t b = 0; b < n; ++b) {
      auto id_b = cat.identity(objs[b]);
      for (const auto& f : hom[a][b]) {
        ++report.checked;
        if (!cat.equal(cat.compose(id_a, f), f)) report.fail("left identity", json{{"f", f}});
        if (!cat.equal(cat.compose(f, id_b), f)) report.fail("right identity", json{{"f", f}});
      }
    }
  }

  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t d = 0; d < n; ++d) {
        const auto& gs = hom[b][c];
        const auto& hs = hom[c][d];
        if (gs.empty() || hs.empty()) continue;
        std::vector<Morphism> gh;
        gh.reserve(gs.size() * hs.size());
        for (const auto& g : gs)
          for (const auto& h : hs) gh.push_back(cat.compose(g, h));
        for (std::size_t a = 0; a < n; ++a)
          for (const auto& f : hom[a][b])
            for (std::size_t gi = 0; gi < gs.size(); ++gi) {
              auto fg = cat.compose(f, gs[gi]);
              for (std::size_t hi = 0; hi < hs.size(); ++hi) {
                ++report.checked;
                if (!cat.equal(cat.compose(fg, hs[hi]), cat.compose(f, gh[gi * hs.size() + hi])))
                  report.fail("associativity", json{{"f", f}, {"g", gs[gi]}, {"h", hs[hi]}});
              }
            }
      }
  return report;
}

}  // namespace fiboptic
