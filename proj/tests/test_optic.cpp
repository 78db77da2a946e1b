#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fiboptic/optic.hpp"

using namespace fiboptic;

namespace {

using COptic = Optic<FinSetCategory>;
using KOptic = Optic<KernelCategory>;

Boundary bd(std::size_t x, std::size_t xd) { return {FinSet(x), FinSet(xd)}; }

FiniteFunction fn(std::size_t dom, std::size_t cod, std::vector<Index> table) {
  return FiniteFunction(FinSet(dom), FinSet(cod), std::move(table));
}

FiniteFunction random_fn(std::mt19937_64& rng, std::size_t dom, std::size_t cod) {
  std::vector<Index> t(dom);
  for (auto& v : t) v = rng() % cod;
  return FiniteFunction(FinSet(dom), FinSet(cod), std::move(t));
}

COptic random_optic(std::mt19937_64& rng, const Boundary& s, const Boundary& t, std::size_t m) {
  return COptic(s, t, FinSet(m), random_fn(rng, s.forward.size(), m * t.forward.size()),
                random_fn(rng, t.backward.size() * m, s.backward.size()));
}

std::uint64_t lens_count(const Boundary& s, const Boundary& t) {
  return std::uint64_t(std::pow(t.forward.size(), s.forward.size()) *
                       std::pow(s.backward.size(), s.forward.size() * t.backward.size()));
}

// residuals of every size, for boundaries that admit them
std::vector<COptic> all_optics(const Boundary& s, const Boundary& t, std::size_t bound) {
  std::vector<COptic> out;
  for (std::size_t m = 0; m <= bound; ++m)
    for (const auto& f : all_functions(s.forward, FinSet(m * t.forward.size())))
      for (const auto& b : all_functions(FinSet(t.backward.size() * m), s.backward))
        out.emplace_back(s, t, FinSet(m), f, b);
  return out;
}

}  // namespace

TEST_CASE("self-actions satisfy the coherence and functoriality checks") {
  CHECK(check_action_laws(CartesianAction{}, 2).passed());
  CHECK(check_action_laws(StochasticAction{}, 2).passed());
}

TEST_CASE("right multiplicator table") {
  // z=1, m=2, n=2: (0,(a,b)) ↦ ((0,b),a), i.e. a·2+b ↦ b·2+a
  CHECK(right_multiplicator_fn(FinSet(1), FinSet(2), FinSet(2)).table() == std::vector<Index>{0, 2, 1, 3});
}

TEST_CASE("Optic rejects mismatched parts") {
  CHECK_THROWS_AS(COptic(bd(1, 1), bd(1, 1), FinSet(2), fn(1, 1, {0}), fn(2, 1, {0, 0})), ShapeError);
  CHECK_THROWS_AS(COptic(bd(1, 1), bd(1, 1), FinSet(1), fn(1, 1, {0}), fn(2, 1, {0, 0})), ShapeError);
}

TEST_CASE("identity optics are units up to sliding") {
  CartesianAction act;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    auto s = bd(1 + rng() % 2, 1 + rng() % 2), t = bd(1 + rng() % 2, 1 + rng() % 2);
    auto o = random_optic(rng, s, t, 1 + rng() % 2);
    auto right = optic_compose(o, identity_optic(act, t), act);
    auto left = optic_compose(identity_optic(act, s), o, act);
    CHECK(right.residual.size() == o.residual.size());
    CHECK(optic_equiv(o, right, 2).equivalent());
    CHECK(optic_equiv(o, left, 2).equivalent());
  }
  auto id = identity_optic(act, bd(2, 2));
  CHECK(optic_equiv(optic_compose(id, id, act), id, 1).equivalent());
}

TEST_CASE("stochastic identity optics are units up to sliding") {
  StochasticAction act;
  auto s = bd(1, 2), t = bd(2, 1);
  SlidingGraph<KernelCategory> g(act, s, t, 1);
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    auto o = g.optic_at(v);
    CHECK(optic_equiv(o, optic_compose(o, identity_optic(act, t), act), 1, act).equivalent());
    CHECK(optic_equiv(o, optic_compose(identity_optic(act, s), o, act), 1, act).equivalent());
  }
}

TEST_CASE("cartesian composition normalizes to lens composition") {
  CartesianAction act;
  auto bs = all_boundaries(2);
  std::uint64_t pairs = 0;
  for (const auto& a : bs)
    for (const auto& b : bs) {
      auto ab = all_optics(a, b, 1);
      for (const auto& c : bs) {
        auto bc = all_optics(b, c, 1);
        for (const auto& o1 : ab)
          for (const auto& o2 : bc) {
            ++pairs;
            REQUIRE(normalize_cartesian(optic_compose(o1, o2, act)) ==
                    lens_compose(normalize_cartesian(o1), normalize_cartesian(o2)));
          }
      }
    }
  CHECK(pairs > 1000);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 2000; ++trial) {
    auto a = bd(rng() % 3, rng() % 3), b = bd(rng() % 3, rng() % 3), c = bd(rng() % 3, rng() % 3);
    auto m = a.forward.size() && b.forward.size() == 0 ? 0 : rng() % 3;
    auto n = b.forward.size() && c.forward.size() == 0 ? 0 : rng() % 3;
    if (a.forward.size() && (m == 0 || b.forward.size() == 0)) continue;
    if (b.forward.size() && (n == 0 || c.forward.size() == 0)) continue;
    if (b.backward.size() * m > 0 && a.backward.size() == 0) continue;
    if (c.backward.size() * n > 0 && b.backward.size() == 0) continue;
    auto o1 = random_optic(rng, a, b, m), o2 = random_optic(rng, b, c, n);
    CHECK(normalize_cartesian(optic_compose(o1, o2, act)) ==
          lens_compose(normalize_cartesian(o1), normalize_cartesian(o2)));
  }
}

TEST_CASE("optic_compose rejects mismatched boundaries") {
  CartesianAction act;
  CHECK_THROWS_AS(optic_compose(identity_optic(act, bd(1, 1)), identity_optic(act, bd(2, 1)), act), CompositionError);
}

TEST_CASE("slide") {
  CartesianAction act;
  std::mt19937_64 rng(4);
  SECTION("along an identity") {
    auto o = random_optic(rng, bd(2, 2), bd(2, 2), 2);
    auto id = FiniteFunction::identity(FinSet(2));
    CHECK(slide(o, id, SlideDirection::forward, act) == o);
    CHECK(slide(o, id, SlideDirection::backward, act) == o);
  }
  SECTION("to the terminal residual") {
    // backward ignores the residual, so it factors through Y'
    auto o = COptic(bd(2, 2), bd(2, 2), FinSet(2), fn(2, 4, {1, 2}), fn(4, 2, {1, 1, 0, 0}));
    auto bang = FiniteFunction::terminal(FinSet(2));
    auto s = slide(o, bang, SlideDirection::forward, act);
    CHECK(s.residual.size() == 1);
    CHECK(s.forward.table() == std::vector<Index>{1, 0});
    CHECK(s.backward.table() == std::vector<Index>{1, 0});
    CHECK(is_sliding_edge(act, SlidingEdge<FinSetCategory>{o, s, bang}));
    // a backward that reads the residual does not factor
    auto bad = COptic(bd(2, 2), bd(2, 2), FinSet(2), fn(2, 4, {1, 2}), fn(4, 2, {0, 1, 0, 1}));
    CHECK_THROWS_AS(slide(bad, bang, SlideDirection::forward, act), ShapeError);
  }
  SECTION("every result is the other end of a sliding edge") {
    for (const auto& o : all_optics(bd(2, 2), bd(1, 2), 2))
      for (std::size_t n = 0; n <= 2; ++n)
        for (const auto& r : all_functions(o.residual, FinSet(n))) {
          std::optional<COptic> slid;
          try {
            slid = slide(o, r, SlideDirection::forward, act);
          } catch (const ShapeError&) {
          }
          if (slid) REQUIRE(is_sliding_edge(act, SlidingEdge<FinSetCategory>{o, *slid, r}));
          if (n == 0) continue;
          auto back_src = COptic(o.source, o.target, FinSet(n), random_fn(rng, 2, n), random_fn(rng, 2 * n, 2));
          for (const auto& q : all_functions(o.residual, FinSet(n))) {
            std::optional<COptic> lifted;
            try {
              lifted = slide(back_src, q, SlideDirection::backward, act);
            } catch (const ShapeError&) {
            }
            if (lifted) REQUIRE(is_sliding_edge(act, SlidingEdge<FinSetCategory>{*lifted, back_src, q}));
          }
        }
  }
  SECTION("slide along r then s agrees with slide along r;s") {
    std::uint64_t compared = 0;
    for (const auto& o : all_optics(bd(2, 2), bd(2, 2), 2))
      for (std::size_t n = 0; n <= 2; ++n)
        for (std::size_t p = 0; p <= 2; ++p)
          for (const auto& r : all_functions(o.residual, FinSet(n)))
            for (const auto& s : all_functions(FinSet(n), FinSet(p))) {
              std::optional<COptic> twice, once;
              try {
                twice = slide(slide(o, r, SlideDirection::forward, act), s, SlideDirection::forward, act);
              } catch (const ShapeError&) {
              }
              try {
                once = slide(o, compose_fn(r, s), SlideDirection::forward, act);
              } catch (const ShapeError&) {
              }
              if (!twice) continue;
              // whenever the two-step slide exists, so does the one-step one
              REQUIRE(once);
              ++compared;
              CHECK(twice->forward == once->forward);
              CHECK(is_sliding_edge(act, SlidingEdge<FinSetCategory>{o, *twice, compose_fn(r, s)}));
              if (r.surjective() && s.surjective()) CHECK(*twice == *once);
            }
    CHECK(compared > 0);
  }
  SECTION("endpoint mismatch") {
    auto o = random_optic(rng, bd(2, 2), bd(2, 2), 2);
    CHECK_THROWS_AS(slide(o, FiniteFunction::identity(FinSet(1)), SlideDirection::forward, act), CompositionError);
    CHECK_THROWS_AS(slide(o, FiniteFunction::identity(FinSet(1)), SlideDirection::backward, act), CompositionError);
  }
}

TEST_CASE("normalize_cartesian") {
  CartesianAction act;
  CHECK(normalize_cartesian(identity_optic(act, bd(2, 2))) == Lens::identity(bd(2, 2)));
  CHECK(normalize_cartesian(identity_optic(act, bd(0, 3))) == Lens::identity(bd(0, 3)));

  SECTION("copy-coparametrised optic of a function") {
    auto f = fn(2, 2, {1, 1});
    Lens l(bd(2, 2), bd(2, 2), f, fn(4, 2, {0, 1, 1, 0}));
    auto o = lens_to_optic(l);
    CHECK(o.residual.size() == 2);
    CHECK(o.forward.table() == std::vector<Index>{1, 3});  // x ↦ (x, f x)
    CHECK(normalize_cartesian(o) == l);
  }
  SECTION("constant along sliding edges") {
    for (const auto& o : all_optics(bd(2, 2), bd(2, 2), 2))
      for (std::size_t n = 0; n <= 2; ++n)
        for (const auto& r : all_functions(o.residual, FinSet(n))) {
          std::optional<COptic> s;
          try {
            s = slide(o, r, SlideDirection::forward, act);
          } catch (const ShapeError&) {
          }
          if (s) REQUIRE(normalize_cartesian(*s) == normalize_cartesian(o));
        }
  }
  SECTION("refuses the stochastic action") {
    StochasticAction sa;
    CHECK_THROWS_AS(normalize_cartesian(identity_optic(sa, bd(1, 1))), UnsupportedInstance);
  }
}

TEST_CASE("the (2,2,2,2) sliding graph has 272 vertices and 64 components") {
  SlidingGraph<FinSetCategory> g(CartesianAction{}, bd(2, 2), bd(2, 2), 2);
  CHECK(g.level_size(0) == 0);
  CHECK(g.level_size(1) == 16);
  CHECK(g.level_size(2) == 256);
  CHECK(g.vertex_count() == 272);
  CHECK(g.component_count() == 64);
}

TEST_CASE("sliding classes biject with lenses at sizes <= 2") {
  auto bs = all_boundaries(2);
  for (const auto& s : bs)
    for (const auto& t : bs) {
      auto bound = std::max<std::size_t>(2, s.forward.size());
      SlidingGraph<FinSetCategory> g(CartesianAction{}, s, t, bound);
      INFO(to_string(s) << " -> " << to_string(t));
      CHECK(g.component_count() == lens_count(s, t));
      // normalization is a class invariant and hits every lens
      std::map<std::size_t, json> seen;
      std::set<std::string> lenses;
      for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        auto l = json(normalize_cartesian(g.optic_at(v)));
        auto [it, fresh] = seen.emplace(g.components()[v], l);
        REQUIRE(it->second == l);
        lenses.insert(l.dump());
      }
      CHECK(lenses.size() == g.component_count());
    }
}

TEST_CASE("optic_equiv verdicts") {
  CartesianAction act;
  std::mt19937_64 rng(9);
  SECTION("an optic and its slide, with a witness path") {
    auto o = COptic(bd(2, 2), bd(2, 2), FinSet(2), fn(2, 4, {1, 2}), fn(4, 2, {1, 1, 0, 0}));
    auto s = slide(o, FiniteFunction::terminal(FinSet(2)), SlideDirection::forward, act);
    auto r = optic_equiv(o, s, 2);
    REQUIRE(r.equivalent());
    REQUIRE(r.path.size() == 1);
    CHECK(is_sliding_edge(act, r.path[0]));
  }
  SECTION("equal normal forms are equivalent") {
    for (int trial = 0; trial < 50; ++trial) {
      auto o1 = random_optic(rng, bd(2, 2), bd(2, 1), 1 + rng() % 2);
      auto o2 = lens_to_optic(normalize_cartesian(o1));
      auto r = optic_equiv(o1, o2, 2);
      REQUIRE(r.equivalent());
      // the path is a chain of valid edges joining the two optics
      auto cur = json(o1);
      for (const auto& e : r.path) {
        CHECK(is_sliding_edge(act, e));
        auto from = json(e.from), to = json(e.to);
        REQUIRE((cur == from || cur == to));
        cur = cur == from ? to : from;
      }
      CHECK(cur == json(o2));
    }
  }
  SECTION("different gets are inequivalent") {
    auto o1 = lens_to_optic(Lens(bd(2, 1), bd(2, 1), fn(2, 2, {0, 1}), fn(2, 1, {0, 0})));
    auto o2 = lens_to_optic(Lens(bd(2, 1), bd(2, 1), fn(2, 2, {1, 1}), fn(2, 1, {0, 0})));
    CHECK(optic_equiv(o1, o2, 2).verdict == Verdict::inequivalent);
    // below |X| no negative claim is made
    auto small1 = COptic(bd(2, 1), bd(2, 1), FinSet(1), fn(2, 2, {0, 1}), fn(1, 1, {0}));
    auto small2 = COptic(bd(2, 1), bd(2, 1), FinSet(1), fn(2, 2, {1, 1}), fn(1, 1, {0}));
    CHECK(optic_equiv(small1, small2, 1).verdict == Verdict::not_connected_within_bound);
  }
  SECTION("residual above the bound") {
    auto o = random_optic(rng, bd(2, 2), bd(2, 2), 2);
    CHECK_THROWS_AS(optic_equiv(o, o, 1), ShapeError);
  }
}

TEST_CASE("optic_equiv is a congruence for composition") {
  CartesianAction act;
  auto a = bd(1, 2), b = bd(2, 1), c = bd(1, 2);
  SlidingGraph<FinSetCategory> gab(act, a, b, 2), gbc(act, b, c, 2);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto u1 = rng() % gab.vertex_count(), u2 = rng() % gab.vertex_count();
    auto v1 = rng() % gbc.vertex_count(), v2 = rng() % gbc.vertex_count();
    bool same = gab.components()[u1] == gab.components()[u2] && gbc.components()[v1] == gbc.components()[v2];
    if (!same) continue;
    auto k1 = optic_compose(gab.optic_at(u1), gbc.optic_at(v1), act);
    auto k2 = optic_compose(gab.optic_at(u2), gbc.optic_at(v2), act);
    CHECK(optic_equiv(k1, k2, 4).equivalent());
  }
}

TEST_CASE("Optic JSON round trip") {
  std::mt19937_64 rng(13);
  auto o = random_optic(rng, bd(2, 2), bd(2, 2), 2);
  CHECK(json(o).get<COptic>() == o);
  auto k = identity_optic(StochasticAction{}, bd(2, 2));
  CHECK(json(k).get<KOptic>() == k);
}
