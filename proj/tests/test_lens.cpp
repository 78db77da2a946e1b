#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fiboptic/laws.hpp"
#include "fiboptic/lens.hpp"

using namespace fiboptic;

namespace {

Boundary bd(std::size_t x, std::size_t xd) { return {FinSet(x), FinSet(xd)}; }

FiniteFunction random_fn(std::mt19937_64& rng, std::size_t dom, std::size_t cod) {
  std::vector<Index> t(dom);
  for (auto& v : t) v = rng() % cod;
  return FiniteFunction(FinSet(dom), FinSet(cod), std::move(t));
}

Lens random_lens(std::mt19937_64& rng, const Boundary& s, const Boundary& t) {
  return Lens(s, t, random_fn(rng, s.forward.size(), t.forward.size()),
              random_fn(rng, s.forward.size() * t.backward.size(), s.backward.size()));
}

}  // namespace

TEST_CASE("lens_compose with identities") {
  auto b = bd(2, 2);
  CHECK(lens_compose(Lens::identity(b), Lens::identity(b)) == Lens::identity(b));
  std::mt19937_64 rng(7);
  auto l = random_lens(rng, bd(2, 3), bd(3, 2));
  CHECK(lens_compose(l, Lens::identity(bd(3, 2))) == l);
  CHECK(lens_compose(Lens::identity(bd(2, 3)), l) == l);
}

TEST_CASE("lens_compose matches pointwise evaluation of the defining formula") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = bd(2, 2), b = bd(2, 2), c = bd(2, 2);
    auto l1 = random_lens(rng, a, b), l2 = random_lens(rng, b, c);
    auto l = lens_compose(l1, l2);
    for (Index x = 0; x < 2; ++x) {
      CHECK(l.get()(x) == l2.get().table()[l1.get().table()[x]]);
      for (Index z = 0; z < 2; ++z) {
        // put tables are indexed by x·|Y'| + y'
        Index inner = l2.put().table()[l1.get().table()[x] * 2 + z];
        CHECK(l.put().table()[x * 2 + z] == l1.put().table()[x * 2 + inner]);
      }
    }
  }
}

TEST_CASE("lens_compose rejects mismatched boundaries") {
  CHECK_THROWS_AS(lens_compose(Lens::identity(bd(1, 2)), Lens::identity(bd(2, 1))), CompositionError);
}

TEST_CASE("Lens and DepLens category laws at size <= 2") {
  SECTION("lens") {
    auto r = check_category_laws(LensCategory{}, 2);
    CHECK(r.passed());
    // one check per morphism for the unit laws, one per composable triple
    auto bs = all_boundaries(2);
    std::uint64_t expected = 0;
    for (const auto& a : bs)
      for (const auto& b : bs) {
        auto h = std::uint64_t(std::pow(b.forward.size(), a.forward.size()) *
                               std::pow(a.backward.size(), a.forward.size() * b.backward.size()));
        expected += h;
        for (const auto& c : bs)
          for (const auto& d : bs)
            expected += h *
                        std::uint64_t(std::pow(c.forward.size(), b.forward.size()) *
                                      std::pow(b.backward.size(), b.forward.size() * c.backward.size())) *
                        std::uint64_t(std::pow(d.forward.size(), c.forward.size()) *
                                      std::pow(c.backward.size(), c.forward.size() * d.backward.size()));
      }
    CHECK(r.checked == expected);
  }
  SECTION("dependent lens") {
    auto r = check_category_laws(DepLensCategory{}, 2);
    CHECK(r.passed());
  }
}

TEST_CASE("randomized lens associativity at size 3") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    Boundary a = bd(1 + rng() % 3, 1 + rng() % 3), b = bd(1 + rng() % 3, 1 + rng() % 3),
             c = bd(1 + rng() % 3, 1 + rng() % 3), d = bd(1 + rng() % 3, 1 + rng() % 3);
    auto f = random_lens(rng, a, b), g = random_lens(rng, b, c), h = random_lens(rng, c, d);
    CHECK(lens_compose(lens_compose(f, g), h) == lens_compose(f, lens_compose(g, h)));
  }
}

TEST_CASE("dlens_compose") {
  SECTION("right identity") {
    Container src(FinSet(2), {FinSet(1), FinSet(2)});
    Container tgt(FinSet(1), {FinSet(2)});
    for (const auto& d : enumerate_dlens_hom(src, tgt)) CHECK(dlens_compose(d, DepLens::identity(tgt)) == d);
  }
  SECTION("constant containers agree with lens composition") {
    for (const auto& l1 : enumerate_lens_hom(bd(2, 1), bd(1, 2)))
      for (const auto& l2 : enumerate_lens_hom(bd(1, 2), bd(2, 2)))
        CHECK(dlens_compose(lens_to_dlens(l1), lens_to_dlens(l2)) == lens_to_dlens(lens_compose(l1, l2)));
  }
  SECTION("mismatch") {
    CHECK_THROWS_AS(dlens_compose(DepLens::identity(Container::constant(FinSet(1), FinSet(1))),
                                  DepLens::identity(Container::constant(FinSet(1), FinSet(2)))),
                    CompositionError);
  }
}

TEST_CASE("count_dlens_hom examples") {
  CHECK(count_dlens_hom(Container(FinSet(0), {}), Container::constant(FinSet(2), FinSet(2))) == 1);

  Container src(FinSet(2), {FinSet(1), FinSet(2)});
  Container tgt(FinSet(1), {FinSet(2)});
  CHECK(count_dlens_hom(src, tgt) == 4);
  CHECK(enumerate_dlens_hom(src, tgt).size() == 4);

  auto a = Container::constant(FinSet(2), FinSet(2));
  auto c = Container::constant(FinSet(1), FinSet(2));
  CHECK(count_dlens_hom(a, c) == 16);
  CHECK(count_lens_hom(bd(2, 2), bd(1, 2)) == 16);
  CHECK(enumerate_dlens_hom(a, c).size() == 16);

  auto one = Container::constant(FinSet(1), FinSet(1));
  CHECK(enumerate_dlens_hom(one, one).size() == 1);
}

TEST_CASE("count_dlens_hom equals enumeration length on all containers of size <= 2") {
  auto cs = all_containers(2);
  for (const auto& s : cs)
    for (const auto& t : cs) {
      auto list = enumerate_dlens_hom(s, t);
      CHECK(list.size() == count_dlens_hom(s, t));
      std::set<std::string> distinct;
      for (const auto& d : list) distinct.insert(json(d).dump());
      CHECK(distinct.size() == list.size());
    }
}

TEST_CASE("empty direction sets kill positions with nonempty targets") {
  Container src(FinSet(2), {FinSet(0), FinSet(1)});
  Container tgt(FinSet(2), {FinSet(1), FinSet(2)});
  // position 0: 0^1 + 0^2 = 0
  CHECK(count_dlens_hom(src, tgt) == 0);
  CHECK(enumerate_dlens_hom(src, tgt).empty());
}

TEST_CASE("constant containers reproduce the lens count") {
  for (const auto& s : all_boundaries(2))
    for (const auto& t : all_boundaries(2))
      CHECK(count_dlens_hom(Container::constant(s.forward, s.backward), Container::constant(t.forward, t.backward)) ==
            count_lens_hom(s, t));
}

TEST_CASE("lens_to_dlens is a functor at size <= 2") {
  for (const auto& b : all_boundaries(2))
    CHECK(lens_to_dlens(Lens::identity(b)) == DepLens::identity(Container::constant(b.forward, b.backward)));

  auto bs = all_boundaries(2);
  std::uint64_t pairs = 0;
  for (const auto& a : bs)
    for (const auto& b : bs) {
      auto ab = enumerate_lens_hom(a, b);
      for (const auto& c : bs) {
        auto bc = enumerate_lens_hom(b, c);
        if (ab.size() * bc.size() > 20'000) continue;  // the full sweep runs in the acceptance binary
        for (const auto& f : ab)
          for (const auto& g : bc) {
            ++pairs;
            REQUIRE(lens_to_dlens(lens_compose(f, g)) == dlens_compose(lens_to_dlens(f), lens_to_dlens(g)));
          }
      }
    }
  CHECK(pairs > 0);
}

TEST_CASE("lens_to_dlens of a collapsing get") {
  Lens l(bd(2, 1), bd(1, 1), FiniteFunction(FinSet(2), FinSet(1), {0, 0}), FiniteFunction(FinSet(2), FinSet(1), {0, 0}));
  auto d = lens_to_dlens(l);
  CHECK(d.forward().table() == std::vector<Index>{0, 0});
  CHECK(d.source().directions == std::vector<FinSet>{FinSet(1), FinSet(1)});
}

TEST_CASE("Lens JSON round trip") {
  std::mt19937_64 rng(5);
  auto l = random_lens(rng, bd(2, 2), bd(2, 2));
  CHECK(json(l).get<Lens>() == l);
  Container c(FinSet(2), {FinSet(1), FinSet(2)});
  auto d = enumerate_dlens_hom(c, c).back();
  CHECK(json(d).get<DepLens>() == d);
}
