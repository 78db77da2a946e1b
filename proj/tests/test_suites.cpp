#include <catch_amalgamated.hpp>

#include "fiboptic/fiboptic.hpp"

using namespace fiboptic;

namespace {

SuiteConfig small(const std::string& suite) {
  SuiteConfig c;
  c.suite = suite;
  c.max_size = 1;
  c.residual_bound = 1;
  c.entry_bound = 1;
  c.probe_bound = 1;
  return c;
}

}  // namespace

TEST_CASE("every suite runs green at size one", "[suites]") {
  for (const auto& name : suite_names()) {
    INFO(name);
    auto r = run_suite(small(name));
    CHECK(r.ok());
    CHECK(r.instances() > 0);
    CHECK(r.passed() + r.failed() == r.instances());
    CHECK_FALSE(r.duration_ms.has_value());
  }
}

TEST_CASE("cases are sorted by key and tagged with a mode", "[suites]") {
  auto r = run_suite(small("indexed-equivalence"));
  for (std::size_t i = 1; i < r.cases.size(); ++i) CHECK(r.cases[i - 1].key <= r.cases[i].key);
  for (const auto& c : r.cases) CHECK((c.mode == "exhaustive" || c.mode == "sampled"));
}

TEST_CASE("report json carries the schema fields", "[suites]") {
  auto j = json(run_suite(small("optic-collapse")));
  for (auto key : {"suite", "config", "instances", "passed", "failed", "skipped", "counterexamples", "duration_ms"})
    CHECK(j.contains(key));
  CHECK(j["duration_ms"].is_null());
  CHECK(j["instances"] == j["passed"].get<int>() + j["failed"].get<int>());
  CHECK(j["counterexamples"].empty());
}

TEST_CASE("timing fills duration_ms", "[suites]") {
  auto c = small("fincat-laws");
  c.timing = true;
  CHECK(run_suite(c).duration_ms.has_value());
}

TEST_CASE("same config gives byte-identical reports", "[suites]") {
  for (auto name : {"indexed-equivalence", "fibre-specialise", "dmark-validity"}) {
    auto c = small(name);
    c.seed = 17;
    CHECK(json(run_suite(c)).dump() == json(run_suite(c)).dump());
  }
}

TEST_CASE("seeded sampling depends on the seed only through sampled cases", "[suites]") {
  auto a = small("indexed-equivalence");
  auto b = a;
  b.seed = 99;
  auto ra = run_suite(a), rb = run_suite(b);
  REQUIRE(ra.cases.size() == rb.cases.size());
  for (std::size_t i = 0; i < ra.cases.size(); ++i)
    if (ra.cases[i].mode == "exhaustive" && ra.cases[i].key.find("multirow") == std::string::npos)
      CHECK(json(ra.cases[i]).dump() == json(rb.cases[i]).dump());
}

TEST_CASE("unknown suite and bad configs are rejected", "[suites]") {
  CHECK_THROWS_AS(run_suite(small("no-such-suite")), ShapeError);
  auto c = small("fincat-laws");
  c.max_size = 0;
  CHECK_THROWS_AS(run_suite(c), ShapeError);
  c = small("fincat-laws");
  c.ceiling = 0;
  CHECK_THROWS_AS(run_suite(c), ShapeError);
  c = small("fincat-laws");
  c.format = "xml";
  CHECK_THROWS_AS(run_suite(c), ShapeError);
}

TEST_CASE("ceiling overflow is skipped and not ok", "[suites]") {
  auto c = small("lens-laws");
  c.max_size = 2;
  c.ceiling = 10;
  auto r = run_suite(c);
  CHECK(r.skipped() > 0);
  CHECK_FALSE(r.ok());
  CHECK(r.instances() + r.skipped() == r.cases.size());
}

TEST_CASE("instance files restrict pair suites", "[suites]") {
  auto c = small("optic-collapse");
  c.instances = json::array({json{{"source", Boundary{FinSet(2), FinSet(2)}}, {"target", Boundary{FinSet(2), FinSet(2)}}}});
  auto r = run_suite(c);
  REQUIRE(r.cases.size() == 1);
  CHECK(r.cases[0].detail["vertices"] == 272);
  CHECK(r.cases[0].detail["components"] == 64);

  auto f = small("fincat-laws");
  f.instances = json::array();
  CHECK_THROWS_AS(run_suite(f), ShapeError);
  auto bad = small("optic-collapse");
  bad.instances = json::array({json{{"source", 3}}});
  CHECK_THROWS(run_suite(bad));
}

TEST_CASE("text rendering carries the json counts", "[suites]") {
  auto r = run_suite(small("dmark-validity"));
  auto text = render_text(r);
  CHECK(text.find(std::to_string(r.instances()) + " instances, " + std::to_string(r.passed()) + " passed, 0 failed, 0 skipped") !=
        std::string::npos);
}

TEST_CASE("fibre-side hom count matches the indexed count", "[suites]") {
  FamInstance fi;
  suites::RowCache cache(2, kDefaultCeiling);
  auto fams = all_families(1, 2);
  for (const auto& s : fams)
    for (const auto& t : fams) CHECK(suites::fibre_hom_count(fi, s, t, 2) == cache.count(s, t));
}

TEST_CASE("describe renders lenses", "[describe]") {
  Boundary b{FinSet(2), FinSet(2)};
  ProductWitness w(FinSet(2), FinSet(2));
  Lens l(b, b, FiniteFunction(FinSet(2), FinSet(2), {1, 0}), w.proj_left());
  auto s = describe(json(l));
  CHECK(s.rfind("Lens (2,2) → (2,2); get table [1,0]", 0) == 0);
}

TEST_CASE("describe flags offending DMark pairs", "[describe]") {
  FiniteFunction id(FinSet(2), FinSet(2), {0, 1});
  auto k = json{{"dom", FinSet(2)}, {"cod", FinSet(2)}, {"rows", json::array({json::array({"1/2", "1/2"}), json::array({"0", "1"})})}}.get<FiniteKernel>();
  json j = json(DMarkMorphism{k, id});
  j["source"] = DMarkObject{id};
  j["target"] = DMarkObject{id};
  auto s = describe(j);
  CHECK(s.find("valid NO") != std::string::npos);
  CHECK(s.find("(0,1)") != std::string::npos);
  CHECK(s.find("(1,0)") == std::string::npos);
}

TEST_CASE("describe shows indexed grids", "[describe]") {
  suites::RowCache cache(2, kDefaultCeiling);
  IndexedFamily s(FinSet(2), {Boundary{FinSet(1), FinSet(2)}, Boundary{FinSet(2), FinSet(1)}});
  IndexedFamily t(FinSet(1), {Boundary{FinSet(2), FinSet(2)}});
  auto o = cache.at(s, t, 0);
  auto text = describe(json(o));
  CHECK(text.find("grid 2×1") != std::string::npos);
  CHECK(text.find("entry sizes [[") != std::string::npos);
}

TEST_CASE("describe reports parse positions", "[describe]") {
  try {
    describe_text("{\"get\": [1,\n  2,,]}");
    FAIL("no error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("line 2, column 5") != std::string::npos);
  }
  CHECK_THROWS_AS(describe(json{{"nothing", 1}}), ShapeError);
}
