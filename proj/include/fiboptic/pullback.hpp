#pragma once

// Dependent optics as pullbacks of Para and Copara hom-categories over the
// residual base, their π0 quotients, and the two cubes relating them to
// lenses and dependent lenses.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/pending/disjoint_sets.hpp>

#include "fiboptic/fibre.hpp"
#include "fiboptic/fincat.hpp"
#include "fiboptic/laws.hpp"
#include "fiboptic/lens.hpp"
#include "fiboptic/optic.hpp"

namespace fiboptic {

// --------------------------------------------------------------------------
// Cells

/// (M, f : X → M • Y).
template <class Cat>
struct CoparaCell {
  using Morphism = typename Cat::Morphism;

  FinSet source;
  FinSet target;
  FinSet parameter;
  Morphism map;

  friend bool operator==(const CoparaCell&, const CoparaCell&) = default;
};

/// (M, f : X • M → Y). The parameter acts on the right, as in the backward
/// part of an optic.
template <class Cat>
struct ParaCell {
  using Morphism = typename Cat::Morphism;

  FinSet source;
  FinSet target;
  FinSet parameter;
  Morphism map;

  friend bool operator==(const ParaCell&, const ParaCell&) = default;
};

template <class Cat>
CoparaCell<Cat> make_copara(const SelfAction<Cat>& act, FinSet x, FinSet y, FinSet m, typename Cat::Morphism f) {
  if (f.dom() != x || f.cod() != act.left(m, y)) throw ShapeError("CoparaCell: map must be X → M • Y");
  return CoparaCell<Cat>{std::move(x), std::move(y), std::move(m), std::move(f)};
}

template <class Cat>
ParaCell<Cat> make_para(const SelfAction<Cat>& act, FinSet x, FinSet y, FinSet m, typename Cat::Morphism f) {
  if (f.dom() != act.right(x, m) || f.cod() != y) throw ShapeError("ParaCell: map must be X • M → Y");
  return ParaCell<Cat>{std::move(x), std::move(y), std::move(m), std::move(f)};
}

template <class Cat>
void to_json(json& j, const CoparaCell<Cat>& c) {
  j = json{{"kind", "copara"}, {"source", c.source}, {"target", c.target}, {"parameter", c.parameter}, {"map", c.map}};
}

template <class Cat>
void to_json(json& j, const ParaCell<Cat>& c) {
  j = json{{"kind", "para"}, {"source", c.source}, {"target", c.target}, {"parameter", c.parameter}, {"map", c.map}};
}

/// Parameter M ⊗ N; c1 ; (M • c2) ; multiplicator.
template <class Cat>
CoparaCell<Cat> copara_compose(const CoparaCell<Cat>& c1, const CoparaCell<Cat>& c2, const SelfAction<Cat>& act) {
  if (c1.target != c2.source) throw CompositionError("copara_compose: target of the first differs from source of the second");
  const auto& c = act.cat;
  auto map = c.compose(c.compose(c1.map, act.left_apply(c1.parameter, c2.map)),
                       act.multiplicator(c1.parameter, c2.parameter, c2.target));
  return make_copara(act, c1.source, c2.target, act.tensor(c1.parameter, c2.parameter), map);
}

/// Parameter N ⊗ M; right multiplicator ; (p1 • N) ; p2.
template <class Cat>
ParaCell<Cat> para_compose(const ParaCell<Cat>& p1, const ParaCell<Cat>& p2, const SelfAction<Cat>& act) {
  if (p1.target != p2.source) throw CompositionError("para_compose: target of the first differs from source of the second");
  const auto& c = act.cat;
  auto map = c.compose(c.compose(act.right_multiplicator(p1.source, p2.parameter, p1.parameter),
                                 act.right_apply(p1.map, p2.parameter)),
                       p2.map);
  return make_para(act, p1.source, p2.target, act.tensor(p2.parameter, p1.parameter), map);
}

/// A reparametrisation r : from.parameter → to.parameter. For Copara the
/// triangle is from ; (r • Y) = to; for Para it is (X • r) ; to = from.
template <class Cell>
struct Reparam2Cell {
  Cell from;
  Cell to;
  typename Cell::Morphism mediator;
};

template <class Cat>
bool triangle_holds(const Reparam2Cell<CoparaCell<Cat>>& r, const SelfAction<Cat>& act) {
  const auto& c = act.cat;
  if (r.from.source != r.to.source || r.from.target != r.to.target) return false;
  if (r.mediator.dom() != r.from.parameter || r.mediator.cod() != r.to.parameter) return false;
  return c.equal(c.compose(r.from.map, act.left_map(r.mediator, r.from.target)), r.to.map);
}

template <class Cat>
bool triangle_holds(const Reparam2Cell<ParaCell<Cat>>& r, const SelfAction<Cat>& act) {
  const auto& c = act.cat;
  if (r.from.source != r.to.source || r.from.target != r.to.target) return false;
  if (r.mediator.dom() != r.from.parameter || r.mediator.cod() != r.to.parameter) return false;
  return c.equal(c.compose(act.right_map(r.from.source, r.mediator), r.to.map), r.from.map);
}

// --------------------------------------------------------------------------
// Hom-categories

struct HomEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t mediator = 0;  // index into HomCategory::mediators

  friend bool operator==(const HomEdge&, const HomEdge&) = default;
};

/// A hom-category at fixed endpoints with a bounded parameter universe. The
/// residual of each vertex is its projection to the parameter base; each
/// edge carries a mediator r : residual(from) → residual(to). `reversed_cells`
/// and `reversed_two_cells` record the op and co orientations.
template <class V, class Mor>
struct HomCategory {
  std::vector<V> vertices;
  std::vector<FinSet> residuals;
  std::vector<Mor> mediators;
  std::vector<HomEdge> edges;
  bool reversed_cells = false;
  bool reversed_two_cells = false;

  std::size_t vertex_count() const noexcept { return vertices.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
};

template <class Cat>
using CoparaHom = HomCategory<CoparaCell<Cat>, typename Cat::Morphism>;
template <class Cat>
using ParaHom = HomCategory<ParaCell<Cat>, typename Cat::Morphism>;

namespace detail {

template <class Cat>
struct Universe {
  std::vector<FinSet> params;
  std::vector<typename Cat::Morphism> mediators;
  std::vector<std::pair<std::size_t, std::size_t>> ends;  // parameter indices of each mediator
};

template <class Cat>
Universe<Cat> mediator_universe(const Cat& c, std::size_t bound) {
  Universe<Cat> u;
  for (std::size_t m = 0; m <= bound; ++m) u.params.emplace_back(m);
  for (std::size_t m = 0; m <= bound; ++m)
    for (std::size_t n = 0; n <= bound; ++n)
      for (auto& r : c.homs(u.params[m], u.params[n])) {
        u.mediators.push_back(std::move(r));
        u.ends.emplace_back(m, n);
      }
  return u;
}

}  // namespace detail

/// Copara(X, Y) with parameters of size <= bound; an edge for every vertex
/// and every mediator out of its parameter.
template <class Cat>
CoparaHom<Cat> copara_homcat(const SelfAction<Cat>& act, const FinSet& x, const FinSet& y, std::size_t bound,
                             std::uint64_t ceiling = kDefaultCeiling) {
  const auto& c = act.cat;
  auto u = detail::mediator_universe(c, bound);
  CoparaHom<Cat> h;
  h.mediators = u.mediators;
  std::vector<HomSet<Cat>> levels;
  std::vector<std::size_t> offset;
  for (const auto& m : u.params) {
    levels.emplace_back(c, x, act.left(m, y));
    offset.push_back(h.vertices.size());
    for (const auto& f : levels.back().items()) {
      h.vertices.push_back(CoparaCell<Cat>{x, y, m, f});
      h.residuals.push_back(m);
    }
    if (h.vertices.size() > ceiling) throw EnumerationLimit("copara_homcat: vertex count exceeds the ceiling");
  }
  for (std::size_t ri = 0; ri < u.mediators.size(); ++ri) {
    auto [m, n] = u.ends[ri];
    auto ry = act.left_map(u.mediators[ri], y);
    for (std::size_t fi = 0; fi < levels[m].size(); ++fi) {
      auto to = levels[n].find(c.compose(levels[m][fi], ry));
      if (to) h.edges.push_back({offset[m] + fi, offset[n] + *to, ri});
    }
  }
  return h;
}

/// Para(X, Y) read in the co orientation: an edge (M, (X • r) ; g) → (M', g)
/// for every mediator r : M → M' and vertex (M', g).
template <class Cat>
ParaHom<Cat> para_homcat(const SelfAction<Cat>& act, const FinSet& x, const FinSet& y, std::size_t bound,
                         std::uint64_t ceiling = kDefaultCeiling) {
  const auto& c = act.cat;
  auto u = detail::mediator_universe(c, bound);
  ParaHom<Cat> h;
  h.mediators = u.mediators;
  h.reversed_cells = true;
  h.reversed_two_cells = true;
  std::vector<HomSet<Cat>> levels;
  std::vector<std::size_t> offset;
  for (const auto& m : u.params) {
    levels.emplace_back(c, act.right(x, m), y);
    offset.push_back(h.vertices.size());
    for (const auto& g : levels.back().items()) {
      h.vertices.push_back(ParaCell<Cat>{x, y, m, g});
      h.residuals.push_back(m);
    }
    if (h.vertices.size() > ceiling) throw EnumerationLimit("para_homcat: vertex count exceeds the ceiling");
  }
  for (std::size_t ri = 0; ri < u.mediators.size(); ++ri) {
    auto [m, n] = u.ends[ri];
    auto xr = act.right_map(x, u.mediators[ri]);
    for (std::size_t gi = 0; gi < levels[n].size(); ++gi) {
      auto from = levels[m].find(c.compose(xr, levels[n][gi]));
      if (from) h.edges.push_back({offset[m] + *from, offset[n] + gi, ri});
    }
  }
  return h;
}

/// Vertices are pairs with equal residual, edges are pairs of edges with
/// equal mediator. Vertex (a, b) is stored as the pair of factor indices.
template <class VL, class VR, class Mor>
HomCategory<std::pair<std::size_t, std::size_t>, Mor> pullback_homcat(const HomCategory<VL, Mor>& left,
                                                                        const HomCategory<VR, Mor>& right,
                                                                        std::uint64_t ceiling = kDefaultCeiling) {
  if (left.mediators.size() != right.mediators.size())
    throw ShapeError("pullback_homcat: factors have different mediator universes");
  for (std::size_t i = 0; i < left.mediators.size(); ++i)
    if (!(left.mediators[i] == right.mediators[i]))
      throw ShapeError("pullback_homcat: factors have different mediator universes");

  HomCategory<std::pair<std::size_t, std::size_t>, Mor> out;
  out.mediators = left.mediators;
  out.reversed_cells = left.reversed_cells;
  out.reversed_two_cells = left.reversed_two_cells;

  std::map<FinSet, std::vector<std::size_t>> group;
  std::vector<std::size_t> rank(right.vertex_count());
  for (std::size_t b = 0; b < right.vertex_count(); ++b) {
    auto& g = group[right.residuals[b]];
    rank[b] = g.size();
    g.push_back(b);
  }
  std::vector<std::size_t> base(left.vertex_count());
  for (std::size_t a = 0; a < left.vertex_count(); ++a) {
    base[a] = out.vertices.size();
    auto it = group.find(left.residuals[a]);
    if (it == group.end()) continue;
    for (auto b : it->second) {
      out.vertices.emplace_back(a, b);
      out.residuals.push_back(left.residuals[a]);
    }
    if (out.vertices.size() > ceiling) throw EnumerationLimit("pullback_homcat: vertex count exceeds the ceiling");
  }

  std::vector<std::vector<std::size_t>> right_by_med(right.mediators.size());
  for (std::size_t e = 0; e < right.edge_count(); ++e) right_by_med[right.edges[e].mediator].push_back(e);
  for (const auto& el : left.edges)
    for (auto er_i : right_by_med[el.mediator]) {
      const auto& er = right.edges[er_i];
      out.edges.push_back({base[el.from] + rank[er.from], base[el.to] + rank[er.to], el.mediator});
    }
  return out;
}

/// Component id per vertex, numbered by first appearance.
template <class V, class Mor>
std::vector<std::size_t> pi0_quotient(const HomCategory<V, Mor>& h) {
  boost::disjoint_sets_with_storage<> sets(h.vertex_count());
  for (const auto& e : h.edges) sets.union_set(e.from, e.to);
  std::vector<std::size_t> out(h.vertex_count());
  std::map<std::size_t, std::size_t> ids;
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = ids.emplace(sets.find_set(v), ids.size()).first->second;
  return out;
}

inline std::size_t component_count(const std::vector<std::size_t>& ids) {
  std::size_t n = 0;
  for (auto c : ids) n = std::max(n, c + 1);
  return n;
}

/// Every edge's triangle holds, every vertex has its identity edge, and the
/// composite of consecutive edges is an edge.
template <class Cat, class Cell>
LawReport check_homcat(const HomCategory<Cell, typename Cat::Morphism>& h, const SelfAction<Cat>& act) {
  LawReport r;
  r.subject = "hom-category";
  const auto& c = act.cat;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> present;
  std::map<typename Cat::Morphism, std::size_t> med_index;
  for (std::size_t i = 0; i < h.mediators.size(); ++i) med_index.emplace(h.mediators[i], i);
  std::vector<std::vector<std::size_t>> out_edges(h.vertex_count());
  for (std::size_t e = 0; e < h.edges.size(); ++e) {
    const auto& ed = h.edges[e];
    present[{ed.from, ed.to, ed.mediator}] = true;
    out_edges[ed.from].push_back(e);
    ++r.checked;
    Reparam2Cell<Cell> cell{h.vertices[ed.from], h.vertices[ed.to], h.mediators[ed.mediator]};
    if (!triangle_holds(cell, act)) r.fail("triangle", json{{"edge", e}});
  }
  for (std::size_t v = 0; v < h.vertex_count(); ++v) {
    ++r.checked;
    auto id = med_index.find(c.identity(h.residuals[v]));
    if (id == med_index.end() || !present.count({v, v, id->second})) r.fail("identity 2-cell", json{{"vertex", v}});
  }
  for (const auto& e1 : h.edges)
    for (auto e2i : out_edges[e1.to]) {
      const auto& e2 = h.edges[e2i];
      ++r.checked;
      auto comp = med_index.find(c.compose(h.mediators[e1.mediator], h.mediators[e2.mediator]));
      if (comp == med_index.end() || !present.count({e1.from, e2.to, comp->second}))
        r.fail("2-cell composite", json{{"from", e1.from}, {"to", e2.to}});
    }
  return r;
}

/// The projections of a pullback send edges to edges and identities to
/// identities.
template <class VL, class VR, class Mor>
LawReport check_pullback_projections(const HomCategory<std::pair<std::size_t, std::size_t>, Mor>& pb,
                                     const HomCategory<VL, Mor>& left, const HomCategory<VR, Mor>& right) {
  LawReport r;
  r.subject = "pullback projections";
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> le, re;
  for (const auto& e : left.edges) le[{e.from, e.to, e.mediator}] = true;
  for (const auto& e : right.edges) re[{e.from, e.to, e.mediator}] = true;
  for (std::size_t v = 0; v < pb.vertex_count(); ++v) {
    ++r.checked;
    auto [a, b] = pb.vertices[v];
    if (!(left.residuals[a] == right.residuals[b]) || !(pb.residuals[v] == left.residuals[a]))
      r.fail("vertex over a common residual", json{{"vertex", v}});
  }
  for (const auto& e : pb.edges) {
    ++r.checked;
    auto [a1, b1] = pb.vertices[e.from];
    auto [a2, b2] = pb.vertices[e.to];
    if (!le.count({a1, a2, e.mediator})) r.fail("left projection of an edge", json{{"from", e.from}, {"to", e.to}});
    if (!re.count({b1, b2, e.mediator})) r.fail("right projection of an edge", json{{"from", e.from}, {"to", e.to}});
  }
  return r;
}

// --------------------------------------------------------------------------
// dom and copy

/// dom(f) as a residual 1-cell.
inline FinSet dom_functor(const FiniteFunction& f) { return f.dom(); }

/// The oplax comparison dom(g ∘ f) = A → dom(g) ⊗ dom(f) = B ⊗ A, a ↦ (f a, a).
struct DomComparison {
  FinSet residual;
  FiniteFunction comparison;
};

inline DomComparison dom_comparison(const FiniteFunction& f, const FiniteFunction& g) {
  if (f.cod() != g.dom()) throw CompositionError("dom_comparison: maps are not composable");
  ProductWitness w(f.cod(), f.dom());
  std::vector<Index> t(f.dom().size());
  for (Index a = 0; a < t.size(); ++a) t[a] = w.pair(f(a), a);
  return DomComparison{f.dom(), FiniteFunction(f.dom(), w.carrier(), std::move(t))};
}

/// The comparison projects back to id_A and to f.
inline bool comparison_triangle_holds(const DomComparison& c, const FiniteFunction& f) {
  ProductWitness w(f.cod(), f.dom());
  return compose_fn(c.comparison, w.proj_right()) == FiniteFunction::identity(f.dom()) &&
         compose_fn(c.comparison, w.proj_left()) == f;
}

/// For f : A → B, g : B → C, h : C → D both ways of comparing dom(h g f)
/// with dom(h) ⊗ dom(g) ⊗ dom(f) agree.
inline bool oplax_coherent(const FiniteFunction& f, const FiniteFunction& g, const FiniteFunction& h) {
  const auto& a = f.dom();
  const auto& b = g.dom();
  const auto& c = h.dom();
  auto one = compose_fn(dom_comparison(f, compose_fn(g, h)).comparison,
                        product_map(dom_comparison(g, h).comparison, FiniteFunction::identity(a)));
  auto two = compose_fn({dom_comparison(compose_fn(f, g), h).comparison,
                         product_map(FiniteFunction::identity(c), dom_comparison(f, g).comparison),
                         associator(c, b, a)});
  return one == two;
}

/// Δ_A ; (1_A × f) : A → A × B, coparametrised by A.
inline CoparaCell<FinSetCategory> copy_functor(const FiniteFunction& f) {
  ProductWitness w(f.dom(), f.cod());
  std::vector<Index> t(f.dom().size());
  for (Index a = 0; a < t.size(); ++a) t[a] = w.pair(a, f(a));
  return CoparaCell<FinSetCategory>{f.dom(), f.cod(), f.dom(), FiniteFunction(f.dom(), w.carrier(), std::move(t))};
}

/// The mediator a ↦ (a, f a) from copy(g ∘ f) to copy(f) ; copy(g).
inline Reparam2Cell<CoparaCell<FinSetCategory>> copy_comparison(const FiniteFunction& f, const FiniteFunction& g) {
  CartesianAction act;
  ProductWitness w(f.dom(), f.cod());
  std::vector<Index> t(f.dom().size());
  for (Index a = 0; a < t.size(); ++a) t[a] = w.pair(a, f(a));
  return {copy_functor(compose_fn(f, g)), copara_compose(copy_functor(f), copy_functor(g), act),
          FiniteFunction(f.dom(), w.carrier(), std::move(t))};
}

// --------------------------------------------------------------------------
// Mat_I(M)

template <BifibrationInstance B>
struct MatCell {
  FinSet rows;
  FinSet cols;
  typename B::Object entry;  // over rows × cols
};

template <BifibrationInstance B>
MatCell<B> make_mat_cell(const B& inst, FinSet rows, FinSet cols, typename B::Object entry) {
  if (inst.base_of(entry) != product(rows, cols)) throw ShapeError("MatCell: entry must live over rows × cols");
  return MatCell<B>{std::move(rows), std::move(cols), std::move(entry)};
}

/// π_IK!(π_IJ^* m • π_JK^* n).
template <BifibrationInstance B>
MatCell<B> mat_compose(const MatCell<B>& m, const MatCell<B>& n, const B& inst) {
  if (m.cols != n.rows) throw CompositionError("mat_compose: columns of the first differ from rows of the second");
  base::Triple t{m.rows, m.cols, n.cols};
  auto e = inst.pushforward(t.ik(), inst.tensor(inst.pullback(t.ij(), m.entry), inst.pullback(t.jk(), n.entry)));
  return MatCell<B>{m.rows, n.cols, std::move(e)};
}

/// Δ_!(1).
template <BifibrationInstance B>
MatCell<B> mat_unit(const B& inst, const FinSet& i) {
  return MatCell<B>{i, i, inst.pushforward(base::diagonal(i), inst.unit_object(i))};
}

// --------------------------------------------------------------------------
// The cubes

struct CubeFace {
  std::string face;
  std::vector<std::size_t> object_sizes;
  std::uint64_t left_count = 0;
  std::uint64_t right_count = 0;
  bool pass = false;
};

inline void to_json(json& j, const CubeFace& f) {
  j = json{{"face", f.face},
           {"object_sizes", f.object_sizes},
           {"left_count", f.left_count},
           {"right_count", f.right_count},
           {"pass", f.pass}};
}

struct CubeReport {
  LawReport law;
  std::vector<CubeFace> faces;
  bool experimental = false;

  bool passed() const noexcept { return law.passed(); }
};

inline void to_json(json& j, const CubeReport& r) {
  j = json{{"law", r.law}, {"faces", r.faces}, {"experimental", r.experimental}};
}

using CopyFn = CoparaCell<FinSetCategory> (*)(const FiniteFunction&);

/// Copy with the diagonal dropped: a ↦ (a₀, f a). Only a negative control.
inline CoparaCell<FinSetCategory> copy_without_diagonal(const FiniteFunction& f) {
  ProductWitness w(f.dom(), f.cod());
  std::vector<Index> t(f.dom().size());
  for (Index a = 0; a < t.size(); ++a) t[a] = w.pair(0, f(a));
  return CoparaCell<FinSetCategory>{f.dom(), f.cod(), f.dom(), FiniteFunction(f.dom(), w.carrier(), std::move(t))};
}

namespace detail {

/// put(x, y') = b(y', x).
inline FiniteFunction para_map_of_put(const Lens& l) {
  const auto& x = l.source().forward;
  const auto& yd = l.target().backward;
  ProductWitness in(yd, x);
  std::vector<Index> t(in.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [y, a] = in.unpair(k);
    t[k] = l.update(a, y);
  }
  return FiniteFunction(in.carrier(), l.source().backward, std::move(t));
}

}  // namespace detail

/// For every pair of boundaries of size <= size_bound, with residuals of size
/// <= size_bound:
///   bottom   copy(C(X, Y)) ×_dom Para(Y', X') at parameter X is in bijection with Lens
///   top      π0 of Copara(X, Y) ×_res Para(Y', X')^co has the lens count
///   vertical lens ↦ component of (copy(get), put) is a bijection
inline CubeReport check_cosmic_cube(std::size_t size_bound, CopyFn copy = &copy_functor,
                                    std::uint64_t ceiling = kDefaultCeiling) {
  CartesianAction act;
  CubeReport rep;
  rep.law.subject = "cosmic-cube";
  for (const auto& src : all_boundaries(size_bound))
    for (const auto& tgt : all_boundaries(size_bound)) {
      std::vector<std::size_t> sizes{src.forward.size(), src.backward.size(), tgt.forward.size(),
                                     tgt.backward.size()};
      auto lenses = count_lens_hom(src, tgt);
      const auto& x = src.forward;

      // bottom face
      std::map<std::pair<FiniteFunction, FiniteFunction>, int> seen;
      std::uint64_t bottom = 0;
      bool bottom_ok = true;
      auto puts = all_functions(product(tgt.backward, x), src.backward, ceiling);
      for (const auto& f : all_functions(x, tgt.forward, ceiling)) {
        auto cell = copy(f);
        if (cell.parameter != x) {
          bottom_ok = false;
          continue;
        }
        ProductWitness w(x, tgt.forward);
        auto get = compose_fn(cell.map, w.proj_right());
        for (const auto& b : puts) {
          ++bottom;
          if (++seen[{get, b}] > 1) bottom_ok = false;
        }
      }
      CubeFace bf{"bottom", sizes, bottom, lenses, bottom_ok && bottom == lenses};
      ++rep.law.checked;
      if (!bf.pass) rep.law.fail("bottom face", json(bf));
      rep.faces.push_back(bf);

      // top face
      auto left = copara_homcat(act, x, tgt.forward, size_bound, ceiling);
      auto right = para_homcat(act, tgt.backward, src.backward, size_bound, ceiling);
      auto pb = pullback_homcat(left, right, ceiling);
      auto ids = pi0_quotient(pb);
      auto comps = component_count(ids);
      CubeFace tf{"top", sizes, comps, lenses, comps == lenses};
      ++rep.law.checked;
      if (!tf.pass) rep.law.fail("top face", json(tf));
      rep.faces.push_back(tf);

      // vertical comparison
      std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
      for (std::size_t v = 0; v < pb.vertex_count(); ++v) index.emplace(pb.vertices[v], v);
      std::map<FiniteFunction, std::size_t> left_index, right_index;
      for (std::size_t a = 0; a < left.vertex_count(); ++a)
        if (left.residuals[a] == x) left_index.emplace(left.vertices[a].map, a);
      for (std::size_t b = 0; b < right.vertex_count(); ++b)
        if (right.residuals[b] == x) right_index.emplace(right.vertices[b].map, b);
      std::vector<char> hit(comps, 0);
      std::uint64_t distinct = 0;
      bool vertical_ok = true;
      for (const auto& l : enumerate_lens_hom(src, tgt, ceiling)) {
        auto a = left_index.find(copy(l.get()).map);
        auto b = right_index.find(detail::para_map_of_put(l));
        if (a == left_index.end() || b == right_index.end()) {
          vertical_ok = false;
          continue;
        }
        auto comp = ids[index.at({a->second, b->second})];
        if (hit[comp]) vertical_ok = false;
        else ++distinct;
        hit[comp] = 1;
      }
      CubeFace vf{"vertical", sizes, distinct, comps, vertical_ok && distinct == comps};
      ++rep.law.checked;
      if (!vf.pass) rep.law.fail("vertical comparison", json(vf));
      rep.faces.push_back(vf);
    }
  return rep;
}

namespace detail {

/// Components of a product of graphs whose edges move one coordinate at a
/// time. Moving several coordinates at once is a composite of such moves,
/// so the components are those of the full fibrewise pullback.
template <class H>
std::uint64_t product_components(const std::vector<const H*>& factors, std::uint64_t ceiling) {
  std::vector<std::size_t> radices;
  std::uint64_t total = 1;
  for (const auto* h : factors) {
    radices.push_back(h->vertex_count());
    auto t = checked_mul(total, h->vertex_count());
    if (!t || *t > ceiling) throw EnumerationLimit("dependent cube: fibrewise pullback exceeds the ceiling");
    total = *t;
  }
  if (total == 0) return 0;
  std::vector<std::uint64_t> stride(factors.size(), 1);
  for (std::size_t k = factors.size(); k-- > 1;) stride[k - 1] = stride[k] * radices[k];
  boost::disjoint_sets_with_storage<> sets(total);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    for (const auto& e : factors[k]->edges)
      for (std::uint64_t v = 0; v < total; ++v)
        if ((v / stride[k]) % radices[k] == e.from) sets.union_set(v, v + (e.to - e.from) * stride[k]);
  }
  std::uint64_t comps = 0;
  for (std::uint64_t v = 0; v < total; ++v)
    if (sets.find_set(v) == v) ++comps;
  return comps;
}

}  // namespace detail

/// Over each slice C/X ≅ C^X of a source container S = (X, X'), and each
/// choice of positions f : X → Y of the target T = (Y, Y'), builds fibrewise
/// Copara(1, 1) ×_res Para(Y'_{f x}, X'_x) with residual fibres of size
/// <= size_bound, takes π0 of the product over the fibres, and sums over f.
/// The total is compared with count_dlens_hom(S, T). Reports only.
inline CubeReport check_dependent_cube(std::size_t size_bound, std::uint64_t ceiling = kDefaultCeiling) {
  CartesianAction act;
  CubeReport rep;
  rep.experimental = true;
  rep.law.subject = "dependent-cube";
  FinSet one(1);
  auto copara = copara_homcat(act, one, one, size_bound, ceiling);
  std::map<std::pair<std::size_t, std::size_t>, HomCategory<std::pair<std::size_t, std::size_t>, FiniteFunction>>
      fibre_cache;
  auto fibre = [&](std::size_t yd, std::size_t xd) -> const HomCategory<std::pair<std::size_t, std::size_t>, FiniteFunction>& {
    auto it = fibre_cache.find({yd, xd});
    if (it != fibre_cache.end()) return it->second;
    auto para = para_homcat(act, FinSet(yd), FinSet(xd), size_bound, ceiling);
    return fibre_cache.emplace(std::pair{yd, xd}, pullback_homcat(copara, para, ceiling)).first->second;
  };
  for (const auto& s : all_containers(size_bound))
    for (const auto& t : all_containers(size_bound)) {
      std::uint64_t total = 0;
      for (const auto& f : all_functions(s.positions, t.positions, ceiling)) {
        std::vector<const HomCategory<std::pair<std::size_t, std::size_t>, FiniteFunction>*> factors;
        for (Index x = 0; x < s.positions.size(); ++x)
          factors.push_back(&fibre(t.directions[f(x)].size(), s.directions[x].size()));
        total += detail::product_components(factors, ceiling);
      }
      std::vector<std::size_t> sizes{s.positions.size()};
      for (const auto& d : s.directions) sizes.push_back(d.size());
      sizes.push_back(t.positions.size());
      for (const auto& d : t.directions) sizes.push_back(d.size());
      auto expected = count_dlens_hom(s, t);
      CubeFace face{"dependent", sizes, total, expected, total == expected};
      ++rep.law.checked;
      if (!face.pass) rep.law.fail("dependent face", json{{"source", s}, {"target", t}, {"face", face}});
      rep.faces.push_back(face);
    }
  return rep;
}

}  // namespace fiboptic
