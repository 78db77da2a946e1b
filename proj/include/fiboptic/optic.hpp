#pragma once

// Mixed optics over the self-action of a base category on itself by the
// monoidal product: m • y = m × y (residual first) and y' • m = y' × m.
// Optics are stored as explicit representatives; the coend quotient is the
// connected-component relation of the sliding graph.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/pending/disjoint_sets.hpp>

#include "fiboptic/fincat.hpp"
#include "fiboptic/laws.hpp"
#include "fiboptic/lens.hpp"

namespace fiboptic {

/// z × (m × n) → (z × n) × m, the right-action multiplicator after the
/// parameters have been reordered for the backward pass of a composite.
inline FiniteFunction right_multiplicator_fn(const FinSet& z, const FinSet& m, const FinSet& n) {
  ProductWitness mn(m, n), lhs(z, mn.carrier());
  ProductWitness zn(z, n), rhs(zn.carrier(), m);
  std::vector<Index> t(lhs.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [zi, p] = lhs.unpair(k);
    auto [a, b] = mn.unpair(p);
    t[k] = rhs.pair(zn.pair(zi, b), a);
  }
  return FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(t));
}

/// The action of a base category on itself by its monoidal product, with the
/// coherence isomorphisms as concrete morphisms.
template <class Cat>
struct SelfAction {
  using Category = Cat;
  using Morphism = typename Cat::Morphism;
  static constexpr bool cartesian = Cat::cartesian;

  Cat cat{};

  std::string_view name() const { return Cat::name; }

  FinSet unit() const { return FinSet(1); }
  FinSet tensor(const FinSet& m, const FinSet& n) const { return product(m, n); }
  FinSet left(const FinSet& m, const FinSet& y) const { return product(m, y); }
  FinSet right(const FinSet& y, const FinSet& m) const { return product(y, m); }

  /// r • y : m • y → n • y
  Morphism left_map(const Morphism& r, const FinSet& y) const { return cat.tensor(r, cat.identity(y)); }
  /// m • g
  Morphism left_apply(const FinSet& m, const Morphism& g) const { return cat.tensor(cat.identity(m), g); }
  /// y' • r : y' • m → y' • n
  Morphism right_map(const FinSet& y, const Morphism& r) const { return cat.tensor(cat.identity(y), r); }
  /// g • m
  Morphism right_apply(const Morphism& g, const FinSet& m) const { return cat.tensor(g, cat.identity(m)); }

  /// m • (n • z) → (m ⊗ n) • z
  Morphism multiplicator(const FinSet& m, const FinSet& n, const FinSet& z) const {
    return cat.lift(associator(m, n, z));
  }
  /// z • (m ⊗ n) → (z • n) • m
  Morphism right_multiplicator(const FinSet& z, const FinSet& m, const FinSet& n) const {
    return cat.lift(right_multiplicator_fn(z, m, n));
  }
  /// x → I • x
  Morphism left_unitor_inv(const FinSet& x) const { return cat.lift(left_unitor(x).inverse()); }
  /// x' • I → x'
  Morphism right_unitor(const FinSet& x) const { return cat.lift(fiboptic::right_unitor(x)); }
};

using CartesianAction = SelfAction<FinSetCategory>;
using StochasticAction = SelfAction<KernelCategory>;

/// Coherence isomorphisms are invertible and m • - is functorial, on every
/// object and morphism of size <= bound.
template <class Cat>
LawReport check_action_laws(const SelfAction<Cat>& act, std::size_t bound) {
  LawReport report;
  report.subject = std::string("action/") + std::string(Cat::name);
  auto objs = act.cat.objects(bound);
  for (const auto& m : objs)
    for (const auto& n : objs)
      for (const auto& z : objs) {
        ++report.checked;
        if (!associator(m, n, z).bijective())
          report.fail("multiplicator invertible", json{{"sizes", {m.size(), n.size(), z.size()}}});
        if (!right_multiplicator_fn(z, m, n).bijective())
          report.fail("right multiplicator invertible", json{{"sizes", {z.size(), m.size(), n.size()}}});
      }
  for (const auto& m : objs)
    for (const auto& a : objs)
      for (const auto& b : objs) {
        auto fs = act.cat.homs(a, b);
        for (const auto& c : objs) {
          auto gs = act.cat.homs(b, c);
          if (fs.size() * gs.size() > 4096) continue;
          for (const auto& f : fs)
            for (const auto& g : gs) {
              ++report.checked;
              if (!act.cat.equal(act.left_apply(m, act.cat.compose(f, g)),
                                 act.cat.compose(act.left_apply(m, f), act.left_apply(m, g))))
                report.fail("left action functorial", json{{"m", m}, {"f", f}, {"g", g}});
              if (!act.cat.equal(act.right_apply(act.cat.compose(f, g), m),
                                 act.cat.compose(act.right_apply(f, m), act.right_apply(g, m))))
                report.fail("right action functorial", json{{"m", m}, {"f", f}, {"g", g}});
            }
        }
      }
  return report;
}

// --------------------------------------------------------------------------
// Optic

template <class Cat>
struct Optic {
  using Morphism = typename Cat::Morphism;

  Boundary source;
  Boundary target;
  FinSet residual;
  Morphism forward;   // X → M • Y
  Morphism backward;  // Y' • M → X'

  Optic() = default;
  Optic(Boundary source_, Boundary target_, FinSet residual_, Morphism forward_, Morphism backward_)
      : source(std::move(source_)), target(std::move(target_)), residual(std::move(residual_)),
        forward(std::move(forward_)), backward(std::move(backward_)) {
    if (forward.dom() != source.forward || forward.cod() != product(residual, target.forward))
      throw ShapeError("Optic: forward must map X to M•Y");
    if (backward.dom() != product(target.backward, residual) || backward.cod() != source.backward)
      throw ShapeError("Optic: backward must map Y'•M to X'");
  }

  friend bool operator==(const Optic& a, const Optic& b) {
    return a.source == b.source && a.target == b.target && a.residual == b.residual && a.forward == b.forward &&
           a.backward == b.backward;
  }
};

template <class Cat>
void to_json(json& j, const Optic<Cat>& o) {
  j = json{{"source", o.source},     {"target", o.target},    {"residual", o.residual},
           {"forward", o.forward}, {"backward", o.backward}};
}
template <class Cat>
void from_json(const json& j, Optic<Cat>& o) {
  using M = typename Cat::Morphism;
  o = Optic<Cat>(j.at("source").get<Boundary>(), j.at("target").get<Boundary>(), j.at("residual").get<FinSet>(),
                 j.at("forward").get<M>(), j.at("backward").get<M>());
}

template <class Cat>
Optic<Cat> identity_optic(const SelfAction<Cat>& act, const Boundary& b) {
  return Optic<Cat>(b, b, act.unit(), act.left_unitor_inv(b.forward), act.right_unitor(b.backward));
}

/// Residual M ⊗ N. forward = f1 ; (M • f2) ; multiplicator,
/// backward = right multiplicator ; (b2 • M) ; b1.
template <class Cat>
Optic<Cat> optic_compose(const Optic<Cat>& o1, const Optic<Cat>& o2, const SelfAction<Cat>& act) {
  if (o1.target != o2.source)
    throw CompositionError("optic_compose: target " + to_string(o1.target) + " differs from source " +
                           to_string(o2.source));
  const auto& c = act.cat;
  const auto& m = o1.residual;
  const auto& n = o2.residual;
  const auto& z = o2.target;
  auto fwd = c.compose(c.compose(o1.forward, act.left_apply(m, o2.forward)), act.multiplicator(m, n, z.forward));
  auto bwd = c.compose(c.compose(act.right_multiplicator(z.backward, m, n), act.right_apply(o2.backward, m)),
                       o1.backward);
  return Optic<Cat>(o1.source, o2.target, act.tensor(m, n), std::move(fwd), std::move(bwd));
}

/// A generating 2-cell of the coend: from = (M, f, (Y'•r) ; b), to = (N, f ; (r•Y), b).
template <class Cat>
struct SlidingEdge {
  Optic<Cat> from;
  Optic<Cat> to;
  typename Cat::Morphism mediator;
};

template <class Cat>
void to_json(json& j, const SlidingEdge<Cat>& e) {
  j = json{{"from", e.from}, {"to", e.to}, {"mediator", e.mediator}};
}

template <class Cat>
bool is_sliding_edge(const SelfAction<Cat>& act, const SlidingEdge<Cat>& e) {
  const auto& c = act.cat;
  const auto& r = e.mediator;
  if (e.from.source != e.to.source || e.from.target != e.to.target) return false;
  if (r.dom() != e.from.residual || r.cod() != e.to.residual) return false;
  return c.equal(e.to.forward, c.compose(e.from.forward, act.left_map(r, e.from.target.forward))) &&
         c.equal(e.from.backward, c.compose(act.right_map(e.from.target.backward, r), e.to.backward));
}

enum class SlideDirection { forward, backward };

/// Follows the sliding edge generated by r. Forward: o sits at the `from` end
/// (residual = dom r) and the backward part of the result is the least
/// solution of (Y'•r) ; b' = o.backward. Backward: o sits at the `to` end
/// (residual = cod r) and the forward part is the least f with f ; (r•Y) = o.forward.
/// Throws ShapeError if no such solution exists.
template <class Cat>
Optic<Cat> slide(const Optic<Cat>& o, const typename Cat::Morphism& r, SlideDirection direction,
                 const SelfAction<Cat>& act) {
  const auto& c = act.cat;
  const auto& y = o.target;
  if (direction == SlideDirection::forward) {
    if (r.dom() != o.residual) throw CompositionError("slide: mediator domain differs from the residual");
    auto b = c.factor_after(o.backward, act.right_map(y.backward, r));
    if (!b) throw ShapeError("slide: backward part does not factor through Y'•r");
    return Optic<Cat>(o.source, o.target, r.cod(), c.compose(o.forward, act.left_map(r, y.forward)), *b);
  }
  if (r.cod() != o.residual) throw CompositionError("slide: mediator codomain differs from the residual");
  auto f = c.lift_through(o.forward, act.left_map(r, y.forward));
  if (!f) throw ShapeError("slide: forward part does not lift through r•Y");
  return Optic<Cat>(o.source, o.target, r.dom(), *f, c.compose(act.right_map(y.backward, r), o.backward));
}

// --------------------------------------------------------------------------
// Normal forms for the cartesian action

/// get = f ; π_Y, put(x, y') = b(y', π_M f(x)).
template <class Cat>
Lens normalize_cartesian(const Optic<Cat>& o) {
  if constexpr (!Cat::cartesian) {
    throw UnsupportedInstance("normalize_cartesian: the action is not the cartesian self-action of FinSet");
  } else {
    ProductWitness my(o.residual, o.target.forward);
    ProductWitness ym(o.target.backward, o.residual);
    ProductWitness xy(o.source.forward, o.target.backward);
    std::vector<Index> get(o.source.forward.size()), put(xy.carrier().size());
    for (Index x = 0; x < get.size(); ++x) {
      auto [m, y] = my.unpair(o.forward(x));
      get[x] = y;
      for (Index yd = 0; yd < o.target.backward.size(); ++yd) put[xy.pair(x, yd)] = o.backward(ym.pair(yd, m));
    }
    return Lens(o.source, o.target, FiniteFunction(o.source.forward, o.target.forward, std::move(get)),
                FiniteFunction(xy.carrier(), o.source.backward, std::move(put)));
  }
}

/// The optic of a lens with residual X: forward x ↦ (x, get x), backward (y', x) ↦ put(x, y').
inline Optic<FinSetCategory> lens_to_optic(const Lens& l) {
  const auto& x = l.source().forward;
  ProductWitness xy(x, l.target().forward);
  ProductWitness yx(l.target().backward, x);
  std::vector<Index> fwd(x.size()), bwd(yx.carrier().size());
  for (Index i = 0; i < x.size(); ++i) fwd[i] = xy.pair(i, l.view(i));
  for (Index k = 0; k < bwd.size(); ++k) {
    auto [yd, i] = yx.unpair(k);
    bwd[k] = l.update(i, yd);
  }
  return Optic<FinSetCategory>(l.source(), l.target(), x, FiniteFunction(x, xy.carrier(), std::move(fwd)),
                               FiniteFunction(yx.carrier(), l.source().backward, std::move(bwd)));
}

// --------------------------------------------------------------------------
// Sliding graph

/// An enumerated hom-set with index lookup. FiniteFunction hom-sets are
/// indexed arithmetically (all_functions order); others by a sorted map.
template <class Cat>
class HomSet {
 public:
  using Morphism = typename Cat::Morphism;

  HomSet(const Cat& cat, FinSet dom, FinSet cod) : dom_(std::move(dom)), cod_(std::move(cod)) {
    items_ = cat.homs(dom_, cod_);
    if constexpr (!std::is_same_v<Morphism, FiniteFunction>)
      for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i], i);
  }

  std::size_t size() const noexcept { return items_.size(); }
  const Morphism& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<Morphism>& items() const noexcept { return items_; }

  std::optional<std::size_t> find(const Morphism& m) const {
    if (m.dom() != dom_ || m.cod() != cod_) return std::nullopt;
    if constexpr (std::is_same_v<Morphism, FiniteFunction>) {
      std::size_t idx = 0;
      for (auto v : m.table()) idx = idx * cod_.size() + v;
      return idx;
    } else {
      auto it = index_.find(m);
      if (it == index_.end()) return std::nullopt;
      return it->second;
    }
  }

 private:
  FinSet dom_;
  FinSet cod_;
  std::vector<Morphism> items_;
  std::map<Morphism, std::size_t> index_;
};

/// All optics src → tgt with residual size <= bound (one FinSet per size),
/// joined by every sliding edge whose endpoints both lie in that universe.
template <class Cat>
class SlidingGraph {
 public:
  using Morphism = typename Cat::Morphism;

  SlidingGraph(SelfAction<Cat> act, Boundary src, Boundary tgt, std::size_t residual_bound,
               std::uint64_t ceiling = kDefaultCeiling, bool keep_edges = true)
      : act_(std::move(act)), src_(std::move(src)), tgt_(std::move(tgt)), bound_(residual_bound) {
    const auto& c = act_.cat;
    for (std::size_t m = 0; m <= bound_; ++m) {
      FinSet res(m);
      Level level{res, HomSet<Cat>(c, src_.forward, act_.left(res, tgt_.forward)),
                  HomSet<Cat>(c, act_.right(tgt_.backward, res), src_.backward), vertex_count_};
      auto count = checked_mul(level.fwd.size(), level.bwd.size());
      if (!count) throw EnumerationLimit("SlidingGraph: vertex count overflow");
      vertex_count_ += *count;
      if (vertex_count_ > ceiling) throw EnumerationLimit("SlidingGraph: vertex count exceeds the ceiling");
      levels_.push_back(std::move(level));
    }

    boost::disjoint_sets_with_storage<> sets(vertex_count_);
    for (std::size_t m = 0; m <= bound_; ++m)
      for (std::size_t n = 0; n <= bound_; ++n) {
        const auto& lm = levels_[m];
        const auto& ln = levels_[n];
        auto& meds = mediators_.emplace(std::pair{m, n}, HomSet<Cat>(c, lm.residual, ln.residual)).first->second;
        for (std::size_t ri = 0; ri < meds.size(); ++ri) {
          const auto& r = meds[ri];
          auto ry = act_.left_map(r, tgt_.forward);
          auto yr = act_.right_map(tgt_.backward, r);
          // b' at the `to` end determines b = (Y'•r) ; b' at the `from` end
          std::vector<std::optional<std::size_t>> pulled(ln.bwd.size());
          for (std::size_t bi = 0; bi < ln.bwd.size(); ++bi) pulled[bi] = lm.bwd.find(c.compose(yr, ln.bwd[bi]));
          for (std::size_t fi = 0; fi < lm.fwd.size(); ++fi) {
            auto pushed = ln.fwd.find(c.compose(lm.fwd[fi], ry));
            if (!pushed) continue;
            for (std::size_t bi = 0; bi < ln.bwd.size(); ++bi) {
              if (!pulled[bi]) continue;
              auto u = lm.offset + fi * lm.bwd.size() + *pulled[bi];
              auto v = ln.offset + *pushed * ln.bwd.size() + bi;
              ++edge_count_;
              sets.union_set(u, v);
              if (keep_edges) {
                if (edges_.size() >= 16 * ceiling) throw EnumerationLimit("SlidingGraph: edge count exceeds the ceiling");
                edges_.push_back({u, v, m, n, ri});
              }
            }
          }
        }
      }

    component_.assign(vertex_count_, 0);
    std::map<std::size_t, std::size_t> ids;
    for (std::size_t v = 0; v < vertex_count_; ++v) {
      auto root = sets.find_set(v);
      auto [it, fresh] = ids.emplace(root, ids.size());
      component_[v] = it->second;
    }
    component_count_ = ids.size();
    edges_kept_ = keep_edges;
  }

  const Boundary& source() const noexcept { return src_; }
  const Boundary& target() const noexcept { return tgt_; }
  std::size_t residual_bound() const noexcept { return bound_; }
  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::uint64_t edge_count() const noexcept { return edge_count_; }
  std::size_t component_count() const noexcept { return component_count_; }
  const std::vector<std::size_t>& components() const noexcept { return component_; }

  /// Vertices with residual of size m.
  std::size_t level_size(std::size_t m) const { return levels_.at(m).fwd.size() * levels_.at(m).bwd.size(); }

  std::optional<std::size_t> vertex_of(const Optic<Cat>& o) const {
    if (o.source != src_ || o.target != tgt_ || o.residual.size() > bound_) return std::nullopt;
    const auto& l = levels_[o.residual.size()];
    auto fi = l.fwd.find(o.forward);
    auto bi = l.bwd.find(o.backward);
    if (!fi || !bi) return std::nullopt;
    return l.offset + *fi * l.bwd.size() + *bi;
  }

  Optic<Cat> optic_at(std::size_t v) const {
    for (std::size_t m = levels_.size(); m-- > 0;) {
      const auto& l = levels_[m];
      if (v >= l.offset && v < l.offset + l.fwd.size() * l.bwd.size()) {
        auto k = v - l.offset;
        return Optic<Cat>(src_, tgt_, l.residual, l.fwd[k / l.bwd.size()], l.bwd[k % l.bwd.size()]);
      }
    }
    throw ShapeError("SlidingGraph::optic_at: vertex out of range");
  }

  /// Shortest chain of sliding edges from u to v (edges may be walked in
  /// either orientation; each is reported as stored). Empty if u == v or
  /// the vertices are disconnected.
  std::vector<SlidingEdge<Cat>> path(std::size_t u, std::size_t v) const {
    if (!edges_kept_) throw Error("SlidingGraph::path: edges were not kept");
    if (u == v || component_[u] != component_[v]) return {};
    std::vector<std::vector<std::size_t>> adj(vertex_count_);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      adj[edges_[e].u].push_back(e);
      adj[edges_[e].v].push_back(e);
    }
    std::vector<std::size_t> via(vertex_count_, SIZE_MAX);
    std::vector<bool> seen(vertex_count_, false);
    std::deque<std::size_t> queue{u};
    seen[u] = true;
    while (!queue.empty() && !seen[v]) {
      auto w = queue.front();
      queue.pop_front();
      for (auto e : adj[w]) {
        auto other = edges_[e].u == w ? edges_[e].v : edges_[e].u;
        if (seen[other]) continue;
        seen[other] = true;
        via[other] = e;
        queue.push_back(other);
      }
    }
    std::vector<SlidingEdge<Cat>> out;
    for (auto w = v; w != u;) {
      const auto& e = edges_[via[w]];
      out.push_back({optic_at(e.u), optic_at(e.v), mediators_.at({e.m, e.n})[e.r]});
      w = e.u == w ? e.v : e.u;
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Level {
    FinSet residual;
    HomSet<Cat> fwd;
    HomSet<Cat> bwd;
    std::size_t offset;
  };
  struct Edge {
    std::size_t u, v, m, n, r;
  };

  SelfAction<Cat> act_;
  Boundary src_;
  Boundary tgt_;
  std::size_t bound_;
  std::vector<Level> levels_;
  std::map<std::pair<std::size_t, std::size_t>, HomSet<Cat>> mediators_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> component_;
  std::size_t vertex_count_ = 0;
  std::uint64_t edge_count_ = 0;
  std::size_t component_count_ = 0;
  bool edges_kept_ = true;
};

enum class Verdict { equivalent, inequivalent, not_connected_within_bound };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::equivalent: return "equivalent";
    case Verdict::inequivalent: return "inequivalent";
    case Verdict::not_connected_within_bound: return "not_connected_within_bound";
  }
  return "?";
}

template <class Cat>
struct EquivalenceReport {
  Verdict verdict;
  std::vector<SlidingEdge<Cat>> path;
  std::size_t vertices = 0;
  std::size_t components = 0;

  bool equivalent() const noexcept { return verdict == Verdict::equivalent; }
};

template <class Cat>
void to_json(json& j, const EquivalenceReport<Cat>& r) {
  j = json{{"verdict", to_string(r.verdict)}, {"vertices", r.vertices}, {"components", r.components}};
  if (r.verdict == Verdict::equivalent) j["path"] = r.path;
}

/// Decides whether o1 and o2 are connected by sliding edges among optics with
/// residual size <= residual_bound. A negative answer is definitive only for
/// the cartesian action with residual_bound >= |X|, where the classes are
/// exactly the lenses.
template <class Cat>
EquivalenceReport<Cat> optic_equiv(const Optic<Cat>& o1, const Optic<Cat>& o2, std::size_t residual_bound,
                                   const SelfAction<Cat>& act = {}, std::uint64_t ceiling = kDefaultCeiling) {
  if (o1.source != o2.source || o1.target != o2.target)
    throw ShapeError("optic_equiv: optics have different boundaries");
  if (o1.residual.size() > residual_bound || o2.residual.size() > residual_bound)
    throw ShapeError("optic_equiv: residual exceeds residual_bound");
  SlidingGraph<Cat> g(act, o1.source, o1.target, residual_bound, ceiling);
  auto u = g.vertex_of(o1), v = g.vertex_of(o2);
  if (!u || !v) throw ShapeError("optic_equiv: optic lies outside the enumerated universe");
  EquivalenceReport<Cat> out{Verdict::not_connected_within_bound, {}, g.vertex_count(), g.component_count()};
  if (g.components()[*u] == g.components()[*v]) {
    out.verdict = Verdict::equivalent;
    out.path = g.path(*u, *v);
  } else if constexpr (Cat::cartesian) {
    if (residual_bound >= o1.source.forward.size()) out.verdict = Verdict::inequivalent;
  }
  return out;
}

}  // namespace fiboptic
