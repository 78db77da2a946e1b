#pragma once

// Lenses over finite sets and dependent lenses (morphisms of containers).
// Dependent lenses are the normal form that every optic-level equivalence in
// this library is checked against.

#include <cstdint>
#include <string>
#include <vector>

#include "fiboptic/fincat.hpp"

namespace fiboptic {

/// A pair of objects: the forward (view) object and the backward (update) one.
struct Boundary {
  FinSet forward;
  FinSet backward;

  friend bool operator==(const Boundary&, const Boundary&) = default;
  friend auto operator<=>(const Boundary&, const Boundary&) = default;
};

inline void to_json(json& j, const Boundary& b) { j = json::array({b.forward, b.backward}); }
inline void from_json(const json& j, Boundary& b) {
  if (!j.is_array() || j.size() != 2) throw ShapeError("Boundary: expected a two-element array");
  b = Boundary{j[0].get<FinSet>(), j[1].get<FinSet>()};
}

inline std::string to_string(const Boundary& b) {
  return "(" + std::to_string(b.forward.size()) + "," + std::to_string(b.backward.size()) + ")";
}

// --------------------------------------------------------------------------
// Lens

class Lens {
 public:
  Lens() = default;
  Lens(Boundary source, Boundary target, FiniteFunction get, FiniteFunction put)
      : source_(std::move(source)), target_(std::move(target)), get_(std::move(get)), put_(std::move(put)) {
    if (get_.dom() != source_.forward || get_.cod() != target_.forward)
      throw ShapeError("Lens: get must map X to Y");
    if (put_.dom() != product(source_.forward, target_.backward) || put_.cod() != source_.backward)
      throw ShapeError("Lens: put must map X×Y' to X'");
  }

  static Lens identity(const Boundary& b) {
    ProductWitness w(b.forward, b.backward);
    return Lens(b, b, FiniteFunction::identity(b.forward), w.proj_right());
  }

  const Boundary& source() const noexcept { return source_; }
  const Boundary& target() const noexcept { return target_; }
  const FiniteFunction& get() const noexcept { return get_; }
  const FiniteFunction& put() const noexcept { return put_; }

  Index view(Index x) const { return get_(x); }
  Index update(Index x, Index y_dual) const {
    return put_(ProductWitness(source_.forward, target_.backward).pair(x, y_dual));
  }

  friend bool operator==(const Lens&, const Lens&) = default;

 private:
  Boundary source_;
  Boundary target_;
  FiniteFunction get_;
  FiniteFunction put_;
};

/// get = get1 ; get2 and put(x, z') = put1(x, put2(get1(x), z')).
inline Lens lens_compose(const Lens& l1, const Lens& l2) {
  if (l1.target() != l2.source())
    throw CompositionError("lens_compose: target " + to_string(l1.target()) + " differs from source " +
                           to_string(l2.source()));
  const auto& x = l1.source().forward;
  const auto& zd = l2.target().backward;
  ProductWitness w(x, zd);
  std::vector<Index> put(w.carrier().size());
  for (Index k = 0; k < put.size(); ++k) {
    auto [xi, z] = w.unpair(k);
    put[k] = l1.update(xi, l2.update(l1.view(xi), z));
  }
  return Lens(l1.source(), l2.target(), compose_fn(l1.get(), l2.get()),
              FiniteFunction(w.carrier(), l1.source().backward, std::move(put)));
}

/// |Y|^|X| · |X'|^(|X|·|Y'|).
inline std::uint64_t count_lens_hom(const Boundary& src, const Boundary& tgt) {
  auto gets = checked_pow(tgt.forward.size(), src.forward.size());
  auto puts = checked_pow(src.backward.size(), src.forward.size() * tgt.backward.size());
  if (!gets || !puts) throw EnumerationLimit("count_lens_hom: overflow");
  auto total = checked_mul(*gets, *puts);
  if (!total) throw EnumerationLimit("count_lens_hom: overflow");
  return *total;
}

inline std::vector<Lens> enumerate_lens_hom(const Boundary& src, const Boundary& tgt,
                                            std::uint64_t ceiling = kDefaultCeiling) {
  if (count_lens_hom(src, tgt) > ceiling) throw EnumerationLimit("enumerate_lens_hom: hom-set exceeds the ceiling");
  std::vector<Lens> out;
  auto gets = all_functions(src.forward, tgt.forward, ceiling);
  auto puts = all_functions(product(src.forward, tgt.backward), src.backward, ceiling);
  out.reserve(gets.size() * puts.size());
  for (const auto& g : gets)
    for (const auto& p : puts) out.emplace_back(src, tgt, g, p);
  return out;
}

inline void to_json(json& j, const Lens& l) {
  j = json{{"source", l.source()}, {"target", l.target()}, {"get", l.get()}, {"put", l.put()}};
}
inline void from_json(const json& j, Lens& l) {
  l = Lens(j.at("source").get<Boundary>(), j.at("target").get<Boundary>(), j.at("get").get<FiniteFunction>(),
           j.at("put").get<FiniteFunction>());
}

// --------------------------------------------------------------------------
// Containers and dependent lenses

struct Container {
  FinSet positions;
  std::vector<FinSet> directions;

  Container() = default;
  Container(FinSet positions_, std::vector<FinSet> directions_)
      : positions(std::move(positions_)), directions(std::move(directions_)) {
    if (directions.size() != positions.size()) throw ShapeError("Container: one direction set per position required");
  }

  /// Every position has the same direction set.
  static Container constant(const FinSet& positions, const FinSet& directions) {
    return Container(positions, std::vector<FinSet>(positions.size(), directions));
  }

  /// Total space Σ_a B(a) of the bundle presentation.
  SumLayout total() const { return SumLayout(directions); }

  friend bool operator==(const Container& a, const Container& b) {
    return a.positions == b.positions && a.directions == b.directions;
  }
  friend auto operator<=>(const Container& a, const Container& b) {
    if (auto c = a.positions <=> b.positions; c != 0) return c;
    return a.directions <=> b.directions;
  }
};

inline std::string to_string(const Container& c) {
  std::string s = "{";
  for (std::size_t a = 0; a < c.directions.size(); ++a) {
    if (a) s += ",";
    s += std::to_string(c.directions[a].size());
  }
  return s + "}";
}

inline void to_json(json& j, const Container& c) { j = json{{"positions", c.positions}, {"directions", c.directions}}; }
inline void from_json(const json& j, Container& c) {
  c = Container(j.at("positions").get<FinSet>(), j.at("directions").get<std::vector<FinSet>>());
}

class DepLens {
 public:
  DepLens() = default;
  DepLens(Container source, Container target, FiniteFunction forward, std::vector<FiniteFunction> backward)
      : source_(std::move(source)), target_(std::move(target)), forward_(std::move(forward)),
        backward_(std::move(backward)) {
    if (forward_.dom() != source_.positions || forward_.cod() != target_.positions)
      throw ShapeError("DepLens: forward must map source positions to target positions");
    if (backward_.size() != source_.positions.size()) throw ShapeError("DepLens: one backward map per position");
    for (Index a = 0; a < backward_.size(); ++a)
      if (backward_[a].dom() != target_.directions[forward_(a)] || backward_[a].cod() != source_.directions[a])
        throw ShapeError("DepLens: backward[" + std::to_string(a) + "] must map D(forward(a)) to B(a)");
  }

  static DepLens identity(const Container& c) {
    std::vector<FiniteFunction> back;
    for (const auto& d : c.directions) back.push_back(FiniteFunction::identity(d));
    return DepLens(c, c, FiniteFunction::identity(c.positions), std::move(back));
  }

  const Container& source() const noexcept { return source_; }
  const Container& target() const noexcept { return target_; }
  const FiniteFunction& forward() const noexcept { return forward_; }
  const std::vector<FiniteFunction>& backward() const noexcept { return backward_; }

  friend bool operator==(const DepLens&, const DepLens&) = default;

 private:
  Container source_;
  Container target_;
  FiniteFunction forward_;
  std::vector<FiniteFunction> backward_;
};

inline DepLens dlens_compose(const DepLens& d1, const DepLens& d2) {
  if (d1.target() != d2.source())
    throw CompositionError("dlens_compose: target container " + to_string(d1.target()) +
                           " differs from source container " + to_string(d2.source()));
  std::vector<FiniteFunction> back;
  back.reserve(d1.backward().size());
  for (Index a = 0; a < d1.backward().size(); ++a)
    back.push_back(compose_fn(d2.backward()[d1.forward()(a)], d1.backward()[a]));
  return DepLens(d1.source(), d2.target(), compose_fn(d1.forward(), d2.forward()), std::move(back));
}

/// Π_{a∈A} Σ_{c∈C} |B(a)|^|D(c)|.
inline std::uint64_t count_dlens_hom(const Container& src, const Container& tgt) {
  std::uint64_t total = 1;
  for (const auto& b : src.directions) {
    std::uint64_t choices = 0;
    for (const auto& d : tgt.directions) {
      auto p = checked_pow(b.size(), d.size());
      if (!p) throw EnumerationLimit("count_dlens_hom: overflow");
      auto s = checked_add(choices, *p);
      if (!s) throw EnumerationLimit("count_dlens_hom: overflow");
      choices = *s;
    }
    auto t = checked_mul(total, choices);
    if (!t) throw EnumerationLimit("count_dlens_hom: overflow");
    total = *t;
  }
  return total;
}

/// Every dependent lens src -> tgt, forward maps in table order, then
/// backward maps position by position.
inline std::vector<DepLens> enumerate_dlens_hom(const Container& src, const Container& tgt,
                                                std::uint64_t ceiling = kDefaultCeiling) {
  if (count_dlens_hom(src, tgt) > ceiling) throw EnumerationLimit("enumerate_dlens_hom: hom-set exceeds the ceiling");
  std::vector<DepLens> out;
  // backward candidates for (position a, target position c)
  std::vector<std::vector<std::vector<FiniteFunction>>> cand(src.positions.size());
  for (Index a = 0; a < src.positions.size(); ++a)
    for (Index c = 0; c < tgt.positions.size(); ++c)
      cand[a].push_back(all_functions(tgt.directions[c], src.directions[a], ceiling));

  for (const auto& fwd : all_functions(src.positions, tgt.positions, ceiling)) {
    std::vector<std::size_t> radices;
    for (Index a = 0; a < src.positions.size(); ++a) radices.push_back(cand[a][fwd(a)].size());
    for_each_tuple(radices, [&](const std::vector<Index>& pick) {
      std::vector<FiniteFunction> back;
      back.reserve(pick.size());
      for (Index a = 0; a < pick.size(); ++a) back.push_back(cand[a][fwd(a)][pick[a]]);
      out.emplace_back(src, tgt, fwd, std::move(back));
    });
  }
  return out;
}

/// Positions X with constant directions X', and likewise for the target.
inline DepLens lens_to_dlens(const Lens& l) {
  auto src = Container::constant(l.source().forward, l.source().backward);
  auto tgt = Container::constant(l.target().forward, l.target().backward);
  std::vector<FiniteFunction> back;
  for (Index x = 0; x < l.source().forward.size(); ++x) {
    std::vector<Index> t(l.target().backward.size());
    for (Index yd = 0; yd < t.size(); ++yd) t[yd] = l.update(x, yd);
    back.emplace_back(l.target().backward, l.source().backward, std::move(t));
  }
  return DepLens(src, tgt, l.get(), std::move(back));
}

inline void to_json(json& j, const DepLens& d) {
  j = json{{"source", d.source()}, {"target", d.target()}, {"forward", d.forward()}, {"backward", d.backward()}};
}
inline void from_json(const json& j, DepLens& d) {
  d = DepLens(j.at("source").get<Container>(), j.at("target").get<Container>(),
              j.at("forward").get<FiniteFunction>(), j.at("backward").get<std::vector<FiniteFunction>>());
}

// --------------------------------------------------------------------------
// Enumerable instances for the law checker

/// All boundaries (X, X') with |X|, |X'| <= bound.
inline std::vector<Boundary> all_boundaries(std::size_t bound) {
  std::vector<Boundary> out;
  for (std::size_t x = 0; x <= bound; ++x)
    for (std::size_t xd = 0; xd <= bound; ++xd) out.push_back({FinSet(x), FinSet(xd)});
  return out;
}

/// All containers with at most `bound` positions and direction sets of size <= bound.
inline std::vector<Container> all_containers(std::size_t bound) {
  std::vector<Container> out;
  for (std::size_t n = 0; n <= bound; ++n) {
    std::vector<std::size_t> radices(n, bound + 1);
    for_each_tuple(radices, [&](const std::vector<Index>& sizes) {
      std::vector<FinSet> dirs;
      for (auto s : sizes) dirs.emplace_back(s);
      out.emplace_back(FinSet(n), std::move(dirs));
    });
  }
  return out;
}

struct LensCategory {
  using Object = Boundary;
  using Morphism = Lens;
  std::uint64_t ceiling = kDefaultCeiling;

  std::vector<Boundary> objects(std::size_t bound) const { return all_boundaries(bound); }
  std::vector<Lens> homs(const Boundary& a, const Boundary& b) const { return enumerate_lens_hom(a, b, ceiling); }
  Lens identity(const Boundary& a) const { return Lens::identity(a); }
  Lens compose(const Lens& f, const Lens& g) const { return lens_compose(f, g); }
  bool equal(const Lens& f, const Lens& g) const { return f == g; }
};

struct DepLensCategory {
  using Object = Container;
  using Morphism = DepLens;
  std::uint64_t ceiling = kDefaultCeiling;

  std::vector<Container> objects(std::size_t bound) const { return all_containers(bound); }
  std::vector<DepLens> homs(const Container& a, const Container& b) const {
    return enumerate_dlens_hom(a, b, ceiling);
  }
  DepLens identity(const Container& a) const { return DepLens::identity(a); }
  DepLens compose(const DepLens& f, const DepLens& g) const { return dlens_compose(f, g); }
  bool equal(const DepLens& f, const DepLens& g) const { return f == g; }
};

}  // namespace fiboptic
