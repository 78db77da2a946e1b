#pragma once

// Fibre optics over Beck–Chevalley monoidal bifibrations on FinSet. Two
// instances: families of finite sets (Fam) and finite bundles with Markov
// kernels between them (DMark). The composite of fibre optics is assembled
// from a small set of primitive isomorphisms supplied by the instance; the
// Beck–Chevalley mate and the Frobenius maps are derived from the adjunction.

#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fiboptic/fincat.hpp"
#include "fiboptic/indexed.hpp"
#include "fiboptic/laws.hpp"

namespace fiboptic {

// --------------------------------------------------------------------------
// Base maps

namespace base {

inline std::vector<std::vector<Index>> preimages(const FiniteFunction& f) {
  std::vector<std::vector<Index>> out(f.cod().size());
  for (Index i = 0; i < f.dom().size(); ++i) out[f(i)].push_back(i);
  return out;
}

inline FiniteFunction proj_left(const FinSet& i, const FinSet& j) { return ProductWitness(i, j).proj_left(); }
inline FiniteFunction proj_right(const FinSet& i, const FinSet& j) { return ProductWitness(i, j).proj_right(); }

inline FiniteFunction diagonal(const FinSet& i) {
  ProductWitness p(i, i);
  std::vector<Index> t(i.size());
  for (Index a = 0; a < t.size(); ++a) t[a] = p.pair(a, a);
  return FiniteFunction(i, p.carrier(), std::move(t));
}

/// The projections out of I×J×K (row-major, i slowest) onto pairs of factors.
struct Triple {
  FinSet i, j, k;

  FinSet carrier() const { return FinSet(i.size() * j.size() * k.size()); }

  std::tuple<Index, Index, Index> unpack(Index t) const {
    auto jk = j.size() * k.size();
    return {t / jk, (t % jk) / k.size(), t % k.size()};
  }

  FiniteFunction to(const FinSet& a, const FinSet& b, int first, int second) const {
    std::vector<Index> t(carrier().size());
    for (Index e = 0; e < t.size(); ++e) {
      auto [x, y, z] = unpack(e);
      Index c[3] = {x, y, z};
      t[e] = c[first] * b.size() + c[second];
    }
    return FiniteFunction(carrier(), product(a, b), std::move(t));
  }

  FiniteFunction ij() const { return to(i, j, 0, 1); }
  FiniteFunction jk() const { return to(j, k, 1, 2); }
  FiniteFunction ik() const { return to(i, k, 0, 2); }
};

}  // namespace base

// --------------------------------------------------------------------------
// Fam: the fibre over I is [I, FinSet]

struct FamObject {
  FinSet base;
  std::vector<FinSet> family;

  FamObject() = default;
  FamObject(FinSet base_, std::vector<FinSet> family_) : base(std::move(base_)), family(std::move(family_)) {
    if (family.size() != base.size()) throw ShapeError("FamObject: one component per base element required");
  }

  friend bool operator==(const FamObject& a, const FamObject& b) {
    return a.base == b.base && a.family == b.family;
  }
};

inline void to_json(json& j, const FamObject& x) { j = json{{"base", x.base}, {"family", x.family}}; }
inline void from_json(const json& j, FamObject& x) {
  x = FamObject(j.at("base").get<FinSet>(), j.at("family").get<std::vector<FinSet>>());
}

struct FamMorphism {
  FamObject dom;
  FamObject cod;
  std::vector<FiniteFunction> components;

  FamMorphism() = default;
  FamMorphism(FamObject dom_, FamObject cod_, std::vector<FiniteFunction> components_)
      : dom(std::move(dom_)), cod(std::move(cod_)), components(std::move(components_)) {
    if (dom.base != cod.base) throw ShapeError("FamMorphism: fibre morphisms live over a single base");
    if (components.size() != dom.base.size()) throw ShapeError("FamMorphism: one component per base element");
    for (Index i = 0; i < components.size(); ++i)
      if (components[i].dom() != dom.family[i] || components[i].cod() != cod.family[i])
        throw ShapeError("FamMorphism: component " + std::to_string(i) + " has the wrong endpoints");
  }

  friend bool operator==(const FamMorphism& a, const FamMorphism& b) {
    return a.dom == b.dom && a.cod == b.cod && a.components == b.components;
  }
};

inline void to_json(json& j, const FamMorphism& m) {
  j = json{{"dom", m.dom}, {"cod", m.cod}, {"components", m.components}};
}
inline void from_json(const json& j, FamMorphism& m) {
  m = FamMorphism(j.at("dom").get<FamObject>(), j.at("cod").get<FamObject>(),
                  j.at("components").get<std::vector<FiniteFunction>>());
}

struct FamInstance {
  using Object = FamObject;
  using Morphism = FamMorphism;
  static constexpr std::string_view name = "fam";

  std::uint64_t ceiling = kDefaultCeiling;

  const FinSet& base_of(const Object& x) const { return x.base; }
  const Object& dom(const Morphism& m) const { return m.dom; }
  const Object& cod(const Morphism& m) const { return m.cod; }

  std::vector<Object> fibre_objects(const FinSet& base, std::size_t bound) const {
    std::vector<Object> out;
    std::vector<std::size_t> radices(base.size(), bound + 1);
    if (radices.empty()) return {Object(base, {})};
    for_each_tuple(radices, [&](const std::vector<Index>& t) {
      std::vector<FinSet> f;
      for (auto s : t) f.emplace_back(s);
      out.emplace_back(base, std::move(f));
    });
    return out;
  }

  std::vector<Morphism> homs(const Object& a, const Object& b) const {
    if (a.base != b.base) throw ShapeError("FamInstance::homs: objects over different bases");
    std::vector<std::vector<FiniteFunction>> per;
    std::vector<std::size_t> radices;
    std::uint64_t total = 1;
    for (Index i = 0; i < a.base.size(); ++i) {
      per.push_back(all_functions(a.family[i], b.family[i], ceiling));
      radices.push_back(per.back().size());
      auto t = checked_mul(total, per.back().size());
      if (!t || *t > ceiling) throw EnumerationLimit("FamInstance::homs: hom-set exceeds the ceiling");
      total = *t;
    }
    std::vector<Morphism> out;
    if (radices.empty()) return {Morphism(a, b, {})};
    for_each_tuple(radices, [&](const std::vector<Index>& t) {
      std::vector<FiniteFunction> c;
      for (Index i = 0; i < t.size(); ++i) c.push_back(per[i][t[i]]);
      out.emplace_back(a, b, std::move(c));
    });
    return out;
  }

  Morphism identity(const Object& x) const {
    std::vector<FiniteFunction> c;
    for (const auto& s : x.family) c.push_back(FiniteFunction::identity(s));
    return Morphism(x, x, std::move(c));
  }

  Morphism compose(const Morphism& f, const Morphism& g) const {
    if (f.cod != g.dom) throw CompositionError("FamInstance::compose: endpoints differ");
    std::vector<FiniteFunction> c;
    for (Index i = 0; i < f.components.size(); ++i) c.push_back(compose_fn(f.components[i], g.components[i]));
    return Morphism(f.dom, g.cod, std::move(c));
  }

  bool equal(const Morphism& f, const Morphism& g) const { return f == g; }

  bool is_iso(const Morphism& m) const {
    for (const auto& c : m.components)
      if (!c.bijective()) return false;
    return true;
  }

  Morphism invert(const Morphism& m) const {
    std::vector<FiniteFunction> c;
    for (const auto& f : m.components) c.push_back(f.inverse());
    return Morphism(m.cod, m.dom, std::move(c));
  }

  /// (f^*X)_i = X_{f(i)}.
  Object pullback(const FiniteFunction& f, const Object& x) const {
    if (f.cod() != x.base) throw ShapeError("FamInstance::pullback: object is not over the codomain");
    std::vector<FinSet> fam;
    for (Index i = 0; i < f.dom().size(); ++i) fam.push_back(x.family[f(i)]);
    return Object(f.dom(), std::move(fam));
  }

  Morphism pullback_map(const FiniteFunction& f, const Morphism& m) const {
    std::vector<FiniteFunction> c;
    for (Index i = 0; i < f.dom().size(); ++i) c.push_back(m.components.at(f(i)));
    return Morphism(pullback(f, m.dom), pullback(f, m.cod), std::move(c));
  }

  /// (f_!X)_j = Σ_{f(i)=j} X_i, preimages ascending.
  Object pushforward(const FiniteFunction& f, const Object& x) const {
    if (f.dom() != x.base) throw ShapeError("FamInstance::pushforward: object is not over the domain");
    std::vector<FinSet> fam;
    for (const auto& pre : base::preimages(f)) {
      std::vector<FinSet> parts;
      for (auto i : pre) parts.push_back(x.family[i]);
      fam.push_back(SumLayout(parts).carrier());
    }
    return Object(f.cod(), std::move(fam));
  }

  Morphism pushforward_map(const FiniteFunction& f, const Morphism& m) const {
    std::vector<FiniteFunction> c;
    for (const auto& pre : base::preimages(f)) {
      std::vector<FiniteFunction> parts;
      for (auto i : pre) parts.push_back(m.components[i]);
      c.push_back(sum_map(parts));
    }
    return Morphism(pushforward(f, m.dom), pushforward(f, m.cod), std::move(c));
  }

  /// X → f^* f_! X, the coproduct injections.
  Morphism unit(const FiniteFunction& f, const Object& x) const {
    auto pre = base::preimages(f);
    auto fx = pushforward(f, x);
    std::vector<FiniteFunction> c;
    for (Index i = 0; i < f.dom().size(); ++i) {
      const auto& ps = pre[f(i)];
      std::vector<FinSet> parts;
      for (auto p : ps) parts.push_back(x.family[p]);
      auto rank = std::size_t(std::find(ps.begin(), ps.end(), i) - ps.begin());
      c.push_back(SumLayout(parts).injection(rank));
    }
    return Morphism(x, pullback(f, fx), std::move(c));
  }

  /// f_! f^* Z → Z, the codiagonals.
  Morphism counit(const FiniteFunction& f, const Object& z) const {
    auto pre = base::preimages(f);
    auto fz = pullback(f, z);
    std::vector<FiniteFunction> c;
    for (Index j = 0; j < f.cod().size(); ++j) {
      std::vector<FiniteFunction> ids(pre[j].size(), FiniteFunction::identity(z.family[j]));
      c.push_back(copair(ids, z.family[j]));
    }
    return Morphism(pushforward(f, fz), z, std::move(c));
  }

  /// p^* f^* X → q^* g^* X for f∘p = g∘q: both are X_{f(p(x))}.
  Morphism reindex(const FiniteFunction& p, const FiniteFunction& f, const FiniteFunction& q, const FiniteFunction& g,
                   const Object& x) const {
    if (compose_fn(p, f) != compose_fn(q, g)) throw CompositionError("FamInstance::reindex: square does not commute");
    auto a = pullback(p, pullback(f, x));
    auto b = pullback(q, pullback(g, x));
    std::vector<FiniteFunction> c;
    for (const auto& s : a.family) c.push_back(FiniteFunction::identity(s));
    return Morphism(a, b, std::move(c));
  }

  Morphism pullback_identity(const Object& x) const { return identity(x); }
  Morphism pushforward_identity(const Object& x) const { return identity(x); }

  /// f_! g_! X → (g;f)_! X, regrouping the nested sums by ascending i.
  Morphism pushforward_composite(const FiniteFunction& g, const FiniteFunction& f, const Object& x) const {
    auto inner = pushforward(g, x);
    auto nested = pushforward(f, inner);
    auto gf = compose_fn(g, f);
    auto flat = pushforward(gf, x);
    auto pre_g = base::preimages(g), pre_f = base::preimages(f), pre_gf = base::preimages(gf);
    std::vector<FiniteFunction> c;
    for (Index k = 0; k < f.cod().size(); ++k) {
      std::vector<FinSet> outer_parts;
      for (auto j : pre_f[k]) outer_parts.push_back(inner.family[j]);
      SumLayout outer(outer_parts);
      std::vector<FinSet> flat_parts;
      for (auto i : pre_gf[k]) flat_parts.push_back(x.family[i]);
      SumLayout fl(flat_parts);
      std::vector<Index> t(nested.family[k].size());
      for (std::size_t r = 0; r < pre_f[k].size(); ++r) {
        auto j = pre_f[k][r];
        std::vector<FinSet> in_parts;
        for (auto i : pre_g[j]) in_parts.push_back(x.family[i]);
        SumLayout in(in_parts);
        for (std::size_t s = 0; s < pre_g[j].size(); ++s) {
          auto i = pre_g[j][s];
          auto pos = std::size_t(std::find(pre_gf[k].begin(), pre_gf[k].end(), i) - pre_gf[k].begin());
          for (Index e = 0; e < x.family[i].size(); ++e) t[outer.inject(r, in.inject(s, e))] = fl.inject(pos, e);
        }
      }
      c.emplace_back(nested.family[k], flat.family[k], std::move(t));
    }
    return Morphism(nested, flat, std::move(c));
  }

  Object tensor(const Object& a, const Object& b) const {
    if (a.base != b.base) throw ShapeError("FamInstance::tensor: objects over different bases");
    std::vector<FinSet> f;
    for (Index i = 0; i < a.base.size(); ++i) f.push_back(product(a.family[i], b.family[i]));
    return Object(a.base, std::move(f));
  }

  Morphism tensor_map(const Morphism& m, const Morphism& n) const {
    std::vector<FiniteFunction> c;
    for (Index i = 0; i < m.components.size(); ++i) c.push_back(product_map(m.components[i], n.components[i]));
    return Morphism(tensor(m.dom, n.dom), tensor(m.cod, n.cod), std::move(c));
  }

  Object unit_object(const FinSet& base) const { return Object(base, std::vector<FinSet>(base.size(), FinSet(1))); }

  template <class Fn>
  Morphism componentwise(const Object& dom, const Object& cod, Fn&& fn) const {
    std::vector<FiniteFunction> c;
    for (Index i = 0; i < dom.base.size(); ++i) c.push_back(fn(i));
    return Morphism(dom, cod, std::move(c));
  }

  /// A•(B•C) → (A•B)•C.
  Morphism associator(const Object& a, const Object& b, const Object& c) const {
    return componentwise(tensor(a, tensor(b, c)), tensor(tensor(a, b), c),
                         [&](Index i) { return fiboptic::associator(a.family[i], b.family[i], c.family[i]); });
  }

  /// Z•(M•N) → (Z•N)•M.
  Morphism right_multiplicator(const Object& z, const Object& m, const Object& n) const {
    return componentwise(tensor(z, tensor(m, n)), tensor(tensor(z, n), m),
                         [&](Index i) { return right_multiplicator_fn(z.family[i], m.family[i], n.family[i]); });
  }

  /// f^*(A•B) → f^*A • f^*B.
  Morphism strong_monoidal(const FiniteFunction& f, const Object& a, const Object& b) const {
    auto src = pullback(f, tensor(a, b));
    return componentwise(src, tensor(pullback(f, a), pullback(f, b)),
                         [&](Index i) { return FiniteFunction::identity(src.family[i]); });
  }

  /// X → 1•X.
  Morphism left_unitor_inv(const Object& x) const {
    return componentwise(x, tensor(unit_object(x.base), x),
                         [&](Index i) { return fiboptic::left_unitor(x.family[i]).inverse(); });
  }

  /// X•1 → X.
  Morphism right_unitor(const Object& x) const {
    return componentwise(tensor(x, unit_object(x.base)), x,
                         [&](Index i) { return fiboptic::right_unitor(x.family[i]); });
  }
};

// --------------------------------------------------------------------------
// DMark: bundles p : A → X with Markov kernels over a base map

struct DMarkObject {
  FiniteFunction bundle;

  const FinSet& base() const noexcept { return bundle.cod(); }
  const FinSet& carrier() const noexcept { return bundle.dom(); }

  friend bool operator==(const DMarkObject& a, const DMarkObject& b) { return a.bundle == b.bundle; }
};

inline void to_json(json& j, const DMarkObject& x) { j = json{{"bundle", x.bundle}}; }
inline void from_json(const json& j, DMarkObject& x) { x = DMarkObject{j.at("bundle").get<FiniteFunction>()}; }

/// A morphism of the total category: a kernel on carriers and a base map.
struct DMarkMorphism {
  FiniteKernel kernel;
  FiniteFunction base_map;

  friend bool operator==(const DMarkMorphism& a, const DMarkMorphism& b) {
    return a.kernel == b.kernel && a.base_map == b.base_map;
  }
};

inline void to_json(json& j, const DMarkMorphism& m) { j = json{{"kernel", m.kernel}, {"base_map", m.base_map}}; }
inline void from_json(const json& j, DMarkMorphism& m) {
  m = DMarkMorphism{j.at("kernel").get<FiniteKernel>(), j.at("base_map").get<FiniteFunction>()};
}

/// Pairs (a, b) with k(a)(b) > 0 and p_B(b) ≠ f(p_A(a)).
inline std::vector<std::pair<Index, Index>> dmark_violations(const DMarkMorphism& m, const DMarkObject& src,
                                                              const DMarkObject& tgt) {
  if (m.kernel.dom() != src.carrier() || m.kernel.cod() != tgt.carrier())
    throw ShapeError("validate_dmark: kernel carriers differ from the bundles");
  if (m.base_map.dom() != src.base() || m.base_map.cod() != tgt.base())
    throw ShapeError("validate_dmark: base map endpoints differ from the bundle bases");
  std::vector<std::pair<Index, Index>> out;
  for (Index a = 0; a < src.carrier().size(); ++a)
    for (Index b = 0; b < tgt.carrier().size(); ++b)
      if (m.kernel.weight(a, b) != Rational(0) && tgt.bundle(b) != m.base_map(src.bundle(a))) out.emplace_back(a, b);
  return out;
}

inline bool validate_dmark(const DMarkMorphism& m, const DMarkObject& src, const DMarkObject& tgt) {
  return dmark_violations(m, src, tgt).empty();
}

inline DMarkMorphism dmark_compose(const DMarkMorphism& m1, const DMarkMorphism& m2) {
  return DMarkMorphism{compose_kernel(m1.kernel, m2.kernel), compose_fn(m1.base_map, m2.base_map)};
}

/// Every bundle with carrier of size <= bound over the given base.
inline std::vector<DMarkObject> all_bundles(const FinSet& base, std::size_t bound) {
  std::vector<DMarkObject> out;
  for (std::size_t n = 0; n <= bound; ++n)
    for (auto& f : all_functions(FinSet(n), base)) out.push_back(DMarkObject{std::move(f)});
  return out;
}

/// A fibre morphism: a kernel between bundles over the same base, over the
/// identity base map.
struct DMarkFibreMorphism {
  DMarkObject dom;
  DMarkObject cod;
  FiniteKernel kernel;

  friend bool operator==(const DMarkFibreMorphism& a, const DMarkFibreMorphism& b) {
    return a.dom == b.dom && a.cod == b.cod && a.kernel == b.kernel;
  }
};

inline void to_json(json& j, const DMarkFibreMorphism& m) {
  j = json{{"dom", m.dom}, {"cod", m.cod}, {"kernel", m.kernel}};
}
inline void from_json(const json& j, DMarkFibreMorphism& m) {
  m = DMarkFibreMorphism{j.at("dom").get<DMarkObject>(), j.at("cod").get<DMarkObject>(),
                         j.at("kernel").get<FiniteKernel>()};
}

namespace detail {

/// Elements (x, y) of X ×_Z Y for maps p : X → Z, q : Y → Z, x slowest, with
/// an index table.
struct FibrePairs {
  std::vector<std::pair<Index, Index>> elems;
  std::vector<std::size_t> table;
  std::size_t cols = 0;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  FibrePairs(const FiniteFunction& p, const FiniteFunction& q) : cols(q.dom().size()) {
    if (p.cod() != q.cod()) throw ShapeError("fibre product: maps into different bases");
    table.assign(p.dom().size() * cols, npos);
    for (Index x = 0; x < p.dom().size(); ++x)
      for (Index y = 0; y < cols; ++y)
        if (p(x) == q(y)) {
          table[x * cols + y] = elems.size();
          elems.emplace_back(x, y);
        }
  }

  FinSet carrier() const { return FinSet(elems.size()); }

  Index at(Index x, Index y) const {
    auto v = table.at(x * cols + y);
    if (v == npos) throw ShapeError("fibre product: pair outside the fibre");
    return v;
  }
};

inline FiniteKernel dirac_kernel(const FinSet& dom, const FinSet& cod, const std::vector<Index>& t) {
  return FiniteKernel::deterministic(FiniteFunction(dom, cod, t));
}

}  // namespace detail

struct DMarkInstance {
  using Object = DMarkObject;
  using Morphism = DMarkFibreMorphism;
  static constexpr std::string_view name = "dmark";

  std::vector<int> denominators{1, 2, 3};
  std::uint64_t ceiling = kDefaultCeiling;

  const FinSet& base_of(const Object& x) const { return x.base(); }
  const Object& dom(const Morphism& m) const { return m.dom; }
  const Object& cod(const Morphism& m) const { return m.cod; }

  std::vector<Object> fibre_objects(const FinSet& base, std::size_t bound) const { return all_bundles(base, bound); }

  Morphism make(const Object& a, const Object& b, FiniteKernel k) const {
    if (a.base() != b.base()) throw ShapeError("DMarkInstance: fibre morphism between different bases");
    Morphism m{a, b, std::move(k)};
    if (!validate_dmark(DMarkMorphism{m.kernel, FiniteFunction::identity(a.base())}, a, b))
      throw ShapeError("DMarkInstance: kernel leaves the fibre");
    return m;
  }

  /// Grid kernels whose rows stay inside the fibre of the source point.
  std::vector<Morphism> homs(const Object& a, const Object& b) const {
    if (a.base() != b.base()) throw ShapeError("DMarkInstance::homs: objects over different bases");
    auto fibres = base::preimages(b.bundle);
    std::vector<std::vector<FiniteDistribution>> rows;
    std::vector<std::size_t> radices;
    std::uint64_t total = 1;
    for (Index x = 0; x < a.carrier().size(); ++x) {
      const auto& fib = fibres[a.bundle(x)];
      std::vector<FiniteDistribution> opts;
      for (const auto& d : grid_distributions(FinSet(fib.size()), denominators)) {
        std::vector<Rational> w(b.carrier().size(), Rational(0));
        for (Index s = 0; s < fib.size(); ++s) w[fib[s]] = d[s];
        opts.emplace_back(b.carrier(), std::move(w));
      }
      radices.push_back(opts.size());
      auto t = checked_mul(total, opts.size());
      if (!t || *t > ceiling) throw EnumerationLimit("DMarkInstance::homs: hom-set exceeds the ceiling");
      total = *t;
      rows.push_back(std::move(opts));
    }
    std::vector<Morphism> out;
    auto emit = [&](const std::vector<Index>& t) {
      std::vector<FiniteDistribution> r;
      for (Index x = 0; x < t.size(); ++x) r.push_back(rows[x][t[x]]);
      out.push_back(Morphism{a, b, FiniteKernel(a.carrier(), b.carrier(), std::move(r))});
    };
    if (radices.empty())
      emit({});
    else
      for_each_tuple(radices, emit);
    return out;
  }

  Morphism identity(const Object& x) const { return Morphism{x, x, FiniteKernel::identity(x.carrier())}; }

  Morphism compose(const Morphism& f, const Morphism& g) const {
    if (f.cod != g.dom) throw CompositionError("DMarkInstance::compose: endpoints differ");
    return Morphism{f.dom, g.cod, compose_kernel(f.kernel, g.kernel)};
  }

  bool equal(const Morphism& f, const Morphism& g) const { return f == g; }

  bool is_iso(const Morphism& m) const {
    auto f = m.kernel.as_function();
    return f && f->bijective();
  }

  Morphism invert(const Morphism& m) const {
    auto f = m.kernel.as_function();
    if (!f || !f->bijective()) throw ShapeError("DMarkInstance::invert: kernel is not a deterministic bijection");
    return Morphism{m.cod, m.dom, FiniteKernel::deterministic(f->inverse())};
  }

  /// f^*B = {(i, b) | f(i) = p_B(b)} over I.
  Object pullback(const FiniteFunction& f, const Object& b) const {
    if (f.cod() != b.base()) throw ShapeError("DMarkInstance::pullback: bundle is not over the codomain");
    detail::FibrePairs fp(f, b.bundle);
    std::vector<Index> t;
    for (auto [i, e] : fp.elems) t.push_back(i);
    return Object{FiniteFunction(fp.carrier(), f.dom(), std::move(t))};
  }

  Morphism pullback_map(const FiniteFunction& f, const Morphism& m) const {
    detail::FibrePairs src(f, m.dom.bundle), tgt(f, m.cod.bundle);
    std::vector<FiniteDistribution> rows;
    for (auto [i, b] : src.elems) {
      std::vector<Rational> w(tgt.elems.size(), Rational(0));
      for (Index b2 = 0; b2 < m.cod.carrier().size(); ++b2)
        if (m.kernel.weight(b, b2) != Rational(0)) w[tgt.at(i, b2)] = m.kernel.weight(b, b2);
      rows.emplace_back(tgt.carrier(), std::move(w));
    }
    return Morphism{pullback(f, m.dom), pullback(f, m.cod), FiniteKernel(src.carrier(), tgt.carrier(), std::move(rows))};
  }

  /// f_!A: the same carrier with bundle f ∘ p_A.
  Object pushforward(const FiniteFunction& f, const Object& a) const {
    if (f.dom() != a.base()) throw ShapeError("DMarkInstance::pushforward: bundle is not over the domain");
    return Object{compose_fn(a.bundle, f)};
  }

  Morphism pushforward_map(const FiniteFunction& f, const Morphism& m) const {
    return Morphism{pushforward(f, m.dom), pushforward(f, m.cod), m.kernel};
  }

  /// a ↦ (p_A(a), a).
  Morphism unit(const FiniteFunction& f, const Object& a) const {
    auto fa = pushforward(f, a);
    detail::FibrePairs fp(f, fa.bundle);
    std::vector<Index> t(a.carrier().size());
    for (Index x = 0; x < t.size(); ++x) t[x] = fp.at(a.bundle(x), x);
    return Morphism{a, pullback(f, fa), detail::dirac_kernel(a.carrier(), fp.carrier(), t)};
  }

  /// (i, z) ↦ z.
  Morphism counit(const FiniteFunction& f, const Object& z) const {
    detail::FibrePairs fp(f, z.bundle);
    std::vector<Index> t;
    for (auto [i, e] : fp.elems) t.push_back(e);
    return Morphism{pushforward(f, pullback(f, z)), z, detail::dirac_kernel(fp.carrier(), z.carrier(), t)};
  }

  /// (x, (p(x), a)) ↦ (x, (q(x), a)).
  Morphism reindex(const FiniteFunction& p, const FiniteFunction& f, const FiniteFunction& q, const FiniteFunction& g,
                   const Object& x) const {
    if (compose_fn(p, f) != compose_fn(q, g)) throw CompositionError("DMarkInstance::reindex: square does not commute");
    auto fx = pullback(f, x), gx = pullback(g, x);
    detail::FibrePairs inner_f(f, x.bundle), inner_g(g, x.bundle);
    detail::FibrePairs outer_f(p, fx.bundle), outer_g(q, gx.bundle);
    std::vector<Index> t;
    for (auto [e, u] : outer_f.elems) {
      auto a = inner_f.elems[u].second;
      t.push_back(outer_g.at(e, inner_g.at(q(e), a)));
    }
    return Morphism{pullback(p, fx), pullback(q, gx),
                    detail::dirac_kernel(outer_f.carrier(), outer_g.carrier(), t)};
  }

  /// id^*X → X, (p(x), x) ↦ x.
  Morphism pullback_identity(const Object& x) const {
    auto id = FiniteFunction::identity(x.base());
    detail::FibrePairs fp(id, x.bundle);
    std::vector<Index> t;
    for (auto [i, e] : fp.elems) t.push_back(e);
    return Morphism{pullback(id, x), x, detail::dirac_kernel(fp.carrier(), x.carrier(), t)};
  }

  Morphism pushforward_identity(const Object& x) const { return identity(x); }

  Morphism pushforward_composite(const FiniteFunction& g, const FiniteFunction& f, const Object& x) const {
    auto nested = pushforward(f, pushforward(g, x));
    return Morphism{nested, pushforward(compose_fn(g, f), x), FiniteKernel::identity(x.carrier())};
  }

  /// Fibre product A ×_I B.
  Object tensor(const Object& a, const Object& b) const {
    detail::FibrePairs fp(a.bundle, b.bundle);
    std::vector<Index> t;
    for (auto [x, y] : fp.elems) t.push_back(a.bundle(x));
    return Object{FiniteFunction(fp.carrier(), a.base(), std::move(t))};
  }

  Morphism tensor_map(const Morphism& m, const Morphism& n) const {
    detail::FibrePairs src(m.dom.bundle, n.dom.bundle), tgt(m.cod.bundle, n.cod.bundle);
    std::vector<FiniteDistribution> rows;
    for (auto [a, b] : src.elems) {
      std::vector<Rational> w(tgt.elems.size(), Rational(0));
      for (Index a2 = 0; a2 < m.cod.carrier().size(); ++a2) {
        const auto& wa = m.kernel.weight(a, a2);
        if (wa == Rational(0)) continue;
        for (Index b2 = 0; b2 < n.cod.carrier().size(); ++b2) {
          const auto& wb = n.kernel.weight(b, b2);
          if (wb == Rational(0)) continue;
          w[tgt.at(a2, b2)] += wa * wb;
        }
      }
      rows.emplace_back(tgt.carrier(), std::move(w));
    }
    return Morphism{tensor(m.dom, n.dom), tensor(m.cod, n.cod),
                    FiniteKernel(src.carrier(), tgt.carrier(), std::move(rows))};
  }

  Object unit_object(const FinSet& base) const { return Object{FiniteFunction::identity(base)}; }

  /// (a, (b, c)) ↦ ((a, b), c).
  Morphism associator(const Object& a, const Object& b, const Object& c) const {
    detail::FibrePairs bc(b.bundle, c.bundle), ab(a.bundle, b.bundle);
    auto bc_o = tensor(b, c), ab_o = tensor(a, b);
    detail::FibrePairs lhs(a.bundle, bc_o.bundle), rhs(ab_o.bundle, c.bundle);
    std::vector<Index> t;
    for (auto [x, u] : lhs.elems) {
      auto [y, z] = bc.elems[u];
      t.push_back(rhs.at(ab.at(x, y), z));
    }
    return Morphism{tensor(a, bc_o), tensor(ab_o, c), detail::dirac_kernel(lhs.carrier(), rhs.carrier(), t)};
  }

  /// (z, (m, n)) ↦ ((z, n), m).
  Morphism right_multiplicator(const Object& z, const Object& m, const Object& n) const {
    detail::FibrePairs mn(m.bundle, n.bundle), zn(z.bundle, n.bundle);
    auto mn_o = tensor(m, n), zn_o = tensor(z, n);
    detail::FibrePairs lhs(z.bundle, mn_o.bundle), rhs(zn_o.bundle, m.bundle);
    std::vector<Index> t;
    for (auto [x, u] : lhs.elems) {
      auto [a, b] = mn.elems[u];
      t.push_back(rhs.at(zn.at(x, b), a));
    }
    return Morphism{tensor(z, mn_o), tensor(zn_o, m), detail::dirac_kernel(lhs.carrier(), rhs.carrier(), t)};
  }

  /// (i, (a, b)) ↦ ((i, a), (i, b)).
  Morphism strong_monoidal(const FiniteFunction& f, const Object& a, const Object& b) const {
    detail::FibrePairs ab(a.bundle, b.bundle);
    auto ab_o = tensor(a, b);
    detail::FibrePairs lhs(f, ab_o.bundle), fa(f, a.bundle), fb(f, b.bundle);
    auto fa_o = pullback(f, a), fb_o = pullback(f, b);
    detail::FibrePairs rhs(fa_o.bundle, fb_o.bundle);
    std::vector<Index> t;
    for (auto [i, u] : lhs.elems) {
      auto [x, y] = ab.elems[u];
      t.push_back(rhs.at(fa.at(i, x), fb.at(i, y)));
    }
    return Morphism{pullback(f, ab_o), tensor(fa_o, fb_o), detail::dirac_kernel(lhs.carrier(), rhs.carrier(), t)};
  }

  /// x ↦ (p(x), x).
  Morphism left_unitor_inv(const Object& x) const {
    auto one = unit_object(x.base());
    detail::FibrePairs fp(one.bundle, x.bundle);
    std::vector<Index> t(x.carrier().size());
    for (Index e = 0; e < t.size(); ++e) t[e] = fp.at(x.bundle(e), e);
    return Morphism{x, tensor(one, x), detail::dirac_kernel(x.carrier(), fp.carrier(), t)};
  }

  /// (x, p(x)) ↦ x.
  Morphism right_unitor(const Object& x) const {
    auto one = unit_object(x.base());
    detail::FibrePairs fp(x.bundle, one.bundle);
    std::vector<Index> t;
    for (auto [e, i] : fp.elems) t.push_back(e);
    return Morphism{tensor(x, one), x, detail::dirac_kernel(fp.carrier(), x.carrier(), t)};
  }
};

// --------------------------------------------------------------------------
// The interface and the derived structure

template <class B>
concept BifibrationInstance = requires(const B& b, const typename B::Object& x, const typename B::Morphism& m,
                                       const FiniteFunction& f, const FinSet& s) {
  { b.base_of(x) } -> std::convertible_to<FinSet>;
  { b.dom(m) } -> std::convertible_to<typename B::Object>;
  { b.cod(m) } -> std::convertible_to<typename B::Object>;
  { b.fibre_objects(s, std::size_t{}) } -> std::same_as<std::vector<typename B::Object>>;
  { b.homs(x, x) } -> std::same_as<std::vector<typename B::Morphism>>;
  { b.identity(x) } -> std::same_as<typename B::Morphism>;
  { b.compose(m, m) } -> std::same_as<typename B::Morphism>;
  { b.equal(m, m) } -> std::same_as<bool>;
  { b.is_iso(m) } -> std::same_as<bool>;
  { b.invert(m) } -> std::same_as<typename B::Morphism>;
  { b.pullback(f, x) } -> std::same_as<typename B::Object>;
  { b.pullback_map(f, m) } -> std::same_as<typename B::Morphism>;
  { b.pushforward(f, x) } -> std::same_as<typename B::Object>;
  { b.pushforward_map(f, m) } -> std::same_as<typename B::Morphism>;
  { b.unit(f, x) } -> std::same_as<typename B::Morphism>;
  { b.counit(f, x) } -> std::same_as<typename B::Morphism>;
  { b.reindex(f, f, f, f, x) } -> std::same_as<typename B::Morphism>;
  { b.pullback_identity(x) } -> std::same_as<typename B::Morphism>;
  { b.pushforward_identity(x) } -> std::same_as<typename B::Morphism>;
  { b.pushforward_composite(f, f, x) } -> std::same_as<typename B::Morphism>;
  { b.tensor(x, x) } -> std::same_as<typename B::Object>;
  { b.tensor_map(m, m) } -> std::same_as<typename B::Morphism>;
  { b.unit_object(s) } -> std::same_as<typename B::Object>;
  { b.associator(x, x, x) } -> std::same_as<typename B::Morphism>;
  { b.right_multiplicator(x, x, x) } -> std::same_as<typename B::Morphism>;
  { b.strong_monoidal(f, x, x) } -> std::same_as<typename B::Morphism>;
  { b.left_unitor_inv(x) } -> std::same_as<typename B::Morphism>;
  { b.right_unitor(x) } -> std::same_as<typename B::Morphism>;
};

static_assert(BifibrationInstance<FamInstance>);
static_assert(BifibrationInstance<DMarkInstance>);

template <BifibrationInstance B>
typename B::Object apply_pullback(const B& inst, const FiniteFunction& f, const typename B::Object& x) {
  return inst.pullback(f, x);
}

template <BifibrationInstance B>
typename B::Object apply_pushforward(const B& inst, const FiniteFunction& f, const typename B::Object& x) {
  return inst.pushforward(f, x);
}

/// g : f_!X → Z  ↦  X → f^*Z.
template <BifibrationInstance B>
typename B::Morphism transpose_to_pullback(const B& inst, const FiniteFunction& f, const typename B::Object& x,
                                           const typename B::Morphism& g) {
  return inst.compose(inst.unit(f, x), inst.pullback_map(f, g));
}

/// h : X → f^*Z  ↦  f_!X → Z.
template <BifibrationInstance B>
typename B::Morphism transpose_to_pushforward(const B& inst, const FiniteFunction& f, const typename B::Object& z,
                                              const typename B::Morphism& h) {
  return inst.compose(inst.pushforward_map(f, h), inst.counit(f, z));
}

/// The canonical comparison q_! p^* X → g^* f_! X for a commuting square
/// f∘p = g∘q (p : P → A, q : P → B, f : A → C, g : B → C, X over A).
template <BifibrationInstance B>
typename B::Morphism bc_mate(const B& inst, const FiniteFunction& p, const FiniteFunction& q, const FiniteFunction& f,
                             const FiniteFunction& g, const typename B::Object& x) {
  auto fx = inst.pushforward(f, x);
  auto h = inst.compose(inst.pullback_map(p, inst.unit(f, x)), inst.reindex(p, f, q, g, fx));
  return transpose_to_pushforward(inst, q, inst.pullback(g, fx), h);
}

/// f_!(f^*M • V) → M • f_!V.
template <BifibrationInstance B>
typename B::Morphism frobenius_left(const B& inst, const FiniteFunction& f, const typename B::Object& m,
                                    const typename B::Object& v) {
  auto fm = inst.pullback(f, m);
  auto fv = inst.pushforward(f, v);
  auto h = inst.compose(inst.tensor_map(inst.identity(fm), inst.unit(f, v)),
                        inst.invert(inst.strong_monoidal(f, m, fv)));
  return transpose_to_pushforward(inst, f, inst.tensor(m, fv), h);
}

/// f_!(V • f^*Z) → f_!V • Z.
template <BifibrationInstance B>
typename B::Morphism frobenius_right(const B& inst, const FiniteFunction& f, const typename B::Object& v,
                                     const typename B::Object& z) {
  auto fz = inst.pullback(f, z);
  auto fv = inst.pushforward(f, v);
  auto h = inst.compose(inst.tensor_map(inst.unit(f, v), inst.identity(fz)),
                        inst.invert(inst.strong_monoidal(f, fv, z)));
  return transpose_to_pushforward(inst, f, inst.tensor(fv, z), h);
}

namespace detail {

template <BifibrationInstance B>
typename B::Morphism require_iso(const B& inst, const typename B::Morphism& m, const char* what) {
  if (!inst.is_iso(m)) throw UnsupportedInstance(std::string("missing coherence witness: ") + what + " is not invertible");
  return inst.invert(m);
}

/// Left-to-right composite of a chain of fibre morphisms.
template <BifibrationInstance B>
typename B::Morphism chain(const B& inst, std::initializer_list<typename B::Morphism> ms) {
  auto it = ms.begin();
  auto out = *it;
  for (++it; it != ms.end(); ++it) out = inst.compose(out, *it);
  return out;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Laws

/// Transposition is a bijection between fibre-hom(f_!X, Z) and
/// fibre-hom(X, f^*Z), and the triangle identities hold, for every f : I → J
/// and fibre objects of size <= bound, with |I|, |J| <= base_bound.
template <BifibrationInstance B>
LawReport check_adjunction(const B& inst, std::size_t base_bound, std::size_t bound) {
  LawReport r;
  r.subject = std::string("adjunction/") + std::string(B::name);
  for (std::size_t ni = 0; ni <= base_bound; ++ni)
    for (std::size_t nj = 0; nj <= base_bound; ++nj)
      for (const auto& f : all_functions(FinSet(ni), FinSet(nj)))
        for (const auto& x : inst.fibre_objects(f.dom(), bound)) {
          auto fx = inst.pushforward(f, x);
          // triangles
          ++r.checked;
          if (!inst.equal(inst.compose(inst.pushforward_map(f, inst.unit(f, x)), inst.counit(f, fx)),
                          inst.identity(fx)))
            r.fail("triangle f_!η ; εf_! = id", json{{"f", f}, {"x", x}});
          for (const auto& z : inst.fibre_objects(f.cod(), bound)) {
            auto fz = inst.pullback(f, z);
            ++r.checked;
            if (!inst.equal(inst.compose(inst.unit(f, fz), inst.pullback_map(f, inst.counit(f, z))),
                            inst.identity(fz)))
              r.fail("triangle ηf^* ; f^*ε = id", json{{"f", f}, {"z", z}});
            auto left = inst.homs(fx, z);
            auto right = inst.homs(x, fz);
            ++r.checked;
            if (left.size() != right.size())
              r.fail("hom-set sizes", json{{"f", f}, {"x", x}, {"z", z}, {"left", left.size()}, {"right", right.size()}});
            for (const auto& g : left) {
              ++r.checked;
              auto h = transpose_to_pullback(inst, f, x, g);
              if (!inst.equal(transpose_to_pushforward(inst, f, z, h), g))
                r.fail("transpose round trip", json{{"f", f}, {"g", g}});
            }
            for (const auto& h : right) {
              ++r.checked;
              auto g = transpose_to_pushforward(inst, f, z, h);
              if (!inst.equal(transpose_to_pullback(inst, f, x, g), h))
                r.fail("transpose round trip", json{{"f", f}, {"h", h}});
            }
          }
        }
  return r;
}

struct PullbackSquare {
  FiniteFunction p;  // P → A
  FiniteFunction q;  // P → B
  FiniteFunction f;  // A → C
  FiniteFunction g;  // B → C
};

inline void to_json(json& j, const PullbackSquare& s) { j = json{{"p", s.p}, {"q", s.q}, {"f", s.f}, {"g", s.g}}; }

/// f∘p = g∘q and P → A ×_C B is a bijection.
inline bool is_pullback_square(const PullbackSquare& s) {
  if (s.p.dom() != s.q.dom() || s.p.cod() != s.f.dom() || s.q.cod() != s.g.dom() || s.f.cod() != s.g.cod())
    return false;
  if (compose_fn(s.p, s.f) != compose_fn(s.q, s.g)) return false;
  std::vector<int> hits(s.f.dom().size() * s.g.dom().size(), 0);
  std::size_t expected = 0;
  for (Index a = 0; a < s.f.dom().size(); ++a)
    for (Index b = 0; b < s.g.dom().size(); ++b)
      if (s.f(a) == s.g(b)) ++expected;
  for (Index x = 0; x < s.p.dom().size(); ++x)
    if (++hits[s.p(x) * s.g.dom().size() + s.q(x)] > 1) return false;
  return s.p.dom().size() == expected;
}

/// Every pullback square with all four corners of size <= bound.
inline std::vector<PullbackSquare> all_pullback_squares(std::size_t bound) {
  std::vector<PullbackSquare> out;
  for (std::size_t na = 0; na <= bound; ++na)
    for (std::size_t nb = 0; nb <= bound; ++nb)
      for (std::size_t nc = 0; nc <= bound; ++nc)
        for (const auto& f : all_functions(FinSet(na), FinSet(nc)))
          for (const auto& g : all_functions(FinSet(nb), FinSet(nc)))
            for (std::size_t np = 0; np <= bound; ++np)
              for (const auto& p : all_functions(FinSet(np), FinSet(na)))
                for (const auto& q : all_functions(FinSet(np), FinSet(nb))) {
                  PullbackSquare s{p, q, f, g};
                  if (is_pullback_square(s)) out.push_back(std::move(s));
                }
  return out;
}

template <BifibrationInstance B>
LawReport check_beck_chevalley(const B& inst, const PullbackSquare& s, std::size_t bound) {
  if (!is_pullback_square(s)) throw ShapeError("check_beck_chevalley: square is not a pullback");
  LawReport r;
  r.subject = std::string("beck-chevalley/") + std::string(B::name);
  for (const auto& x : inst.fibre_objects(s.f.dom(), bound)) {
    ++r.checked;
    auto m = bc_mate(inst, s.p, s.q, s.f, s.g, x);
    if (!inst.is_iso(m)) r.fail("mate is an isomorphism", json{{"square", s}, {"x", x}, {"mate", m}});
  }
  return r;
}

/// Negative control: a commuting square that is not a pullback.
inline PullbackSquare non_pullback_square() {
  // P = 1 over A = B = C = 1 is a pullback; P = 2 with both legs constant is not
  auto one = FinSet(1);
  return PullbackSquare{FiniteFunction(FinSet(2), one, {0, 0}), FiniteFunction(FinSet(2), one, {0, 0}),
                        FiniteFunction::identity(one), FiniteFunction::identity(one)};
}

/// Pullback preserves identities and composition on enumerated fibre morphisms.
template <BifibrationInstance B>
LawReport check_pullback_functorial(const B& inst, std::size_t base_bound, std::size_t bound,
                                    std::uint64_t pair_cap = 4096) {
  LawReport r;
  r.subject = std::string("pullback-functor/") + std::string(B::name);
  for (std::size_t ni = 0; ni <= base_bound; ++ni)
    for (std::size_t nj = 0; nj <= base_bound; ++nj)
      for (const auto& f : all_functions(FinSet(ni), FinSet(nj))) {
        auto objs = inst.fibre_objects(f.cod(), bound);
        for (const auto& a : objs) {
          ++r.checked;
          if (!inst.equal(inst.pullback_map(f, inst.identity(a)), inst.identity(inst.pullback(f, a))))
            r.fail("f^* id = id", json{{"f", f}, {"a", a}});
          for (const auto& b : objs) {
            auto ab = inst.homs(a, b);
            for (const auto& c : objs) {
              auto bc = inst.homs(b, c);
              if (ab.size() * bc.size() > pair_cap) continue;
              for (const auto& g : ab)
                for (const auto& h : bc) {
                  ++r.checked;
                  if (!inst.equal(inst.pullback_map(f, inst.compose(g, h)),
                                  inst.compose(inst.pullback_map(f, g), inst.pullback_map(f, h))))
                    r.fail("f^*(g;h) = f^*g ; f^*h", json{{"f", f}, {"g", g}, {"h", h}});
                }
            }
          }
        }
      }
  return r;
}

// --------------------------------------------------------------------------
// Fibre optics

template <BifibrationInstance B>
struct FibreOptic {
  using Object = typename B::Object;
  using Morphism = typename B::Morphism;

  Object source;           // X over I
  Object source_backward;  // X' over I
  Object target;           // Y over J
  Object target_backward;  // Y' over J
  Object residual;         // M over I×J
  Morphism forward;        // X → π_I!(M • π_J^* Y)
  Morphism backward;       // π_I!(π_J^* Y' • M) → X'

  friend bool operator==(const FibreOptic& a, const FibreOptic& b) {
    return a.source == b.source && a.source_backward == b.source_backward && a.target == b.target &&
           a.target_backward == b.target_backward && a.residual == b.residual && a.forward == b.forward &&
           a.backward == b.backward;
  }
};

template <BifibrationInstance B>
typename B::Object fibre_forward_object(const B& inst, const FinSet& i, const FinSet& j, const typename B::Object& m,
                                        const typename B::Object& y) {
  return inst.pushforward(base::proj_left(i, j), inst.tensor(m, inst.pullback(base::proj_right(i, j), y)));
}

template <BifibrationInstance B>
typename B::Object fibre_backward_object(const B& inst, const FinSet& i, const FinSet& j,
                                         const typename B::Object& yd, const typename B::Object& m) {
  return inst.pushforward(base::proj_left(i, j), inst.tensor(inst.pullback(base::proj_right(i, j), yd), m));
}

template <BifibrationInstance B>
FibreOptic<B> make_fibre_optic(const B& inst, typename B::Object x, typename B::Object xd, typename B::Object y,
                               typename B::Object yd, typename B::Object m, typename B::Morphism f,
                               typename B::Morphism b) {
  const auto& I = inst.base_of(x);
  const auto& J = inst.base_of(y);
  if (inst.base_of(xd) != I || inst.base_of(yd) != J) throw ShapeError("FibreOptic: boundary objects over different bases");
  if (inst.base_of(m) != product(I, J)) throw ShapeError("FibreOptic: residual must live over I×J");
  if (!(inst.dom(f) == x) || !(inst.cod(f) == fibre_forward_object(inst, I, J, m, y)))
    throw ShapeError("FibreOptic: forward endpoints do not match");
  if (!(inst.dom(b) == fibre_backward_object(inst, I, J, yd, m)) || !(inst.cod(b) == xd))
    throw ShapeError("FibreOptic: backward endpoints do not match");
  return FibreOptic<B>{std::move(x), std::move(xd), std::move(y), std::move(yd), std::move(m), std::move(f),
                       std::move(b)};
}

template <BifibrationInstance B>
void to_json(json& j, const FibreOptic<B>& o) {
  j = json{{"instance", std::string(B::name)},
           {"source", {o.source, o.source_backward}},
           {"target", {o.target, o.target_backward}},
           {"residual", o.residual},
           {"forward", o.forward},
           {"backward", o.backward}};
}

template <BifibrationInstance B>
FibreOptic<B> fibre_optic_from_json(const B& inst, const json& j) {
  using O = typename B::Object;
  using M = typename B::Morphism;
  if (j.at("instance").get<std::string>() != B::name) throw ShapeError("FibreOptic: instance name differs");
  return make_fibre_optic(inst, j.at("source").at(0).get<O>(), j.at("source").at(1).get<O>(),
                          j.at("target").at(0).get<O>(), j.at("target").at(1).get<O>(), j.at("residual").get<O>(),
                          j.at("forward").get<M>(), j.at("backward").get<M>());
}

/// Residual Δ_!(1) over I×I; forward X ≅ 1•X ≅ π1_!Δ_!(1•Δ^*π2^*X) ≅ π1_!(Δ_!1 • π2^*X),
/// backward symmetric with the unit on the right.
template <BifibrationInstance B>
FibreOptic<B> identity_fibre_optic(const B& inst, const typename B::Object& x, const typename B::Object& xd) {
  const auto& I = inst.base_of(x);
  auto id = FiniteFunction::identity(I);
  auto d = base::diagonal(I);
  auto p1 = base::proj_left(I, I), p2 = base::proj_right(I, I);
  auto one = inst.unit_object(I);
  auto resid = inst.pushforward(d, one);

  // Δ^*π2^*X → X
  auto to_x = [&](const typename B::Object& obj) {
    return detail::chain(inst, {inst.reindex(d, p2, id, id, obj), inst.pullback_identity(inst.pullback(id, obj)),
                                inst.pullback_identity(obj)});
  };
  // π1_!Δ_!V ≅ V
  auto collapse = [&](const typename B::Object& v) {
    return inst.compose(inst.pushforward_composite(d, p1, v), inst.pushforward_identity(v));
  };

  auto fwd_v = inst.tensor(one, inst.pullback(d, inst.pullback(p2, x)));
  auto fwd = detail::chain(
      inst, {inst.left_unitor_inv(x), inst.tensor_map(inst.identity(one), detail::require_iso(inst, to_x(x), "Δ^*π2^*")),
             detail::require_iso(inst, collapse(fwd_v), "π1_!Δ_!"),
             inst.pushforward_map(p1, frobenius_right(inst, d, one, inst.pullback(p2, x)))});

  auto bwd_v = inst.tensor(inst.pullback(d, inst.pullback(p2, xd)), one);
  auto bwd = detail::chain(
      inst, {inst.pushforward_map(p1, detail::require_iso(inst, frobenius_left(inst, d, inst.pullback(p2, xd), one),
                                                          "Frobenius")),
             collapse(bwd_v), inst.tensor_map(to_x(xd), inst.identity(one)), inst.right_unitor(xd)});
  return make_fibre_optic(inst, x, xd, x, xd, resid, fwd, bwd);
}

/// Composite with residual π_IK!(π_IJ^*M • π_JK^*N), assembled as
///   forward:  f ; π_I!(M • π_J^*g) ; Beck–Chevalley⁻¹ ; Frobenius⁻¹ ;
///             regroup pushforwards ; strong monoidality ; associator ;
///             reindex ; Frobenius
///   backward: Frobenius⁻¹ ; regroup ; reindex ; right multiplicator ;
///             strong monoidality⁻¹ ; Frobenius ; Beck–Chevalley ;
///             π_I!(π_J^*h • M) ; b
template <BifibrationInstance B>
FibreOptic<B> fibre_optic_compose(const FibreOptic<B>& o1, const FibreOptic<B>& o2, const B& inst) {
  if (!(o1.target == o2.source) || !(o1.target_backward == o2.source_backward))
    throw CompositionError("fibre_optic_compose: target of the first differs from source of the second");
  using Morphism = typename B::Morphism;
  const auto I = inst.base_of(o1.source);
  const auto J = inst.base_of(o1.target);
  const auto K = inst.base_of(o2.target);
  base::Triple t{I, J, K};
  auto pIJ = t.ij(), pJK = t.jk(), pIK = t.ik();
  auto iI_ij = base::proj_left(I, J), jJ_ij = base::proj_right(I, J);
  auto jJ_jk = base::proj_left(J, K), kK_jk = base::proj_right(J, K);
  auto iI_ik = base::proj_left(I, K), kK_ik = base::proj_right(I, K);

  const auto& M = o1.residual;
  const auto& N = o2.residual;
  const auto& Z = o2.target;
  const auto& Zd = o2.target_backward;
  auto T = inst.tensor(inst.pullback(pIJ, M), inst.pullback(pJK, N));
  auto L = inst.pushforward(pIK, T);

  // ---- forward
  auto W = inst.tensor(N, inst.pullback(kK_jk, Z));  // over J×K
  auto V = inst.pullback(pJK, W);                     // over I×J×K
  auto bc = bc_mate(inst, pJK, pIJ, jJ_jk, jJ_ij, W);  // π_IJ!π_JK^*W → π_J^*π_J!W
  auto step_g = inst.pushforward_map(iI_ij, inst.tensor_map(inst.identity(M), inst.pullback_map(jJ_ij, o2.forward)));
  auto step_bc = inst.pushforward_map(
      iI_ij, inst.tensor_map(inst.identity(M), detail::require_iso(inst, bc, "Beck–Chevalley")));
  auto step_frob = inst.pushforward_map(iI_ij, detail::require_iso(inst, frobenius_left(inst, pIJ, M, V), "Frobenius"));
  auto inner = inst.tensor(inst.pullback(pIJ, M), V);
  auto regroup = inst.compose(inst.pushforward_composite(pIJ, iI_ij, inner),
                              detail::require_iso(inst, inst.pushforward_composite(pIK, iI_ik, inner), "regroup"));
  // π_IJ^*M • π_JK^*(N • π_K^*Z) → T • π_IK^*π_K^*Z
  auto Mp = inst.pullback(pIJ, M);
  auto Np = inst.pullback(pJK, N);
  auto Zjk = inst.pullback(kK_jk, Z);
  auto rearrange = detail::chain(
      inst, {inst.tensor_map(inst.identity(Mp), inst.strong_monoidal(pJK, N, Zjk)),
             inst.associator(Mp, Np, inst.pullback(pJK, Zjk)),
             inst.tensor_map(inst.identity(T), inst.reindex(pJK, kK_jk, pIK, kK_ik, Z))});
  auto Zik = inst.pullback(kK_ik, Z);
  auto finish = inst.pushforward_map(iI_ik, inst.compose(inst.pushforward_map(pIK, rearrange),
                                                         frobenius_right(inst, pIK, T, Zik)));
  Morphism fwd = detail::chain(inst, {o1.forward, step_g, step_bc, step_frob, regroup, finish});

  // ---- backward
  auto Zdk = inst.pullback(kK_ik, Zd);  // over I×K
  auto unfrob = inst.pushforward_map(iI_ik, detail::require_iso(inst, frobenius_left(inst, pIK, Zdk, T), "Frobenius"));
  auto inner_b = inst.tensor(inst.pullback(pIK, Zdk), T);
  auto regroup_b = inst.compose(inst.pushforward_composite(pIK, iI_ik, inner_b),
                                detail::require_iso(inst, inst.pushforward_composite(pIJ, iI_ij, inner_b), "regroup"));
  auto Zd_jk = inst.pullback(kK_jk, Zd);
  auto Q = inst.tensor(Zd_jk, N);  // over J×K
  auto rearrange_b = detail::chain(
      inst,
      {inst.tensor_map(inst.reindex(pIK, kK_ik, pJK, kK_jk, Zd), inst.identity(T)),
       inst.right_multiplicator(inst.pullback(pJK, Zd_jk), Mp, Np),
       inst.tensor_map(detail::require_iso(inst, inst.strong_monoidal(pJK, Zd_jk, N), "strong monoidal"),
                       inst.identity(Mp))});
  auto bc_b = bc_mate(inst, pJK, pIJ, jJ_jk, jJ_ij, Q);
  auto into_h = detail::chain(
      inst, {inst.pushforward_map(pIJ, rearrange_b), frobenius_right(inst, pIJ, inst.pullback(pJK, Q), M),
             inst.tensor_map(bc_b, inst.identity(M)),
             inst.tensor_map(inst.pullback_map(jJ_ij, o2.backward), inst.identity(M))});
  Morphism bwd = detail::chain(inst, {unfrob, regroup_b, inst.pushforward_map(iI_ij, into_h), o1.backward});

  return make_fibre_optic(inst, o1.source, o1.source_backward, Z, Zd, L, fwd, bwd);
}

/// A residual isomorphism σ : M → M' with f ; π_I!(σ • 1) = f' and
/// b = π_I!(1 • σ) ; b', if one exists. Isomorphic residuals are identified by
/// sliding, so this is the equality used for the unit laws.
template <BifibrationInstance B>
std::optional<typename B::Morphism> fibre_optic_iso(const B& inst, const FibreOptic<B>& o1, const FibreOptic<B>& o2) {
  if (!(o1.source == o2.source) || !(o1.source_backward == o2.source_backward) || !(o1.target == o2.target) ||
      !(o1.target_backward == o2.target_backward))
    throw ShapeError("fibre_optic_iso: optics have different boundaries");
  const auto& I = inst.base_of(o1.source);
  const auto& J = inst.base_of(o1.target);
  auto pi = base::proj_left(I, J);
  auto y = inst.pullback(base::proj_right(I, J), o1.target);
  auto yd = inst.pullback(base::proj_right(I, J), o1.target_backward);
  for (const auto& s : inst.homs(o1.residual, o2.residual)) {
    if (!inst.is_iso(s)) continue;
    if (!inst.equal(inst.compose(o1.forward, inst.pushforward_map(pi, inst.tensor_map(s, inst.identity(y)))),
                    o2.forward))
      continue;
    if (inst.equal(o1.backward, inst.compose(inst.pushforward_map(pi, inst.tensor_map(inst.identity(yd), s)),
                                             o2.backward)))
      return s;
  }
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Specialisation to set-indexed optics

inline IndexedFamily fam_boundary(const FamObject& x, const FamObject& xd) {
  if (x.base != xd.base) throw ShapeError("fam_boundary: forward and backward over different bases");
  std::vector<Boundary> comps;
  for (Index i = 0; i < x.base.size(); ++i) comps.push_back(Boundary{x.family[i], xd.family[i]});
  return IndexedFamily(x.base, std::move(comps));
}

inline std::pair<FamObject, FamObject> fam_objects(const IndexedFamily& f) {
  std::vector<FinSet> fwd, bwd;
  for (const auto& c : f.components) {
    fwd.push_back(c.forward);
    bwd.push_back(c.backward);
  }
  return {FamObject(f.index, fwd), FamObject(f.index, bwd)};
}

/// The residual over I×J unpacks row-major into the grid M_ij; the forward
/// component at i lands in (π_I!(M • π_J^*Y))_i = Σ_j M_ij × Y_j, which is the
/// indexed forward layout verbatim.
inline IndexedOptic<FinSetCategory> fibre_to_indexed(const FibreOptic<FamInstance>& o) {
  auto src = fam_boundary(o.source, o.source_backward);
  auto tgt = fam_boundary(o.target, o.target_backward);
  ResidualMatrix m(src.index, tgt.index, o.residual.family);
  return IndexedOptic<FinSetCategory>(src, tgt, m, o.forward.components, o.backward.components);
}

inline FibreOptic<FamInstance> indexed_to_fibre(const IndexedOptic<FinSetCategory>& o) {
  FamInstance inst;
  auto [x, xd] = fam_objects(o.source);
  auto [y, yd] = fam_objects(o.target);
  FamObject m(product(o.source.index, o.target.index), o.matrix.entries);
  FamMorphism f(x, fibre_forward_object(inst, x.base, y.base, m, y), o.forwards);
  FamMorphism b(fibre_backward_object(inst, x.base, y.base, yd, m), xd, o.backwards);
  return make_fibre_optic(inst, x, xd, y, yd, m, f, b);
}

/// Fibre optics over the one-point base are plain optics.
inline Optic<FinSetCategory> fibre_to_optic(const FibreOptic<FamInstance>& o) {
  return indexed_to_optic(fibre_to_indexed(o));
}

inline Optic<KernelCategory> fibre_to_optic(const FibreOptic<DMarkInstance>& o) {
  auto one = FinSet(1);
  for (const auto* x : {&o.source, &o.source_backward, &o.target, &o.target_backward})
    if (x->base() != one) throw ShapeError("fibre_to_optic: needs the one-point base");
  return Optic<KernelCategory>(Boundary{o.source.carrier(), o.source_backward.carrier()},
                               Boundary{o.target.carrier(), o.target_backward.carrier()}, o.residual.carrier(),
                               o.forward.kernel, o.backward.kernel);
}

inline FibreOptic<DMarkInstance> optic_to_fibre(const Optic<KernelCategory>& o) {
  DMarkInstance inst;
  auto over_point = [](const FinSet& s) { return DMarkObject{FiniteFunction::terminal(s)}; };
  auto x = over_point(o.source.forward), xd = over_point(o.source.backward);
  auto y = over_point(o.target.forward), yd = over_point(o.target.backward);
  auto m = over_point(o.residual);
  auto fo = fibre_forward_object(inst, FinSet(1), FinSet(1), m, y);
  auto bo = fibre_backward_object(inst, FinSet(1), FinSet(1), yd, m);
  return make_fibre_optic(inst, x, xd, y, yd, m, inst.make(x, fo, o.forward), inst.make(bo, xd, o.backward));
}

}  // namespace fiboptic
