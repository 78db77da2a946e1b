#pragma once

// Set-indexed optics: families of boundaries over a finite index set, residual
// matrices composed by matrix multiplication, and the normalization to
// dependent lenses for the cartesian action.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/pending/disjoint_sets.hpp>

#include "fiboptic/fincat.hpp"
#include "fiboptic/lens.hpp"
#include "fiboptic/optic.hpp"

namespace fiboptic {

struct IndexedFamily {
  FinSet index;
  std::vector<Boundary> components;

  IndexedFamily() = default;
  IndexedFamily(FinSet index_, std::vector<Boundary> components_)
      : index(std::move(index_)), components(std::move(components_)) {
    if (components.size() != index.size()) throw ShapeError("IndexedFamily: one component per index required");
  }

  const Boundary& operator[](Index i) const { return components.at(i); }
  std::size_t size() const noexcept { return components.size(); }

  friend bool operator==(const IndexedFamily& a, const IndexedFamily& b) {
    return a.index == b.index && a.components == b.components;
  }
  friend auto operator<=>(const IndexedFamily& a, const IndexedFamily& b) {
    if (auto c = a.index <=> b.index; c != 0) return c;
    return a.components <=> b.components;
  }
};

inline std::string to_string(const IndexedFamily& f) {
  std::string s = "[";
  for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + to_string(f[i]);
  return s + "]";
}

inline void to_json(json& j, const IndexedFamily& f) { j = json{{"index", f.index}, {"components", f.components}}; }
inline void from_json(const json& j, IndexedFamily& f) {
  f = IndexedFamily(j.at("index").get<FinSet>(), j.at("components").get<std::vector<Boundary>>());
}

/// Positions Σ_i X_i with directions X'_i at (i, x).
inline Container family_container(const IndexedFamily& f) {
  std::vector<FinSet> dirs;
  for (const auto& c : f.components)
    for (Index x = 0; x < c.forward.size(); ++x) dirs.push_back(c.backward);
  FinSet positions(dirs.size());
  return Container(positions, std::move(dirs));
}

/// Every family with |I| <= max_index and component sizes <= max_size.
inline std::vector<IndexedFamily> all_families(std::size_t max_index, std::size_t max_size) {
  auto bs = all_boundaries(max_size);
  std::vector<IndexedFamily> out;
  for (std::size_t n = 0; n <= max_index; ++n) {
    std::vector<std::size_t> radices(n, bs.size());
    if (n == 0) {
      out.emplace_back(FinSet(0), std::vector<Boundary>{});
      continue;
    }
    for_each_tuple(radices, [&](const std::vector<Index>& t) {
      std::vector<Boundary> comps;
      for (auto k : t) comps.push_back(bs[k]);
      out.emplace_back(FinSet(n), std::move(comps));
    });
  }
  return out;
}

// --------------------------------------------------------------------------
// Residual matrices

struct ResidualMatrix {
  FinSet rows;
  FinSet cols;
  std::vector<FinSet> entries;  // row-major

  ResidualMatrix() = default;
  ResidualMatrix(FinSet rows_, FinSet cols_, std::vector<FinSet> entries_)
      : rows(std::move(rows_)), cols(std::move(cols_)), entries(std::move(entries_)) {
    if (entries.size() != rows.size() * cols.size()) throw ShapeError("ResidualMatrix: grid has the wrong shape");
  }

  const FinSet& at(Index i, Index j) const { return entries.at(i * cols.size() + j); }

  std::vector<FinSet> row(Index i) const {
    return std::vector<FinSet>(entries.begin() + i * cols.size(), entries.begin() + (i + 1) * cols.size());
  }

  friend bool operator==(const ResidualMatrix& a, const ResidualMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.entries == b.entries;
  }
};

inline void to_json(json& j, const ResidualMatrix& m) {
  json grid = json::array();
  for (Index i = 0; i < m.rows.size(); ++i) grid.push_back(m.row(i));
  j = json{{"rows", m.rows}, {"cols", m.cols}, {"entries", grid}};
}
inline void from_json(const json& j, ResidualMatrix& m) {
  auto rows = j.at("rows").get<FinSet>();
  auto cols = j.at("cols").get<FinSet>();
  std::vector<FinSet> entries;
  const auto& grid = j.at("entries");
  if (!grid.is_array() || grid.size() != rows.size()) throw ShapeError("ResidualMatrix: grid has the wrong shape");
  for (const auto& r : grid) {
    if (!r.is_array() || r.size() != cols.size()) throw ShapeError("ResidualMatrix: grid has the wrong shape");
    for (const auto& e : r) entries.push_back(e.get<FinSet>());
  }
  m = ResidualMatrix(rows, cols, std::move(entries));
}

/// Unit on the diagonal, the empty set elsewhere.
inline ResidualMatrix identity_matrix(const FinSet& index) {
  std::vector<FinSet> e;
  for (Index i = 0; i < index.size(); ++i)
    for (Index j = 0; j < index.size(); ++j) e.emplace_back(i == j ? 1 : 0);
  return ResidualMatrix(index, index, std::move(e));
}

/// (MN)_ik = Σ_j M_ij ⊗ N_jk, summed over j ascending.
inline ResidualMatrix matrix_multiply(const ResidualMatrix& m, const ResidualMatrix& n) {
  if (m.cols != n.rows) throw CompositionError("matrix_multiply: inner dimensions differ");
  std::vector<FinSet> e;
  for (Index i = 0; i < m.rows.size(); ++i)
    for (Index k = 0; k < n.cols.size(); ++k) {
      std::vector<FinSet> terms;
      for (Index j = 0; j < m.cols.size(); ++j) terms.push_back(product(m.at(i, j), n.at(j, k)));
      e.push_back(SumLayout(terms).carrier());
    }
  return ResidualMatrix(m.rows, n.cols, std::move(e));
}

/// Every matrix of the given shape with entries of size <= bound, entry 0
/// varying slowest.
inline std::vector<ResidualMatrix> all_matrices(const FinSet& rows, const FinSet& cols, std::size_t bound) {
  std::vector<ResidualMatrix> out;
  std::vector<std::size_t> radices(rows.size() * cols.size(), bound + 1);
  if (radices.empty()) return {ResidualMatrix(rows, cols, {})};
  for_each_tuple(radices, [&](const std::vector<Index>& t) {
    std::vector<FinSet> e;
    for (auto s : t) e.emplace_back(s);
    out.emplace_back(rows, cols, std::move(e));
  });
  return out;
}

/// Σ_j M_j • Y_j for a row of residuals.
inline SumLayout forward_layout(std::span<const FinSet> row, const IndexedFamily& tgt) {
  std::vector<FinSet> parts;
  for (Index j = 0; j < row.size(); ++j) parts.push_back(product(row[j], tgt[j].forward));
  return SumLayout(std::move(parts));
}

/// Σ_j Y'_j • M_j for a row of residuals.
inline SumLayout backward_layout(std::span<const FinSet> row, const IndexedFamily& tgt) {
  std::vector<FinSet> parts;
  for (Index j = 0; j < row.size(); ++j) parts.push_back(product(tgt[j].backward, row[j]));
  return SumLayout(std::move(parts));
}

// --------------------------------------------------------------------------
// IndexedOptic

template <class Cat>
struct IndexedOptic {
  using Morphism = typename Cat::Morphism;

  IndexedFamily source;
  IndexedFamily target;
  ResidualMatrix matrix;
  std::vector<Morphism> forwards;   // X_i → Σ_j M_ij • Y_j
  std::vector<Morphism> backwards;  // Σ_j Y'_j • M_ij → X'_i

  IndexedOptic() = default;
  IndexedOptic(IndexedFamily source_, IndexedFamily target_, ResidualMatrix matrix_, std::vector<Morphism> forwards_,
               std::vector<Morphism> backwards_)
      : source(std::move(source_)), target(std::move(target_)), matrix(std::move(matrix_)),
        forwards(std::move(forwards_)), backwards(std::move(backwards_)) {
    if (matrix.rows != source.index || matrix.cols != target.index)
      throw ShapeError("IndexedOptic: residual matrix must be |I|×|J|");
    if (forwards.size() != source.size() || backwards.size() != source.size())
      throw ShapeError("IndexedOptic: one forward and one backward part per source index");
    for (Index i = 0; i < source.size(); ++i) {
      auto row = matrix.row(i);
      if (forwards[i].dom() != source[i].forward || forwards[i].cod() != forward_layout(row, target).carrier())
        throw ShapeError("IndexedOptic: forward " + std::to_string(i) + " must map X_i to Σ_j M_ij•Y_j");
      if (backwards[i].dom() != backward_layout(row, target).carrier() || backwards[i].cod() != source[i].backward)
        throw ShapeError("IndexedOptic: backward " + std::to_string(i) + " must map Σ_j Y'_j•M_ij to X'_i");
    }
  }

  friend bool operator==(const IndexedOptic& a, const IndexedOptic& b) {
    return a.source == b.source && a.target == b.target && a.matrix == b.matrix && a.forwards == b.forwards &&
           a.backwards == b.backwards;
  }
};

template <class Cat>
void to_json(json& j, const IndexedOptic<Cat>& o) {
  j = json{{"source", o.source},     {"target", o.target},       {"matrix", o.matrix},
           {"forwards", o.forwards}, {"backwards", o.backwards}};
}
template <class Cat>
void from_json(const json& j, IndexedOptic<Cat>& o) {
  using M = typename Cat::Morphism;
  o = IndexedOptic<Cat>(j.at("source").get<IndexedFamily>(), j.at("target").get<IndexedFamily>(),
                        j.at("matrix").get<ResidualMatrix>(), j.at("forwards").get<std::vector<M>>(),
                        j.at("backwards").get<std::vector<M>>());
}

template <class Cat>
IndexedOptic<Cat> identity_indexed_optic(const SelfAction<Cat>& act, const IndexedFamily& fam) {
  auto mat = identity_matrix(fam.index);
  std::vector<typename Cat::Morphism> fwd, bwd;
  for (Index i = 0; i < fam.size(); ++i) {
    auto row = mat.row(i);
    auto fl = forward_layout(row, fam);
    auto bl = backward_layout(row, fam);
    const auto& x = fam[i];
    std::vector<Index> f(x.forward.size()), b(bl.carrier().size());
    for (Index e = 0; e < f.size(); ++e) f[e] = fl.inject(i, e);  // (0, x) in 1 × X_i
    for (Index e = 0; e < b.size(); ++e) b[e] = bl.locate(e).second;  // (x', 0) in X'_i × 1
    fwd.push_back(act.cat.lift(FiniteFunction(x.forward, fl.carrier(), std::move(f))));
    bwd.push_back(act.cat.lift(FiniteFunction(bl.carrier(), x.backward, std::move(b))));
  }
  return IndexedOptic<Cat>(fam, fam, std::move(mat), std::move(fwd), std::move(bwd));
}

namespace detail {

template <class Cat>
typename Cat::Morphism sum_of(const Cat& cat, std::vector<typename Cat::Morphism> parts) {
  return cat.sum(std::span<const typename Cat::Morphism>(parts));
}

inline FiniteFunction sum_fn(std::vector<FiniteFunction> parts) { return sum_map(parts); }

}  // namespace detail

/// Row i of the composite. forward: f_i ; Σ_j (M_ij • g_j) ; reshuffle, where
/// the reshuffle is Σ_j distribute_left ; Σ_j Σ_k multiplicator ; interchange ;
/// Σ_k distribute_right⁻¹. backward: Σ_k distribute_left ;
/// Σ_k Σ_j right multiplicator ; interchange ; Σ_j distribute_right⁻¹ ;
/// Σ_j (h_j • M_ij) ; b_i.
template <class Cat>
IndexedOptic<Cat> iopt_compose(const IndexedOptic<Cat>& o1, const IndexedOptic<Cat>& o2, const SelfAction<Cat>& act) {
  if (o1.target != o2.source)
    throw CompositionError("iopt_compose: target " + to_string(o1.target) + " differs from source " +
                           to_string(o2.source));
  using Morphism = typename Cat::Morphism;
  const auto& c = act.cat;
  const auto& A = o1.source;
  const auto& B = o1.target;
  const auto& C = o2.target;
  const auto& M = o1.matrix;
  const auto& N = o2.matrix;
  auto MN = matrix_multiply(M, N);
  const std::size_t nj = B.size(), nk = C.size();

  std::vector<Morphism> fwd, bwd;
  for (Index i = 0; i < A.size(); ++i) {
    // forward
    std::vector<Morphism> lifted;
    std::vector<FiniteFunction> dl, assoc_rows;
    std::vector<std::vector<FinSet>> grid(nj, std::vector<FinSet>(nk));
    for (Index j = 0; j < nj; ++j) {
      const auto& m = M.at(i, j);
      lifted.push_back(act.left_apply(m, o2.forwards[j]));
      auto nrow = N.row(j);
      auto inner = forward_layout(nrow, C);
      dl.push_back(distribute_left(m, inner.summands()));
      std::vector<FiniteFunction> per_k;
      for (Index k = 0; k < nk; ++k) {
        per_k.push_back(associator(m, N.at(j, k), C[k].forward));
        grid[j][k] = product(product(m, N.at(j, k)), C[k].forward);
      }
      assoc_rows.push_back(detail::sum_fn(per_k));
    }
    std::vector<FiniteFunction> undist;
    for (Index k = 0; k < nk; ++k) {
      std::vector<FinSet> terms;
      for (Index j = 0; j < nj; ++j) terms.push_back(product(M.at(i, j), N.at(j, k)));
      undist.push_back(distribute_right(terms, C[k].forward).inverse());
    }
    auto reshuffle = compose_fn(
        {detail::sum_fn(dl), detail::sum_fn(assoc_rows), interchange_sums(grid), detail::sum_fn(undist)});
    fwd.push_back(c.compose(c.compose(o1.forwards[i], detail::sum_of(c, lifted)), c.lift(reshuffle)));

    // backward
    std::vector<FiniteFunction> bdl, rm_rows;
    std::vector<std::vector<FinSet>> bgrid(nk, std::vector<FinSet>(nj));
    for (Index k = 0; k < nk; ++k) {
      std::vector<FinSet> terms;
      for (Index j = 0; j < nj; ++j) terms.push_back(product(M.at(i, j), N.at(j, k)));
      bdl.push_back(distribute_left(C[k].backward, terms));
      std::vector<FiniteFunction> per_j;
      for (Index j = 0; j < nj; ++j) {
        per_j.push_back(right_multiplicator_fn(C[k].backward, M.at(i, j), N.at(j, k)));
        bgrid[k][j] = product(product(C[k].backward, N.at(j, k)), M.at(i, j));
      }
      rm_rows.push_back(detail::sum_fn(per_j));
    }
    std::vector<FiniteFunction> bundist;
    std::vector<Morphism> applied;
    for (Index j = 0; j < nj; ++j) {
      std::vector<FinSet> terms;
      for (Index k = 0; k < nk; ++k) terms.push_back(product(C[k].backward, N.at(j, k)));
      bundist.push_back(distribute_right(terms, M.at(i, j)).inverse());
      applied.push_back(act.right_apply(o2.backwards[j], M.at(i, j)));
    }
    auto breshuffle = compose_fn(
        {detail::sum_fn(bdl), detail::sum_fn(rm_rows), interchange_sums(bgrid), detail::sum_fn(bundist)});
    bwd.push_back(c.compose(c.compose(c.lift(breshuffle), detail::sum_of(c, applied)), o1.backwards[i]));
  }
  return IndexedOptic<Cat>(A, C, std::move(MN), std::move(fwd), std::move(bwd));
}

/// Forward (i, x) ↦ (j, y) where f_i(x) = (j, m, y); backward at (i, x) sends
/// y' to b_i(j, y', m).
template <class Cat>
DepLens iopt_to_dlens(const IndexedOptic<Cat>& o) {
  if constexpr (!Cat::cartesian) {
    throw UnsupportedInstance("iopt_to_dlens: requires the cartesian action on FinSet");
  } else {
    auto src = family_container(o.source);
    auto tgt = family_container(o.target);
    std::vector<FinSet> xs, ys;
    for (const auto& c : o.source.components) xs.push_back(c.forward);
    for (const auto& c : o.target.components) ys.push_back(c.forward);
    SumLayout xpos(xs), ypos(ys);
    std::vector<Index> fwd(src.positions.size());
    std::vector<FiniteFunction> back;
    for (Index i = 0; i < o.source.size(); ++i) {
      auto row = o.matrix.row(i);
      auto fl = forward_layout(row, o.target);
      auto bl = backward_layout(row, o.target);
      for (Index x = 0; x < o.source[i].forward.size(); ++x) {
        auto [j, e] = fl.locate(o.forwards[i](x));
        auto [m, y] = ProductWitness(row[j], o.target[j].forward).unpair(e);
        fwd[xpos.inject(i, x)] = ypos.inject(j, y);
        ProductWitness ym(o.target[j].backward, row[j]);
        std::vector<Index> t(o.target[j].backward.size());
        for (Index yd = 0; yd < t.size(); ++yd) t[yd] = o.backwards[i](bl.inject(j, ym.pair(yd, m)));
        back.emplace_back(o.target[j].backward, o.source[i].backward, std::move(t));
      }
    }
    return DepLens(src, tgt, FiniteFunction(src.positions, tgt.positions, std::move(fwd)), std::move(back));
  }
}

/// The plain optic of a 1×1 indexed optic, and back. The single-summand
/// layouts coincide with the plain action objects, so tables carry over.
template <class Cat>
Optic<Cat> indexed_to_optic(const IndexedOptic<Cat>& o) {
  if (o.source.size() != 1 || o.target.size() != 1) throw ShapeError("indexed_to_optic: needs |I| = |J| = 1");
  return Optic<Cat>(o.source[0], o.target[0], o.matrix.at(0, 0), o.forwards[0], o.backwards[0]);
}

template <class Cat>
IndexedOptic<Cat> optic_to_indexed(const Optic<Cat>& o) {
  IndexedFamily s(FinSet(1), {o.source}), t(FinSet(1), {o.target});
  return IndexedOptic<Cat>(s, t, ResidualMatrix(FinSet(1), FinSet(1), {o.residual}), {o.forward}, {o.backward});
}

// --------------------------------------------------------------------------
// Sliding classes

/// Row i of an indexed hom: representatives (M_i•, f_i, b_i) with entries of
/// size <= entry_bound, joined by sliding along entrywise mediators
/// r_j : M_ij → M'_ij. Sliding acts on rows independently, so the classes of
/// the whole hom are tuples of row classes.
template <class Cat>
class IndexedRowGraph {
 public:
  using Morphism = typename Cat::Morphism;

  IndexedRowGraph(SelfAction<Cat> act, Boundary src, IndexedFamily tgt, std::size_t entry_bound,
                  std::uint64_t ceiling = kDefaultCeiling)
      : act_(std::move(act)), src_(std::move(src)), tgt_(std::move(tgt)), bound_(entry_bound) {
    const auto& c = act_.cat;
    const std::size_t nj = tgt_.size();
    std::vector<std::size_t> radices(nj, bound_ + 1);
    auto add_level = [&](const std::vector<Index>& sizes) {
      std::vector<FinSet> row;
      for (auto s : sizes) row.emplace_back(s);
      auto fl = forward_layout(row, tgt_);
      auto bl = backward_layout(row, tgt_);
      Level l{row, HomSet<Cat>(c, src_.forward, fl.carrier()), HomSet<Cat>(c, bl.carrier(), src_.backward),
              vertex_count_};
      vertex_count_ += l.fwd.size() * l.bwd.size();
      if (vertex_count_ > ceiling) throw EnumerationLimit("IndexedRowGraph: vertex count exceeds the ceiling");
      levels_.push_back(std::move(l));
    };
    if (nj == 0)
      add_level({});
    else
      for_each_tuple(radices, add_level);

    boost::disjoint_sets_with_storage<> sets(vertex_count_);
    for (const auto& lm : levels_)
      for (const auto& ln : levels_) {
        std::vector<std::vector<Morphism>> meds;
        std::vector<std::size_t> mr;
        for (Index j = 0; j < nj; ++j) {
          meds.push_back(c.homs(lm.row[j], ln.row[j]));
          mr.push_back(meds.back().size());
        }
        auto visit = [&](const std::vector<Index>& pick) {
          std::vector<Morphism> push, pull;
          for (Index j = 0; j < nj; ++j) {
            push.push_back(act_.left_map(meds[j][pick[j]], tgt_[j].forward));
            pull.push_back(act_.right_map(tgt_[j].backward, meds[j][pick[j]]));
          }
          auto pu = detail::sum_of(c, push);
          auto pl = detail::sum_of(c, pull);
          std::vector<std::optional<std::size_t>> pulled(ln.bwd.size());
          for (std::size_t bi = 0; bi < ln.bwd.size(); ++bi) pulled[bi] = lm.bwd.find(c.compose(pl, ln.bwd[bi]));
          for (std::size_t fi = 0; fi < lm.fwd.size(); ++fi) {
            auto pushed = ln.fwd.find(c.compose(lm.fwd[fi], pu));
            if (!pushed) continue;
            for (std::size_t bi = 0; bi < ln.bwd.size(); ++bi) {
              if (!pulled[bi]) continue;
              ++edge_count_;
              sets.union_set(lm.offset + fi * lm.bwd.size() + *pulled[bi], ln.offset + *pushed * ln.bwd.size() + bi);
            }
          }
        };
        if (nj == 0)
          visit({});
        else
          for_each_tuple(mr, visit);
      }

    component_.assign(vertex_count_, 0);
    std::map<std::size_t, std::size_t> ids;
    for (std::size_t v = 0; v < vertex_count_; ++v) component_[v] = ids.emplace(sets.find_set(v), ids.size()).first->second;
    component_count_ = ids.size();
  }

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::uint64_t edge_count() const noexcept { return edge_count_; }
  std::size_t component_count() const noexcept { return component_count_; }
  const std::vector<std::size_t>& components() const noexcept { return component_; }

  /// (row residuals, forward, backward) of vertex v.
  std::tuple<std::vector<FinSet>, Morphism, Morphism> at(std::size_t v) const {
    for (const auto& l : levels_)
      if (v >= l.offset && v < l.offset + l.fwd.size() * l.bwd.size()) {
        auto k = v - l.offset;
        return {l.row, l.fwd[k / l.bwd.size()], l.bwd[k % l.bwd.size()]};
      }
    throw ShapeError("IndexedRowGraph::at: vertex out of range");
  }

  std::optional<std::size_t> vertex_of(std::span<const FinSet> row, const Morphism& f, const Morphism& b) const {
    for (const auto& l : levels_)
      if (std::equal(l.row.begin(), l.row.end(), row.begin(), row.end())) {
        auto fi = l.fwd.find(f);
        auto bi = l.bwd.find(b);
        if (!fi || !bi) return std::nullopt;
        return l.offset + *fi * l.bwd.size() + *bi;
      }
    return std::nullopt;
  }

 private:
  struct Level {
    std::vector<FinSet> row;
    HomSet<Cat> fwd;
    HomSet<Cat> bwd;
    std::size_t offset;
  };

  SelfAction<Cat> act_;
  Boundary src_;
  IndexedFamily tgt_;
  std::size_t bound_;
  std::vector<Level> levels_;
  std::vector<std::size_t> component_;
  std::size_t vertex_count_ = 0;
  std::uint64_t edge_count_ = 0;
  std::size_t component_count_ = 0;
};

struct IndexedClassCount {
  std::uint64_t classes = 1;
  std::uint64_t representatives = 1;
  std::vector<std::uint64_t> row_classes;
};

/// Sliding classes of IndexedOptic hom-data src → tgt with entries <= entry_bound,
/// as the product of the per-row class counts.
inline IndexedClassCount count_indexed_classes(const IndexedFamily& src, const IndexedFamily& tgt,
                                               std::size_t entry_bound, std::uint64_t ceiling = kDefaultCeiling) {
  IndexedClassCount out;
  for (const auto& comp : src.components) {
    IndexedRowGraph<FinSetCategory> g(CartesianAction{}, comp, tgt, entry_bound, ceiling);
    out.row_classes.push_back(g.component_count());
    auto c = checked_mul(out.classes, g.component_count());
    auto r = checked_mul(out.representatives, g.vertex_count());
    if (!c || !r) throw EnumerationLimit("count_indexed_classes: overflow");
    out.classes = *c;
    out.representatives = *r;
  }
  return out;
}

/// Brute-force class count over whole IndexedOptics (all rows at once), with
/// mediators acting on the full matrix. Only feasible for tiny homs; used to
/// cross-check the row factorization.
inline std::uint64_t count_indexed_classes_joint(const IndexedFamily& src, const IndexedFamily& tgt,
                                                 std::size_t entry_bound, std::uint64_t ceiling = kDefaultCeiling) {
  using Morphism = FiniteFunction;
  FinSetCategory c;
  CartesianAction act;
  struct Rep {
    ResidualMatrix mat;
    std::vector<Morphism> f, b;
  };
  // whole-hom representatives, keyed by serialized form
  std::vector<Rep> reps;
  std::map<std::string, std::size_t> index;
  auto key = [](const ResidualMatrix& m, const std::vector<Morphism>& f, const std::vector<Morphism>& b) {
    return json{{"m", m.entries}, {"f", f}, {"b", b}}.dump();
  };
  for (const auto& mat : all_matrices(src.index, tgt.index, entry_bound)) {
    std::vector<std::vector<Morphism>> fs, bs;
    std::vector<std::size_t> radices;
    for (Index i = 0; i < src.size(); ++i) {
      auto row = mat.row(i);
      fs.push_back(all_functions(src[i].forward, forward_layout(row, tgt).carrier(), ceiling));
      bs.push_back(all_functions(backward_layout(row, tgt).carrier(), src[i].backward, ceiling));
      radices.push_back(fs.back().size());
      radices.push_back(bs.back().size());
    }
    auto emit = [&](const std::vector<Index>& t) {
      Rep r{mat, {}, {}};
      for (Index i = 0; i < src.size(); ++i) {
        r.f.push_back(fs[i][t[2 * i]]);
        r.b.push_back(bs[i][t[2 * i + 1]]);
      }
      index.emplace(key(r.mat, r.f, r.b), reps.size());
      reps.push_back(std::move(r));
      if (reps.size() > ceiling) throw EnumerationLimit("count_indexed_classes_joint: too many representatives");
    };
    if (radices.empty())
      emit({});
    else
      for_each_tuple(radices, emit);
  }

  boost::disjoint_sets_with_storage<> sets(reps.size());
  for (const auto& from : reps)
    for (const auto& to_mat : all_matrices(src.index, tgt.index, entry_bound)) {
      // every mediator family r_ij : M_ij → M'_ij
      std::vector<std::vector<Morphism>> meds;
      std::vector<std::size_t> radices;
      for (std::size_t e = 0; e < from.mat.entries.size(); ++e) {
        meds.push_back(all_functions(from.mat.entries[e], to_mat.entries[e], ceiling));
        radices.push_back(meds.back().size());
      }
      auto visit = [&](const std::vector<Index>& pick) {
        // to = (M', f ; push, b') for every b' with pull ; b' = from.b
        std::vector<Morphism> f2;
        std::vector<std::vector<Morphism>> b2_options;
        for (Index i = 0; i < src.size(); ++i) {
          std::vector<Morphism> push, pull;
          for (Index j = 0; j < tgt.size(); ++j) {
            const auto& r = meds[i * tgt.size() + j][pick[i * tgt.size() + j]];
            push.push_back(act.left_map(r, tgt[j].forward));
            pull.push_back(act.right_map(tgt[j].backward, r));
          }
          f2.push_back(c.compose(from.f[i], detail::sum_of(c, push)));
          auto pl = detail::sum_of(c, pull);
          std::vector<Morphism> ok;
          for (const auto& b : all_functions(pl.cod(), src[i].backward, ceiling))
            if (c.compose(pl, b) == from.b[i]) ok.push_back(b);
          b2_options.push_back(std::move(ok));
        }
        std::vector<std::size_t> br;
        for (const auto& o : b2_options) br.push_back(o.size());
        auto link = [&](const std::vector<Index>& bp) {
          std::vector<Morphism> b2;
          for (Index i = 0; i < bp.size(); ++i) b2.push_back(b2_options[i][bp[i]]);
          sets.union_set(index.at(key(from.mat, from.f, from.b)), index.at(key(to_mat, f2, b2)));
        };
        if (br.empty())
          link({});
        else
          for_each_tuple(br, link);
      };
      if (radices.empty())
        visit({});
      else
        for_each_tuple(radices, visit);
    }
  std::set<std::size_t> roots;
  for (std::size_t v = 0; v < reps.size(); ++v) roots.insert(sets.find_set(v));
  return roots.size();
}

// --------------------------------------------------------------------------
// Enumeration of hom-data

/// All representatives of row i (entries <= entry_bound) as (row, f, b).
template <class Cat>
std::vector<std::tuple<std::vector<FinSet>, typename Cat::Morphism, typename Cat::Morphism>> enumerate_indexed_row(
    const SelfAction<Cat>& act, const Boundary& src, const IndexedFamily& tgt, std::size_t entry_bound,
    std::uint64_t ceiling = kDefaultCeiling) {
  std::vector<std::tuple<std::vector<FinSet>, typename Cat::Morphism, typename Cat::Morphism>> out;
  std::vector<std::size_t> radices(tgt.size(), entry_bound + 1);
  auto visit = [&](const std::vector<Index>& sizes) {
    std::vector<FinSet> row;
    for (auto s : sizes) row.emplace_back(s);
    auto fs = act.cat.homs(src.forward, forward_layout(row, tgt).carrier());
    auto bs = act.cat.homs(backward_layout(row, tgt).carrier(), src.backward);
    for (const auto& f : fs)
      for (const auto& b : bs) {
        out.emplace_back(row, f, b);
        if (out.size() > ceiling) throw EnumerationLimit("enumerate_indexed_row: row exceeds the ceiling");
      }
  };
  if (tgt.size() == 0)
    visit({});
  else
    for_each_tuple(radices, visit);
  return out;
}

/// Assembles an IndexedOptic from one row representative per source index.
template <class Cat>
IndexedOptic<Cat> assemble_indexed(
    const IndexedFamily& src, const IndexedFamily& tgt,
    const std::vector<std::tuple<std::vector<FinSet>, typename Cat::Morphism, typename Cat::Morphism>>& rows) {
  std::vector<FinSet> entries;
  std::vector<typename Cat::Morphism> f, b;
  for (const auto& [row, fi, bi] : rows) {
    entries.insert(entries.end(), row.begin(), row.end());
    f.push_back(fi);
    b.push_back(bi);
  }
  return IndexedOptic<Cat>(src, tgt, ResidualMatrix(src.index, tgt.index, std::move(entries)), std::move(f),
                           std::move(b));
}

// --------------------------------------------------------------------------
// Polynomial functors

struct PolynomialCount {
  std::uint64_t value = 0;
  std::size_t probe_bound = 0;
  std::uint64_t probe_elements = 0;
  bool probe_relative = true;
};

/// Counts families α_Y : F(Y) → G(Y), Y ranging over sets of size <= probe_bound,
/// natural for every function between them, where F(Y) = Σ_i [X'_i, Y] × X_i
/// and likewise G from tgt. Elements (i, φ, x) of F(Y) are encoded with φ as
/// a table of length |X'_i|.
inline PolynomialCount count_polynomial_nat(const IndexedFamily& src, const IndexedFamily& tgt,
                                            std::size_t probe_bound, std::uint64_t ceiling = kDefaultCeiling) {
  struct Elem {
    std::size_t summand;
    std::vector<Index> phi;
    Index x;
  };
  auto elements = [&](const IndexedFamily& fam, std::size_t y) {
    std::vector<Elem> out;
    for (std::size_t i = 0; i < fam.size(); ++i)
      for (const auto& phi : all_functions(fam[i].backward, FinSet(y), ceiling))
        for (Index x = 0; x < fam[i].forward.size(); ++x) out.push_back({i, phi.table(), x});
    return out;
  };
  auto elem_index = [](const std::vector<Elem>& es, const Elem& e) -> std::size_t {
    for (std::size_t k = 0; k < es.size(); ++k)
      if (es[k].summand == e.summand && es[k].x == e.x && es[k].phi == e.phi) return k;
    throw ShapeError("count_polynomial_nat: element not found");
  };

  PolynomialCount out;
  out.probe_bound = probe_bound;
  std::vector<std::vector<Elem>> F(probe_bound + 1), G(probe_bound + 1);
  std::vector<std::size_t> offset(probe_bound + 2, 0);
  for (std::size_t y = 0; y <= probe_bound; ++y) {
    F[y] = elements(src, y);
    G[y] = elements(tgt, y);
    offset[y + 1] = offset[y] + F[y].size();
  }
  const std::size_t nodes = offset[probe_bound + 1];
  out.probe_elements = nodes;
  if (nodes > ceiling) throw EnumerationLimit("count_polynomial_nat: probe explosion");

  // edges: node (y, e) → node (y', F(h) e) carrying the action of G(h) on values
  struct Edge {
    std::size_t from, to;
    std::vector<std::size_t> act;  // G(h) as a table on G(y) indices
  };
  std::vector<Edge> edges;
  for (std::size_t y = 0; y <= probe_bound; ++y)
    for (std::size_t y2 = 0; y2 <= probe_bound; ++y2)
      for (const auto& h : all_functions(FinSet(y), FinSet(y2), ceiling)) {
        auto map_elem = [&](const Elem& e) {
          Elem m = e;
          for (auto& v : m.phi) v = h(v);
          return m;
        };
        std::vector<std::size_t> gact(G[y].size());
        for (std::size_t k = 0; k < G[y].size(); ++k) gact[k] = elem_index(G[y2], map_elem(G[y][k]));
        for (std::size_t k = 0; k < F[y].size(); ++k) {
          edges.push_back({offset[y] + k, offset[y2] + elem_index(F[y2], map_elem(F[y][k])), gact});
          if (edges.size() > ceiling) throw EnumerationLimit("count_polynomial_nat: probe explosion");
        }
      }

  std::vector<std::size_t> level(nodes);
  for (std::size_t y = 0; y <= probe_bound; ++y)
    for (std::size_t k = offset[y]; k < offset[y + 1]; ++k) level[k] = y;
  std::vector<std::vector<std::size_t>> out_edges(nodes), in_edges(nodes);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out_edges[edges[e].from].push_back(e);
    in_edges[edges[e].to].push_back(e);
  }

  // connected components of the category of elements
  boost::disjoint_sets_with_storage<> sets(nodes);
  for (const auto& e : edges) sets.union_set(e.from, e.to);
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t v = 0; v < nodes; ++v) comps[sets.find_set(v)].push_back(v);

  constexpr std::size_t unset = SIZE_MAX;
  std::vector<std::size_t> value(nodes, unset);
  std::uint64_t total = 1;
  for (const auto& [root, members] : comps) {
    std::uint64_t solutions = 0;
    // assign in member order; forward edges force values, every edge is checked
    std::function<void(std::size_t)> search = [&](std::size_t pos) {
      while (pos < members.size() && value[members[pos]] != unset) ++pos;
      if (pos == members.size()) {
        ++solutions;
        return;
      }
      auto v = members[pos];
      for (std::size_t choice = 0; choice < G[level[v]].size(); ++choice) {
        std::vector<std::size_t> trail;
        std::vector<std::size_t> queue{v};
        value[v] = choice;
        trail.push_back(v);
        bool ok = true;
        while (ok && !queue.empty()) {
          auto u = queue.back();
          queue.pop_back();
          for (auto e : out_edges[u]) {
            auto want = edges[e].act[value[u]];
            auto t = edges[e].to;
            if (value[t] == unset) {
              value[t] = want;
              trail.push_back(t);
              queue.push_back(t);
            } else if (value[t] != want) {
              ok = false;
              break;
            }
          }
          if (!ok) break;
          for (auto e : in_edges[u]) {
            auto s = edges[e].from;
            if (value[s] != unset && edges[e].act[value[s]] != value[u]) {
              ok = false;
              break;
            }
          }
        }
        if (ok) search(pos + 1);
        for (auto t : trail) value[t] = unset;
      }
    };
    search(0);
    auto t = checked_mul(total, solutions);
    if (!t) throw EnumerationLimit("count_polynomial_nat: overflow");
    total = *t;
  }
  out.value = total;
  return out;
}

}  // namespace fiboptic
