#pragma once

// Finite base categories: finite sets with functions, and finite-support
// stochastic kernels with exact rational weights. Elements of a finite set
// are always the indices 0..n-1; labels are for display only.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "json.hpp"

namespace fiboptic {

using json = nlohmann::json;
using Index = std::size_t;

inline constexpr std::uint64_t kDefaultCeiling = 1'000'000;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Endpoints of two morphisms do not line up.
class CompositionError : public Error {
 public:
  using Error::Error;
};

/// A value violates the invariants of its type.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed the configured ceiling.
class EnumerationLimit : public Error {
 public:
  using Error::Error;
};

/// The operation is only defined for a different instance (e.g. it needs the
/// cartesian action, or the family-of-sets bifibration).
class UnsupportedInstance : public Error {
 public:
  using Error::Error;
};

// --------------------------------------------------------------------------
// Counting helpers

/// base^exp with 0^0 = 1; nullopt on overflow of 64 bits.
inline std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t result = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base == 0) return 0;
    if (__builtin_mul_overflow(result, base, &result)) return std::nullopt;
  }
  return result;
}

inline std::optional<std::uint64_t> checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) return std::nullopt;
  return r;
}

inline std::optional<std::uint64_t> checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) return std::nullopt;
  return r;
}

/// Visits every tuple t with t[k] < radices[k], in lexicographic order with
/// the last coordinate varying fastest. Visits nothing if some radix is 0.
template <class Visit>
void for_each_tuple(std::span<const std::size_t> radices, Visit&& visit) {
  for (auto r : radices)
    if (r == 0) return;
  std::vector<Index> t(radices.size(), 0);
  while (true) {
    visit(static_cast<const std::vector<Index>&>(t));
    std::size_t k = t.size();
    while (k > 0) {
      --k;
      if (++t[k] < radices[k]) break;
      t[k] = 0;
      if (k == 0) return;
    }
    if (t.empty()) return;
  }
}

// --------------------------------------------------------------------------
// FinSet

class FinSet {
 public:
  FinSet() = default;
  explicit FinSet(std::size_t size) : size_(size) {}
  FinSet(std::size_t size, std::vector<std::string> labels) : size_(size) {
    if (labels.size() != size) throw ShapeError("FinSet: label count differs from size");
    std::set<std::string> seen(labels.begin(), labels.end());
    if (seen.size() != labels.size()) throw ShapeError("FinSet: labels must be pairwise distinct");
    labels_ = std::move(labels);
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  const std::optional<std::vector<std::string>>& labels() const noexcept { return labels_; }

  std::string label(Index i) const {
    if (labels_) return (*labels_)[i];
    return std::to_string(i);
  }

  // Structural equality is equality of sizes.
  friend bool operator==(const FinSet& a, const FinSet& b) noexcept { return a.size_ == b.size_; }
  friend auto operator<=>(const FinSet& a, const FinSet& b) noexcept { return a.size_ <=> b.size_; }

 private:
  std::size_t size_ = 0;
  std::optional<std::vector<std::string>> labels_;
};

inline void to_json(json& j, const FinSet& s) {
  j = json{{"size", s.size()}};
  if (s.labels()) j["labels"] = *s.labels();
}

inline void from_json(const json& j, FinSet& s) {
  auto n = j.at("size").get<std::size_t>();
  if (j.contains("labels"))
    s = FinSet(n, j.at("labels").get<std::vector<std::string>>());
  else
    s = FinSet(n);
}

// --------------------------------------------------------------------------
// FiniteFunction

class FiniteFunction {
 public:
  FiniteFunction() = default;
  FiniteFunction(FinSet dom, FinSet cod, std::vector<Index> table)
      : dom_(std::move(dom)), cod_(std::move(cod)), table_(std::move(table)) {
    if (table_.size() != dom_.size()) throw ShapeError("FiniteFunction: table length differs from domain size");
    for (auto v : table_)
      if (v >= cod_.size()) throw ShapeError("FiniteFunction: table entry outside codomain");
  }

  static FiniteFunction identity(const FinSet& s) {
    std::vector<Index> t(s.size());
    std::iota(t.begin(), t.end(), Index{0});
    return FiniteFunction(s, s, std::move(t));
  }

  /// The unique function out of the empty set.
  static FiniteFunction initial(const FinSet& cod) { return FiniteFunction(FinSet(0), cod, {}); }

  static FiniteFunction terminal(const FinSet& dom) {
    return FiniteFunction(dom, FinSet(1), std::vector<Index>(dom.size(), 0));
  }

  const FinSet& dom() const noexcept { return dom_; }
  const FinSet& cod() const noexcept { return cod_; }
  const std::vector<Index>& table() const noexcept { return table_; }
  Index operator()(Index i) const { return table_.at(i); }

  bool injective() const {
    std::vector<bool> hit(cod_.size(), false);
    for (auto v : table_) {
      if (hit[v]) return false;
      hit[v] = true;
    }
    return true;
  }
  bool surjective() const {
    std::vector<bool> hit(cod_.size(), false);
    for (auto v : table_) hit[v] = true;
    return std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });
  }
  bool bijective() const { return dom_.size() == cod_.size() && injective(); }

  FiniteFunction inverse() const {
    if (!bijective()) throw ShapeError("FiniteFunction::inverse: not a bijection");
    std::vector<Index> t(table_.size());
    for (Index i = 0; i < table_.size(); ++i) t[table_[i]] = i;
    return FiniteFunction(cod_, dom_, std::move(t));
  }

  friend bool operator==(const FiniteFunction& a, const FiniteFunction& b) {
    return a.dom_ == b.dom_ && a.cod_ == b.cod_ && a.table_ == b.table_;
  }
  friend auto operator<=>(const FiniteFunction& a, const FiniteFunction& b) {
    if (auto c = a.dom_ <=> b.dom_; c != 0) return c;
    if (auto c = a.cod_ <=> b.cod_; c != 0) return c;
    return a.table_ <=> b.table_;
  }

 private:
  FinSet dom_;
  FinSet cod_;
  std::vector<Index> table_;
};

/// Diagrammatic composition: first f, then g.
inline FiniteFunction compose_fn(const FiniteFunction& f, const FiniteFunction& g) {
  if (f.cod() != g.dom())
    throw CompositionError("compose_fn: codomain of size " + std::to_string(f.cod().size()) +
                           " does not match domain of size " + std::to_string(g.dom().size()));
  std::vector<Index> t(f.dom().size());
  for (Index i = 0; i < t.size(); ++i) t[i] = g.table()[f.table()[i]];
  return FiniteFunction(f.dom(), g.cod(), std::move(t));
}

/// Composes a chain left to right.
inline FiniteFunction compose_fn(std::initializer_list<FiniteFunction> chain) {
  if (chain.size() == 0) throw CompositionError("compose_fn: empty chain");
  auto it = chain.begin();
  FiniteFunction acc = *it++;
  for (; it != chain.end(); ++it) acc = compose_fn(acc, *it);
  return acc;
}

inline void to_json(json& j, const FiniteFunction& f) {
  j = json{{"dom", f.dom()}, {"cod", f.cod()}, {"table", f.table()}};
}

inline void from_json(const json& j, FiniteFunction& f) {
  f = FiniteFunction(j.at("dom").get<FinSet>(), j.at("cod").get<FinSet>(), j.at("table").get<std::vector<Index>>());
}

/// All functions dom -> cod in lexicographic table order (element 0 varies slowest).
inline std::vector<FiniteFunction> all_functions(const FinSet& dom, const FinSet& cod,
                                                 std::uint64_t ceiling = kDefaultCeiling) {
  auto count = checked_pow(cod.size(), dom.size());
  if (!count || *count > ceiling)
    throw EnumerationLimit("all_functions: " + std::to_string(cod.size()) + "^" + std::to_string(dom.size()) +
                           " exceeds the enumeration ceiling");
  std::vector<FiniteFunction> out;
  out.reserve(*count);
  std::vector<std::size_t> radices(dom.size(), cod.size());
  for_each_tuple(radices, [&](const std::vector<Index>& t) { out.emplace_back(dom, cod, t); });
  return out;
}

// --------------------------------------------------------------------------
// Product and coproduct witnesses (row-major / left-then-right encoding)

class ProductWitness {
 public:
  ProductWitness(FinSet left, FinSet right)
      : left_(std::move(left)), right_(std::move(right)), carrier_(left_.size() * right_.size()) {}

  const FinSet& left() const noexcept { return left_; }
  const FinSet& right() const noexcept { return right_; }
  const FinSet& carrier() const noexcept { return carrier_; }

  Index pair(Index i, Index j) const { return i * right_.size() + j; }
  std::pair<Index, Index> unpair(Index k) const { return {k / right_.size(), k % right_.size()}; }

  FiniteFunction proj_left() const {
    std::vector<Index> t(carrier_.size());
    for (Index k = 0; k < t.size(); ++k) t[k] = unpair(k).first;
    return FiniteFunction(carrier_, left_, std::move(t));
  }
  FiniteFunction proj_right() const {
    std::vector<Index> t(carrier_.size());
    for (Index k = 0; k < t.size(); ++k) t[k] = unpair(k).second;
    return FiniteFunction(carrier_, right_, std::move(t));
  }

 private:
  FinSet left_;
  FinSet right_;
  FinSet carrier_;
};

inline FinSet product(const FinSet& a, const FinSet& b) { return ProductWitness(a, b).carrier(); }

enum class Side { left, right };

class CoproductWitness {
 public:
  CoproductWitness(FinSet left, FinSet right)
      : left_(std::move(left)), right_(std::move(right)), carrier_(left_.size() + right_.size()) {}

  const FinSet& left() const noexcept { return left_; }
  const FinSet& right() const noexcept { return right_; }
  const FinSet& carrier() const noexcept { return carrier_; }

  Index injl(Index i) const { return i; }
  Index injr(Index j) const { return left_.size() + j; }
  std::pair<Side, Index> case_of(Index k) const {
    if (k < left_.size()) return {Side::left, k};
    return {Side::right, k - left_.size()};
  }

  FiniteFunction inj_left() const {
    std::vector<Index> t(left_.size());
    for (Index i = 0; i < t.size(); ++i) t[i] = injl(i);
    return FiniteFunction(left_, carrier_, std::move(t));
  }
  FiniteFunction inj_right() const {
    std::vector<Index> t(right_.size());
    for (Index j = 0; j < t.size(); ++j) t[j] = injr(j);
    return FiniteFunction(right_, carrier_, std::move(t));
  }

 private:
  FinSet left_;
  FinSet right_;
  FinSet carrier_;
};

inline FinSet coproduct(const FinSet& a, const FinSet& b) { return CoproductWitness(a, b).carrier(); }

/// An n-ary coproduct folded to the left over binary witnesses:
/// ((S0 + S1) + S2) + ... . Summand s starts at offset(s).
class SumLayout {
 public:
  SumLayout() = default;
  explicit SumLayout(std::vector<FinSet> summands) : summands_(std::move(summands)) {
    FinSet acc(0);
    offsets_.reserve(summands_.size());
    for (const auto& s : summands_) {
      CoproductWitness w(acc, s);
      offsets_.push_back(w.injr(0));
      acc = w.carrier();
    }
    carrier_ = acc;
  }

  const FinSet& carrier() const noexcept { return carrier_; }
  const std::vector<FinSet>& summands() const noexcept { return summands_; }
  std::size_t count() const noexcept { return summands_.size(); }
  Index offset(std::size_t s) const { return offsets_.at(s); }
  Index inject(std::size_t s, Index e) const { return offsets_.at(s) + e; }

  /// (summand, element) of a carrier index.
  std::pair<std::size_t, Index> locate(Index k) const {
    for (std::size_t s = summands_.size(); s-- > 0;)
      if (summands_[s].size() > 0 && k >= offsets_[s]) return {s, k - offsets_[s]};
    throw ShapeError("SumLayout::locate: index outside carrier");
  }

  FiniteFunction injection(std::size_t s) const {
    std::vector<Index> t(summands_.at(s).size());
    for (Index e = 0; e < t.size(); ++e) t[e] = inject(s, e);
    return FiniteFunction(summands_[s], carrier_, std::move(t));
  }

 private:
  std::vector<FinSet> summands_;
  std::vector<Index> offsets_;
  FinSet carrier_;
};

inline FiniteFunction product_map(const FiniteFunction& f, const FiniteFunction& g) {
  ProductWitness src(f.dom(), g.dom()), tgt(f.cod(), g.cod());
  std::vector<Index> t(src.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [a, b] = src.unpair(k);
    t[k] = tgt.pair(f(a), g(b));
  }
  return FiniteFunction(src.carrier(), tgt.carrier(), std::move(t));
}

inline FiniteFunction sum_map(std::span<const FiniteFunction> parts) {
  std::vector<FinSet> doms, cods;
  for (const auto& p : parts) {
    doms.push_back(p.dom());
    cods.push_back(p.cod());
  }
  SumLayout src(doms), tgt(cods);
  std::vector<Index> t(src.carrier().size());
  for (std::size_t s = 0; s < parts.size(); ++s)
    for (Index e = 0; e < doms[s].size(); ++e) t[src.inject(s, e)] = tgt.inject(s, parts[s](e));
  return FiniteFunction(src.carrier(), tgt.carrier(), std::move(t));
}

inline FiniteFunction sum_map(const FiniteFunction& f, const FiniteFunction& g) {
  std::vector<FiniteFunction> parts{f, g};
  return sum_map(parts);
}

/// Copairing [f, g] : A + B -> C.
inline FiniteFunction copair(std::span<const FiniteFunction> parts, const FinSet& cod) {
  std::vector<FinSet> doms;
  for (const auto& p : parts) {
    if (p.cod() != cod) throw CompositionError("copair: codomain mismatch");
    doms.push_back(p.dom());
  }
  SumLayout src(doms);
  std::vector<Index> t(src.carrier().size());
  for (std::size_t s = 0; s < parts.size(); ++s)
    for (Index e = 0; e < doms[s].size(); ++e) t[src.inject(s, e)] = parts[s](e);
  return FiniteFunction(src.carrier(), cod, std::move(t));
}

/// A pair of mutually inverse functions.
struct Bijection {
  FiniteFunction to;
  FiniteFunction from;
};

/// x × (y + z) ≅ x×y + x×z.
inline Bijection distribute(const FinSet& x, const FinSet& y, const FinSet& z) {
  CoproductWitness yz(y, z);
  ProductWitness lhs(x, yz.carrier());
  ProductWitness xy(x, y), xz(x, z);
  CoproductWitness rhs(xy.carrier(), xz.carrier());
  std::vector<Index> to(lhs.carrier().size()), from(rhs.carrier().size());
  for (Index k = 0; k < to.size(); ++k) {
    auto [a, e] = lhs.unpair(k);
    auto [side, v] = yz.case_of(e);
    to[k] = side == Side::left ? rhs.injl(xy.pair(a, v)) : rhs.injr(xz.pair(a, v));
  }
  for (Index k = 0; k < from.size(); ++k) {
    auto [side, v] = rhs.case_of(k);
    if (side == Side::left) {
      auto [a, b] = xy.unpair(v);
      from[k] = lhs.pair(a, yz.injl(b));
    } else {
      auto [a, c] = xz.unpair(v);
      from[k] = lhs.pair(a, yz.injr(c));
    }
  }
  return {FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(to)),
          FiniteFunction(rhs.carrier(), lhs.carrier(), std::move(from))};
}

/// x × Σ_k S_k → Σ_k x × S_k, folding the binary distributor over the summands.
inline FiniteFunction distribute_left(const FinSet& x, std::span<const FinSet> summands) {
  SumLayout sum(std::vector<FinSet>(summands.begin(), summands.end()));
  ProductWitness lhs(x, sum.carrier());
  std::vector<FinSet> parts;
  for (const auto& s : summands) parts.push_back(product(x, s));
  SumLayout rhs(parts);
  std::vector<Index> t(lhs.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [a, e] = lhs.unpair(k);
    auto [s, v] = sum.locate(e);
    t[k] = rhs.inject(s, ProductWitness(x, summands[s]).pair(a, v));
  }
  return FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(t));
}

/// (Σ_k S_k) × x → Σ_k S_k × x.
inline FiniteFunction distribute_right(std::span<const FinSet> summands, const FinSet& x) {
  SumLayout sum(std::vector<FinSet>(summands.begin(), summands.end()));
  ProductWitness lhs(sum.carrier(), x);
  std::vector<FinSet> parts;
  for (const auto& s : summands) parts.push_back(product(s, x));
  SumLayout rhs(parts);
  std::vector<Index> t(lhs.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [e, a] = lhs.unpair(k);
    auto [s, v] = sum.locate(e);
    t[k] = rhs.inject(s, ProductWitness(summands[s], x).pair(v, a));
  }
  return FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(t));
}

/// Σ_a Σ_b S[a][b] → Σ_b Σ_a S[a][b] for a rectangular grid of summands.
inline FiniteFunction interchange_sums(const std::vector<std::vector<FinSet>>& grid) {
  std::size_t rows = grid.size();
  std::size_t cols = rows ? grid[0].size() : 0;
  std::vector<FinSet> outer_l, outer_r;
  std::vector<SumLayout> inner_l, inner_r;
  for (std::size_t a = 0; a < rows; ++a) {
    inner_l.emplace_back(grid[a]);
    outer_l.push_back(inner_l.back().carrier());
  }
  for (std::size_t b = 0; b < cols; ++b) {
    std::vector<FinSet> col;
    for (std::size_t a = 0; a < rows; ++a) col.push_back(grid[a][b]);
    inner_r.emplace_back(col);
    outer_r.push_back(inner_r.back().carrier());
  }
  SumLayout lhs(outer_l), rhs(outer_r);
  std::vector<Index> t(lhs.carrier().size());
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < cols; ++b)
      for (Index e = 0; e < grid[a][b].size(); ++e)
        t[lhs.inject(a, inner_l[a].inject(b, e))] = rhs.inject(b, inner_r[b].inject(a, e));
  return FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(t));
}

/// a × (b × c) → (a × b) × c. Row-major encoding makes this the identity table.
inline FiniteFunction associator(const FinSet& a, const FinSet& b, const FinSet& c) {
  ProductWitness bc(b, c), lhs(a, bc.carrier());
  ProductWitness ab(a, b), rhs(ab.carrier(), c);
  std::vector<Index> t(lhs.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [x, yz] = lhs.unpair(k);
    auto [y, z] = bc.unpair(yz);
    t[k] = rhs.pair(ab.pair(x, y), z);
  }
  return FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(t));
}

/// a × b → b × a.
inline FiniteFunction symmetry(const FinSet& a, const FinSet& b) {
  ProductWitness lhs(a, b), rhs(b, a);
  std::vector<Index> t(lhs.carrier().size());
  for (Index k = 0; k < t.size(); ++k) {
    auto [x, y] = lhs.unpair(k);
    t[k] = rhs.pair(y, x);
  }
  return FiniteFunction(lhs.carrier(), rhs.carrier(), std::move(t));
}

/// 1 × a → a.
inline FiniteFunction left_unitor(const FinSet& a) {
  ProductWitness w(FinSet(1), a);
  return FiniteFunction(w.carrier(), a, w.proj_right().table());
}

/// a × 1 → a.
inline FiniteFunction right_unitor(const FinSet& a) {
  ProductWitness w(a, FinSet(1));
  return FiniteFunction(w.carrier(), a, w.proj_left().table());
}

// --------------------------------------------------------------------------
// Exact probabilities

// Compare Rationals only against Rationals: under C++20 rewritten operators the
// mixed rational/int comparisons of boost recurse forever.
using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline Rational parse_rational(std::string_view text) {
  try {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(std::stoll(std::string(text)));
    auto num = std::stoll(std::string(text.substr(0, slash)));
    auto den = std::stoll(std::string(text.substr(slash + 1)));
    if (den <= 0) throw ShapeError("parse_rational: denominator must be positive");
    return Rational(num, den);
  } catch (const std::logic_error&) {
    throw ShapeError("parse_rational: malformed rational '" + std::string(text) + "'");
  }
}

class FiniteDistribution {
 public:
  FiniteDistribution() = default;
  FiniteDistribution(FinSet carrier, std::vector<Rational> weights)
      : carrier_(std::move(carrier)), weights_(std::move(weights)) {
    if (weights_.size() != carrier_.size()) throw ShapeError("FiniteDistribution: weight count differs from carrier");
    Rational total(0);
    for (const auto& w : weights_) {
      if (w < Rational(0)) throw ShapeError("FiniteDistribution: negative weight");
      total += w;
    }
    if (total != Rational(1)) throw ShapeError("FiniteDistribution: weights sum to " + to_string(total) + ", not 1");
  }

  static FiniteDistribution dirac(const FinSet& carrier, Index at) {
    std::vector<Rational> w(carrier.size(), Rational(0));
    w.at(at) = 1;
    return FiniteDistribution(carrier, std::move(w));
  }

  const FinSet& carrier() const noexcept { return carrier_; }
  const std::vector<Rational>& weights() const noexcept { return weights_; }
  const Rational& operator[](Index i) const { return weights_.at(i); }

  /// The point carrying all the mass, if there is one.
  std::optional<Index> point() const {
    for (Index i = 0; i < weights_.size(); ++i)
      if (weights_[i] == Rational(1)) return i;
    return std::nullopt;
  }

  friend bool operator==(const FiniteDistribution& a, const FiniteDistribution& b) {
    return a.carrier_ == b.carrier_ && a.weights_ == b.weights_;
  }
  friend bool operator<(const FiniteDistribution& a, const FiniteDistribution& b) {
    if (a.carrier_ != b.carrier_) return a.carrier_ < b.carrier_;
    return std::lexicographical_compare(a.weights_.begin(), a.weights_.end(), b.weights_.begin(), b.weights_.end());
  }

 private:
  FinSet carrier_;
  std::vector<Rational> weights_;
};

class FiniteKernel {
 public:
  FiniteKernel() = default;
  FiniteKernel(FinSet dom, FinSet cod, std::vector<FiniteDistribution> rows)
      : dom_(std::move(dom)), cod_(std::move(cod)), rows_(std::move(rows)) {
    if (rows_.size() != dom_.size()) throw ShapeError("FiniteKernel: row count differs from domain size");
    for (const auto& r : rows_)
      if (r.carrier() != cod_) throw ShapeError("FiniteKernel: row carrier differs from codomain");
  }

  static FiniteKernel identity(const FinSet& s) {
    std::vector<FiniteDistribution> rows;
    for (Index i = 0; i < s.size(); ++i) rows.push_back(FiniteDistribution::dirac(s, i));
    return FiniteKernel(s, s, std::move(rows));
  }

  static FiniteKernel deterministic(const FiniteFunction& f) {
    std::vector<FiniteDistribution> rows;
    for (Index i = 0; i < f.dom().size(); ++i) rows.push_back(FiniteDistribution::dirac(f.cod(), f(i)));
    return FiniteKernel(f.dom(), f.cod(), std::move(rows));
  }

  const FinSet& dom() const noexcept { return dom_; }
  const FinSet& cod() const noexcept { return cod_; }
  const std::vector<FiniteDistribution>& rows() const noexcept { return rows_; }
  const Rational& weight(Index a, Index b) const { return rows_.at(a)[b]; }

  std::optional<FiniteFunction> as_function() const {
    std::vector<Index> t;
    for (const auto& r : rows_) {
      auto p = r.point();
      if (!p) return std::nullopt;
      t.push_back(*p);
    }
    return FiniteFunction(dom_, cod_, std::move(t));
  }

  friend bool operator==(const FiniteKernel& a, const FiniteKernel& b) {
    return a.dom_ == b.dom_ && a.cod_ == b.cod_ && a.rows_ == b.rows_;
  }
  friend bool operator<(const FiniteKernel& a, const FiniteKernel& b) {
    if (a.dom_ != b.dom_) return a.dom_ < b.dom_;
    if (a.cod_ != b.cod_) return a.cod_ < b.cod_;
    return std::lexicographical_compare(a.rows_.begin(), a.rows_.end(), b.rows_.begin(), b.rows_.end());
  }

 private:
  FinSet dom_;
  FinSet cod_;
  std::vector<FiniteDistribution> rows_;
};

/// Kleisli composition: first k1, then k2.
inline FiniteKernel compose_kernel(const FiniteKernel& k1, const FiniteKernel& k2) {
  if (k1.cod() != k2.dom())
    throw CompositionError("compose_kernel: codomain of size " + std::to_string(k1.cod().size()) +
                           " does not match domain of size " + std::to_string(k2.dom().size()));
  std::vector<FiniteDistribution> rows;
  rows.reserve(k1.dom().size());
  for (Index a = 0; a < k1.dom().size(); ++a) {
    std::vector<Rational> w(k2.cod().size(), Rational(0));
    for (Index b = 0; b < k1.cod().size(); ++b) {
      const auto& p = k1.weight(a, b);
      if (p == Rational(0)) continue;
      for (Index c = 0; c < k2.cod().size(); ++c) w[c] += p * k2.weight(b, c);
    }
    rows.emplace_back(k2.cod(), std::move(w));
  }
  return FiniteKernel(k1.dom(), k2.cod(), std::move(rows));
}

/// Independent product of kernels on the row-major product carriers.
inline FiniteKernel product_kernel(const FiniteKernel& k, const FiniteKernel& l) {
  ProductWitness src(k.dom(), l.dom()), tgt(k.cod(), l.cod());
  std::vector<FiniteDistribution> rows;
  for (Index s = 0; s < src.carrier().size(); ++s) {
    auto [a, b] = src.unpair(s);
    std::vector<Rational> w(tgt.carrier().size(), Rational(0));
    for (Index c = 0; c < k.cod().size(); ++c)
      for (Index d = 0; d < l.cod().size(); ++d) w[tgt.pair(c, d)] = k.weight(a, c) * l.weight(b, d);
    rows.emplace_back(tgt.carrier(), std::move(w));
  }
  return FiniteKernel(src.carrier(), tgt.carrier(), std::move(rows));
}

inline FiniteKernel sum_kernel(std::span<const FiniteKernel> parts) {
  std::vector<FinSet> doms, cods;
  for (const auto& p : parts) {
    doms.push_back(p.dom());
    cods.push_back(p.cod());
  }
  SumLayout src(doms), tgt(cods);
  std::vector<FiniteDistribution> rows(src.carrier().size());
  for (std::size_t s = 0; s < parts.size(); ++s)
    for (Index a = 0; a < doms[s].size(); ++a) {
      std::vector<Rational> w(tgt.carrier().size(), Rational(0));
      for (Index b = 0; b < cods[s].size(); ++b) w[tgt.inject(s, b)] = parts[s].weight(a, b);
      rows[src.inject(s, a)] = FiniteDistribution(tgt.carrier(), std::move(w));
    }
  return FiniteKernel(src.carrier(), tgt.carrier(), std::move(rows));
}

inline json rational_row_json(const FiniteDistribution& d) {
  json row = json::array();
  for (const auto& w : d.weights()) row.push_back(to_string(w));
  return row;
}

inline void to_json(json& j, const FiniteDistribution& d) {
  j = json{{"carrier", d.carrier()}, {"weights", rational_row_json(d)}};
}

inline void to_json(json& j, const FiniteKernel& k) {
  json rows = json::array();
  for (const auto& r : k.rows()) rows.push_back(rational_row_json(r));
  j = json{{"dom", k.dom()}, {"cod", k.cod()}, {"rows", rows}};
}

inline void from_json(const json& j, FiniteKernel& k) {
  auto dom = j.at("dom").get<FinSet>();
  auto cod = j.at("cod").get<FinSet>();
  std::vector<FiniteDistribution> rows;
  for (const auto& r : j.at("rows")) {
    std::vector<Rational> w;
    for (const auto& e : r) w.push_back(parse_rational(e.get<std::string>()));
    rows.emplace_back(cod, std::move(w));
  }
  k = FiniteKernel(dom, cod, std::move(rows));
}

/// Distributions on `carrier` whose weights are multiples of 1/d for some d in
/// `denominators`, deduplicated and sorted.
inline std::vector<FiniteDistribution> grid_distributions(const FinSet& carrier, std::span<const int> denominators) {
  std::set<FiniteDistribution> found;
  std::size_t n = carrier.size();
  if (n == 0) return {};
  for (int d : denominators) {
    if (d <= 0) throw ShapeError("grid_distributions: denominators must be positive");
    // compositions of d into n non-negative parts
    std::vector<std::int64_t> parts(n, 0);
    auto emit = [&] {
      std::vector<Rational> w;
      for (auto p : parts) w.emplace_back(p, d);
      found.emplace(carrier, std::move(w));
    };
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t pos, std::int64_t left) {
      if (pos + 1 == n) {
        parts[pos] = left;
        emit();
        return;
      }
      for (std::int64_t v = 0; v <= left; ++v) {
        parts[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, d);
  }
  return {found.begin(), found.end()};
}

// --------------------------------------------------------------------------
// The two base categories, packaged for the generic law checker and the
// optic constructions. Objects are finite sets; the monoidal product is the
// row-major product of carriers, the coproduct the left-then-right sum.

struct FinSetCategory {
  using Object = FinSet;
  using Morphism = FiniteFunction;
  static constexpr bool cartesian = true;
  static constexpr std::string_view name = "finset";

  std::uint64_t ceiling = kDefaultCeiling;

  std::vector<FinSet> objects(std::size_t bound) const {
    std::vector<FinSet> out;
    for (std::size_t n = 0; n <= bound; ++n) out.emplace_back(n);
    return out;
  }
  std::vector<FiniteFunction> homs(const FinSet& a, const FinSet& b) const { return all_functions(a, b, ceiling); }
  FiniteFunction identity(const FinSet& a) const { return FiniteFunction::identity(a); }
  FiniteFunction compose(const FiniteFunction& f, const FiniteFunction& g) const { return compose_fn(f, g); }
  bool equal(const FiniteFunction& f, const FiniteFunction& g) const { return f == g; }

  FiniteFunction tensor(const FiniteFunction& f, const FiniteFunction& g) const { return product_map(f, g); }
  FiniteFunction sum(std::span<const FiniteFunction> parts) const { return sum_map(parts); }
  FiniteFunction lift(const FiniteFunction& f) const { return f; }

  /// The least b' (in table order) with h ; b' = b, if any.
  std::optional<FiniteFunction> factor_after(const FiniteFunction& b, const FiniteFunction& h) const {
    if (h.dom() != b.dom()) throw CompositionError("factor_after: domain mismatch");
    std::vector<Index> t(h.cod().size(), 0);
    std::vector<bool> set(h.cod().size(), false);
    if (!h.cod().empty() && b.cod().empty()) return std::nullopt;
    for (Index k = 0; k < h.dom().size(); ++k) {
      auto n = h(k);
      if (set[n] && t[n] != b(k)) return std::nullopt;
      t[n] = b(k);
      set[n] = true;
    }
    return FiniteFunction(h.cod(), b.cod(), std::move(t));
  }

  /// The least f' (in table order) with f' ; h = g, if any.
  std::optional<FiniteFunction> lift_through(const FiniteFunction& g, const FiniteFunction& h) const {
    if (h.cod() != g.cod()) throw CompositionError("lift_through: codomain mismatch");
    std::vector<Index> t(g.dom().size());
    for (Index x = 0; x < t.size(); ++x) {
      bool found = false;
      for (Index k = 0; k < h.dom().size() && !found; ++k)
        if (h(k) == g(x)) {
          t[x] = k;
          found = true;
        }
      if (!found) return std::nullopt;
    }
    return FiniteFunction(g.dom(), h.dom(), std::move(t));
  }
};

struct KernelCategory {
  using Object = FinSet;
  using Morphism = FiniteKernel;
  static constexpr bool cartesian = false;
  static constexpr std::string_view name = "kernel";

  std::vector<int> denominators{1, 2, 3};
  std::uint64_t ceiling = kDefaultCeiling;

  std::vector<FinSet> objects(std::size_t bound) const {
    std::vector<FinSet> out;
    for (std::size_t n = 0; n <= bound; ++n) out.emplace_back(n);
    return out;
  }

  /// Kernels whose rows all lie on the denominator grid.
  std::vector<FiniteKernel> homs(const FinSet& a, const FinSet& b) const {
    auto dists = grid_distributions(b, denominators);
    auto count = checked_pow(dists.size(), a.size());
    if (!count || *count > ceiling) throw EnumerationLimit("KernelCategory::homs: grid hom-set exceeds the ceiling");
    std::vector<FiniteKernel> out;
    std::vector<std::size_t> radices(a.size(), dists.size());
    for_each_tuple(radices, [&](const std::vector<Index>& t) {
      std::vector<FiniteDistribution> rows;
      for (auto i : t) rows.push_back(dists[i]);
      out.emplace_back(a, b, std::move(rows));
    });
    return out;
  }
  FiniteKernel identity(const FinSet& a) const { return FiniteKernel::identity(a); }
  FiniteKernel compose(const FiniteKernel& f, const FiniteKernel& g) const { return compose_kernel(f, g); }
  bool equal(const FiniteKernel& f, const FiniteKernel& g) const { return f == g; }

  FiniteKernel tensor(const FiniteKernel& f, const FiniteKernel& g) const { return product_kernel(f, g); }
  FiniteKernel sum(std::span<const FiniteKernel> parts) const { return sum_kernel(parts); }
  FiniteKernel lift(const FiniteFunction& f) const { return FiniteKernel::deterministic(f); }

  /// Searches the grid hom-set for the first b' with h ; b' = b.
  std::optional<FiniteKernel> factor_after(const FiniteKernel& b, const FiniteKernel& h) const {
    if (h.dom() != b.dom()) throw CompositionError("factor_after: domain mismatch");
    for (const auto& c : homs(h.cod(), b.cod()))
      if (compose_kernel(h, c) == b) return c;
    return std::nullopt;
  }

  std::optional<FiniteKernel> lift_through(const FiniteKernel& g, const FiniteKernel& h) const {
    if (h.cod() != g.cod()) throw CompositionError("lift_through: codomain mismatch");
    for (const auto& c : homs(g.dom(), h.dom()))
      if (compose_kernel(c, h) == g) return c;
    return std::nullopt;
  }
};

}  // namespace fiboptic
