#pragma once

// Human-readable summaries of instance files.

#include <string>

#include "fiboptic/fibre.hpp"
#include "fiboptic/fincat.hpp"
#include "fiboptic/indexed.hpp"
#include "fiboptic/lens.hpp"
#include "fiboptic/optic.hpp"

namespace fiboptic {

namespace detail {

inline std::string table_string(const FiniteFunction& f) {
  std::string s = "[";
  for (Index i = 0; i < f.dom().size(); ++i) s += (i ? "," : "") + std::to_string(f(i));
  return s + "]";
}

inline std::string kernel_string(const FiniteKernel& k) {
  std::string s = "[";
  for (Index a = 0; a < k.dom().size(); ++a) {
    s += a ? "; " : "";
    for (Index b = 0; b < k.cod().size(); ++b) {
      const auto& w = k.weight(a, b);
      s += (b ? " " : "") + (w.denominator() == 1 ? std::to_string(w.numerator()) : to_string(w));
    }
  }
  return s + "]";
}

inline std::string sizes_string(const std::vector<FinSet>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i].size());
  return s + "]";
}

inline std::string fam_string(const FamObject& x) {
  return "over " + std::to_string(x.base.size()) + " fibres " + sizes_string(x.family);
}

inline std::string bundle_string(const DMarkObject& x) {
  return std::to_string(x.carrier().size()) + " over " + std::to_string(x.base().size()) + " via " +
         table_string(x.bundle);
}

inline DMarkObject bundle_of(const json& j) {
  return j.contains("bundle") ? j.get<DMarkObject>() : DMarkObject{j.get<FiniteFunction>()};
}

template <class Cat>
std::string describe_optic(const Optic<Cat>& o, const std::string& kind) {
  std::string s = "Optic[" + kind + "] " + to_string(o.source) + " → " + to_string(o.target) + "; residual " +
                  std::to_string(o.residual.size());
  if constexpr (std::is_same_v<Cat, FinSetCategory>) {
    s += "; forward table " + table_string(o.forward) + "; backward table " + table_string(o.backward);
    s += "; lens-shaped " + std::string(o.residual == o.source.forward ? "yes" : "no");
  } else {
    s += "; forward kernel " + kernel_string(o.forward) + "; backward kernel " + kernel_string(o.backward);
  }
  return s;
}

template <class Cat>
std::string describe_indexed(const IndexedOptic<Cat>& o) {
  std::string s = "IndexedOptic " + to_string(o.source) + " → " + to_string(o.target) + "; grid " +
                  std::to_string(o.matrix.rows.size()) + "×" + std::to_string(o.matrix.cols.size()) + "; entry sizes [";
  for (Index i = 0; i < o.matrix.rows.size(); ++i) s += (i ? "; " : "") + sizes_string(o.matrix.row(i));
  s += "]";
  return s;
}

}  // namespace detail

/// Renders a parsed instance. Throws ShapeError when no encoding matches.
inline std::string describe(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ShapeError("describe: expected a JSON object");
  auto has = [&](std::initializer_list<const char*> keys) {
    for (auto k : keys)
      if (!j.contains(k)) return false;
    return true;
  };

  if (has({"instance", "residual", "forward", "backward"})) {
    auto name = j.at("instance").get<std::string>();
    if (name == FamInstance::name) {
      auto o = fibre_optic_from_json(FamInstance{}, j);
      return "FibreOptic[fam] source " + fam_string(o.source) + " / " + fam_string(o.source_backward) + "; target " +
             fam_string(o.target) + " / " + fam_string(o.target_backward) + "; residual " + fam_string(o.residual) +
             "; valid yes";
    }
    if (name == DMarkInstance::name) {
      auto o = fibre_optic_from_json(DMarkInstance{}, j);
      return "FibreOptic[dmark] source " + bundle_string(o.source) + "; target " + bundle_string(o.target) +
             "; residual " + bundle_string(o.residual) + "; valid yes";
    }
    throw ShapeError("describe: unknown fibration instance " + name);
  }
  if (has({"kernel", "base_map"})) {
    auto m = j.get<DMarkMorphism>();
    std::string s = "DMarkMorphism kernel " + std::to_string(m.kernel.dom().size()) + "→" +
                    std::to_string(m.kernel.cod().size()) + " " + kernel_string(m.kernel) + "; base map " +
                    table_string(m.base_map);
    if (!has({"source", "target"})) return s + "; validity unknown (no source/target bundles)";
    auto src = bundle_of(j.at("source"));
    auto tgt = bundle_of(j.at("target"));
    auto bad = dmark_violations(m, src, tgt);
    if (bad.empty()) return s + "; valid yes";
    s += "; valid NO; offending pairs";
    for (auto [a, b] : bad) s += " (" + std::to_string(a) + "," + std::to_string(b) + ")";
    return s;
  }
  if (has({"bundle"})) return "DMarkObject " + bundle_string(j.get<DMarkObject>());
  if (has({"base", "family"})) return "FamObject " + fam_string(j.get<FamObject>());
  if (has({"matrix", "forwards", "backwards"})) {
    if (j.at("forwards").size() > 0 && j.at("forwards").at(0).contains("rows"))
      return describe_indexed(j.get<IndexedOptic<KernelCategory>>());
    return describe_indexed(j.get<IndexedOptic<FinSetCategory>>());
  }
  if (has({"residual", "forward", "backward"})) {
    if (j.at("forward").contains("rows")) return describe_optic(j.get<Optic<KernelCategory>>(), "kernel");
    return describe_optic(j.get<Optic<FinSetCategory>>(), "finset");
  }
  if (has({"get", "put"})) {
    auto l = j.get<Lens>();
    return "Lens " + to_string(l.source()) + " → " + to_string(l.target()) + "; get table " + table_string(l.get()) +
           "; put table " + table_string(l.put());
  }
  if (has({"forward", "backward"})) {
    auto d = j.get<DepLens>();
    std::string s = "DepLens " + to_string(d.source()) + " → " + to_string(d.target()) + "; forward table " +
                    table_string(d.forward()) + "; backward tables [";
    for (std::size_t a = 0; a < d.backward().size(); ++a) s += (a ? "," : "") + table_string(d.backward()[a]);
    return s + "]";
  }
  if (has({"positions", "directions"})) return "Container " + to_string(j.get<Container>());
  if (has({"index", "components"})) return "IndexedFamily " + to_string(j.get<IndexedFamily>());
  if (has({"dom", "cod", "rows"})) {
    auto k = j.get<FiniteKernel>();
    return "FiniteKernel " + std::to_string(k.dom().size()) + "→" + std::to_string(k.cod().size()) + " " +
           kernel_string(k);
  }
  if (has({"dom", "cod", "table"})) {
    auto f = j.get<FiniteFunction>();
    return "FiniteFunction " + std::to_string(f.dom().size()) + "→" + std::to_string(f.cod().size()) + " table " +
           table_string(f);
  }
  if (has({"size"})) return "FinSet of size " + std::to_string(j.get<FinSet>().size());
  throw ShapeError("describe: no known encoding matches this object");
}

/// Parses text and describes it; parse errors carry line and column.
inline std::string describe_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string reason = e.what();
    auto p = reason.find("syntax error");
    if (p != std::string::npos) reason = reason.substr(p);
    throw ShapeError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + reason);
  }
  return describe(j);
}

}  // namespace fiboptic
