#pragma once

// Semantic tuples, questions and the dependency DAG that ties them together.

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsg/errors.hpp"

namespace dsg {

enum class Category { entity, attribute, relation, global };

enum class Subcategory {
  // entity
  whole,
  part,
  // attribute
  color,
  type,
  material,
  count,
  texture,
  text_rendering,
  shape,
  size,
  style,
  state,
  // relation
  spatial,
  action,
  // global
  global,
};

inline constexpr std::array<std::string_view, 4> kCategoryNames = {"entity", "attribute",
                                                                   "relation", "global"};

inline constexpr std::array<std::string_view, 15> kSubcategoryNames = {
    "whole", "part",  "color", "type",    "material", "count",   "texture", "text_rendering",
    "shape", "size",  "style", "state",   "spatial",  "action",  "global"};

inline std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }
inline std::string_view to_string(Subcategory s) {
  return kSubcategoryNames[static_cast<std::size_t>(s)];
}

inline std::optional<Category> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  return std::nullopt;
}

inline std::optional<Subcategory> parse_subcategory(std::string_view s) {
  for (std::size_t i = 0; i < kSubcategoryNames.size(); ++i)
    if (kSubcategoryNames[i] == s) return static_cast<Subcategory>(i);
  return std::nullopt;
}

inline Category category_of(Subcategory s) {
  switch (s) {
    case Subcategory::whole:
    case Subcategory::part: return Category::entity;
    case Subcategory::spatial:
    case Subcategory::action: return Category::relation;
    case Subcategory::global: return Category::global;
    default: return Category::attribute;
  }
}

inline bool subcategory_legal(Category c, Subcategory s) { return category_of(s) == c; }

// entity/global: (entity); attribute: (value, entity); relation: (relation, subject, object)
inline constexpr std::size_t arity_of(Category c) {
  switch (c) {
    case Category::entity:
    case Category::global: return 1;
    case Category::attribute: return 2;
    case Category::relation: return 3;
  }
  return 0;
}

struct SemanticTuple {
  int id = 0;
  Category category = Category::entity;
  Subcategory subcategory = Subcategory::whole;
  std::vector<std::string> args;

  friend bool operator==(const SemanticTuple&, const SemanticTuple&) = default;
};

// Same proposition regardless of id.
inline bool same_content(const SemanticTuple& a, const SemanticTuple& b) {
  return a.category == b.category && a.subcategory == b.subcategory && a.args == b.args;
}

struct QuestionNode {
  int id = 0;
  std::string text;
  int tuple_id = 0;
  // The expected answer is always "yes"; no field needed.

  friend bool operator==(const QuestionNode&, const QuestionNode&) = default;
};

struct DependencyEdge {
  int parent_id = 0;
  int child_id = 0;

  friend auto operator<=>(const DependencyEdge&, const DependencyEdge&) = default;
};

class SceneGraph;
SceneGraph build_graph(std::string prompt_id, std::vector<SemanticTuple> tuples,
                       std::vector<QuestionNode> questions, std::vector<DependencyEdge> edges);

// Immutable once built. Ids are dense: tuple/question i lives at index i-1.
class SceneGraph {
 public:
  SceneGraph() = default;

  const std::string& prompt_id() const noexcept { return prompt_id_; }
  const std::vector<SemanticTuple>& tuples() const noexcept { return tuples_; }
  const std::vector<QuestionNode>& questions() const noexcept { return questions_; }
  // Sorted by (parent, child), no duplicates.
  const std::vector<DependencyEdge>& edges() const noexcept { return edges_; }

  std::size_t size() const noexcept { return tuples_.size(); }
  bool empty() const noexcept { return tuples_.empty(); }
  bool contains(int id) const noexcept { return id >= 1 && static_cast<std::size_t>(id) <= size(); }

  const SemanticTuple& tuple(int id) const { return tuples_.at(index(id)); }
  const QuestionNode& question(int id) const { return questions_.at(index(id)); }
  const std::vector<int>& parents(int id) const { return parents_.at(index(id)); }
  const std::vector<int>& children(int id) const { return children_.at(index(id)); }

  // Original id (as emitted upstream) for a normalized id.
  int original_id(int id) const { return original_ids_.at(index(id)); }
  const std::vector<int>& original_ids() const noexcept { return original_ids_; }

  std::vector<int> roots() const {
    std::vector<int> out;
    for (int id = 1; id <= static_cast<int>(size()); ++id)
      if (parents_[index(id)].empty()) out.push_back(id);
    return out;
  }

  // Parents before children; ready nodes taken in ascending id.
  const std::vector<int>& topological_order() const noexcept { return topo_; }

  // Longest path from any root; roots are depth 0.
  int depth(int id) const { return depth_.at(index(id)); }

  std::set<int> descendants(int id) const {
    if (!contains(id)) throw UnknownIdError("unknown question id " + std::to_string(id));
    std::set<int> seen;
    std::vector<int> stack(children(id).begin(), children(id).end());
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      if (!seen.insert(cur).second) continue;
      for (int c : children(cur)) stack.push_back(c);
    }
    return seen;
  }

  // Structural equality; the original-id sidecar is debugging metadata and not compared.
  friend bool operator==(const SceneGraph& a, const SceneGraph& b) {
    return a.prompt_id_ == b.prompt_id_ && a.tuples_ == b.tuples_ &&
           a.questions_ == b.questions_ && a.edges_ == b.edges_;
  }

 private:
  friend SceneGraph build_graph(std::string, std::vector<SemanticTuple>, std::vector<QuestionNode>,
                                std::vector<DependencyEdge>);

  std::size_t index(int id) const {
    if (!contains(id)) throw UnknownIdError("unknown question id " + std::to_string(id));
    return static_cast<std::size_t>(id - 1);
  }

  std::string prompt_id_;
  std::vector<SemanticTuple> tuples_;
  std::vector<QuestionNode> questions_;
  std::vector<DependencyEdge> edges_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<int> original_ids_;
  std::vector<int> topo_;
  std::vector<int> depth_;
};

inline std::vector<int> topological_order(const SceneGraph& g) { return g.topological_order(); }
inline std::set<int> descendants(const SceneGraph& g, int id) { return g.descendants(id); }

namespace detail {

// Finds one directed cycle among nodes 0..n-1, rotated to start at its smallest node.
inline std::vector<int> find_cycle(std::size_t n, const std::vector<std::vector<int>>& out) {
  enum : unsigned char { white, grey, black };
  std::vector<unsigned char> color(n, white);
  std::vector<int> parent(n, -1);
  for (std::size_t start = 0; start < n; ++start) {
    if (color[start] != white) continue;
    // iterative DFS: (node, next child index)
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(start), 0}};
    color[start] = grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < out[node].size()) {
        int child = out[node][next++];
        if (color[child] == grey) {
          std::vector<int> cycle{child};
          for (int cur = node; cur != child; cur = parent[cur]) cycle.push_back(cur);
          std::reverse(cycle.begin() + 1, cycle.end());
          auto min_it = std::min_element(cycle.begin(), cycle.end());
          std::rotate(cycle.begin(), min_it, cycle.end());
          return cycle;
        }
        if (color[child] == white) {
          color[child] = grey;
          parent[child] = node;
          stack.emplace_back(child, 0);
        }
      } else {
        color[node] = black;
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace detail

// Validates and normalizes. Ids may be any distinct positive integers; they are
// remapped to 1..n in ascending order and the originals kept in a sidecar.
// Every tuple needs exactly one question with the same id (and tuple_id).
inline SceneGraph build_graph(std::string prompt_id, std::vector<SemanticTuple> tuples,
                              std::vector<QuestionNode> questions,
                              std::vector<DependencyEdge> edges) {
  for (const auto& t : tuples) {
    if (t.id < 1) throw GraphError("tuple id must be positive, got " + std::to_string(t.id));
    if (!subcategory_legal(t.category, t.subcategory))
      throw ArityError("tuple " + std::to_string(t.id) + ": subcategory '" +
                       std::string(to_string(t.subcategory)) + "' is not legal for category '" +
                       std::string(to_string(t.category)) + "'");
    if (t.args.size() != arity_of(t.category))
      throw ArityError("tuple " + std::to_string(t.id) + ": category '" +
                       std::string(to_string(t.category)) + "' takes " +
                       std::to_string(arity_of(t.category)) + " arg(s), got " +
                       std::to_string(t.args.size()));
    for (const auto& a : t.args)
      if (a.empty()) throw ArityError("tuple " + std::to_string(t.id) + ": empty argument");
  }

  std::map<int, std::size_t> by_orig;  // original id -> dense index
  for (const auto& t : tuples)
    if (!by_orig.emplace(t.id, 0).second)
      throw DuplicateIdError("duplicate tuple id " + std::to_string(t.id));
  {
    std::size_t i = 0;
    for (auto& [orig, idx] : by_orig) idx = i++;
  }
  const std::size_t n = by_orig.size();

  std::vector<std::optional<QuestionNode>> qslots(n);
  for (const auto& q : questions) {
    auto it = by_orig.find(q.id);
    if (it == by_orig.end())
      throw DanglingRefError("question " + std::to_string(q.id) + " has no matching tuple");
    if (q.tuple_id != q.id) {
      if (!by_orig.count(q.tuple_id))
        throw DanglingRefError("question " + std::to_string(q.id) + " references missing tuple " +
                               std::to_string(q.tuple_id));
      throw GraphError("question " + std::to_string(q.id) + " must reference tuple " +
                       std::to_string(q.id) + ", not " + std::to_string(q.tuple_id));
    }
    if (qslots[it->second]) throw DuplicateIdError("duplicate question id " + std::to_string(q.id));
    if (q.text.empty()) throw GraphError("question " + std::to_string(q.id) + " has empty text");
    qslots[it->second] = q;
  }
  for (const auto& [orig, idx] : by_orig)
    if (!qslots[idx])
      throw DanglingRefError("tuple " + std::to_string(orig) + " has no question");

  std::vector<std::vector<int>> out(n);  // dense index adjacency, for cycle search
  std::set<std::pair<int, int>> edge_set;
  for (const auto& e : edges) {
    auto p = by_orig.find(e.parent_id);
    auto c = by_orig.find(e.child_id);
    if (p == by_orig.end() || c == by_orig.end())
      throw DanglingRefError("edge " + std::to_string(e.parent_id) + "->" +
                             std::to_string(e.child_id) + " references an absent id");
    if (e.parent_id == e.child_id) throw CycleError({e.parent_id});
    if (edge_set.emplace(static_cast<int>(p->second), static_cast<int>(c->second)).second)
      out[p->second].push_back(static_cast<int>(c->second));
  }

  std::vector<int> originals;
  originals.reserve(n);
  for (const auto& [orig, idx] : by_orig) originals.push_back(orig);

  for (auto& v : out) std::sort(v.begin(), v.end());
  if (auto cyc = detail::find_cycle(n, out); !cyc.empty()) {
    for (int& x : cyc) x = originals[static_cast<std::size_t>(x)];
    throw CycleError(std::move(cyc));
  }

  SceneGraph g;
  g.prompt_id_ = std::move(prompt_id);
  g.original_ids_ = std::move(originals);
  g.tuples_.reserve(n);
  g.questions_.reserve(n);
  std::vector<const SemanticTuple*> sorted_tuples(n);
  for (const auto& t : tuples) sorted_tuples[by_orig[t.id]] = &t;
  for (std::size_t i = 0; i < n; ++i) {
    SemanticTuple t = *sorted_tuples[i];
    t.id = static_cast<int>(i + 1);
    g.tuples_.push_back(std::move(t));
    QuestionNode q = *qslots[i];
    q.id = q.tuple_id = static_cast<int>(i + 1);
    g.questions_.push_back(std::move(q));
  }

  g.parents_.assign(n, {});
  g.children_.assign(n, {});
  for (const auto& [p, c] : edge_set) {
    g.edges_.push_back({p + 1, c + 1});
    g.children_[static_cast<std::size_t>(p)].push_back(c + 1);
    g.parents_[static_cast<std::size_t>(c)].push_back(p + 1);
  }

  // Kahn's algorithm with a min-heap for the ascending-id tie-break.
  std::vector<std::size_t> indeg(n);
  for (std::size_t i = 0; i < n; ++i) indeg[i] = g.parents_[i].size();
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(static_cast<int>(i + 1));
  g.depth_.assign(n, 0);
  while (!ready.empty()) {
    int id = ready.top();
    ready.pop();
    g.topo_.push_back(id);
    for (int c : g.children_[static_cast<std::size_t>(id - 1)]) {
      auto ci = static_cast<std::size_t>(c - 1);
      g.depth_[ci] = std::max(g.depth_[ci], g.depth_[static_cast<std::size_t>(id - 1)] + 1);
      if (--indeg[ci] == 0) ready.push(c);
    }
  }
  return g;
}

}  // namespace dsg
