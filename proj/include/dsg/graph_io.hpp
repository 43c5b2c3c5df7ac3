#pragma once

// Graph persistence: one JSON object per prompt, one object per line.
//   {"prompt_id": ..., "tuples": [{"id","category","subcategory","args"}],
//    "questions": [{"id","text","tuple_id"}], "edges": [[parent, child], ...]}

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsg/core_graph.hpp"
#include "dsg/detail/util.hpp"

namespace dsg {

inline nlohmann::json tuple_to_json(const SemanticTuple& t) {
  return {{"id", t.id},
          {"category", std::string(to_string(t.category))},
          {"subcategory", std::string(to_string(t.subcategory))},
          {"args", t.args}};
}

inline SemanticTuple tuple_from_json(const nlohmann::json& j) {
  SemanticTuple t;
  t.id = j.at("id").get<int>();
  auto cat = j.at("category").get<std::string>();
  auto sub = j.at("subcategory").get<std::string>();
  auto c = parse_category(cat);
  if (!c) throw GraphError("unknown category '" + cat + "'");
  auto s = parse_subcategory(sub);
  if (!s) throw GraphError("unknown subcategory '" + sub + "'");
  t.category = *c;
  t.subcategory = *s;
  t.args = j.at("args").get<std::vector<std::string>>();
  return t;
}

inline nlohmann::json graph_to_json(const SceneGraph& g) {
  nlohmann::json tuples = nlohmann::json::array();
  for (const auto& t : g.tuples()) tuples.push_back(tuple_to_json(t));
  nlohmann::json questions = nlohmann::json::array();
  for (const auto& q : g.questions())
    questions.push_back({{"id", q.id}, {"text", q.text}, {"tuple_id", q.tuple_id}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) edges.push_back({e.parent_id, e.child_id});
  return {{"prompt_id", g.prompt_id()},
          {"tuples", std::move(tuples)},
          {"questions", std::move(questions)},
          {"edges", std::move(edges)}};
}

// Goes through build_graph, so every invariant is re-checked on load.
inline SceneGraph graph_from_json(const nlohmann::json& j) {
  std::vector<SemanticTuple> tuples;
  std::vector<QuestionNode> questions;
  std::vector<DependencyEdge> edges;
  try {
    for (const auto& t : j.at("tuples")) tuples.push_back(tuple_from_json(t));
    for (const auto& q : j.at("questions"))
      questions.push_back({q.at("id").get<int>(), q.at("text").get<std::string>(),
                           q.at("tuple_id").get<int>()});
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw GraphError("edge must be [parent, child]");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return build_graph(j.at("prompt_id").get<std::string>(), std::move(tuples),
                       std::move(questions), std::move(edges));
  } catch (const nlohmann::json::exception& ex) {
    throw GraphError(std::string("malformed graph record: ") + ex.what());
  }
}

inline std::vector<SceneGraph> load_graphs(const std::filesystem::path& path) {
  std::vector<SceneGraph> out;
  std::size_t row = 0;
  for (const auto& j : detail::parse_jsonl(detail::read_file(path))) {
    ++row;
    try {
      out.push_back(graph_from_json(j));
    } catch (const GraphError& ex) {
      throw SchemaError(row, ex.what());
    }
  }
  return out;
}

inline std::string graphs_to_jsonl(const std::vector<SceneGraph>& graphs) {
  std::vector<nlohmann::json> rows;
  rows.reserve(graphs.size());
  for (const auto& g : graphs) rows.push_back(graph_to_json(g));
  return detail::to_jsonl(rows);
}

inline void save_graphs(const std::filesystem::path& path, const std::vector<SceneGraph>& graphs) {
  detail::write_file_atomic(path, graphs_to_jsonl(graphs));
}

}  // namespace dsg
