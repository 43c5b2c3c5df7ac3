#pragma once

// Dependency-aware answering. A question only counts when every parent was
// answered "yes"; otherwise its score is 0 and it stays in the denominator.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsg/backends.hpp"
#include "dsg/core_graph.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"

namespace dsg {

enum class Answer { yes, no, skipped };

inline std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::yes: return "YES";
    case Answer::no: return "NO";
    case Answer::skipped: return "SKIPPED";
  }
  return "?";
}

inline std::optional<Answer> parse_answer(std::string_view s) {
  auto l = detail::to_lower(s);
  if (l == "yes") return Answer::yes;
  if (l == "no") return Answer::no;
  if (l == "skipped") return Answer::skipped;
  return std::nullopt;
}

enum class ScoringMode {
  // ask everything, then zero children of zeroed parents in topological order
  zero_out,
  // never ask a question whose parents are not all scored 1
  skip,
};

inline std::string_view to_string(ScoringMode m) { return m == ScoringMode::skip ? "skip" : "zero_out"; }

inline std::optional<ScoringMode> parse_scoring_mode(std::string_view s) {
  if (s == "skip") return ScoringMode::skip;
  if (s == "zero_out" || s == "zero-out") return ScoringMode::zero_out;
  return std::nullopt;
}

enum class BackendErrorPolicy { fail_item, score_zero };

struct ParsedAnswer {
  int score = 0;
  Answer answer = Answer::no;
  bool unparsed = false;
};

// Case-insensitive, whitespace-trimmed prefix match: "yes..." -> 1, "no..." -> 0.
// Anything else scores 0 and is flagged.
inline ParsedAnswer answer_to_score(std::string_view raw) {
  auto s = detail::to_lower(detail::trim(raw));
  if (s.rfind("yes", 0) == 0) return {1, Answer::yes, false};
  if (s.rfind("no", 0) == 0) return {0, Answer::no, false};
  return {0, Answer::no, true};
}

struct AnswerRecord {
  int question_id = 0;
  Answer answer = Answer::no;
  std::string raw_text;
  std::string answerer_id;
  bool unparsed = false;
  std::optional<std::string> error;

  friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;
};

struct ItemEvaluation {
  std::string prompt_id;
  std::string image_ref;
  std::vector<AnswerRecord> answers;  // ordered by question id
  std::vector<int> scores;            // scores[id - 1] in {0, 1}

  int score(int id) const { return scores.at(static_cast<std::size_t>(id - 1)); }
  long score_sum() const {
    long s = 0;
    for (int v : scores) s += v;
    return s;
  }
  // Undefined for an empty graph.
  std::optional<double> average() const {
    if (scores.empty()) return std::nullopt;
    return static_cast<double>(score_sum()) / static_cast<double>(scores.size());
  }

  friend bool operator==(const ItemEvaluation&, const ItemEvaluation&) = default;
};

struct ScoringOptions {
  ScoringMode mode = ScoringMode::skip;
  BackendErrorPolicy on_backend_error = BackendErrorPolicy::fail_item;
};

namespace detail {

inline AnswerRecord ask_one(const SceneGraph& g, int id, const std::string& image_ref,
                            QaBackend& qa, const ScoringOptions& opt) {
  QaQuery q{g.prompt_id(), image_ref, id, g.question(id).text, g.tuple(id)};
  AnswerRecord rec;
  rec.question_id = id;
  rec.answerer_id = qa.name();
  try {
    rec.raw_text = qa.ask(q);
  } catch (const BackendError& e) {
    if (opt.on_backend_error == BackendErrorPolicy::fail_item) throw;
    rec.answer = Answer::no;
    rec.error = e.what();
    return rec;
  }
  auto parsed = answer_to_score(rec.raw_text);
  rec.answer = parsed.answer;
  rec.unparsed = parsed.unparsed;
  return rec;
}

inline bool parents_all_one(const SceneGraph& g, int id, const std::vector<int>& scores) {
  return std::all_of(g.parents(id).begin(), g.parents(id).end(),
                     [&](int p) { return scores[static_cast<std::size_t>(p - 1)] == 1; });
}

}  // namespace detail

inline ItemEvaluation evaluate_item(const SceneGraph& g, const std::string& image_ref,
                                    QaBackend& qa, const ScoringOptions& opt = {}) {
  ItemEvaluation ev;
  ev.prompt_id = g.prompt_id();
  ev.image_ref = image_ref;
  const auto n = g.size();
  std::vector<AnswerRecord> answers(n);
  ev.scores.assign(n, 0);

  if (opt.mode == ScoringMode::zero_out) {
    for (int id : g.topological_order()) {
      auto i = static_cast<std::size_t>(id - 1);
      answers[i] = detail::ask_one(g, id, image_ref, qa, opt);
      ev.scores[i] = answers[i].answer == Answer::yes && !answers[i].error ? 1 : 0;
    }
    // Parents are final before their children are visited, so zeros propagate transitively.
    for (int id : g.topological_order())
      if (!detail::parents_all_one(g, id, ev.scores)) ev.scores[static_cast<std::size_t>(id - 1)] = 0;
  } else {
    for (int id : g.topological_order()) {
      auto i = static_cast<std::size_t>(id - 1);
      if (!detail::parents_all_one(g, id, ev.scores)) {
        answers[i] = AnswerRecord{id, Answer::skipped, "", qa.name(), false, std::nullopt};
        continue;
      }
      answers[i] = detail::ask_one(g, id, image_ref, qa, opt);
      ev.scores[i] = answers[i].answer == Answer::yes && !answers[i].error ? 1 : 0;
    }
  }
  ev.answers = std::move(answers);
  return ev;
}

inline ItemEvaluation evaluate_item(const SceneGraph& g, const std::string& image_ref,
                                    QaBackend& qa, ScoringMode mode) {
  ScoringOptions opt;
  opt.mode = mode;
  return evaluate_item(g, image_ref, qa, opt);
}

struct EvaluationResult {
  std::string prompt_id;
  std::string image_ref;
  std::optional<ItemEvaluation> evaluation;
  std::optional<std::string> error;

  bool ok() const { return evaluation.has_value(); }
};

// Items are (graph, image) pairs in graph order then manifest order; prompts
// without images contribute nothing. Failures are isolated per item.
inline std::vector<EvaluationResult> evaluate_batch(
    const std::vector<SceneGraph>& graphs,
    const std::map<std::string, std::vector<std::string>>& images, QaBackend& qa,
    const ScoringOptions& opt, int parallelism) {
  if (parallelism < 1) throw Error("parallelism must be >= 1");
  struct Job {
    const SceneGraph* graph;
    const std::string* image;
  };
  std::vector<Job> jobs;
  for (const auto& g : graphs)
    if (auto it = images.find(g.prompt_id()); it != images.end())
      for (const auto& ref : it->second) jobs.push_back({&g, &ref});

  std::vector<EvaluationResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      auto& r = results[i];
      r.prompt_id = jobs[i].graph->prompt_id();
      r.image_ref = *jobs[i].image;
      try {
        r.evaluation = evaluate_item(*jobs[i].graph, *jobs[i].image, qa, opt);
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallelism), jobs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Evaluations JSONL:
//   {"prompt_id", "image_ref", "answers": [{"id","answer","raw","answerer"}],
//    "scores": {"<id>": 0|1}, "average": number|null}

inline nlohmann::json to_json(const ItemEvaluation& ev) {
  nlohmann::json answers = nlohmann::json::array();
  for (const auto& a : ev.answers) {
    nlohmann::json j = {{"id", a.question_id},
                        {"answer", std::string(to_string(a.answer))},
                        {"raw", a.raw_text},
                        {"answerer", a.answerer_id}};
    if (a.unparsed) j["unparsed"] = true;
    if (a.error) j["error"] = *a.error;
    answers.push_back(std::move(j));
  }
  nlohmann::json scores = nlohmann::json::object();
  for (std::size_t i = 0; i < ev.scores.size(); ++i) scores[std::to_string(i + 1)] = ev.scores[i];
  auto avg = ev.average();
  return {{"prompt_id", ev.prompt_id},
          {"image_ref", ev.image_ref},
          {"answers", std::move(answers)},
          {"scores", std::move(scores)},
          {"average", avg ? nlohmann::json(*avg) : nlohmann::json(nullptr)}};
}

inline ItemEvaluation evaluation_from_json(const nlohmann::json& j, std::size_t row = 0) {
  try {
    ItemEvaluation ev;
    ev.prompt_id = j.at("prompt_id").get<std::string>();
    ev.image_ref = j.at("image_ref").get<std::string>();
    std::map<int, int> scores;
    for (const auto& [k, v] : j.at("scores").items()) {
      auto id = detail::parse_int(k);
      int s = v.get<int>();
      if (!id || *id < 1) throw SchemaError(row, "bad score key '" + k + "'");
      if (s != 0 && s != 1) throw SchemaError(row, "score must be 0 or 1");
      scores[*id] = s;
    }
    int expect = 1;
    for (const auto& [id, s] : scores) {
      if (id != expect++) throw SchemaError(row, "score ids must be contiguous from 1");
      ev.scores.push_back(s);
    }
    for (const auto& a : j.at("answers")) {
      AnswerRecord r;
      r.question_id = a.at("id").get<int>();
      auto ans = parse_answer(a.at("answer").get<std::string>());
      if (!ans) throw SchemaError(row, "bad answer value");
      r.answer = *ans;
      r.raw_text = a.value("raw", "");
      r.answerer_id = a.value("answerer", "");
      r.unparsed = a.value("unparsed", false);
      if (a.contains("error") && a["error"].is_string()) r.error = a["error"].get<std::string>();
      ev.answers.push_back(std::move(r));
    }
    return ev;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(row, std::string("malformed evaluation: ") + e.what());
  }
}

inline std::vector<ItemEvaluation> parse_evaluations(std::string_view text) {
  std::vector<ItemEvaluation> out;
  std::size_t n = 0;
  for (const auto& j : detail::parse_jsonl(text)) out.push_back(evaluation_from_json(j, ++n));
  return out;
}

inline std::vector<ItemEvaluation> load_evaluations(const std::filesystem::path& p) {
  return parse_evaluations(detail::read_file(p));
}

inline std::string evaluations_to_jsonl(const std::vector<ItemEvaluation>& evs) {
  std::vector<nlohmann::json> rows;
  rows.reserve(evs.size());
  for (const auto& e : evs) rows.push_back(to_json(e));
  return detail::to_jsonl(rows);
}

}  // namespace dsg
