#pragma once

// Three-stage scene graph generation: prompt -> tuples, then tuples -> questions
// and tuples -> dependencies, each stage with its own preamble.

#include <algorithm>
#include <array>
#include <atomic>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsg/backends.hpp"
#include "dsg/codec.hpp"
#include "dsg/core_graph.hpp"
#include "dsg/dataset_io.hpp"
#include "dsg/errors.hpp"
#include "dsg/preambles.hpp"

namespace dsg {

struct RetryConfig {
  // Re-requests per stage after a parse failure (the same preamble is resent).
  int max_parse_retries = 2;
  ParseMode parse_mode = ParseMode::strict;
};

struct StageTrace {
  std::vector<std::string> completions;  // one per attempt
  std::vector<ParseIssue> warnings;
  std::vector<ParseIssue> quarantined;
  int retries = 0;
};

struct GenerationTrace {
  std::string prompt_id;
  std::array<StageTrace, 3> stages;  // indexed by Stage
  std::vector<int> original_ids;     // normalized id i came from original_ids[i-1]

  StageTrace& stage(Stage s) { return stages[static_cast<std::size_t>(s)]; }
  const StageTrace& stage(Stage s) const { return stages[static_cast<std::size_t>(s)]; }
};

enum class FailureKind { backend, stage_parse, graph_invalid };

inline const char* to_string(FailureKind k) {
  switch (k) {
    case FailureKind::backend: return "backend";
    case FailureKind::stage_parse: return "stage_parse";
    case FailureKind::graph_invalid: return "graph_invalid";
  }
  return "?";
}

struct GenerationFailure {
  FailureKind kind = FailureKind::backend;
  std::string message;
  std::optional<Stage> stage;
  std::vector<int> cycle;
};

struct GenerationResult {
  std::string prompt_id;
  std::optional<SceneGraph> graph;
  GenerationTrace trace;
  std::optional<GenerationFailure> error;

  bool ok() const { return graph.has_value(); }
};

namespace detail {

template <class T, class ParseFn>
std::vector<T> run_stage(Stage stage, GenerationBackend& backend, const PreambleSet& preambles,
                         const std::string& input, const RetryConfig& cfg, GenerationTrace& trace,
                         ParseFn&& parse) {
  auto& st = trace.stage(stage);
  const int attempts = 1 + std::max(0, cfg.max_parse_retries);
  std::string reason;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) ++st.retries;
    std::string text = backend.complete(preambles.for_stage(stage), input);
    st.completions.push_back(text);
    try {
      ParseResult<T> r = parse(text, ParseOptions{cfg.parse_mode});
      if (trim(text).empty()) throw LineParseError(0, "empty completion");
      if (r.values.empty() && stage != Stage::dependencies)
        throw LineParseError(0, "no parseable lines");
      st.warnings.insert(st.warnings.end(), r.warnings.begin(), r.warnings.end());
      st.quarantined.insert(st.quarantined.end(), r.quarantined.begin(), r.quarantined.end());
      return std::move(r.values);
    } catch (const LineParseError& e) {
      reason = e.what();
    }
  }
  throw StageParseError(stage, st.completions.back(), reason);
}

inline SceneGraph run_pipeline(const PromptRecord& prompt, GenerationBackend& backend,
                               const PreambleSet& preambles, const RetryConfig& cfg,
                               GenerationTrace& trace) {
  if (trim(prompt.text).empty()) throw Error("prompt '" + prompt.prompt_id + "' has empty text");
  auto tuples = run_stage<SemanticTuple>(
      Stage::tuples, backend, preambles, prompt.text, cfg, trace,
      [](const std::string& t, ParseOptions o) { return parse_tuples(t, o); });

  // Later stages see the prompt, a blank line, then the tuple lines.
  const std::string input = prompt.text + "\n\n" + encode_tuples(tuples);
  auto questions = run_stage<QuestionNode>(
      Stage::questions, backend, preambles, input, cfg, trace,
      [](const std::string& t, ParseOptions o) { return parse_questions(t, o); });
  auto edges = run_stage<DependencyEdge>(
      Stage::dependencies, backend, preambles, input, cfg, trace,
      [](const std::string& t, ParseOptions o) { return parse_dependencies(t, o); });

  try {
    auto g = build_graph(prompt.prompt_id, std::move(tuples), std::move(questions),
                         std::move(edges));
    trace.original_ids = g.original_ids();
    return g;
  } catch (const CycleError& e) {
    throw GraphInvalidError(e.what(), e.cycle());
  } catch (const GraphError& e) {
    throw GraphInvalidError(e.what());
  }
}

}  // namespace detail

// Throws BackendError, StageParseError or GraphInvalidError.
inline std::pair<SceneGraph, GenerationTrace> generate_dsg(const PromptRecord& prompt,
                                                           GenerationBackend& backend,
                                                           const PreambleSet& preambles,
                                                           const RetryConfig& cfg = {}) {
  GenerationTrace trace;
  trace.prompt_id = prompt.prompt_id;
  auto g = detail::run_pipeline(prompt, backend, preambles, cfg, trace);
  return {std::move(g), std::move(trace)};
}

// Same as generate_dsg but failures are captured in the result with the partial trace.
inline GenerationResult try_generate_dsg(const PromptRecord& prompt, GenerationBackend& backend,
                                         const PreambleSet& preambles,
                                         const RetryConfig& cfg = {}) {
  GenerationResult r;
  r.prompt_id = prompt.prompt_id;
  r.trace.prompt_id = prompt.prompt_id;
  try {
    r.graph = detail::run_pipeline(prompt, backend, preambles, cfg, r.trace);
  } catch (const StageParseError& e) {
    r.error = GenerationFailure{FailureKind::stage_parse, e.what(), e.stage(), {}};
  } catch (const GraphInvalidError& e) {
    r.error = GenerationFailure{FailureKind::graph_invalid, e.what(), std::nullopt, e.cycle()};
  } catch (const BackendError& e) {
    r.error = GenerationFailure{FailureKind::backend, e.what(), std::nullopt, {}};
  } catch (const Error& e) {
    r.error = GenerationFailure{FailureKind::stage_parse, e.what(), std::nullopt, {}};
  }
  return r;
}

// Runs up to `parallelism` prompts at a time. Results come back in input order
// and one failing prompt never affects the others.
inline std::vector<GenerationResult> generate_batch(const std::vector<PromptRecord>& prompts,
                                                    GenerationBackend& backend,
                                                    const PreambleSet& preambles,
                                                    int parallelism, const RetryConfig& cfg = {}) {
  if (parallelism < 1) throw Error("parallelism must be >= 1");
  std::vector<GenerationResult> results(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < prompts.size();)
      results[i] = try_generate_dsg(prompts[i], backend, preambles, cfg);
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallelism), prompts.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return results;
}

inline nlohmann::json to_json(const ParseIssue& i) {
  return {{"line", i.line_no}, {"reason", i.reason}, {"text", i.line}};
}

inline nlohmann::json to_json(const GenerationResult& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (Stage s : {Stage::tuples, Stage::questions, Stage::dependencies}) {
    const auto& st = r.trace.stage(s);
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : st.warnings) warnings.push_back(to_json(w));
    nlohmann::json quarantined = nlohmann::json::array();
    for (const auto& q : st.quarantined) quarantined.push_back(to_json(q));
    stages.push_back({{"stage", to_string(s)},
                      {"completions", st.completions},
                      {"warnings", std::move(warnings)},
                      {"quarantined", std::move(quarantined)},
                      {"retries", st.retries}});
  }
  nlohmann::json j = {{"prompt_id", r.prompt_id},
                      {"stages", std::move(stages)},
                      {"original_ids", r.trace.original_ids}};
  if (r.error) {
    nlohmann::json e = {{"kind", to_string(r.error->kind)}, {"message", r.error->message}};
    if (r.error->stage) e["stage"] = to_string(*r.error->stage);
    if (!r.error->cycle.empty()) e["cycle"] = r.error->cycle;
    j["error"] = std::move(e);
  } else {
    j["error"] = nullptr;
  }
  return j;
}

}  // namespace dsg
