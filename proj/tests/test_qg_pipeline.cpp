#include <gtest/gtest.h>

#include <mutex>

#include "dsg/fixtures.hpp"
#include "dsg/graph_io.hpp"
#include "dsg/qg_pipeline.hpp"
#include "support/generators.hpp"

using namespace dsg;

namespace {

const PreambleSet& pre() {
  static const PreambleSet p = default_preambles();
  return p;
}

PromptRecord prompt(std::string id, std::string text) { return {std::move(id), std::move(text), Source::tifa160, {}}; }

}  // namespace

TEST(Pipeline, ParkedMotorcycleEndToEnd) {
  ScriptedGenerationBackend llm(pre());
  auto a = fixtures::parked_motorcycle_annotation();
  llm.script_graph(fixtures::kMotorcyclePrompt, a.tuples, a.questions, a.dependencies);
  auto [g, trace] = generate_dsg(prompt("m", fixtures::kMotorcyclePrompt), llm, pre());
  EXPECT_EQ(g, decode_graph("m", fixtures::parked_motorcycle_annotation()));
  EXPECT_EQ(g.roots(), (std::vector<int>{1, 3}));
  EXPECT_EQ(trace.original_ids, (std::vector<int>{1, 2, 3, 4}));
  for (Stage s : {Stage::tuples, Stage::questions, Stage::dependencies}) {
    EXPECT_EQ(trace.stage(s).completions.size(), 1u);
    EXPECT_EQ(trace.stage(s).retries, 0);
  }
  auto calls = llm.calls();
  ASSERT_EQ(calls.size(), 3u);
  EXPECT_EQ(calls[0].first, Stage::tuples);
  EXPECT_EQ(calls[1].first, Stage::questions);
  EXPECT_EQ(calls[2].first, Stage::dependencies);
}

TEST(Pipeline, LaterStagesSeePromptThenCanonicalTuples) {
  std::vector<std::pair<std::string, std::string>> seen;
  std::mutex mu;
  FunctionGenerationBackend llm([&](std::string_view preamble, std::string_view input) -> std::string {
    {
      std::lock_guard lock(mu);
      seen.emplace_back(preamble, input);
    }
    if (preamble == pre().tuple)
      return "here you go\n1 |   entity-whole(cat)\n2 | attribute - mood (happy, cat)\n3 | attribute - color (black, cat)\n";
    if (preamble == pre().question) return "1 | Is there a cat?\n3 | Is the cat black?\n";
    return "1 | 0\n3 | 1\n";
  });
  RetryConfig cfg;
  cfg.parse_mode = ParseMode::lenient;
  auto r = try_generate_dsg(prompt("c", "a black cat"), llm, pre(), cfg);
  ASSERT_TRUE(r.ok()) << r.error->message;
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0].second, "a black cat");
  const std::string want = "a black cat\n\n1 | entity - whole (cat)\n3 | attribute - color (black, cat)\n";
  EXPECT_EQ(seen[1].second, want);
  EXPECT_EQ(seen[2].second, want);
  EXPECT_EQ(r.graph->size(), 2u);
  EXPECT_EQ(r.trace.original_ids, (std::vector<int>{1, 3}));
  EXPECT_EQ(r.graph->parents(2), (std::vector<int>{1}));
  EXPECT_EQ(r.trace.stage(Stage::tuples).quarantined.size(), 1u);
  EXPECT_EQ(r.trace.stage(Stage::tuples).warnings.size(), 1u);

  // the same completions are rejected outright in strict mode
  seen.clear();
  auto strict = try_generate_dsg(prompt("c", "a black cat"), llm, pre());
  ASSERT_FALSE(strict.ok());
  EXPECT_EQ(strict.error->kind, FailureKind::stage_parse);
  EXPECT_EQ(strict.error->stage, Stage::tuples);
  EXPECT_EQ(strict.trace.stage(Stage::tuples).completions.size(), 3u);
}

TEST(Pipeline, ParseFailuresAreRetriedWithTheSamePreamble) {
  auto a = fixtures::chain_annotation();
  ScriptedGenerationBackend llm(pre());
  llm.script_text(Stage::tuples, "cat", {"nonsense", "", a.tuples});
  llm.script_text(Stage::questions, "cat", {a.questions});
  llm.script_text(Stage::dependencies, "cat", {"1 | 0\n2 | 1\n3 | 2;1\n", a.dependencies});
  auto [g, trace] = generate_dsg(prompt("c", "cat"), llm, pre());
  EXPECT_EQ(g, fixtures::chain_graph("c"));
  EXPECT_EQ(trace.stage(Stage::tuples).retries, 2);
  EXPECT_EQ(trace.stage(Stage::tuples).completions,
            (std::vector<std::string>{"nonsense", "", a.tuples}));
  EXPECT_EQ(trace.stage(Stage::questions).retries, 0);
  EXPECT_EQ(trace.stage(Stage::dependencies).retries, 1);
  EXPECT_EQ(llm.calls().size(), 6u);
}

TEST(Pipeline, RetryBudgetIsHonoured) {
  for (int budget : {0, 1, 4}) {
    ScriptedGenerationBackend llm(pre());
    llm.script_text(Stage::tuples, "cat", {"nonsense"});
    RetryConfig cfg;
    cfg.max_parse_retries = budget;
    try {
      generate_dsg(prompt("c", "cat"), llm, pre(), cfg);
      FAIL();
    } catch (const StageParseError& e) {
      EXPECT_EQ(e.stage(), Stage::tuples);
      EXPECT_EQ(e.raw_text(), "nonsense");
    }
    EXPECT_EQ(llm.calls().size(), static_cast<std::size_t>(budget + 1));
  }
}

TEST(Pipeline, TransportErrorsAreNotRetried) {
  ScriptedGenerationBackend llm(pre());
  llm.script(Stage::tuples, "cat", {{"", true}, {fixtures::chain_annotation().tuples, false}});
  EXPECT_THROW(generate_dsg(prompt("c", "cat"), llm, pre()), BackendError);
  EXPECT_EQ(llm.calls().size(), 1u);

  ScriptedGenerationBackend llm2(pre());
  llm2.script(Stage::tuples, "cat", {{"", true}});
  auto r = try_generate_dsg(prompt("c", "cat"), llm2, pre());
  EXPECT_EQ(r.error->kind, FailureKind::backend);
}

TEST(Pipeline, CyclicDependenciesAreRejectedWithTheCycle) {
  auto a = fixtures::chain_annotation();
  ScriptedGenerationBackend llm(pre());
  llm.script_graph("cat", a.tuples, a.questions, "1 | 3\n2 | 1\n3 | 2\n");
  try {
    generate_dsg(prompt("c", "cat"), llm, pre());
    FAIL();
  } catch (const GraphInvalidError& e) {
    auto c = e.cycle();
    ASSERT_EQ(c.size(), 3u);
    std::sort(c.begin(), c.end());
    EXPECT_EQ(c, (std::vector<int>{1, 2, 3}));
  }
  auto r = try_generate_dsg(prompt("c", "cat"), llm, pre());
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error->kind, FailureKind::graph_invalid);
  EXPECT_EQ(r.error->cycle.size(), 3u);
  auto j = to_json(r);
  EXPECT_EQ(j["error"]["kind"], "graph_invalid");
  EXPECT_EQ(j["stages"][2]["completions"][0], "1 | 3\n2 | 1\n3 | 2\n");
}

TEST(Pipeline, DanglingQuestionIsGraphInvalid) {
  auto a = fixtures::chain_annotation();
  ScriptedGenerationBackend llm(pre());
  llm.script_graph("cat", a.tuples, "1 | Is there a cat?\n2 | Is the cat black?\n", a.dependencies);
  auto r = try_generate_dsg(prompt("c", "cat"), llm, pre());
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error->kind, FailureKind::graph_invalid);
}

TEST(Pipeline, SparseIdsAreNormalized) {
  ScriptedGenerationBackend llm(pre());
  llm.script_graph("cat", "10 | entity - whole (cat)\n20 | attribute - color (black, cat)\n",
                   "20 | Is the cat black?\n10 | Is there a cat?\n", "10 | 0\n20 | 10\n");
  auto [g, trace] = generate_dsg(prompt("c", "cat"), llm, pre());
  EXPECT_EQ(trace.original_ids, (std::vector<int>{10, 20}));
  EXPECT_EQ(g.question(2).text, "Is the cat black?");
  EXPECT_EQ(g.parents(2), (std::vector<int>{1}));
}

TEST(Pipeline, EmptyPromptFails) {
  ScriptedGenerationBackend llm(pre());
  EXPECT_THROW(generate_dsg(prompt("e", "  "), llm, pre()), Error);
  EXPECT_TRUE(llm.calls().empty());
}

TEST(Batch, OrderIsolationAndDeterminism) {
  auto corpus = dsgtest::synthetic_corpus(40, 11);
  ScriptedGenerationBackend llm(pre());
  std::vector<PromptRecord> prompts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus[i];
    prompts.push_back(c.prompt);
    if (i % 10 == 3) {
      llm.script_text(Stage::tuples, c.prompt.text, {"no tuples here"});
      continue;
    }
    llm.script_graph(c.prompt.text, c.annotation.tuples, c.annotation.questions, c.annotation.dependencies);
  }
  prompts.push_back(prompt("unscripted", "a prompt nobody scripted"));

  std::string first;
  for (int par : {1, 2, 8}) {
    auto results = generate_batch(prompts, llm, pre(), par);
    ASSERT_EQ(results.size(), prompts.size());
    std::vector<SceneGraph> ok;
    for (std::size_t i = 0; i < results.size(); ++i) {
      EXPECT_EQ(results[i].prompt_id, prompts[i].prompt_id);
      bool should_fail = i == corpus.size() || i % 10 == 3;
      ASSERT_EQ(results[i].ok(), !should_fail) << i;
      if (results[i].ok()) {
        EXPECT_EQ(*results[i].graph, decode_graph(prompts[i].prompt_id, corpus[i].annotation));
        ok.push_back(*results[i].graph);
      }
    }
    EXPECT_EQ(results.back().error->kind, FailureKind::backend);
    EXPECT_EQ(results[3].error->kind, FailureKind::stage_parse);
    auto dump = graphs_to_jsonl(ok);
    if (first.empty()) first = dump;
    EXPECT_EQ(dump, first) << "parallelism " << par;
  }
  EXPECT_THROW(generate_batch(prompts, llm, pre(), 0), Error);
}
