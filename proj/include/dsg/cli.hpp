#pragma once

// `dsg` command line. Exit codes: 0 success, 1 validation or usage failure,
// 2 backend failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"

#include "dsg/backends.hpp"
#include "dsg/codec.hpp"
#include "dsg/correlation.hpp"
#include "dsg/dataset_io.hpp"
#include "dsg/fixtures.hpp"
#include "dsg/graph_io.hpp"
#include "dsg/http_backends.hpp"
#include "dsg/metrics.hpp"
#include "dsg/qg_pipeline.hpp"
#include "dsg/report.hpp"
#include "dsg/scoring.hpp"

namespace dsg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackend = 2;

namespace cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct GenerateArgs {
  std::string prompts, backend, preambles, out, traces, parse_mode = "strict";
  int parallelism = 1, max_retries = 2, timeout = 60;
};

struct ScoreArgs {
  std::string graphs, images, qa_backend, mode = "skip", out, on_error = "fail";
  int parallelism = 1, timeout = 60;
  bool inline_images = false;
};

struct MetricsArgs {
  std::string graphs, human_tuples, judge = "baseline", prompts, atomicity, out;
  int timeout = 60;
};

struct CorrelateArgs {
  std::string item_scores, likert, out;
};

struct ReportArgs {
  std::string evaluations, prompts, graphs, likert, answers, out;
  std::size_t min_group_size = 30;
};

struct ValidateArgs {
  std::string prompts, likert, answers, graphs;
};

inline std::string config_hash(const CLI::App& app) {
  return detail::hex64(detail::fnv1a64(app.config_to_str(true, false)));
}

inline int run_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  auto prompts = load_prompts(a.prompts);
  auto preambles = a.preambles.empty() ? default_preambles() : load_preambles(a.preambles);
  preambles.validate();
  HttpOptions http;
  http.timeout_seconds = a.timeout;
  HttpGenerationBackend backend(a.backend, http);
  RetryConfig cfg;
  cfg.max_parse_retries = a.max_retries;
  cfg.parse_mode = a.parse_mode == "lenient" ? ParseMode::lenient : ParseMode::strict;

  auto results = generate_batch(prompts, backend, preambles, a.parallelism, cfg);
  std::vector<SceneGraph> graphs;
  std::vector<json> traces;
  bool backend_failure = false, other_failure = false;
  for (auto& r : results) {
    traces.push_back(to_json(r));
    if (r.graph) {
      graphs.push_back(std::move(*r.graph));
    } else {
      err << "prompt " << r.prompt_id << ": " << r.error->message << "\n";
      (r.error->kind == FailureKind::backend ? backend_failure : other_failure) = true;
    }
  }
  save_graphs(a.out, graphs);
  detail::write_file_atomic(a.traces.empty() ? a.out + ".traces.jsonl" : a.traces,
                            detail::to_jsonl(traces));
  out << "generated " << graphs.size() << "/" << results.size() << " graphs\n";
  if (backend_failure) return kExitBackend;
  return other_failure ? kExitValidation : kExitOk;
}

inline int run_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  auto graphs = load_graphs(a.graphs);
  auto manifest = load_image_manifest(a.images);
  std::set<std::string> known;
  for (const auto& g : graphs) known.insert(g.prompt_id());
  bool unknown = false;
  for (const auto& e : manifest)
    if (!known.count(e.prompt_id)) {
      err << "manifest entry " << e.image_ref << " references prompt '" << e.prompt_id
          << "' with no graph\n";
      unknown = true;
    }
  if (unknown) return kExitValidation;

  HttpOptions http;
  http.timeout_seconds = a.timeout;
  HttpQaBackend qa(a.qa_backend, http, a.inline_images);
  ScoringOptions opt;
  opt.mode = *parse_scoring_mode(a.mode);
  opt.on_backend_error =
      a.on_error == "zero" ? BackendErrorPolicy::score_zero : BackendErrorPolicy::fail_item;

  auto results = evaluate_batch(graphs, image_map(manifest), qa, opt, a.parallelism);
  std::vector<ItemEvaluation> evs;
  std::vector<json> errors;
  for (auto& r : results) {
    if (r.evaluation) {
      evs.push_back(std::move(*r.evaluation));
    } else {
      err << r.prompt_id << "@" << r.image_ref << ": " << *r.error << "\n";
      errors.push_back({{"prompt_id", r.prompt_id}, {"image_ref", r.image_ref}, {"error", *r.error}});
    }
  }
  detail::write_file_atomic(a.out, evaluations_to_jsonl(evs));
  if (!errors.empty()) detail::write_file_atomic(a.out + ".errors.jsonl", detail::to_jsonl(errors));
  out << "scored " << evs.size() << "/" << results.size() << " items\n";
  return errors.empty() ? kExitOk : kExitBackend;
}

// {"prompt_id", "tuples": [...]} per line
inline std::map<std::string, std::vector<SemanticTuple>> load_reference_tuples(const fs::path& p) {
  std::map<std::string, std::vector<SemanticTuple>> out;
  std::size_t row = 0;
  for (const auto& j : detail::parse_jsonl(detail::read_file(p))) {
    ++row;
    try {
      auto& v = out[j.at("prompt_id").get<std::string>()];
      for (const auto& t : j.at("tuples")) v.push_back(tuple_from_json(t));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(row, e.what());
    } catch (const GraphError& e) {
      throw SchemaError(row, e.what());
    }
  }
  return out;
}

// {"prompt_id", "question_id", "atomic": bool} per line
inline std::map<std::string, std::map<int, bool>> load_atomicity(const fs::path& p) {
  std::map<std::string, std::map<int, bool>> out;
  std::size_t row = 0;
  for (const auto& j : detail::parse_jsonl(detail::read_file(p))) {
    ++row;
    try {
      out[j.at("prompt_id").get<std::string>()][j.at("question_id").get<int>()] =
          j.at("atomic").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(row, e.what());
    }
  }
  return out;
}

inline int run_metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
  auto graphs = load_graphs(a.graphs);
  std::optional<std::map<std::string, std::vector<SemanticTuple>>> reference;
  if (!a.human_tuples.empty()) reference = load_reference_tuples(a.human_tuples);
  std::map<std::string, std::string> prompt_text;
  if (!a.prompts.empty())
    for (const auto& p : load_prompts(a.prompts)) prompt_text[p.prompt_id] = p.text;
  std::map<std::string, std::map<int, bool>> atomicity;
  if (!a.atomicity.empty()) atomicity = load_atomicity(a.atomicity);

  std::unique_ptr<GenerationBackend> judge;
  if (a.judge != "baseline") {
    HttpOptions http;
    http.timeout_seconds = a.timeout;
    judge = std::make_unique<HttpGenerationBackend>(a.judge, http);
  }

  auto add = [](Ratio& acc, const Ratio& r) {
    acc.num += r.num;
    acc.den += r.den;
  };
  Ratio precision, recall, uniqueness, dep, atom;
  bool any_recall = false, any_atom = false;
  json per_prompt = json::array();
  std::string csv = "prompt_id,judge,questions,precision,recall,uniqueness,dependency_valid,atomicity\n";
  auto cell = [](const std::optional<Ratio>& r) {
    return r && r->defined() ? detail::format3(r->value()) : std::string();
  };
  auto rjson = [](const std::optional<Ratio>& r) {
    if (!r) return json(nullptr);
    return json{{"num", r->num}, {"den", r->den},
                {"value", r->defined() ? json(r->value()) : json(nullptr)}};
  };
  for (const auto& g : graphs) {
    std::optional<std::vector<SemanticTuple>> ref;
    if (reference) {
      auto it = reference->find(g.prompt_id());
      if (it == reference->end()) {
        err << "no reference tuples for prompt '" << g.prompt_id() << "'\n";
        return kExitValidation;
      }
      ref = it->second;
    }
    const auto& tuples = ref ? *ref : g.tuples();
    std::vector<MatchJudgment> matches;
    std::vector<std::set<int>> dups;
    std::vector<std::string> raw;
    auto text = prompt_text.count(g.prompt_id()) ? prompt_text[g.prompt_id()] : std::string();
    if (judge) {
      auto jo = judge_matches(g, tuples, *judge, text);
      matches = std::move(jo.judgments);
      raw = std::move(jo.raw_completions);
      std::string dup_raw;
      dups = judge_duplicates(g, *judge, text, default_judge_preambles(), &dup_raw);
      raw.push_back(std::move(dup_raw));
    } else {
      matches = judge_matches_lexical(g, tuples);
      dups = judge_duplicates_lexical(g);
    }
    std::optional<std::map<int, bool>> labels;
    if (auto it = atomicity.find(g.prompt_id()); it != atomicity.end()) labels = it->second;
    auto q = qg_quality(g, ref, matches, dups, labels);

    add(precision, q.precision);
    add(uniqueness, q.uniqueness);
    add(dep, q.dependency_valid);
    if (q.recall) any_recall = true, add(recall, *q.recall);
    if (q.atomicity) any_atom = true, add(atom, *q.atomicity);

    json dsets = json::array();
    for (const auto& s : q.duplicate_sets) dsets.push_back(s);
    per_prompt.push_back({{"prompt_id", g.prompt_id()},
                          {"judge", judge ? judge->name() : std::string("baseline")},
                          {"precision", rjson(q.precision)},
                          {"recall", rjson(q.recall)},
                          {"uniqueness", rjson(q.uniqueness)},
                          {"duplicate_sets", dsets},
                          {"dependency_valid", rjson(q.dependency_valid)},
                          {"atomicity", rjson(q.atomicity)},
                          {"raw_judge_completions", raw}});
    csv += g.prompt_id() + "," + (judge ? "llm" : "baseline") + "," + std::to_string(g.size()) + "," +
           cell(q.precision) + "," + cell(q.recall) + "," + cell(q.uniqueness) + "," +
           (q.dependency_valid.defined() ? detail::format3(q.dependency_valid.value()) : "1.000") +
           "," + cell(q.atomicity) + "\n";
  }
  std::optional<Ratio> rec = any_recall ? std::optional<Ratio>(recall) : std::nullopt;
  std::optional<Ratio> at = any_atom ? std::optional<Ratio>(atom) : std::nullopt;
  csv += std::string("all,") + (judge ? "llm" : "baseline") + "," + std::to_string(precision.den) +
         "," + cell(precision) + "," + cell(rec) + "," + cell(uniqueness) + "," +
         (dep.defined() ? detail::format3(dep.value()) : "1.000") + "," + cell(at) + "\n";
  json summary = {{"prompts", per_prompt},
                  {"aggregate",
                   {{"precision", rjson(precision)},
                    {"recall", rjson(rec)},
                    {"uniqueness", rjson(uniqueness)},
                    {"dependency_valid", rjson(dep)},
                    {"atomicity", rjson(at)}}}};
  fs::path dir = a.out;
  detail::write_file_atomic(dir / "qg_quality.csv", csv);
  detail::write_file_atomic(dir / "metrics.json", summary.dump(2) + "\n");
  out << "metrics for " << graphs.size() << " graphs written to " << dir.string() << "\n";
  return kExitOk;
}

inline int run_correlate(const CorrelateArgs& a, std::ostream& out, std::ostream&) {
  auto evs = load_evaluations(a.item_scores);
  auto means = mean_likert(load_likert(a.likert));
  std::map<ItemKey, double> avg;
  for (const auto& ev : evs)
    if (auto v = ev.average()) avg[{ev.prompt_id, ev.image_ref}] = *v;
  std::vector<std::string> missing;
  std::vector<double> x, y;
  for (const auto& [k, rating] : means) {
    auto it = avg.find(k);
    if (it == avg.end()) {
      missing.push_back(describe(k));
      continue;
    }
    x.push_back(it->second);
    y.push_back(rating);
  }
  if (!missing.empty()) throw KeyMismatchError("Likert items without item scores", missing);
  auto c = correlate(x, y);
  json j = {{"n", c.n},
            {"spearman_rho", c.spearman_rho},
            {"kendall_tau", c.kendall_tau},
            {"score_ties", {{"groups", c.x_ties.tied_groups}, {"pairs", c.x_ties.tied_pairs}}},
            {"likert_ties", {{"groups", c.y_ties.tied_groups}, {"pairs", c.y_ties.tied_pairs}}}};
  if (!a.out.empty()) detail::write_file_atomic(a.out, j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kExitOk;
}

inline int run_report(const ReportArgs& a, const std::string& cfg_hash, std::ostream& out,
                      std::ostream& err) {
  auto evs = load_evaluations(a.evaluations);
  auto prompts = load_prompts(a.prompts);
  std::vector<SceneGraph> graphs;
  if (!a.graphs.empty()) graphs = load_graphs(a.graphs);
  HumanData human;
  if (!a.likert.empty()) human.likert = load_likert(a.likert);
  if (!a.answers.empty()) human.answers = load_human_answers(a.answers);
  ReportOptions opt;
  opt.min_group_size = a.min_group_size;
  Provenance prov;
  prov.config_hash = cfg_hash;
  auto rep = build_report(evs, prompts, graphs, human, opt, prov);
  if (auto bad = verify_report(rep, evs); !bad.empty()) {
    for (const auto& b : bad) err << "report verification: " << b << "\n";
    return kExitValidation;
  }
  write_report(rep, a.out);
  out << "report written to " << a.out << "\n";
  return kExitOk;
}

inline int run_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  auto prompts = load_prompts(a.prompts);
  auto graphs = load_graphs(a.graphs);
  std::set<std::string> ids;
  for (const auto& p : prompts) ids.insert(p.prompt_id);
  std::vector<std::string> violations;
  for (const auto& g : graphs)
    if (!ids.count(g.prompt_id())) violations.push_back("graph for unknown prompt '" + g.prompt_id() + "'");
  std::size_t n_likert = 0, n_answers = 0;
  if (!a.likert.empty()) {
    auto likert = load_likert(a.likert);
    n_likert = likert.size();
    for (const auto& r : likert)
      if (!ids.count(r.prompt_id))
        violations.push_back("rating by " + r.rater_id + " for unknown prompt '" + r.prompt_id + "'");
  }
  if (!a.answers.empty()) {
    auto answers = load_human_answers(a.answers);
    n_answers = answers.size();
    auto v = check_referential_integrity(answers, graphs);
    violations.insert(violations.end(), v.begin(), v.end());
  }
  std::map<Source, std::size_t> per_source;
  for (const auto& p : prompts) ++per_source[p.source];
  out << prompts.size() << " prompts, " << graphs.size() << " graphs, " << n_likert << " ratings, "
      << n_answers << " answers\n";
  for (const auto& [s, n] : per_source) out << "  " << to_string(s) << ": " << n << "\n";
  for (const auto& v : violations) err << "violation: " << v << "\n";
  return violations.empty() ? kExitOk : kExitValidation;
}

// Runs the built-in fixtures through every stage with in-process doubles.
inline int run_selftest(std::ostream& out) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    out << (ok ? "  ok   " : "  FAIL ") << name << "\n";
    if (!ok) ++failures;
  };

  ScriptedGenerationBackend llm;
  auto ann = fixtures::motorcycle_annotation();
  llm.script_graph(fixtures::kMotorcyclePrompt, ann.tuples, ann.questions, ann.dependencies);
  PromptRecord prompt{"motorcycle", fixtures::kMotorcyclePrompt, Source::tifa160, std::nullopt};
  auto [g, trace] = generate_dsg(prompt, llm, default_preambles());
  check("generate motorcycle graph", g.size() == 4 && g.edges().size() == 2);

  std::map<int, std::string> replies = {{1, "no"}, {2, "yes"}, {3, "yes"}, {4, "yes"}};
  FunctionQaBackend qa([&](const QaQuery& q) { return replies.at(q.question_id); }, "selftest-qa");
  auto skip = evaluate_item(g, "selftest/motorcycle.png", qa, ScoringMode::skip);
  auto zero = evaluate_item(g, "selftest/motorcycle.png", qa, ScoringMode::zero_out);
  check("motorcycle scores 0.5 (skip)", skip.average() == 0.5);
  check("motorcycle scores 0.5 (zero_out)", zero.average() == 0.5 && zero.scores == skip.scores);

  auto chain = fixtures::chain_graph();
  FunctionQaBackend chain_qa([](const QaQuery& q) { return q.question_id == 1 ? "no" : "yes"; });
  check("chain zero-out is transitive", evaluate_item(chain, "x", chain_qa, ScoringMode::zero_out).average() == 0.0);

  SceneOracle oracle({{"selftest/motorcycle.png", g.tuples()}});
  auto full = evaluate_item(g, "selftest/motorcycle.png", oracle);
  check("scene oracle scores intact scene 1.0", full.average() == 1.0);

  std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  check("spearman hand case 0.8", spearman_rho(x, y) == 0.8);

  auto rep = build_report({skip}, {prompt}, {g});
  check("report recomputes", verify_report(rep, {skip}).empty());

  out << (failures ? "FAIL" : "PASS") << "\n";
  return failures ? kExitValidation : kExitOk;
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Scene-graph based text-to-image alignment evaluation"};
  app.set_config("--config", "", "key=value config file; command-line flags take precedence");
  app.require_subcommand(1);

  cli::GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate scene graphs for a prompt file");
  generate->add_option("--prompts", gen.prompts, "Prompts JSONL/TSV")->required();
  generate->add_option("--backend", gen.backend, "Generation backend URL")->required();
  generate->add_option("--preambles", gen.preambles, "Directory with tuple/question/dependency.txt");
  generate->add_option("--out", gen.out, "Output graphs JSONL")->required();
  generate->add_option("--traces", gen.traces, "Output traces JSONL (default: <out>.traces.jsonl)");
  generate->add_option("--parallelism", gen.parallelism)->check(CLI::PositiveNumber);
  generate->add_option("--parse-mode", gen.parse_mode)->check(CLI::IsMember({"strict", "lenient"}));
  generate->add_option("--max-retries", gen.max_retries)->check(CLI::NonNegativeNumber);
  generate->add_option("--timeout", gen.timeout, "Seconds per request")->check(CLI::PositiveNumber);

  cli::ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Answer graph questions against images");
  score->add_option("--graphs", sc.graphs, "Graphs JSONL")->required();
  score->add_option("--images", sc.images, "Image manifest JSONL/TSV (prompt_id, image_ref)")->required();
  score->add_option("--qa-backend", sc.qa_backend, "VQA backend URL")->required();
  score->add_option("--mode", sc.mode)->check(CLI::IsMember({"skip", "zero_out", "zero-out"}));
  score->add_option("--out", sc.out, "Output evaluations JSONL")->required();
  score->add_option("--parallelism", sc.parallelism)->check(CLI::PositiveNumber);
  score->add_option("--on-backend-error", sc.on_error)->check(CLI::IsMember({"fail", "zero"}));
  score->add_flag("--inline-images", sc.inline_images, "Send images as base64 instead of references");
  score->add_option("--timeout", sc.timeout)->check(CLI::PositiveNumber);

  cli::MetricsArgs mt;
  auto* metrics = app.add_subcommand("metrics", "Question-generation quality metrics");
  metrics->add_option("--graphs", mt.graphs)->required();
  metrics->add_option("--human-tuples", mt.human_tuples, "Reference tuples JSONL");
  metrics->add_option("--judge", mt.judge, "Judge backend URL or 'baseline'");
  metrics->add_option("--prompts", mt.prompts, "Prompts file (prompt text for the judge)");
  metrics->add_option("--atomicity", mt.atomicity, "Human atomicity labels JSONL");
  metrics->add_option("--out", mt.out, "Output directory")->required();
  metrics->add_option("--timeout", mt.timeout)->check(CLI::PositiveNumber);

  cli::CorrelateArgs co;
  auto* correlate_cmd = app.add_subcommand("correlate", "Rank correlation of item scores with Likert ratings");
  correlate_cmd->add_option("--item-scores", co.item_scores, "Evaluations JSONL")->required();
  correlate_cmd->add_option("--likert", co.likert, "Likert ratings JSONL/TSV")->required();
  correlate_cmd->add_option("--out", co.out, "Also write the result JSON here");

  cli::ReportArgs rp;
  auto* report = app.add_subcommand("report", "Aggregate evaluations into report tables");
  report->add_option("--evaluations", rp.evaluations)->required();
  report->add_option("--prompts", rp.prompts)->required();
  report->add_option("--graphs", rp.graphs);
  report->add_option("--likert", rp.likert);
  report->add_option("--answers", rp.answers, "Per-question human answers");
  report->add_option("--out", rp.out, "Output directory")->required();
  report->add_option("--min-group-size", rp.min_group_size);

  cli::ValidateArgs va;
  auto* validate = app.add_subcommand("validate-data", "Check data files and cross references");
  validate->add_option("--prompts", va.prompts)->required();
  validate->add_option("--likert", va.likert);
  validate->add_option("--answers", va.answers);
  validate->add_option("--graphs", va.graphs)->required();

  auto* selftest = app.add_subcommand("selftest", "Run the built-in fixture pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'dsg --help' for usage\n";
    return kExitValidation;
  }

  try {
    if (generate->parsed()) return cli::run_generate(gen, out, err);
    if (score->parsed()) return cli::run_score(sc, out, err);
    if (metrics->parsed()) return cli::run_metrics(mt, out, err);
    if (correlate_cmd->parsed()) return cli::run_correlate(co, out, err);
    if (report->parsed()) return cli::run_report(rp, cli::config_hash(app), out, err);
    if (validate->parsed()) return cli::run_validate(va, out, err);
    if (selftest->parsed()) return cli::run_selftest(out);
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dsg
