#pragma once

// Aggregated evaluation report: per-model means by prompt source and by
// fine-grained question category, QG summary, correlation with human Likert
// ratings and per-question agreement with human answers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsg/core_graph.hpp"
#include "dsg/correlation.hpp"
#include "dsg/dataset_io.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"
#include "dsg/metrics.hpp"
#include "dsg/scoring.hpp"

namespace dsg {

inline constexpr std::string_view kAllGroup = "all";

struct ReportOptions {
  // Groups with fewer samples are flagged; correlation needs >= 30 to be trusted.
  std::size_t min_group_size = 30;
};

struct SourceCell {
  std::string model;
  std::string source;  // a Source name or "all"
  std::vector<std::string> items;  // "prompt_id@image_ref"
  double sum = 0;
  bool below_min = false;

  std::size_t n() const { return items.size(); }
  double mean() const { return items.empty() ? 0.0 : sum / static_cast<double>(items.size()); }
};

struct SubcategoryCell {
  std::string model;
  std::string category;
  std::string subcategory;
  Ratio score;  // questions scored 1 / questions
  bool below_min = false;
};

struct CorrelationRow {
  std::string scope;  // "all" or a source name
  std::size_t n = 0;
  std::optional<double> spearman_rho;
  std::optional<double> kendall_tau;
  bool below_min = false;
  std::string note;
};

struct QgSummary {
  std::size_t graphs = 0;
  std::size_t questions = 0;
  std::size_t edges = 0;
  Ratio dependency_valid;
};

struct Provenance {
  std::string config_hash;
  std::vector<std::string> backend_ids;
  std::string generated_at;  // UTC, ISO-8601
};

struct HumanData {
  std::optional<std::vector<LikertRecord>> likert;
  std::optional<std::vector<HumanQuestionAnswer>> answers;
};

struct EvalReport {
  std::vector<SourceCell> by_source;
  std::vector<SubcategoryCell> by_subcategory;
  QgSummary qg;
  std::optional<std::vector<CorrelationRow>> correlation;
  std::optional<GroupedAccuracy> match_accuracy;
  Provenance provenance;
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline CorrelationRow correlation_row(std::string scope, const std::vector<double>& x,
                                      const std::vector<double>& y, std::size_t min_n) {
  CorrelationRow row;
  row.scope = std::move(scope);
  row.n = x.size();
  row.below_min = row.n < min_n;
  try {
    auto c = correlate(x, y);
    row.spearman_rho = c.spearman_rho;
    row.kendall_tau = c.kendall_tau;
  } catch (const DegenerateInputError& e) {
    row.note = e.what();
  }
  return row;
}

}  // namespace detail

inline EvalReport build_report(const std::vector<ItemEvaluation>& evals,
                               const std::vector<PromptRecord>& prompts,
                               const std::vector<SceneGraph>& graphs, const HumanData& human = {},
                               const ReportOptions& opt = {}, Provenance provenance = {}) {
  std::map<std::string, const PromptRecord*> pmap;
  for (const auto& p : prompts) pmap[p.prompt_id] = &p;
  std::map<std::string, const SceneGraph*> gmap;
  for (const auto& g : graphs) gmap[g.prompt_id()] = &g;

  std::vector<std::string> unpaired;
  std::set<ItemKey> eval_keys;
  for (const auto& ev : evals) {
    if (!pmap.count(ev.prompt_id)) unpaired.push_back("evaluation without prompt: " + ev.prompt_id);
    if (!graphs.empty()) {
      auto it = gmap.find(ev.prompt_id);
      if (it == gmap.end())
        unpaired.push_back("evaluation without graph: " + ev.prompt_id);
      else if (it->second->size() != ev.scores.size())
        unpaired.push_back("evaluation/graph question count differs: " + ev.prompt_id);
    }
    if (!eval_keys.insert({ev.prompt_id, ev.image_ref}).second)
      unpaired.push_back("duplicate evaluation: " + describe(ItemKey{ev.prompt_id, ev.image_ref}));
  }
  if (!unpaired.empty()) throw KeyMismatchError("inconsistent report inputs", unpaired);

  EvalReport rep;

  // model x source, plus an "all" column per model
  std::map<std::string, std::map<int, SourceCell>> cells;  // model -> source index (-1 = all)
  for (const auto& ev : evals) {
    auto avg = ev.average();
    if (!avg) continue;
    auto model = model_of(ev.image_ref);
    auto src = static_cast<int>(pmap.at(ev.prompt_id)->source);
    for (int key : {src, static_cast<int>(kSourceNames.size())}) {
      auto& c = cells[model][key];
      c.model = model;
      c.source = key == src ? std::string(to_string(static_cast<Source>(src))) : std::string(kAllGroup);
      c.items.push_back(describe(ItemKey{ev.prompt_id, ev.image_ref}));
      c.sum += *avg;
    }
  }
  for (auto& [model, by_src] : cells)
    for (auto& [k, c] : by_src) {
      c.below_min = c.n() < opt.min_group_size;
      rep.by_source.push_back(std::move(c));
    }

  // model x fine-grained category
  if (!graphs.empty()) {
    std::map<std::tuple<std::string, int, int>, SubcategoryCell> sub;
    for (const auto& ev : evals) {
      const auto& g = *gmap.at(ev.prompt_id);
      auto model = model_of(ev.image_ref);
      for (const auto& t : g.tuples()) {
        auto& c = sub[{model, static_cast<int>(t.category), static_cast<int>(t.subcategory)}];
        c.model = model;
        c.category = to_string(t.category);
        c.subcategory = to_string(t.subcategory);
        c.score.num += static_cast<std::size_t>(ev.score(t.id));
        ++c.score.den;
      }
    }
    for (auto& [k, c] : sub) {
      c.below_min = c.score.den < opt.min_group_size;
      rep.by_subcategory.push_back(std::move(c));
    }
  }

  rep.qg.graphs = graphs.size();
  for (const auto& g : graphs) {
    rep.qg.questions += g.size();
    rep.qg.edges += g.edges().size();
    auto dv = check_dependency_validity(g);
    rep.qg.dependency_valid.num += dv.counts.num;
    rep.qg.dependency_valid.den += dv.counts.den;
  }

  if (human.likert) {
    auto means = mean_likert(*human.likert);
    std::map<ItemKey, double> avg;
    for (const auto& ev : evals)
      if (auto a = ev.average()) avg[{ev.prompt_id, ev.image_ref}] = *a;
    std::vector<std::string> missing;
    for (const auto& [k, v] : means)
      if (!avg.count(k)) missing.push_back(describe(k));
    if (!missing.empty()) throw KeyMismatchError("Likert items without evaluation", missing);

    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& [k, rating] : means) {
      for (std::string scope : {std::string(kAllGroup),
                                std::string(to_string(pmap.at(k.first)->source))}) {
        groups[scope].first.push_back(avg.at(k));
        groups[scope].second.push_back(rating);
      }
    }
    std::vector<CorrelationRow> rows;
    if (auto it = groups.find(std::string(kAllGroup)); it != groups.end())
      rows.push_back(detail::correlation_row(it->first, it->second.first, it->second.second,
                                             opt.min_group_size));
    for (const auto& [scope, xy] : groups)
      if (scope != kAllGroup)
        rows.push_back(detail::correlation_row(scope, xy.first, xy.second, opt.min_group_size));
    rep.correlation = std::move(rows);
  }

  if (human.answers) {
    auto hum = majority_human_answers(*human.answers);
    auto all_model = model_answers(evals);
    std::map<QuestionKey, bool> model;
    std::vector<std::string> missing;
    for (const auto& [k, v] : hum) {
      auto it = all_model.find(k);
      if (it == all_model.end())
        missing.push_back(describe(k));
      else
        model[k] = it->second;
    }
    if (!missing.empty()) throw KeyMismatchError("human answers without model answers", missing);
    rep.match_accuracy = vqa_human_match_accuracy(model, hum, graphs, prompts);
  }

  std::set<std::string> backends(provenance.backend_ids.begin(), provenance.backend_ids.end());
  for (const auto& ev : evals)
    for (const auto& a : ev.answers)
      if (!a.answerer_id.empty()) backends.insert(a.answerer_id);
  provenance.backend_ids.assign(backends.begin(), backends.end());
  if (provenance.generated_at.empty()) provenance.generated_at = utc_timestamp();
  rep.provenance = std::move(provenance);
  return rep;
}

// Recomputes every source cell from the raw evaluations; returns the cells
// that disagree (empty when the report is consistent).
inline std::vector<std::string> verify_report(const EvalReport& rep,
                                              const std::vector<ItemEvaluation>& evals) {
  std::map<std::string, double> avg;
  for (const auto& ev : evals)
    if (auto a = ev.average()) avg[describe(ItemKey{ev.prompt_id, ev.image_ref})] = *a;
  std::vector<std::string> bad;
  for (const auto& c : rep.by_source) {
    double sum = 0;
    for (const auto& item : c.items) {
      auto it = avg.find(item);
      if (it == avg.end()) {
        bad.push_back(c.model + "/" + c.source + ": unknown item " + item);
        continue;
      }
      sum += it->second;
    }
    if (sum != c.sum) bad.push_back(c.model + "/" + c.source + ": mean mismatch");
  }
  return bad;
}

// ---------------------------------------------------------------------------
// output

struct ReportFiles {
  std::map<std::string, std::string> csv;  // file name -> content
  std::string summary_json;
};

inline ReportFiles render_report(const EvalReport& rep) {
  using detail::format3;
  ReportFiles f;
  auto flag = [](bool b) { return b ? "1" : "0"; };

  std::string s = "model,source,n,mean,below_min\n";
  for (const auto& c : rep.by_source)
    s += c.model + "," + c.source + "," + std::to_string(c.n()) + "," + format3(c.mean()) + "," +
         flag(c.below_min) + "\n";
  f.csv["by_source.csv"] = std::move(s);

  s = "model,category,subcategory,n,mean,below_min\n";
  for (const auto& c : rep.by_subcategory)
    s += c.model + "," + c.category + "," + c.subcategory + "," + std::to_string(c.score.den) + "," +
         format3(c.score.value()) + "," + flag(c.below_min) + "\n";
  f.csv["by_subcategory.csv"] = std::move(s);

  s = "graphs,questions,edges,dependency_valid_edges,dependency_valid_ratio\n";
  s += std::to_string(rep.qg.graphs) + "," + std::to_string(rep.qg.questions) + "," +
       std::to_string(rep.qg.edges) + "," + std::to_string(rep.qg.dependency_valid.num) + "," +
       format3(rep.qg.dependency_valid.den ? rep.qg.dependency_valid.value() : 1.0) + "\n";
  f.csv["qg_summary.csv"] = std::move(s);

  auto opt3 = [&](const std::optional<double>& v) { return v ? format3(*v) : std::string(); };
  if (rep.correlation) {
    s = "scope,n,spearman_rho,kendall_tau,below_min\n";
    for (const auto& r : *rep.correlation)
      s += r.scope + "," + std::to_string(r.n) + "," + opt3(r.spearman_rho) + "," +
           opt3(r.kendall_tau) + "," + flag(r.below_min) + "\n";
    f.csv["correlation.csv"] = std::move(s);
  }
  if (rep.match_accuracy) {
    s = "group_kind,group,n,matched,accuracy\n";
    auto row = [&](const std::string& kind, const std::string& g, const Ratio& r) {
      s += kind + "," + g + "," + std::to_string(r.den) + "," + std::to_string(r.num) + "," +
           format3(r.value()) + "\n";
    };
    row("overall", std::string(kAllGroup), rep.match_accuracy->overall);
    for (const auto& [g, r] : rep.match_accuracy->by_category) row("category", g, r);
    for (const auto& [g, r] : rep.match_accuracy->by_subcategory) row("subcategory", g, r);
    for (const auto& [g, r] : rep.match_accuracy->by_source) row("source", g, r);
    f.csv["match_accuracy.csv"] = std::move(s);
  }

  using nlohmann::json;
  auto ratio_json = [](const Ratio& r) {
    return json{{"num", r.num}, {"den", r.den}, {"value", r.defined() ? json(r.value()) : json(nullptr)}};
  };
  json j;
  j["by_source"] = json::array();
  for (const auto& c : rep.by_source)
    j["by_source"].push_back({{"model", c.model},
                              {"source", c.source},
                              {"n", c.n()},
                              {"mean", c.mean()},
                              {"below_min", c.below_min},
                              {"items", c.items}});
  j["by_subcategory"] = json::array();
  for (const auto& c : rep.by_subcategory)
    j["by_subcategory"].push_back({{"model", c.model},
                                   {"category", c.category},
                                   {"subcategory", c.subcategory},
                                   {"score", ratio_json(c.score)},
                                   {"below_min", c.below_min}});
  j["qg"] = {{"graphs", rep.qg.graphs},
             {"questions", rep.qg.questions},
             {"edges", rep.qg.edges},
             {"dependency_valid", ratio_json(rep.qg.dependency_valid)}};
  if (rep.correlation) {
    j["correlation"] = json::array();
    for (const auto& r : *rep.correlation) {
      json row = {{"scope", r.scope}, {"n", r.n}, {"below_min", r.below_min}};
      row["spearman_rho"] = r.spearman_rho ? json(*r.spearman_rho) : json(nullptr);
      row["kendall_tau"] = r.kendall_tau ? json(*r.kendall_tau) : json(nullptr);
      if (!r.note.empty()) row["note"] = r.note;
      j["correlation"].push_back(std::move(row));
    }
  } else {
    j["correlation"] = nullptr;
  }
  if (rep.match_accuracy) {
    auto group = [&](const std::map<std::string, Ratio>& m) {
      json o = json::object();
      for (const auto& [k, r] : m) o[k] = ratio_json(r);
      return o;
    };
    j["match_accuracy"] = {{"overall", ratio_json(rep.match_accuracy->overall)},
                           {"by_category", group(rep.match_accuracy->by_category)},
                           {"by_subcategory", group(rep.match_accuracy->by_subcategory)},
                           {"by_source", group(rep.match_accuracy->by_source)}};
  } else {
    j["match_accuracy"] = nullptr;
  }
  j["provenance"] = {{"config_hash", rep.provenance.config_hash},
                     {"backend_ids", rep.provenance.backend_ids},
                     {"generated_at", rep.provenance.generated_at}};
  f.summary_json = j.dump(2) + "\n";
  return f;
}

inline void write_report(const EvalReport& rep, const std::filesystem::path& dir) {
  auto files = render_report(rep);
  for (const auto& [name, content] : files.csv) detail::write_file_atomic(dir / name, content);
  detail::write_file_atomic(dir / "summary.json", files.summary_json);
}

}  // namespace dsg
