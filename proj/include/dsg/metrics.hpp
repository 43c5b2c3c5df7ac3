#pragma once

// Question-generation quality (precision, recall, uniqueness, dependency
// validity, atomicity bookkeeping) and VQA-vs-human answer agreement.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "dsg/backends.hpp"
#include "dsg/codec.hpp"
#include "dsg/core_graph.hpp"
#include "dsg/dataset_io.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"
#include "dsg/preambles.hpp"
#include "dsg/scoring.hpp"
#include "dsg/text.hpp"

namespace dsg {

// Exact count ratio; value() is NaN when the denominator is 0.
struct Ratio {
  std::size_t num = 0;
  std::size_t den = 0;

  bool defined() const { return den > 0; }
  double value() const {
    return den ? static_cast<double>(num) / static_cast<double>(den)
               : std::numeric_limits<double>::quiet_NaN();
  }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

enum class Judge { llm_backend, lexical_baseline, human };

inline std::string_view to_string(Judge j) {
  switch (j) {
    case Judge::llm_backend: return "llm_backend";
    case Judge::lexical_baseline: return "lexical_baseline";
    case Judge::human: return "human";
  }
  return "?";
}

struct MatchJudgment {
  int tuple_id = 0;
  int question_id = 0;
  bool matched = false;
  Judge judge = Judge::lexical_baseline;

  friend bool operator==(const MatchJudgment&, const MatchJudgment&) = default;
};

struct QgQualityResult {
  Ratio precision;             // matched questions / |Q|
  std::optional<Ratio> recall; // covered tuples / |T|; needs reference tuples
  Ratio uniqueness;            // unique questions / |Q|
  std::vector<std::set<int>> duplicate_sets;  // merged, each of size >= 2
  Ratio dependency_valid;
  std::optional<Ratio> atomicity;  // from human labels only
};

struct DependencyValidity {
  std::vector<bool> valid;  // aligned with SceneGraph::edges()
  Ratio counts;

  // 1.0 for an edgeless graph.
  double ratio() const { return counts.den ? counts.value() : 1.0; }
};

// An edge is valid when parent and child questions share a content token.
inline DependencyValidity check_dependency_validity(const SceneGraph& g,
                                                    const StopWords& stop = default_stopwords()) {
  DependencyValidity out;
  std::vector<std::set<std::string>> tokens;
  tokens.reserve(g.size());
  for (const auto& q : g.questions()) tokens.push_back(content_tokens(q.text, stop));
  for (const auto& e : g.edges()) {
    const auto& p = tokens[static_cast<std::size_t>(e.parent_id - 1)];
    const auto& c = tokens[static_cast<std::size_t>(e.child_id - 1)];
    bool shared = std::any_of(p.begin(), p.end(), [&](const std::string& t) { return c.count(t); });
    out.valid.push_back(shared);
    out.counts.num += shared ? 1 : 0;
    ++out.counts.den;
  }
  return out;
}

namespace detail {

// Union-find over question ids, merging overlapping duplicate sets.
inline std::vector<std::set<int>> merge_duplicate_sets(const std::vector<std::set<int>>& sets,
                                                       std::size_t n) {
  std::vector<int> parent(n + 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& s : sets) {
    if (s.empty()) continue;
    int root = find(*s.begin());
    for (int id : s) parent[static_cast<std::size_t>(find(id))] = root;
  }
  std::map<int, std::set<int>> groups;
  for (const auto& s : sets)
    for (int id : s) groups[find(id)].insert(id);
  std::vector<std::set<int>> out;
  for (auto& [r, s] : groups)
    if (s.size() >= 2) out.push_back(std::move(s));
  return out;
}

}  // namespace detail

// Judgments reference reference_tuples when given (the human T), otherwise the
// graph's own tuples. Recall is only reported against reference tuples.
inline QgQualityResult qg_quality(const SceneGraph& g,
                                  const std::optional<std::vector<SemanticTuple>>& reference_tuples,
                                  const std::vector<MatchJudgment>& matches,
                                  const std::vector<std::set<int>>& duplicates,
                                  const std::optional<std::map<int, bool>>& atomicity_labels = {}) {
  std::set<int> tuple_ids;
  if (reference_tuples) {
    for (const auto& t : *reference_tuples)
      if (!tuple_ids.insert(t.id).second)
        throw DuplicateIdError("duplicate reference tuple id " + std::to_string(t.id));
  } else {
    for (const auto& t : g.tuples()) tuple_ids.insert(t.id);
  }

  std::set<std::tuple<int, int, Judge>> seen;
  std::set<int> matched_questions, covered_tuples;
  for (const auto& m : matches) {
    if (!tuple_ids.count(m.tuple_id))
      throw UnknownIdError("judgment references unknown tuple " + std::to_string(m.tuple_id));
    if (!g.contains(m.question_id))
      throw UnknownIdError("judgment references unknown question " + std::to_string(m.question_id));
    if (!seen.emplace(m.tuple_id, m.question_id, m.judge).second)
      throw Error("more than one judgment for tuple " + std::to_string(m.tuple_id) +
                  ", question " + std::to_string(m.question_id) + " by the same judge");
    if (m.matched) {
      matched_questions.insert(m.question_id);
      covered_tuples.insert(m.tuple_id);
    }
  }

  for (const auto& s : duplicates)
    for (int id : s)
      if (!g.contains(id))
        throw UnknownIdError("duplicate set references unknown question " + std::to_string(id));

  QgQualityResult r;
  r.precision = {matched_questions.size(), g.size()};
  if (reference_tuples) r.recall = Ratio{covered_tuples.size(), tuple_ids.size()};
  r.duplicate_sets = detail::merge_duplicate_sets(duplicates, g.size());
  std::size_t redundant = 0;
  for (const auto& s : r.duplicate_sets) redundant += s.size() - 1;
  r.uniqueness = {g.size() - redundant, g.size()};
  r.dependency_valid = check_dependency_validity(g).counts;
  if (atomicity_labels) {
    Ratio a;
    for (const auto& [id, atomic] : *atomicity_labels) {
      if (!g.contains(id))
        throw UnknownIdError("atomicity label for unknown question " + std::to_string(id));
      a.num += atomic ? 1 : 0;
      ++a.den;
    }
    r.atomicity = a;
  }
  return r;
}

// ---------------------------------------------------------------------------
// judges

inline std::string tuple_text(const SemanticTuple& t) {
  std::string s;
  for (const auto& a : t.args) {
    if (!s.empty()) s += ' ';
    s += a;
  }
  return s;
}

// |A ∩ B| / min(|A|, |B|); 0 when either side has no content tokens.
inline double token_overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
}

struct LexicalJudge {
  double threshold = 0.5;
  const StopWords* stop = &default_stopwords();

  bool matches(std::string_view a, std::string_view b) const {
    return token_overlap(content_tokens(a, *stop), content_tokens(b, *stop)) >= threshold;
  }
};

// Every (tuple, question) pair judged by token overlap.
inline std::vector<MatchJudgment> judge_matches_lexical(const SceneGraph& g,
                                                        const std::vector<SemanticTuple>& tuples,
                                                        const LexicalJudge& judge = {}) {
  std::vector<std::set<std::string>> qtok;
  for (const auto& q : g.questions()) qtok.push_back(content_tokens(q.text, *judge.stop));
  std::vector<MatchJudgment> out;
  for (const auto& t : tuples) {
    auto ttok = content_tokens(tuple_text(t), *judge.stop);
    for (const auto& q : g.questions())
      out.push_back({t.id, q.id,
                     token_overlap(ttok, qtok[static_cast<std::size_t>(q.id - 1)]) >= judge.threshold,
                     Judge::lexical_baseline});
  }
  return out;
}

// Questions whose content-token sets are identical (and non-empty).
inline std::vector<std::set<int>> judge_duplicates_lexical(const SceneGraph& g,
                                                           const LexicalJudge& judge = {}) {
  std::map<std::set<std::string>, std::set<int>> groups;
  for (const auto& q : g.questions()) {
    auto tok = content_tokens(q.text, *judge.stop);
    if (!tok.empty()) groups[tok].insert(q.id);
  }
  std::vector<std::set<int>> out;
  for (auto& [tok, ids] : groups)
    if (ids.size() >= 2) out.push_back(std::move(ids));
  return out;
}

namespace detail {

// "3", "q3", "Q3", "t3", "#3"
inline std::optional<int> parse_judge_id(std::string_view tok) {
  tok = trim(tok);
  while (!tok.empty() && (tok.front() == 'q' || tok.front() == 'Q' || tok.front() == 't' ||
                          tok.front() == 'T' || tok.front() == '#'))
    tok.remove_prefix(1);
  auto v = parse_int(tok);
  if (!v || *v < 1) return std::nullopt;
  return v;
}

inline std::set<int> parse_judge_id_list(std::string_view s, std::string_view context) {
  std::set<int> out;
  auto body = trim(s);
  if (body.empty() || to_lower(body) == "none" || body == "-") return out;
  for (auto tok : split(body, ',')) {
    if (trim(tok).empty()) continue;
    auto id = parse_judge_id(tok);
    if (!id) throw JudgeParseError(std::string(context) + ": bad id '" + std::string(trim(tok)) + "'");
    out.insert(*id);
  }
  return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && to_lower(s.substr(0, prefix.size())) == prefix;
}

// "<key id> | <ids>" lines plus a "<negative header>: ids" line. Returns key -> ids.
inline std::map<int, std::set<int>> parse_judge_table(std::string_view text,
                                                      std::string_view positive_header,
                                                      std::string_view negative_header) {
  std::map<int, std::set<int>> out;
  for (auto raw : lines(text)) {
    auto line = trim(raw);
    if (line.empty() || starts_with_ci(line, positive_header)) continue;
    if (starts_with_ci(line, negative_header)) {
      auto colon = line.find(':');
      if (colon != std::string_view::npos)
        for (int id : parse_judge_id_list(line.substr(colon + 1), negative_header)) out[id];
      continue;
    }
    auto bar = line.find('|');
    if (bar == std::string_view::npos) continue;  // free text around the table
    auto key = parse_judge_id(line.substr(0, bar));
    if (!key) throw JudgeParseError("bad id in judge line '" + std::string(line) + "'");
    auto ids = parse_judge_id_list(line.substr(bar + 1), "judge line");
    out[*key].insert(ids.begin(), ids.end());
  }
  return out;
}

inline std::string judge_input(std::string_view prompt_text, const std::vector<SemanticTuple>* tuples,
                               const SceneGraph& g) {
  std::string s = "prompt: " + std::string(prompt_text) + "\n";
  if (tuples) s += "tuples:\n" + encode_tuples(*tuples);
  s += "questions:\n";
  for (const auto& q : g.questions()) s += std::to_string(q.id) + " | " + q.text + "\n";
  return s;
}

}  // namespace detail

struct JudgeOutput {
  std::vector<MatchJudgment> judgments;
  std::vector<std::string> raw_completions;
};

// Precision-side and recall-side calls; a pair is matched if either side says so.
inline JudgeOutput judge_matches(const SceneGraph& g, const std::vector<SemanticTuple>& tuples,
                                 GenerationBackend& backend, std::string_view prompt_text = "",
                                 const JudgePreambles& pre = default_judge_preambles()) {
  JudgeOutput out;
  const auto input = detail::judge_input(prompt_text, &tuples, g);
  std::set<int> tuple_ids;
  for (const auto& t : tuples) tuple_ids.insert(t.id);

  out.raw_completions.push_back(backend.complete(pre.precision, input));
  out.raw_completions.push_back(backend.complete(pre.recall, input));
  auto by_question =
      detail::parse_judge_table(out.raw_completions[0], "entailed questions", "wrong questions");
  auto by_tuple = detail::parse_judge_table(out.raw_completions[1], "covered tuples", "missed tuples");

  std::set<std::pair<int, int>> positive;  // (tuple, question)
  for (const auto& [q, ts] : by_question) {
    if (!g.contains(q)) throw JudgeParseError("judge referenced unknown question " + std::to_string(q));
    for (int t : ts) {
      if (!tuple_ids.count(t)) throw JudgeParseError("judge referenced unknown tuple " + std::to_string(t));
      positive.emplace(t, q);
    }
  }
  for (const auto& [t, qs] : by_tuple) {
    if (!tuple_ids.count(t)) throw JudgeParseError("judge referenced unknown tuple " + std::to_string(t));
    for (int q : qs) {
      if (!g.contains(q)) throw JudgeParseError("judge referenced unknown question " + std::to_string(q));
      positive.emplace(t, q);
    }
  }
  for (const auto& t : tuples)
    for (const auto& q : g.questions())
      out.judgments.push_back({t.id, q.id, positive.count({t.id, q.id}) > 0, Judge::llm_backend});
  return out;
}

// Parses "duplicates: q1,q4" (one set), "duplicates: (q1,q4), (q2,q3)" or
// "duplicates: none".
inline std::vector<std::set<int>> parse_duplicate_judgment(std::string_view text) {
  std::vector<std::set<int>> out;
  for (auto raw : detail::lines(text)) {
    auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (detail::starts_with_ci(line, "duplicates")) {
      auto colon = line.find(':');
      line = colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 1);
    } else if (line.find(',') == std::string_view::npos) {
      continue;  // chatter
    }
    // "(q1,q4), (q2, q3)" lists several groups on one line
    if (line.find('(') != std::string_view::npos) {
      for (std::size_t open; (open = line.find('(')) != std::string_view::npos;) {
        auto close = line.find(')', open);
        if (close == std::string_view::npos) throw JudgeParseError("unbalanced '(' in duplicates line");
        auto ids = detail::parse_judge_id_list(line.substr(open + 1, close - open - 1), "duplicates");
        if (ids.size() >= 2) out.push_back(std::move(ids));
        line.remove_prefix(close + 1);
      }
      continue;
    }
    auto ids = detail::parse_judge_id_list(line, "duplicates");
    if (ids.size() >= 2) out.push_back(std::move(ids));
  }
  return out;
}

inline std::vector<std::set<int>> judge_duplicates(const SceneGraph& g, GenerationBackend& backend,
                                                   std::string_view prompt_text = "",
                                                   const JudgePreambles& pre = default_judge_preambles(),
                                                   std::string* raw_out = nullptr) {
  auto raw = backend.complete(pre.uniqueness, detail::judge_input(prompt_text, nullptr, g));
  if (raw_out) *raw_out = raw;
  auto sets = parse_duplicate_judgment(raw);
  for (const auto& s : sets)
    for (int id : s)
      if (!g.contains(id))
        throw JudgeParseError("duplicate judgment references unknown question " + std::to_string(id));
  return sets;
}

// ---------------------------------------------------------------------------
// VQA vs human agreement

struct GroupedAccuracy {
  Ratio overall;
  std::map<std::string, Ratio> by_category;
  std::map<std::string, Ratio> by_subcategory;
  std::map<std::string, Ratio> by_source;  // empty when no prompts supplied
};

// Post-scoring answers: a question counts as "yes" iff it scored 1.
inline std::map<QuestionKey, bool> model_answers(const std::vector<ItemEvaluation>& evs) {
  std::map<QuestionKey, bool> out;
  for (const auto& ev : evs)
    for (std::size_t i = 0; i < ev.scores.size(); ++i)
      out[{ev.prompt_id, ev.image_ref, static_cast<int>(i + 1)}] = ev.scores[i] == 1;
  return out;
}

inline GroupedAccuracy vqa_human_match_accuracy(const std::map<QuestionKey, bool>& model,
                                                const std::map<QuestionKey, bool>& human,
                                                const std::vector<SceneGraph>& graphs,
                                                const std::vector<PromptRecord>& prompts = {}) {
  std::vector<std::string> unpaired;
  for (const auto& [k, v] : model)
    if (!human.count(k)) unpaired.push_back("model-only " + describe(k));
  for (const auto& [k, v] : human)
    if (!model.count(k)) unpaired.push_back("human-only " + describe(k));
  if (!unpaired.empty()) throw KeyMismatchError("model and human answer keys differ", unpaired);

  std::map<std::string, const SceneGraph*> gmap;
  for (const auto& g : graphs) gmap[g.prompt_id()] = &g;
  std::map<std::string, Source> smap;
  for (const auto& p : prompts) smap[p.prompt_id] = p.source;

  GroupedAccuracy acc;
  auto bump = [](Ratio& r, bool hit) {
    r.num += hit ? 1 : 0;
    ++r.den;
  };
  for (const auto& [k, m] : model) {
    const auto& [pid, img, qid] = k;
    auto git = gmap.find(pid);
    if (git == gmap.end() || !git->second->contains(qid))
      throw KeyMismatchError("answer key has no graph question", {describe(k)});
    bool hit = m == human.at(k);
    const auto& t = git->second->tuple(qid);
    bump(acc.overall, hit);
    bump(acc.by_category[std::string(to_string(t.category))], hit);
    bump(acc.by_subcategory[std::string(to_string(t.subcategory))], hit);
    if (!prompts.empty()) {
      auto sit = smap.find(pid);
      if (sit == smap.end()) throw KeyMismatchError("answer key has no prompt record", {describe(k)});
      bump(acc.by_source[std::string(to_string(sit->second))], hit);
    }
  }
  return acc;
}

}  // namespace dsg
