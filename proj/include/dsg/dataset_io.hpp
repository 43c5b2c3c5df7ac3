#pragma once

// Prompt sets, human annotations and image manifests. Canonical storage is
// JSONL; TSV with a header row is accepted on ingest (".tsv" extension).

#include <array>
#include <climits>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsg/core_graph.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"

namespace dsg {

enum class Source {
  tifa160,
  stanford_paragraphs,
  localized_narratives,
  countbench,
  vrd,
  diffusiondb,
  midjourney,
  posescript,
  whoops,
  drawtext_creative,
};

inline constexpr std::array<std::string_view, 10> kSourceNames = {
    "tifa160",    "stanford_paragraphs", "localized_narratives", "countbench", "vrd",
    "diffusiondb", "midjourney",         "posescript",           "whoops",     "drawtext_creative"};

inline std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }

inline std::optional<Source> parse_source(std::string_view s) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i)
    if (kSourceNames[i] == s) return static_cast<Source>(i);
  return std::nullopt;
}

struct PromptRecord {
  std::string prompt_id;
  std::string text;
  Source source = Source::tifa160;
  std::optional<std::string> notes;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

struct LikertRecord {
  std::string prompt_id;
  std::string image_ref;
  std::string rater_id;
  int rating = 0;

  friend bool operator==(const LikertRecord&, const LikertRecord&) = default;
};

enum class HumanAnswer { yes, no, invalid };

inline std::string_view to_string(HumanAnswer a) {
  switch (a) {
    case HumanAnswer::yes: return "YES";
    case HumanAnswer::no: return "NO";
    case HumanAnswer::invalid: return "INVALID";
  }
  return "?";
}

struct HumanQuestionAnswer {
  std::string prompt_id;
  std::string image_ref;
  int question_id = 0;
  std::string rater_id;
  HumanAnswer answer = HumanAnswer::no;

  friend bool operator==(const HumanQuestionAnswer&, const HumanQuestionAnswer&) = default;
};

struct ImageEntry {
  std::string prompt_id;
  std::string image_ref;
};

// (prompt_id, image_ref)
using ItemKey = std::pair<std::string, std::string>;
// (prompt_id, image_ref, question_id)
using QuestionKey = std::tuple<std::string, std::string, int>;

inline std::string describe(const ItemKey& k) { return k.first + "@" + k.second; }
inline std::string describe(const QuestionKey& k) {
  return std::get<0>(k) + "@" + std::get<1>(k) + "#" + std::to_string(std::get<2>(k));
}

// Convention for manifests: "model_name/prompt_id.png". The model is the part
// before the first '/', or "default" when there is none.
inline std::string model_of(std::string_view image_ref) {
  auto slash = image_ref.find('/');
  if (slash == std::string_view::npos || slash == 0) return "default";
  return std::string(image_ref.substr(0, slash));
}

// Fallback id for prompt files without ids.
inline std::string text_hash_id(std::string_view text) {
  return "h" + detail::hex64(detail::fnv1a64(text));
}

namespace detail {

// Rows as JSON objects; TSV cells become strings. Row numbers are 1-based data
// rows (the TSV header is not counted).
inline std::vector<nlohmann::json> read_rows(std::string_view text, bool tsv) {
  if (!tsv) return parse_jsonl(text);
  std::vector<nlohmann::json> rows;
  auto ls = lines(text);
  if (ls.empty()) return rows;
  std::vector<std::string> header;
  for (auto h : split(ls[0], '\t')) header.emplace_back(trim(h));
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto line = ls[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != header.size())
      throw SchemaError(i, "expected " + std::to_string(header.size()) + " columns, got " +
                               std::to_string(cells.size()));
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t c = 0; c < header.size(); ++c) row[header[c]] = std::string(cells[c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline bool is_tsv(const std::filesystem::path& p) { return p.extension() == ".tsv"; }

inline std::string req_string(const nlohmann::json& row, const char* field, std::size_t n) {
  if (!row.contains(field)) throw SchemaError(n, std::string("missing field '") + field + "'");
  const auto& v = row[field];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw SchemaError(n, std::string("field '") + field + "' must be a string");
}

inline std::optional<std::string> opt_string(const nlohmann::json& row, const char* field,
                                             std::size_t n) {
  if (!row.contains(field) || row[field].is_null()) return std::nullopt;
  auto s = req_string(row, field, n);
  if (s.empty()) return std::nullopt;
  return s;
}

inline int req_int(const nlohmann::json& row, const char* field, std::size_t n) {
  if (!row.contains(field)) throw SchemaError(n, std::string("missing field '") + field + "'");
  const auto& v = row[field];
  if (v.is_number_integer()) {
    auto x = v.get<long long>();
    if (x >= INT_MIN && x <= INT_MAX) return static_cast<int>(x);
  } else if (v.is_string()) {
    if (auto x = parse_int(v.get_ref<const std::string&>())) return *x;
  }
  throw SchemaError(n, std::string("field '") + field + "' must be an integer");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// prompts

inline std::vector<PromptRecord> parse_prompts(std::string_view text, bool tsv = false) {
  std::vector<PromptRecord> out;
  std::set<std::string> ids;
  std::size_t n = 0;
  for (const auto& row : detail::read_rows(text, tsv)) {
    ++n;
    PromptRecord p;
    p.text = detail::req_string(row, "text", n);
    if (detail::trim(p.text).empty()) throw SchemaError(n, "empty prompt text");
    auto src = detail::req_string(row, "source", n);
    auto s = parse_source(src);
    if (!s) throw SchemaError(n, "unknown source '" + src + "'");
    p.source = *s;
    p.prompt_id = detail::opt_string(row, "prompt_id", n).value_or(text_hash_id(p.text));
    p.notes = detail::opt_string(row, "notes", n);
    if (!ids.insert(p.prompt_id).second)
      throw SchemaError(n, "duplicate prompt_id '" + p.prompt_id + "'");
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PromptRecord> load_prompts(const std::filesystem::path& path) {
  return parse_prompts(detail::read_file(path), detail::is_tsv(path));
}

inline nlohmann::json to_json(const PromptRecord& p) {
  nlohmann::json j = {
      {"prompt_id", p.prompt_id}, {"text", p.text}, {"source", std::string(to_string(p.source))}};
  if (p.notes) j["notes"] = *p.notes;
  return j;
}

inline std::string prompts_to_jsonl(const std::vector<PromptRecord>& prompts) {
  std::vector<nlohmann::json> rows;
  for (const auto& p : prompts) rows.push_back(to_json(p));
  return detail::to_jsonl(rows);
}

// ---------------------------------------------------------------------------
// Likert ratings

inline std::vector<LikertRecord> parse_likert(std::string_view text, bool tsv = false) {
  std::vector<LikertRecord> out;
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  std::size_t n = 0;
  for (const auto& row : detail::read_rows(text, tsv)) {
    ++n;
    LikertRecord r{detail::req_string(row, "prompt_id", n), detail::req_string(row, "image_ref", n),
                   detail::req_string(row, "rater_id", n), detail::req_int(row, "rating", n)};
    if (r.rating < 1 || r.rating > 5)
      throw SchemaError(n, "rating " + std::to_string(r.rating) + " outside 1..5");
    if (!keys.emplace(r.prompt_id, r.image_ref, r.rater_id).second)
      throw SchemaError(n, "duplicate rating for " + r.prompt_id + "@" + r.image_ref + " by " +
                               r.rater_id);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<LikertRecord> load_likert(const std::filesystem::path& path) {
  return parse_likert(detail::read_file(path), detail::is_tsv(path));
}

inline std::string likert_to_jsonl(const std::vector<LikertRecord>& rs) {
  std::vector<nlohmann::json> rows;
  for (const auto& r : rs)
    rows.push_back({{"prompt_id", r.prompt_id},
                    {"image_ref", r.image_ref},
                    {"rater_id", r.rater_id},
                    {"rating", r.rating}});
  return detail::to_jsonl(rows);
}

// Mean rating over raters per item.
inline std::map<ItemKey, double> mean_likert(const std::vector<LikertRecord>& rs) {
  std::map<ItemKey, std::pair<long, long>> acc;
  for (const auto& r : rs) {
    auto& [sum, cnt] = acc[{r.prompt_id, r.image_ref}];
    sum += r.rating;
    ++cnt;
  }
  std::map<ItemKey, double> out;
  for (const auto& [k, v] : acc) out[k] = static_cast<double>(v.first) / static_cast<double>(v.second);
  return out;
}

// ---------------------------------------------------------------------------
// per-question human answers

inline std::optional<HumanAnswer> parse_human_answer(std::string_view s) {
  auto l = detail::to_lower(detail::trim(s));
  if (l == "yes") return HumanAnswer::yes;
  if (l == "no") return HumanAnswer::no;
  if (l == "invalid") return HumanAnswer::invalid;
  return std::nullopt;
}

inline std::vector<HumanQuestionAnswer> parse_human_answers(std::string_view text,
                                                            bool tsv = false) {
  std::vector<HumanQuestionAnswer> out;
  std::set<std::tuple<std::string, std::string, int, std::string>> keys;
  std::size_t n = 0;
  for (const auto& row : detail::read_rows(text, tsv)) {
    ++n;
    HumanQuestionAnswer a;
    a.prompt_id = detail::req_string(row, "prompt_id", n);
    a.image_ref = detail::req_string(row, "image_ref", n);
    a.question_id = detail::req_int(row, "question_id", n);
    a.rater_id = detail::req_string(row, "rater_id", n);
    auto raw = detail::req_string(row, "answer", n);
    auto ans = parse_human_answer(raw);
    if (!ans) throw SchemaError(n, "answer must be YES, NO or INVALID, got '" + raw + "'");
    a.answer = *ans;
    if (!keys.emplace(a.prompt_id, a.image_ref, a.question_id, a.rater_id).second)
      throw SchemaError(n, "duplicate answer for " +
                               describe(QuestionKey{a.prompt_id, a.image_ref, a.question_id}) +
                               " by " + a.rater_id);
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<HumanQuestionAnswer> load_human_answers(const std::filesystem::path& path) {
  return parse_human_answers(detail::read_file(path), detail::is_tsv(path));
}

inline std::string human_answers_to_jsonl(const std::vector<HumanQuestionAnswer>& as) {
  std::vector<nlohmann::json> rows;
  for (const auto& a : as)
    rows.push_back({{"prompt_id", a.prompt_id},
                    {"image_ref", a.image_ref},
                    {"question_id", a.question_id},
                    {"rater_id", a.rater_id},
                    {"answer", std::string(to_string(a.answer))}});
  return detail::to_jsonl(rows);
}

// Majority vote over YES/NO ballots; INVALID abstains; ties (including no
// ballots at all) resolve to NO. true means YES.
inline std::map<QuestionKey, bool> majority_human_answers(
    const std::vector<HumanQuestionAnswer>& as) {
  std::map<QuestionKey, std::pair<int, int>> votes;
  for (const auto& a : as) {
    auto& [yes, no] = votes[{a.prompt_id, a.image_ref, a.question_id}];
    if (a.answer == HumanAnswer::yes) ++yes;
    if (a.answer == HumanAnswer::no) ++no;
  }
  std::map<QuestionKey, bool> out;
  for (const auto& [k, v] : votes) out[k] = v.first > v.second;
  return out;
}

// ---------------------------------------------------------------------------
// image manifests: {"prompt_id", "image_ref"} per row

inline std::vector<ImageEntry> parse_image_manifest(std::string_view text, bool tsv = false) {
  std::vector<ImageEntry> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t n = 0;
  for (const auto& row : detail::read_rows(text, tsv)) {
    ++n;
    ImageEntry e{detail::req_string(row, "prompt_id", n), detail::req_string(row, "image_ref", n)};
    if (!seen.emplace(e.prompt_id, e.image_ref).second)
      throw SchemaError(n, "duplicate manifest entry " + e.prompt_id + "@" + e.image_ref);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<ImageEntry> load_image_manifest(const std::filesystem::path& path) {
  return parse_image_manifest(detail::read_file(path), detail::is_tsv(path));
}

// prompt_id -> image refs, manifest order preserved within each prompt.
inline std::map<std::string, std::vector<std::string>> image_map(
    const std::vector<ImageEntry>& entries) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& e : entries) out[e.prompt_id].push_back(e.image_ref);
  return out;
}

// ---------------------------------------------------------------------------

// Every human answer must resolve to a loaded graph and one of its questions.
// Violations are listed, never dropped.
inline std::vector<std::string> check_referential_integrity(
    const std::vector<HumanQuestionAnswer>& answers, const std::vector<SceneGraph>& graphs) {
  std::map<std::string, const SceneGraph*> by_id;
  for (const auto& g : graphs) by_id[g.prompt_id()] = &g;
  std::vector<std::string> violations;
  for (const auto& a : answers) {
    auto it = by_id.find(a.prompt_id);
    if (it == by_id.end())
      violations.push_back("answer by " + a.rater_id + " references unknown prompt '" +
                           a.prompt_id + "'");
    else if (!it->second->contains(a.question_id))
      violations.push_back("answer by " + a.rater_id + " references unknown question " +
                           std::to_string(a.question_id) + " of prompt '" + a.prompt_id + "'");
  }
  return violations;
}

}  // namespace dsg
