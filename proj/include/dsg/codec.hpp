#pragma once

// Pipe-delimited annotation format produced by the three generation stages.
//
//   tuples:        ID | CATEGORY - SUBCATEGORY (ARG1[, ARG2[, ARG3]])
//   questions:     ID | question text
//   dependencies:  ID | P1,P2,...        ("0" or nothing marks a root)
//
// Whitespace around "|", "-" and "," is insignificant. Arguments cannot contain
// "," or ")".

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dsg/core_graph.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"

namespace dsg {

enum class ParseMode { strict, lenient };

struct ParseOptions {
  ParseMode mode = ParseMode::strict;
};

struct ParseIssue {
  std::size_t line_no = 0;
  std::string reason;
  std::string line;
};

template <class T>
struct ParseResult {
  std::vector<T> values;
  // lenient mode: lines dropped for a parse error
  std::vector<ParseIssue> warnings;
  // tuple lines whose subcategory was unknown or illegal for the category
  std::vector<ParseIssue> quarantined;
};

namespace detail {

struct SplitLine {
  int id = 0;
  std::string_view payload;
};

inline SplitLine split_annotation_line(std::string_view line, std::size_t line_no,
                                       bool allow_empty_payload) {
  auto bar = line.find('|');
  if (bar == std::string_view::npos) throw LineParseError(line_no, "missing '|' delimiter");
  auto id_part = trim(line.substr(0, bar));
  auto id = parse_int(id_part);
  if (!id || *id < 1) throw LineParseError(line_no, "bad id '" + std::string(id_part) + "'");
  auto payload = trim(line.substr(bar + 1));
  if (payload.empty() && !allow_empty_payload) throw LineParseError(line_no, "empty payload");
  return {*id, payload};
}

struct QuarantineSignal {
  std::string reason;
};

inline SemanticTuple parse_tuple_line(std::string_view line, std::size_t line_no) {
  auto [id, payload] = split_annotation_line(line, line_no, false);
  auto open = payload.find('(');
  if (open == std::string_view::npos) throw LineParseError(line_no, "missing '('");
  if (payload.back() != ')') throw LineParseError(line_no, "missing closing ')'");
  auto head = payload.substr(0, open);
  auto inner = payload.substr(open + 1, payload.size() - open - 2);
  if (inner.find(')') != std::string_view::npos)
    throw LineParseError(line_no, "')' inside arguments");

  auto dash = head.find('-');
  if (dash == std::string_view::npos)
    throw LineParseError(line_no, "expected 'category - subcategory'");
  auto cat_tok = to_lower(trim(head.substr(0, dash)));
  auto sub_tok = to_lower(trim(head.substr(dash + 1)));
  auto cat = parse_category(cat_tok);
  if (!cat) throw LineParseError(line_no, "unknown category '" + cat_tok + "'");

  SemanticTuple t;
  t.id = id;
  t.category = *cat;
  for (auto a : split(inner, ',')) {
    auto arg = trim(a);
    if (arg.empty()) throw LineParseError(line_no, "empty argument");
    t.args.emplace_back(arg);
  }
  if (t.args.size() != arity_of(*cat)) {
    std::string reason = "arity mismatch: '" + cat_tok + "' takes " +
                         std::to_string(arity_of(*cat)) + " arg(s), got " +
                         std::to_string(t.args.size());
    if (t.args.size() > arity_of(*cat)) reason += " (commas inside arguments are not supported)";
    throw LineParseError(line_no, reason);
  }

  auto sub = parse_subcategory(sub_tok);
  if (!sub) throw QuarantineSignal{"unknown subcategory '" + sub_tok + "'"};
  if (!subcategory_legal(*cat, *sub))
    throw QuarantineSignal{"subcategory '" + sub_tok + "' is not legal for '" + cat_tok + "'"};
  t.subcategory = *sub;
  return t;
}

// Drives per-line parsing with the strict/lenient policy.
template <class T, class LineFn>
ParseResult<T> parse_lines(std::string_view text, const ParseOptions& opt, LineFn&& fn) {
  ParseResult<T> result;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    try {
      fn(line, line_no, result.values);
    } catch (const QuarantineSignal& q) {
      if (opt.mode == ParseMode::strict) throw LineParseError(line_no, q.reason);
      result.quarantined.push_back({line_no, q.reason, std::string(line)});
    } catch (const LineParseError& e) {
      if (opt.mode == ParseMode::strict) throw;
      result.warnings.push_back({line_no, e.reason(), std::string(line)});
    }
  }
  return result;
}

}  // namespace detail

inline ParseResult<SemanticTuple> parse_tuples(std::string_view text, ParseOptions opt = {}) {
  return detail::parse_lines<SemanticTuple>(
      text, opt, [](std::string_view line, std::size_t no, std::vector<SemanticTuple>& out) {
        out.push_back(detail::parse_tuple_line(line, no));
      });
}

inline ParseResult<QuestionNode> parse_questions(std::string_view text, ParseOptions opt = {}) {
  return detail::parse_lines<QuestionNode>(
      text, opt, [](std::string_view line, std::size_t no, std::vector<QuestionNode>& out) {
        auto [id, payload] = detail::split_annotation_line(line, no, false);
        out.push_back({id, std::string(payload), id});
      });
}

inline ParseResult<DependencyEdge> parse_dependencies(std::string_view text,
                                                      ParseOptions opt = {}) {
  return detail::parse_lines<DependencyEdge>(
      text, opt, [](std::string_view line, std::size_t no, std::vector<DependencyEdge>& out) {
        auto [child, payload] = detail::split_annotation_line(line, no, true);
        std::set<int> parents;
        if (!payload.empty()) {
          for (auto tok : detail::split(payload, ',')) {
            auto p = detail::parse_int(tok);
            if (!p || *p < 0)
              throw LineParseError(no, "bad parent id '" + std::string(detail::trim(tok)) + "'");
            if (*p == 0) continue;
            if (*p == child) throw SelfLoopError(no, child);
            parents.insert(*p);
          }
        }
        for (int p : parents) out.push_back({p, child});
      });
}

struct EncodedGraph {
  std::string tuples;
  std::string questions;
  std::string dependencies;

  friend bool operator==(const EncodedGraph&, const EncodedGraph&) = default;
};

inline std::string encode_tuple(const SemanticTuple& t) {
  std::string s = std::to_string(t.id) + " | " + std::string(to_string(t.category)) + " - " +
                  std::string(to_string(t.subcategory)) + " (";
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i) s += ", ";
    s += t.args[i];
  }
  return s + ")";
}

inline std::string encode_tuples(const std::vector<SemanticTuple>& tuples) {
  std::string out;
  for (const auto& t : tuples) out += encode_tuple(t) + "\n";
  return out;
}

inline EncodedGraph encode_graph(const SceneGraph& g) {
  EncodedGraph enc;
  enc.tuples = encode_tuples(g.tuples());
  for (const auto& q : g.questions()) enc.questions += std::to_string(q.id) + " | " + q.text + "\n";
  for (int id = 1; id <= static_cast<int>(g.size()); ++id) {
    enc.dependencies += std::to_string(id) + " | ";
    const auto& ps = g.parents(id);
    if (ps.empty()) enc.dependencies += "0";
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (i) enc.dependencies += ",";
      enc.dependencies += std::to_string(ps[i]);
    }
    enc.dependencies += "\n";
  }
  return enc;
}

// Strict parse of all three texts followed by build_graph.
inline SceneGraph decode_graph(std::string prompt_id, const EncodedGraph& enc) {
  return build_graph(std::move(prompt_id), parse_tuples(enc.tuples).values,
                     parse_questions(enc.questions).values,
                     parse_dependencies(enc.dependencies).values);
}

}  // namespace dsg
