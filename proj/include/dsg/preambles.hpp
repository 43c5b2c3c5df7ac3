#pragma once

#include <filesystem>
#include <regex>
#include <string>
#include <string_view>

#include "dsg/detail/default_data.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"

namespace dsg {

// Marks where the per-request input goes inside a preamble template.
inline constexpr std::string_view kInputSlot = "{{input}}";

class PreambleError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// One slot, and at least one "id | ..." example line ahead of it.
inline void validate_template(std::string_view name, std::string_view text) {
  auto slots = count_occurrences(text, kInputSlot);
  if (slots != 1)
    throw PreambleError(std::string(name) + " preamble must contain exactly one " +
                        std::string(kInputSlot) + " slot, found " + std::to_string(slots));
  static const std::regex example_line(R"(^\s*\d+\s*\|)");
  auto before = text.substr(0, text.find(kInputSlot));
  bool has_example = false;
  for (auto line : lines(before)) {
    std::string l(line);
    if (std::regex_search(l, example_line)) {
      has_example = true;
      break;
    }
  }
  if (!has_example) throw PreambleError(std::string(name) + " preamble has no in-context examples");
}

inline std::string render_template(std::string_view tmpl, std::string_view input) {
  std::string out(tmpl);
  auto pos = out.find(kInputSlot);
  if (pos != std::string::npos) out.replace(pos, kInputSlot.size(), input);
  return out;
}

}  // namespace detail

struct PreambleSet {
  std::string tuple;
  std::string question;
  std::string dependency;

  const std::string& for_stage(Stage s) const {
    switch (s) {
      case Stage::tuples: return tuple;
      case Stage::questions: return question;
      case Stage::dependencies: return dependency;
    }
    return tuple;
  }

  void validate() const {
    detail::validate_template("tuple", tuple);
    detail::validate_template("question", question);
    detail::validate_template("dependency", dependency);
  }

  // Preamble with the input substituted; backends that format prompts themselves
  // receive the template and input separately instead.
  std::string render(Stage s, std::string_view input) const {
    return detail::render_template(for_stage(s), input);
  }
};

inline PreambleSet default_preambles() {
  return {detail::embedded::tuple_preamble, detail::embedded::question_preamble,
          detail::embedded::dependency_preamble};
}

// Reads tuple.txt, question.txt and dependency.txt from dir.
inline PreambleSet load_preambles(const std::filesystem::path& dir) {
  PreambleSet p{detail::read_file(dir / "tuple.txt"), detail::read_file(dir / "question.txt"),
                detail::read_file(dir / "dependency.txt")};
  p.validate();
  return p;
}

// Evaluation-side preambles used by LLM match and duplicate judges.
struct JudgePreambles {
  std::string precision;
  std::string recall;
  std::string uniqueness;
};

inline JudgePreambles default_judge_preambles() {
  return {detail::embedded::precision_preamble, detail::embedded::recall_preamble,
          detail::embedded::uniqueness_preamble};
}

}  // namespace dsg
