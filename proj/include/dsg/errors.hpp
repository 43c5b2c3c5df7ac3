#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsg {

// Root of every error the engine raises on purpose. Anything else escaping a
// public function is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// graph validation

class GraphError : public Error {
 public:
  using Error::Error;
};

class CycleError : public GraphError {
 public:
  explicit CycleError(std::vector<int> cycle)
      : GraphError("dependency cycle: " + describe(cycle)), cycle_(std::move(cycle)) {}

  // Ids along the cycle, starting at its smallest id. Original (pre-normalization) ids.
  const std::vector<int>& cycle() const noexcept { return cycle_; }

  static std::string describe(const std::vector<int>& ids) {
    std::string s = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(ids[i]);
    }
    return s + "]";
  }

 private:
  std::vector<int> cycle_;
};

class DanglingRefError : public GraphError {
 public:
  using GraphError::GraphError;
};

class ArityError : public GraphError {
 public:
  using GraphError::GraphError;
};

class DuplicateIdError : public GraphError {
 public:
  using GraphError::GraphError;
};

class UnknownIdError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// annotation parsing

class LineParseError : public Error {
 public:
  LineParseError(std::size_t line_no, std::string reason)
      : Error("line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(std::move(reason)) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class SelfLoopError : public LineParseError {
 public:
  SelfLoopError(std::size_t line_no, int id)
      : LineParseError(line_no, "question " + std::to_string(id) + " lists itself as parent") {}
};

// ---------------------------------------------------------------------------
// backends

class BackendError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class HttpStatusError : public BackendError {
 public:
  HttpStatusError(int status, const std::string& detail)
      : BackendError("HTTP " + std::to_string(status) + (detail.empty() ? "" : ": " + detail)),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class MalformedResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};

// ---------------------------------------------------------------------------
// generation pipeline

enum class Stage { tuples, questions, dependencies };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::tuples: return "tuples";
    case Stage::questions: return "questions";
    case Stage::dependencies: return "dependencies";
  }
  return "?";
}

class StageParseError : public Error {
 public:
  StageParseError(Stage stage, std::string raw_text, const std::string& reason)
      : Error(std::string("stage '") + to_string(stage) + "' unparseable after retries: " + reason),
        stage_(stage),
        raw_text_(std::move(raw_text)) {}

  Stage stage() const noexcept { return stage_; }
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  Stage stage_;
  std::string raw_text_;
};

class GraphInvalidError : public Error {
 public:
  GraphInvalidError(const std::string& what, std::vector<int> cycle = {})
      : Error("generated graph invalid: " + what), cycle_(std::move(cycle)) {}

  // Non-empty when the rejection was a dependency cycle.
  const std::vector<int>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<int> cycle_;
};

// ---------------------------------------------------------------------------
// metrics / data

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class KeyMismatchError : public Error {
 public:
  KeyMismatchError(const std::string& what, std::vector<std::string> unpaired)
      : Error(what + " (" + std::to_string(unpaired.size()) + " unpaired key(s)" +
              (unpaired.empty() ? "" : ", first: " + unpaired.front()) + ")"),
        unpaired_(std::move(unpaired)) {}

  const std::vector<std::string>& unpaired() const noexcept { return unpaired_; }

 private:
  std::vector<std::string> unpaired_;
};

class JudgeParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t row, const std::string& reason)
      : Error("row " + std::to_string(row) + ": " + reason), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace dsg
