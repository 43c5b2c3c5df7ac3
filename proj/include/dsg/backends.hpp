#pragma once

// Backend interfaces for generation (LLM) and question answering (VQA), plus
// deterministic in-process doubles for offline runs.

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsg/core_graph.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"
#include "dsg/preambles.hpp"

namespace dsg {

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Implementations must tolerate concurrent calls.
  virtual std::string complete(std::string_view preamble, std::string_view input) = 0;
  virtual std::string name() const = 0;
};

struct QaQuery {
  std::string prompt_id;
  std::string image_ref;
  int question_id = 0;
  std::string question;
  // Source tuple. Only in-process oracles look at it; it never goes on the wire.
  std::optional<SemanticTuple> tuple;
};

class QaBackend {
 public:
  virtual ~QaBackend() = default;
  virtual std::string ask(const QaQuery& query) = 0;
  virtual std::string name() const = 0;
};

inline std::string complete(GenerationBackend& b, std::string_view preamble,
                            std::string_view input) {
  return b.complete(preamble, input);
}
inline std::string ask(QaBackend& b, const QaQuery& q) { return b.ask(q); }

// ---------------------------------------------------------------------------

// Stage-1 input is the prompt; later stages prepend it to the tuple lines
// with a blank line in between.
inline std::string prompt_of_stage_input(std::string_view input) {
  auto pos = input.find("\n\n");
  return std::string(pos == std::string_view::npos ? input : input.substr(0, pos));
}

// Replays scripted completions keyed by (stage, prompt text). The stage is
// recognised from the preamble. Successive calls walk the reply list; the
// last reply repeats.
class ScriptedGenerationBackend : public GenerationBackend {
 public:
  struct Reply {
    std::string text;
    bool transport_error = false;
  };

  explicit ScriptedGenerationBackend(PreambleSet preambles = default_preambles(),
                                     std::string name = "scripted")
      : preambles_(std::move(preambles)), name_(std::move(name)) {}

  void script(Stage stage, const std::string& prompt, std::vector<Reply> replies) {
    std::lock_guard lock(mu_);
    scripts_[{stage, prompt}] = {std::deque<Reply>(replies.begin(), replies.end())};
  }

  void script_text(Stage stage, const std::string& prompt, std::vector<std::string> texts) {
    std::vector<Reply> r;
    for (auto& t : texts) r.push_back({std::move(t), false});
    script(stage, prompt, std::move(r));
  }

  // All three stages from a known-good annotation.
  void script_graph(const std::string& prompt, const std::string& tuples,
                    const std::string& questions, const std::string& dependencies) {
    script_text(Stage::tuples, prompt, {tuples});
    script_text(Stage::questions, prompt, {questions});
    script_text(Stage::dependencies, prompt, {dependencies});
  }

  std::string complete(std::string_view preamble, std::string_view input) override {
    std::optional<Stage> stage;
    for (Stage s : {Stage::tuples, Stage::questions, Stage::dependencies})
      if (preambles_.for_stage(s) == preamble) stage = s;
    if (!stage) throw BackendError("scripted backend: unrecognised preamble");
    auto prompt = prompt_of_stage_input(input);
    std::lock_guard lock(mu_);
    calls_.emplace_back(*stage, prompt);
    auto it = scripts_.find({*stage, prompt});
    if (it == scripts_.end())
      throw BackendError(std::string("scripted backend: no script for stage '") +
                         to_string(*stage) + "' of prompt '" + prompt + "'");
    auto& q = it->second;
    if (q.empty()) throw BackendError("scripted backend: empty script");
    Reply r = q.front();
    if (q.size() > 1) q.pop_front();
    if (r.transport_error) throw BackendError("scripted transport failure");
    return r.text;
  }

  std::string name() const override { return name_; }

  std::vector<std::pair<Stage, std::string>> calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  PreambleSet preambles_;
  std::string name_;
  mutable std::mutex mu_;
  std::map<std::pair<Stage, std::string>, std::deque<Reply>> scripts_;
  std::vector<std::pair<Stage, std::string>> calls_;
};

// Wraps a callable; handy for judges and one-off doubles.
class FunctionGenerationBackend : public GenerationBackend {
 public:
  using Fn = std::function<std::string(std::string_view preamble, std::string_view input)>;
  explicit FunctionGenerationBackend(Fn fn, std::string name = "function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string complete(std::string_view preamble, std::string_view input) override {
    return fn_(preamble, input);
  }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

// ---------------------------------------------------------------------------

struct QaCall {
  std::string image_ref;
  int question_id = 0;
  std::string question;
};

class RecordingQaBackend : public QaBackend {
 public:
  std::vector<QaCall> calls() const {
    std::lock_guard lock(log_mu_);
    return calls_;
  }
  void clear_calls() {
    std::lock_guard lock(log_mu_);
    calls_.clear();
  }

 protected:
  void record(const QaQuery& q) {
    std::lock_guard lock(log_mu_);
    calls_.push_back({q.image_ref, q.question_id, q.question});
  }

 private:
  mutable std::mutex log_mu_;
  std::vector<QaCall> calls_;
};

// Ground-truth VQA double: an image is the set of tuples it depicts, and a
// question is answered "yes" iff its source tuple is in that set.
class SceneOracle : public RecordingQaBackend {
 public:
  explicit SceneOracle(std::map<std::string, std::vector<SemanticTuple>> scenes = {},
                       std::string name = "scene-oracle")
      : scenes_(std::move(scenes)), name_(std::move(name)) {}

  void set_scene(const std::string& image_ref, std::vector<SemanticTuple> tuples) {
    scenes_[image_ref] = std::move(tuples);
  }

  std::string ask(const QaQuery& q) override {
    record(q);
    auto it = scenes_.find(q.image_ref);
    if (it == scenes_.end()) throw BackendError("unreadable image '" + q.image_ref + "'");
    if (!q.tuple) return "no";
    for (const auto& t : it->second)
      if (same_content(t, *q.tuple)) return "yes";
    return "no";
  }

  std::string name() const override { return name_; }

 private:
  std::map<std::string, std::vector<SemanticTuple>> scenes_;
  std::string name_;
};

class FunctionQaBackend : public RecordingQaBackend {
 public:
  using Fn = std::function<std::string(const QaQuery&)>;
  explicit FunctionQaBackend(Fn fn, std::string name = "function-qa")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string ask(const QaQuery& q) override {
    record(q);
    return fn_(q);
  }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

}  // namespace dsg
