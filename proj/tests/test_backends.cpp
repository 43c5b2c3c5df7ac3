#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "dsg/detail/util.hpp"
#include "dsg/fixtures.hpp"
#include "dsg/http_backends.hpp"
#include "dsg/scoring.hpp"
#include "support/tmpdir.hpp"
#include "support/wire_server.hpp"

using namespace dsg;
using nlohmann::json;

namespace {

json vectors() {
  static const json v = json::parse(detail::read_file(std::string(DSG_SOURCE_DIR) + "/tests/vectors/wire_protocol.json"));
  return v;
}

// Server side of one vector: remembers what arrived and answers with the canned reply.
struct Replay {
  std::mutex mu;
  json received;
  std::string auth;
  json vec;

  dsgtest::WireServer::Handler handler() {
    return [this](const json& req, const httplib::Request& raw) {
      std::lock_guard lock(mu);
      received = req;
      auth = raw.get_header_value("Authorization");
      std::string body = vec.contains("raw_response") ? vec["raw_response"].get<std::string>() : vec["response"].dump();
      return dsgtest::WireReply{vec["status"].get<int>(), body};
    };
  }
};

template <class Call>
void check_expectation(const json& vec, const char* field, Call&& call) {
  const auto& want = vec["expect"];
  const std::string name = vec["name"];
  if (want.contains(field)) {
    EXPECT_EQ(call(), want[field].get<std::string>()) << name;
    return;
  }
  const std::string kind = want["error"];
  if (kind == "http_status") {
    try {
      call();
      ADD_FAILURE() << name << ": no error";
    } catch (const HttpStatusError& e) {
      EXPECT_EQ(e.status(), want["status"].get<int>()) << name;
      EXPECT_NE(std::string(e.what()).find(want["message"].get<std::string>()), std::string::npos) << name;
    }
  } else if (kind == "malformed_response") {
    EXPECT_THROW(call(), MalformedResponseError) << name;
  } else {
    ADD_FAILURE() << "unknown expectation " << kind;
  }
}

HttpOptions with_token(std::string t, int timeout = 5) {
  HttpOptions o;
  o.token = std::move(t);
  o.timeout_seconds = timeout;
  return o;
}

}  // namespace

TEST(SceneOracle, AnswersFromTheScene) {
  auto g = fixtures::motorcycle_graph();
  SceneOracle oracle;
  oracle.set_scene("full", g.tuples());
  oracle.set_scene("no-doors", {g.tuple(1), g.tuple(2)});
  auto q = [&](const std::string& img, int id) {
    return oracle.ask({g.prompt_id(), img, id, g.question(id).text, g.tuple(id)});
  };
  EXPECT_EQ(q("full", 1), "yes");
  EXPECT_EQ(q("no-doors", 1), "yes");
  EXPECT_EQ(q("no-doors", 3), "no");
  EXPECT_THROW(q("elsewhere", 1), BackendError);
  auto calls = oracle.calls();
  ASSERT_EQ(calls.size(), 4u);
  EXPECT_EQ(calls[2].image_ref, "no-doors");
  EXPECT_EQ(calls[2].question_id, 3);
  EXPECT_EQ(calls[2].question, "Are there doors?");
  // no tuple attached: the oracle cannot know, so it says no
  EXPECT_EQ(oracle.ask({"p", "full", 1, "Is there a motorcycle?", std::nullopt}), "no");
}

TEST(ScriptedBackend, KeyedByStageAndPrompt) {
  ScriptedGenerationBackend llm;
  llm.script_text(Stage::tuples, "a cat", {"first", "second"});
  auto pre = default_preambles();
  EXPECT_EQ(llm.complete(pre.tuple, "a cat"), "first");
  EXPECT_EQ(llm.complete(pre.tuple, "a cat"), "second");
  EXPECT_EQ(llm.complete(pre.tuple, "a cat"), "second");
  EXPECT_THROW(llm.complete(pre.question, "a cat\n\n1 | entity - whole (cat)\n"), BackendError);
  EXPECT_THROW(llm.complete("some other preamble", "a cat"), BackendError);
  EXPECT_EQ(llm.calls().size(), 4u);
}

TEST(WireProtocol, GenerationVectors) {
  for (const auto& vec : vectors()["complete"]) {
    Replay replay;
    replay.vec = vec;
    dsgtest::WireServer server(replay.handler());
    HttpGenerationBackend llm(server.url(), with_token("vector-token"));
    const auto& req = vec["request"];
    check_expectation(vec, "text", [&] {
      return llm.complete(req["preamble"].get<std::string>(), req["input"].get<std::string>());
    });
    EXPECT_EQ(replay.received, req) << vec["name"];
    EXPECT_EQ(replay.auth, "Bearer vector-token");
  }
}

TEST(WireProtocol, QaVectors) {
  dsgtest::TempDir dir;
  for (const auto& vec : vectors()["vqa"]) {
    Replay replay;
    replay.vec = vec;
    dsgtest::WireServer server({}, replay.handler());
    const auto& req = vec["request"];
    QaQuery q{"p", "", 1, req["question"].get<std::string>(), std::nullopt};
    bool inline_image = vec.contains("inline_file_content");
    if (inline_image) {
      q.image_ref = (dir / "inline.img").string();
      detail::write_file_atomic(q.image_ref, vec["inline_file_content"].get<std::string>());
    } else {
      q.image_ref = req["image_ref"].get<std::string>();
    }
    HttpQaBackend vqa(server.url(), with_token("vector-token"), inline_image);
    check_expectation(vec, "answer", [&] { return vqa.ask(q); });
    EXPECT_EQ(replay.received, req) << vec["name"];
  }
}

TEST(WireProtocol, ReferenceServerRejectsMalformedRequests) {
  dsgtest::WireServer server([](const json&, const httplib::Request&) { return dsgtest::WireReply{200, R"({"text":"t"})"}; },
                             [](const json&, const httplib::Request&) { return dsgtest::WireReply{200, R"({"answer":"yes"})"}; });
  httplib::Client cli("127.0.0.1", server.port());
  for (const auto& vec : vectors()["malformed_requests"]) {
    auto res = cli.Post(vec["path"].get<std::string>(), vec["body"].get<std::string>(), "application/json");
    ASSERT_TRUE(res) << vec["name"];
    EXPECT_EQ(res->status, vec["status"].get<int>()) << vec["name"];
    auto body = json::parse(res->body, nullptr, false);
    ASSERT_TRUE(body.is_object()) << vec["name"];
    EXPECT_TRUE(body.contains("error") && body["error"].is_string()) << vec["name"];
  }
  // and every well-formed vector request passes validation
  for (const auto& vec : vectors()["complete"]) EXPECT_EQ(dsgtest::WireServer::validate(vec["request"], true), "");
  for (const auto& vec : vectors()["vqa"]) EXPECT_EQ(dsgtest::WireServer::validate(vec["request"], false), "");
}

TEST(HttpBackends, TokenFromEnvironment) {
  std::mutex mu;
  std::string auth = "unset";
  dsgtest::WireServer server([&](const json&, const httplib::Request& raw) {
    std::lock_guard lock(mu);
    auth = raw.has_header("Authorization") ? raw.get_header_value("Authorization") : "";
    return dsgtest::WireReply{200, R"({"text":"t"})"};
  });
  ::unsetenv("DSG_BACKEND_TOKEN");
  HttpGenerationBackend anonymous(server.url());
  anonymous.complete("p", "i");
  EXPECT_EQ(auth, "");

  ::setenv("DSG_BACKEND_TOKEN", "from-env", 1);
  HttpGenerationBackend from_env(server.url());
  from_env.complete("p", "i");
  EXPECT_EQ(auth, "Bearer from-env");

  HttpGenerationBackend explicit_token(server.url(), with_token("explicit"));
  explicit_token.complete("p", "i");
  EXPECT_EQ(auth, "Bearer explicit");
  ::unsetenv("DSG_BACKEND_TOKEN");
}

TEST(HttpBackends, BasePathIsPrefixed) {
  dsgtest::WireServer server([](const json& j, const httplib::Request&) {
    return dsgtest::WireReply{200, json{{"text", j["input"]}}.dump()};
  }, {}, "/models/gen");
  HttpGenerationBackend llm(server.url("/models/gen/"));
  EXPECT_EQ(llm.complete("p", "echo me"), "echo me");
  HttpGenerationBackend wrong(server.url());
  EXPECT_THROW(wrong.complete("p", "i"), HttpStatusError);
}

TEST(HttpBackends, UnreachableEndpointTimesOut) {
  int port;
  {
    // grab a free port and release it again, so nothing is listening there
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  HttpOptions opt;
  opt.timeout_seconds = 1;
  HttpGenerationBackend llm("http://127.0.0.1:" + std::to_string(port), opt);
  EXPECT_THROW(llm.complete("p", "i"), TimeoutError);
  HttpQaBackend vqa("http://127.0.0.1:" + std::to_string(port), opt);
  EXPECT_THROW(vqa.ask({"p", "a.png", 1, "q?", std::nullopt}), TimeoutError);
}

TEST(HttpBackends, SlowServerTimesOut) {
  dsgtest::WireServer server([](const json&, const httplib::Request&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2500));
    return dsgtest::WireReply{200, R"({"text":"late"})"};
  });
  HttpOptions opt;
  opt.timeout_seconds = 1;
  HttpGenerationBackend llm(server.url(), opt);
  EXPECT_THROW(llm.complete("p", "i"), TimeoutError);
}

TEST(HttpBackends, BadUrlsAreRejected) {
  EXPECT_THROW(HttpGenerationBackend("localhost:8080"), BackendError);
  EXPECT_THROW(HttpGenerationBackend("https://example.org"), BackendError);
  EXPECT_THROW(HttpQaBackend("http://"), BackendError);
}

TEST(HttpBackends, InlineImageCap) {
  dsgtest::TempDir dir;
  std::atomic<int> requests{0};
  std::atomic<std::size_t> last_len{0};
  dsgtest::WireServer server({}, [&](const json& j, const httplib::Request&) {
    ++requests;
    last_len = j["image_b64"].get<std::string>().size();
    return dsgtest::WireReply{200, R"({"answer":"yes"})"};
  });
  HttpQaBackend vqa(server.url(), with_token("t", 30), true);

  auto at_cap = (dir / "at_cap.png").string();
  detail::write_file_atomic(at_cap, "");
  std::filesystem::resize_file(at_cap, kInlineImageCap);
  EXPECT_EQ(vqa.ask({"p", at_cap, 1, "q?", std::nullopt}), "yes");
  EXPECT_EQ(last_len.load(), (kInlineImageCap + 2) / 3 * 4);

  auto over = (dir / "over.png").string();
  detail::write_file_atomic(over, "");
  std::filesystem::resize_file(over, kInlineImageCap + 1);
  EXPECT_THROW(vqa.ask({"p", over, 1, "q?", std::nullopt}), BackendError);
  EXPECT_THROW(vqa.ask({"p", (dir / "absent.png").string(), 1, "q?", std::nullopt}), BackendError);
  EXPECT_EQ(requests.load(), 1);
}

TEST(HttpBackends, ConcurrencyCapIsRespected) {
  std::atomic<int> in_flight{0}, peak{0};
  dsgtest::WireServer server([&](const json&, const httplib::Request&) {
    int now = ++in_flight;
    for (int p = peak.load(); now > p && !peak.compare_exchange_weak(p, now);) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(60));
    --in_flight;
    return dsgtest::WireReply{200, R"({"text":"t"})"};
  });
  HttpOptions opt;
  opt.max_concurrent = 3;
  HttpGenerationBackend llm(server.url(), opt);
  std::vector<std::jthread> workers;
  for (int i = 0; i < 12; ++i) workers.emplace_back([&] { llm.complete("p", "i"); });
  workers.clear();
  EXPECT_LE(peak.load(), 3);
  EXPECT_GE(peak.load(), 2);
}

// Scoring over the wire gives the same result as the in-process oracle.
TEST(HttpBackends, EvaluateThroughReferenceServer) {
  auto g = fixtures::motorcycle_graph();
  std::mutex mu;
  std::map<std::string, std::string> answers;
  for (const auto& q : g.questions()) answers[q.text] = q.id == 3 ? "no" : "Yes.";
  dsgtest::WireServer server({}, [&](const json& j, const httplib::Request&) {
    std::lock_guard lock(mu);
    return dsgtest::WireReply{200, json{{"answer", answers.at(j["question"].get<std::string>())}}.dump()};
  });
  HttpQaBackend vqa(server.url());
  auto ev = evaluate_item(g, "m/p.png", vqa);
  EXPECT_EQ(ev.scores, (std::vector<int>{1, 1, 0, 0}));
  EXPECT_EQ(ev.average(), 0.5);
}
