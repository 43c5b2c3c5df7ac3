#pragma once

// HTTP clients for the generic wire protocol.
//
//   POST /v1/complete  {"preamble": s, "input": s}                     -> {"text": s}
//   POST /v1/vqa       {"question": s, "image_ref": s|null, "image_b64": s|null}
//                                                                      -> {"answer": s}
//   non-200                                                            -> {"error": s}

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "dsg/backends.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/errors.hpp"

namespace dsg {

struct HttpOptions {
  int timeout_seconds = 60;
  // Bearer token; falls back to DSG_BACKEND_TOKEN when unset.
  std::optional<std::string> token;
  int max_concurrent = 8;
};

inline constexpr std::size_t kInlineImageCap = 8u << 20;  // 8 MiB

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

inline Endpoint parse_endpoint(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw BackendError("backend URL needs a scheme: " + std::string(url));
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http")
    throw BackendError("unsupported backend URL scheme '" + std::string(scheme) +
                       "' (this build speaks plain http)");
  auto rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  Endpoint ep;
  ep.origin = std::string(url.substr(0, scheme_end + 3)) + std::string(rest.substr(0, slash));
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(rest.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  if (ep.origin.size() <= scheme_end + 3) throw BackendError("backend URL has no host: " + std::string(url));
  return ep;
}

class HttpJsonClient {
 public:
  HttpJsonClient(std::string_view url, HttpOptions opt)
      : endpoint_(parse_endpoint(url)), opt_(std::move(opt)), slots_(std::max(1, opt_.max_concurrent)) {
    if (!opt_.token)
      if (const char* env = std::getenv("DSG_BACKEND_TOKEN"); env && *env) opt_.token = env;
  }

  nlohmann::json post(const std::string& path, const nlohmann::json& body) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    // One client per call; httplib clients are not meant to be shared across threads.
    httplib::Client cli(endpoint_.origin);
    cli.set_connection_timeout(opt_.timeout_seconds, 0);
    cli.set_read_timeout(opt_.timeout_seconds, 0);
    cli.set_write_timeout(opt_.timeout_seconds, 0);
    httplib::Headers headers;
    if (opt_.token) headers.emplace("Authorization", "Bearer " + *opt_.token);

    auto res = cli.Post(endpoint_.base_path + path, headers, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      std::string what = endpoint_.origin + endpoint_.base_path + path + ": " + httplib::to_string(err);
      switch (err) {
        case httplib::Error::Connection:
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write: throw TimeoutError(what);
        default: throw BackendError(what);
      }
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (res->status != 200) {
      std::string detail;
      if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string())
        detail = parsed["error"].get<std::string>();
      throw HttpStatusError(res->status, detail);
    }
    if (parsed.is_discarded() || !parsed.is_object())
      throw MalformedResponseError("response from " + path + " is not a JSON object");
    return parsed;
  }

  std::string url() const { return endpoint_.origin + endpoint_.base_path; }

 private:
  Endpoint endpoint_;
  HttpOptions opt_;
  std::counting_semaphore<1024> slots_;
};

inline std::string string_field(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    throw MalformedResponseError(std::string("response lacks string field \"") + field + "\"");
  return j[field].get<std::string>();
}

}  // namespace detail

class HttpGenerationBackend : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(std::string_view url, HttpOptions opt = {})
      : client_(url, std::move(opt)) {}

  std::string complete(std::string_view preamble, std::string_view input) override {
    nlohmann::json req = {{"preamble", std::string(preamble)}, {"input", std::string(input)}};
    return detail::string_field(client_.post("/v1/complete", req), "text");
  }

  std::string name() const override { return client_.url(); }

 private:
  detail::HttpJsonClient client_;
};

class HttpQaBackend : public QaBackend {
 public:
  // With inline_images the image_ref is read as a local file and sent as base64.
  explicit HttpQaBackend(std::string_view url, HttpOptions opt = {}, bool inline_images = false)
      : client_(url, std::move(opt)), inline_images_(inline_images) {}

  std::string ask(const QaQuery& q) override {
    nlohmann::json req = {{"question", q.question}, {"image_ref", nullptr}, {"image_b64", nullptr}};
    if (inline_images_) {
      std::error_code ec;
      auto size = std::filesystem::file_size(q.image_ref, ec);
      if (ec) throw BackendError("cannot read image '" + q.image_ref + "': " + ec.message());
      if (size > kInlineImageCap)
        throw BackendError("image '" + q.image_ref + "' exceeds the 8 MiB inline limit");
      req["image_b64"] = httplib::detail::base64_encode(detail::read_file(q.image_ref));
    } else {
      req["image_ref"] = q.image_ref;
    }
    return detail::string_field(client_.post("/v1/vqa", req), "answer");
  }

  std::string name() const override { return client_.url(); }

 private:
  detail::HttpJsonClient client_;
  bool inline_images_;
};

}  // namespace dsg
