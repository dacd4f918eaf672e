#ifndef ALPHALAB_TRANSPORT_HPP
#define ALPHALAB_TRANSPORT_HPP

// Chat-completion transports. LiveTransport talks to an HTTP(S) endpoint and
// appends every successful round trip to a session log directory; the log
// directory is itself a valid ReplayTransport fixture.
//
// Fixture layout: one file per request, named <sha256(prompt)>.json, holding
// at least {"prompt", "params", "response"}.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <optional>
#include <regex>
#include <string>

// <resolv.h>, pulled in by httplib, defines a `_res` macro that breaks Eigen
// headers included after it.
#include <Eigen/Dense>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "alphalab/error.hpp"
#include "alphalab/sha256.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

struct CompletionParams {
  std::string model = "gpt-4";
  double temperature = 0.7;
  int max_tokens = 4096;
};

inline nlohmann::json to_json(const CompletionParams& p) {
  return {{"model", p.model}, {"temperature", p.temperature}, {"max_tokens", p.max_tokens}};
}

struct Completion {
  std::string text;
  std::string prompt_hash;
  std::string recorded_at;  // UTC, ISO-8601
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual Completion complete(const std::string& prompt, const CompletionParams& params) = 0;
};

inline std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

// ---- replay -------------------------------------------------------------

class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
      throw ConfigError("replay directory '" + dir_.string() + "' does not exist");
  }

  Completion complete(const std::string& prompt, const CompletionParams&) override {
    const auto hash = prompt_hash(prompt);
    const auto path = dir_ / (hash + ".json");
    if (!std::filesystem::exists(path)) throw NoFixtureError(hash);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text::read_file(path.string()));
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(0, "replay fixture " + path.string() + ": " + e.what());
    }
    if (!j.contains("prompt") || !j.contains("response") || !j["response"].is_string())
      throw TransportError(0, "replay fixture " + path.string() + ": missing prompt or response");
    if (j["prompt"] != prompt)
      throw TransportError(0, "replay fixture " + path.string() + ": stored prompt differs from request");
    return {j["response"].get<std::string>(), hash, j.value("recorded_at", std::string())};
  }

 private:
  std::filesystem::path dir_;
};

// ---- live ---------------------------------------------------------------

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;

  static Endpoint parse(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/\s]+)(/[^\s]*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("invalid endpoint URL '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
  }
};

inline std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class LiveTransport final : public Transport {
 public:
  /// `log_dir` may be empty to disable the session log.
  LiveTransport(const std::string& endpoint_url, std::string api_key, std::filesystem::path log_dir,
                int timeout_seconds = 120)
      : endpoint_(Endpoint::parse(endpoint_url)),
        api_key_(std::move(api_key)),
        log_dir_(std::move(log_dir)),
        timeout_(timeout_seconds) {}

  /// Reads the credential from environment variable `key_env`.
  static LiveTransport from_env(const std::string& endpoint_url, const std::string& key_env,
                                std::filesystem::path log_dir) {
    const char* key = std::getenv(key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + key_env + " is not set");
    return LiveTransport(endpoint_url, key, std::move(log_dir));
  }

  LiveTransport(LiveTransport&& o) noexcept
      : endpoint_(std::move(o.endpoint_)),
        api_key_(std::move(o.api_key_)),
        log_dir_(std::move(o.log_dir_)),
        timeout_(o.timeout_) {}

  Completion complete(const std::string& prompt, const CompletionParams& params) override {
    std::lock_guard lock(mutex_);  // one request in flight

    nlohmann::json req = {{"model", params.model},
                          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                          {"temperature", params.temperature},
                          {"max_tokens", params.max_tokens}};
    const auto request_body = req.dump();

    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_, 0);
    client.set_read_timeout(timeout_, 0);
    client.set_write_timeout(timeout_, 0);
    client.set_bearer_token_auth(api_key_);
    const auto res = client.Post(endpoint_.path, request_body, "application/json");
    if (!res) throw TransportError(0, "request to " + endpoint_.origin + " failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
      throw AuthError(res->status, "endpoint rejected the credential (HTTP " + std::to_string(res->status) + ")");
    if (res->status != 200)
      throw TransportError(res->status, "endpoint returned HTTP " + std::to_string(res->status));

    std::string content;
    try {
      const auto body = nlohmann::json::parse(res->body);
      content = body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(res->status, std::string("malformed completion response: ") + e.what());
    }

    Completion out{content, prompt_hash(prompt), utc_now_iso()};
    if (!log_dir_.empty()) {
      nlohmann::json rec = {{"prompt", prompt},      {"params", to_json(params)},
                            {"response", content},   {"recorded_at", out.recorded_at},
                            {"request_body", request_body}, {"response_body", res->body}};
      std::filesystem::create_directories(log_dir_);
      const auto path = log_dir_ / (out.prompt_hash + ".json");
      const auto tmp = path.string() + ".tmp";
      text::write_file(tmp, rec.dump(2) + "\n");
      std::filesystem::rename(tmp, path);
    }
    return out;
  }

 private:
  Endpoint endpoint_;
  std::string api_key_;
  std::filesystem::path log_dir_;
  int timeout_;
  std::mutex mutex_;
};

}  // namespace alphalab

#endif  // ALPHALAB_TRANSPORT_HPP
