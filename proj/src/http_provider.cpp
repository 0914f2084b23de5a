#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

#include "aes/llmgrade.hpp"

namespace aes {

namespace {

// Splits "https://host[:port]/v1" into "https://host[:port]" and "/v1".
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("base_url needs a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, ""};
  std::string path = url.substr(path_begin);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_begin), path};
}

}  // namespace

HttpProvider::HttpProvider(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw ValidationError("environment variable " + cfg_.api_key_env + " is not set");
  api_key_ = key;
  std::tie(scheme_host_, path_) = split_url(cfg_.base_url);
}

ChatResponse HttpProvider::complete(const ChatRequest& req, int /*attempt*/) {
  using json = nlohmann::json;
  json body = {{"model", req.model},
               {"messages",
                {{{"role", "system"}, {"content", req.instructions}}, {{"role", "user"}, {"content", req.user_text}}}},
               {"max_completion_tokens", req.max_tokens}};
  if (req.reasoning_effort) {
    body["reasoning_effort"] = *req.reasoning_effort;
  } else {
    body["temperature"] = req.temperature;
  }

  httplib::Client cli(scheme_host_);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
  cli.set_bearer_token_auth(api_key_);

  auto res = cli.Post(path_ + "/chat/completions", body.dump(), "application/json");
  if (!res) throw TransportError("http: " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("http status " + std::to_string(res->status), true, res->status);
  }
  if (res->status != 200) {
    throw TransportError("http status " + std::to_string(res->status) + ": " + res->body.substr(0, 200), false,
                         res->status);
  }
  try {
    const json j = json::parse(res->body);
    ChatResponse out;
    const json& content = j.at("choices").at(0).at("message").at("content");
    out.text = content.is_null() ? std::string() : content.get<std::string>();
    if (j.contains("usage")) {
      const json& u = j["usage"];
      out.input_tokens = u.value("prompt_tokens", std::int64_t{0});
      out.output_tokens = u.value("completion_tokens", std::int64_t{0});
    } else {
      out.input_tokens = estimate_tokens(req.instructions) + estimate_tokens(req.user_text);
      out.output_tokens = estimate_tokens(out.text);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response body: ") + e.what(), false, res->status);
  }
}

}  // namespace aes
