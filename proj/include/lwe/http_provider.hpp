#pragma once

// Chat-completion backend over HTTP(S). One send() is one attempt; retries
// are driven by the caller (send_with_retry) using the error's retryable flag.
//
// Environment:
//   LWE_API_KEY    bearer token (required unless the endpoint needs none)
//   LWE_BASE_URL   e.g. https://api.openai.com/v1 (default)

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "lwe/core.hpp"
#include "lwe/provider.hpp"

namespace lwe {

inline constexpr const char* kApiKeyEnv = "LWE_API_KEY";
inline constexpr const char* kBaseUrlEnv = "LWE_BASE_URL";
inline constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";

struct HttpProviderConfig {
  std::string base_url = kDefaultBaseUrl;
  std::string api_key;
  std::string model = "gpt-4o";
  double timeout_s = 120.0;
  std::optional<int> default_max_output;

  // Base URL and key from the environment; the key never comes from flags.
  static HttpProviderConfig from_env(std::string model) {
    HttpProviderConfig c;
    c.model = std::move(model);
    if (const char* u = std::getenv(kBaseUrlEnv); u && *u) c.base_url = u;
    if (const char* k = std::getenv(kApiKeyEnv); k && *k) c.api_key = k;
    return c;
  }
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw InvariantError("bad base URL: " + url);
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

inline std::string media_type_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "image/png";
}

}  // namespace detail

// The URL placed in an image_url content part. Local files are read at call
// time and inlined as a data URL.
inline std::string image_url(const ImageRef& img) {
  switch (img.kind) {
    case ImageRef::Kind::Url: return img.value;
    case ImageRef::Kind::Inline: return "data:" + img.media_type + ";base64," + img.value;
    case ImageRef::Kind::Path: {
      std::ifstream in(img.value, std::ios::binary);
      if (!in) throw ProviderError("cannot read image file: " + img.value);
      std::stringstream ss;
      ss << in.rdbuf();
      return "data:" + detail::media_type_for(img.value) + ";base64," + httplib::detail::base64_encode(ss.str());
    }
  }
  return {};
}

inline nlohmann::json chat_request_body(const ModelRequest& req, const std::string& model,
                                        std::optional<int> default_max_output = std::nullopt) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", req.text}});
  if (req.image) content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url(*req.image)}}}});
  nlohmann::json body{{"model", model},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::move(content)}}})},
                      {"temperature", req.temperature}};
  if (auto m = req.max_output ? req.max_output : default_max_output) body["max_tokens"] = *m;
  return body;
}

// Text of the first choice; throws MalformedResponseError otherwise.
inline std::string parse_chat_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedResponseError(std::string("response is not JSON: ") + e.what(), body);
  }
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string out;
      for (const auto& part : content) {
        if (part.value("type", "") == "text") out += part.value("text", "");
      }
      return out;
    }
  } catch (const nlohmann::json::exception&) {
  }
  throw MalformedResponseError("response has no choices[0].message.content", body);
}

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)), url_(detail::split_url(config_.base_url)) {}

  std::string name() const override { return "http:" + config_.model; }

  std::string send(const ModelRequest& req) override {
    validate(req);
    const auto body = chat_request_body(req, config_.model, config_.default_max_output).dump();
    httplib::Client client(url_.origin);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(url_.path + "/chat/completions", headers, body, "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    const int status = res->status;
    if (status == 401 || status == 403) throw AuthError("authentication rejected (HTTP " + std::to_string(status) + ")", res->body);
    if (status == 429) throw RateLimitedError("rate limited (HTTP 429)", res->body);
    if (status >= 500) throw TransportError("server error (HTTP " + std::to_string(status) + ")", res->body);
    if (status < 200 || status >= 300) throw ProviderError("request rejected (HTTP " + std::to_string(status) + ")", false, res->body);
    return parse_chat_response(res->body);
  }

  const HttpProviderConfig& config() const { return config_; }

 private:
  HttpProviderConfig config_;
  detail::SplitUrl url_;
};

}  // namespace lwe
