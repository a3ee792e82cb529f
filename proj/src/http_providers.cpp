// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "http_providers.hpp"

#include <httplib.h>
#include <json.hpp>

#include "graphdec/errors.hpp"

namespace graphdec::detail {

namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ContractError("endpoint must be an absolute http(s) URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
  return e;
}

class HttpProvider : public Provider {
 public:
  HttpProvider(ModelConfig config, std::string api_key)
      : config_(std::move(config)), key_(std::move(api_key)), endpoint_(split_endpoint(config_.endpoint)) {}

  ModelResponse send(const PromptBundle& prompt, int call_index) override {
    httplib::Client client(endpoint_.origin);
    auto seconds = static_cast<time_t>(config_.timeout.count());
    client.set_connection_timeout(seconds, 0);
    client.set_read_timeout(seconds, 0);
    client.set_write_timeout(seconds, 0);

    auto result = client.Post(endpoint_.base_path + path(), headers(), body(prompt).dump(),
                              "application/json");
    if (!result) {
      auto err = result.error();
      std::string what = "request to " + endpoint_.origin + " failed: " + httplib::to_string(err);
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write) {
        throw TimeoutError(what);
      }
      throw TransientTransportError(what);
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw AuthError("provider rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (status == 408 || status == 429 || status >= 500) {
      throw TransientTransportError("provider returned HTTP " + std::to_string(status));
    }
    if (status < 200 || status >= 300) {
      throw TransportError("provider returned HTTP " + std::to_string(status) + ": " +
                           result->body.substr(0, 200));
    }

    ModelResponse r;
    r.call_index = call_index;
    json doc = json::parse(result->body, nullptr, false);
    if (doc.is_discarded()) {
      r.finish_reason = FinishReason::error;
      r.text = result->body.substr(0, 200);
      return r;
    }
    parse(doc, r);
    return r;
  }

 protected:
  virtual std::string path() const = 0;
  virtual httplib::Headers headers() const = 0;
  virtual json body(const PromptBundle& prompt) const = 0;
  virtual void parse(const json& doc, ModelResponse& r) const = 0;

  ModelConfig config_;
  std::string key_;
  Endpoint endpoint_;
};

class OpenAiProvider : public HttpProvider {
 public:
  using HttpProvider::HttpProvider;

 protected:
  std::string path() const override { return "/chat/completions"; }

  httplib::Headers headers() const override {
    return {{"Authorization", "Bearer " + key_}};
  }

  json body(const PromptBundle& prompt) const override {
    return {{"model", config_.model_name},
            {"temperature", config_.temperature},
            {"max_tokens", config_.max_output_tokens},
            {"messages",
             json::array({{{"role", "system"}, {"content", prompt.system_text}},
                          {{"role", "user"}, {"content", prompt.user_text}}})}};
  }

  void parse(const json& doc, ModelResponse& r) const override {
    const auto choices = doc.value("choices", json::array());
    if (!choices.is_array() || choices.empty() || !choices[0].contains("message")) {
      r.finish_reason = FinishReason::error;
      return;
    }
    const auto& msg = choices[0]["message"];
    if (msg.contains("content") && msg["content"].is_string()) {
      r.text = msg["content"].get<std::string>();
    }
    auto reason = choices[0].value("finish_reason", std::string("stop"));
    r.finish_reason = reason == "stop"     ? FinishReason::stop
                      : reason == "length" ? FinishReason::length
                                           : FinishReason::error;
  }
};

class GeminiProvider : public HttpProvider {
 public:
  using HttpProvider::HttpProvider;

 protected:
  std::string path() const override {
    return "/models/" + config_.model_name + ":generateContent";
  }

  httplib::Headers headers() const override { return {{"x-goog-api-key", key_}}; }

  json body(const PromptBundle& prompt) const override {
    return {{"systemInstruction", {{"parts", json::array({{{"text", prompt.system_text}}})}}},
            {"contents",
             json::array({{{"role", "user"},
                           {"parts", json::array({{{"text", prompt.user_text}}})}}})},
            {"generationConfig",
             {{"temperature", config_.temperature},
              {"maxOutputTokens", config_.max_output_tokens}}}};
  }

  void parse(const json& doc, ModelResponse& r) const override {
    const auto candidates = doc.value("candidates", json::array());
    if (!candidates.is_array() || candidates.empty()) {
      r.finish_reason = FinishReason::error;
      return;
    }
    const auto& cand = candidates[0];
    if (cand.contains("content") && cand["content"].contains("parts")) {
      for (const auto& part : cand["content"]["parts"]) {
        if (part.contains("text") && part["text"].is_string()) {
          r.text += part["text"].get<std::string>();
        }
      }
    }
    auto reason = cand.value("finishReason", std::string("STOP"));
    r.finish_reason = reason == "STOP"         ? FinishReason::stop
                      : reason == "MAX_TOKENS" ? FinishReason::length
                                               : FinishReason::error;
  }
};

}  // namespace

std::unique_ptr<Provider> make_http_provider(const ModelConfig& config, std::string api_key) {
  if (config.provider == ProviderKind::openai_compatible) {
    return std::make_unique<OpenAiProvider>(config, std::move(api_key));
  }
  return std::make_unique<GeminiProvider>(config, std::move(api_key));
}

}  // namespace graphdec::detail
