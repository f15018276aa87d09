#include "holdlab/provider.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace holdlab {

using nlohmann::json;

void ProviderConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ProviderError("temperature must lie in [0, 2]");
  if (max_retries < 0) throw ProviderError("max_retries must be >= 0");
  if (kind == ProviderKind::Replay && replay_path.empty()) throw ProviderError("replay provider needs a fixture path");
}

json ProviderConfig::to_json() const {
  json j{{"kind", kind == ProviderKind::Http ? "http" : "replay"},
         {"temperature", temperature},
         {"max_retries", max_retries}};
  if (kind == ProviderKind::Http) {
    j["endpoint"] = endpoint;
    j["model"] = model;
    j["timeout_s"] = timeout_s;
    j["api_key_env"] = api_key_env;
  } else {
    j["replay_path"] = replay_path;
  }
  return j;
}

ReplayProvider::ReplayProvider(const json& fixture) {
  if (!fixture.is_array()) throw ProviderError("replay fixture must be a JSON array");
  for (const auto& e : fixture) {
    if (!e.contains("template_id") || !e.contains("ordinal") || !e.contains("response_text"))
      throw ProviderError("replay entry needs template_id, ordinal and response_text");
    responses_[{e.at("template_id").get<std::string>(), e.at("ordinal").get<int>()}] =
        e.at("response_text").get<std::string>();
  }
}

ReplayProvider ReplayProvider::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProviderError("cannot open replay fixture " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ProviderError("replay fixture " + path + ": " + e.what());
  }
  return ReplayProvider(j);
}

std::string ReplayProvider::complete(const std::string& template_id, int ordinal, const std::vector<ChatMessage>&) {
  auto it = responses_.find({template_id, ordinal});
  if (it == responses_.end())
    throw ProviderError("replay fixture has no response for " + template_id + " #" + std::to_string(ordinal));
  return it->second;
}

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

json HttpProvider::request_body(const std::string& model, double temperature,
                                const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"messages", msgs}, {"temperature", temperature}};
}

std::string HttpProvider::extract_text(const std::string& response_body) {
  json j;
  try {
    j = json::parse(response_body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected chat response: ") + e.what());
  }
}

namespace {

// "https://host:port/path" -> ("https://host:port", "/path")
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ProviderError("endpoint must include a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string HttpProvider::complete(const std::string&, int, const std::vector<ChatMessage>& messages) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw ProviderError("environment variable " + cfg_.api_key_env + " is not set");
  const auto [host, path] = split_endpoint(cfg_.endpoint);
  httplib::Client client(host);
  client.set_connection_timeout(cfg_.timeout_s);
  client.set_read_timeout(cfg_.timeout_s);
  client.set_write_timeout(cfg_.timeout_s);
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
  const std::string body = request_body(cfg_.model, cfg_.temperature, messages).dump();

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::seconds(1 << std::min(attempt, 5)));
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return extract_text(res->body);
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
    if (res->status != 429 && res->status < 500) break;
  }
  throw ProviderError("chat request failed: " + last_error);
}

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& cfg) {
  cfg.validate();
  if (cfg.kind == ProviderKind::Replay) return std::make_unique<ReplayProvider>(ReplayProvider::from_file(cfg.replay_path));
  return std::make_unique<HttpProvider>(cfg);
}

}  // namespace holdlab
