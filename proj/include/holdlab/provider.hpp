#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace holdlab {

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

enum class ProviderKind { Http, Replay };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Replay;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.3;
  int timeout_s = 120;
  int max_retries = 3;
  std::string api_key_env = "LLM_API_KEY";
  std::string replay_path;

  void validate() const;
  nlohmann::json to_json() const;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  /// `ordinal` counts calls of the same template within a run.
  virtual std::string complete(const std::string& template_id, int ordinal,
                               const std::vector<ChatMessage>& messages) = 0;
  virtual std::string describe() const = 0;
};

/// Answers from a recorded fixture: JSON array of
/// {template_id, ordinal, response_text}.
class ReplayProvider final : public LlmProvider {
 public:
  explicit ReplayProvider(const nlohmann::json& fixture);
  static ReplayProvider from_file(const std::string& path);

  std::string complete(const std::string& template_id, int ordinal, const std::vector<ChatMessage>&) override;
  std::string describe() const override { return "replay"; }

 private:
  std::map<std::pair<std::string, int>, std::string> responses_;
};

/// Chat-completions style POST {model, messages, temperature}.
class HttpProvider final : public LlmProvider {
 public:
  explicit HttpProvider(ProviderConfig cfg);
  std::string complete(const std::string& template_id, int ordinal,
                       const std::vector<ChatMessage>& messages) override;
  std::string describe() const override { return "http:" + cfg_.model; }

  static nlohmann::json request_body(const std::string& model, double temperature,
                                     const std::vector<ChatMessage>& messages);
  /// choices[0].message.content; throws ProviderError when absent.
  static std::string extract_text(const std::string& response_body);

 private:
  ProviderConfig cfg_;
};

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& cfg);

}  // namespace holdlab
