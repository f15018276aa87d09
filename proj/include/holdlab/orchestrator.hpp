#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdlab/dqn.hpp"
#include "holdlab/metrics.hpp"
#include "holdlab/prompts.hpp"
#include "holdlab/provider.hpp"
#include "holdlab/reward_lang.hpp"

namespace holdlab {

enum class CriterionMode { Multiplicative, Additive };

/// Acceptance gate: candidate metric must stay within slack of the
/// previous accepted one (lower is better).
struct RefinerCriterion {
  std::string metric = "avg_travel_time";  // | avg_waiting_time | sd_time_headways
  CriterionMode mode = CriterionMode::Multiplicative;
  double slack = 1.10;

  void validate() const;
  double bound(double previous) const;
  bool accepts(double previous, double candidate) const { return candidate <= bound(previous); }
  double value(const MetricsReport& r) const;
  nlohmann::json to_json() const;
};

struct AgentEvaluation {
  std::vector<double> evol;
  std::vector<TrajectoryStep> traj;
  MetricsReport rslt;
};

/// Trains and tests an agent for a reward. `attempt` is 0 for the first
/// candidate of an iteration and counts refinements after that.
using AgentEvaluator = std::function<AgentEvaluation(const RewardProgram&, int iteration, int attempt)>;

/// Trains with `cfg` (same seed every call) and tests greedily on `test_seed`.
AgentEvaluator make_training_evaluator(const ScenarioConfig& scenario, const TrainConfig& cfg,
                                       std::uint64_t test_seed);

struct RefinementAttempt {
  int attempt = 0;
  RewardProgram program;
  MetricsReport rslt;
  double metric = 0.0;
  std::string rejected_reason;  // empty when accepted
};

struct IterationRecord {
  int iteration = 0;
  RewardProgram reward;
  std::vector<double> evol;
  std::vector<TrajectoryStep> traj;  // truncated
  MetricsReport rslt;
  double metric = 0.0;
  std::string suggestions;
  std::vector<RefinementAttempt> attempts;  // rejected candidates, in order
  bool accepted = true;
  std::vector<std::string> transcripts;  // files under transcripts/
  int syntax_errors = 0;

  nlohmann::json to_json() const;
};

struct EvolveConfig {
  int iterations = 10;
  RefinerCriterion criterion;
  int refine_cap = 8;
  int syntax_retries = 3;
  std::optional<RewardProgram> warm_start;
  std::string out_dir;  // empty: nothing persisted
  std::size_t trajectory_window = 50;
};

class OrchestrationError : public std::runtime_error {
 public:
  OrchestrationError(const std::string& what, nlohmann::json details)
      : std::runtime_error(what), details_(std::move(details)) {}
  const nlohmann::json& details() const { return details_; }

 private:
  nlohmann::json details_;
};

struct TranscriptEntry {
  std::string template_id;
  int ordinal = 0;
  std::vector<ChatMessage> messages;
  std::string response;
  std::string file;  // relative name under transcripts/
  nlohmann::json to_json() const;
};

/// Reward text between the first pair of ``` fences (language tag
/// dropped); the whole text when there is no fence.
std::string extract_program_text(const std::string& response);

nlohmann::json reward_json(const RewardProgram& p);

class Orchestrator {
 public:
  Orchestrator(LlmProvider& provider, PromptContext ctx, EvolveConfig cfg);

  RewardProgram initialize(int iteration = 0);
  std::string analyze(const std::vector<double>& evol, const std::vector<TrajectoryStep>& traj,
                      const MetricsReport& rslt);
  RewardProgram modify(const RewardProgram& prev, const std::string& suggestions, int iteration);
  RewardProgram refine(const RewardProgram& prev_good, const std::string& prev_suggestions,
                       const RewardProgram& failed, const MetricsReport& failed_rslt, int iteration);

  std::vector<IterationRecord> evolve(const AgentEvaluator& evaluate);

  /// Rendered user prompt for the analyzer (golden-file tests).
  std::string analyzer_prompt(const std::vector<double>& evol, const std::vector<TrajectoryStep>& traj,
                              const MetricsReport& rslt) const;

  int syntax_errors() const { return syntax_errors_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const EvolveConfig& config() const { return cfg_; }

 private:
  std::string call(const std::string& template_id, std::vector<ChatMessage> messages);
  RewardProgram obtain_program(const std::string& template_id, const std::string& prompt,
                               const std::string& origin, int iteration);
  std::map<std::string, std::string> base_values() const;
  void persist_transcript(const TranscriptEntry& e) const;
  void persist_iteration(const IterationRecord& r) const;
  void persist_summary(const std::vector<IterationRecord>& records, const nlohmann::json* error) const;

  LlmProvider& provider_;
  PromptContext ctx_;
  EvolveConfig cfg_;
  std::map<std::string, int> ordinals_;
  std::vector<TranscriptEntry> transcript_;
  int syntax_errors_ = 0;
};

}  // namespace holdlab
