#include "holdlab/orchestrator.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "holdlab/feedback.hpp"

namespace holdlab {

using nlohmann::json;
namespace fs = std::filesystem;

void RefinerCriterion::validate() const {
  if (metric != "avg_travel_time" && metric != "avg_waiting_time" && metric != "sd_time_headways")
    throw std::invalid_argument("unknown criterion metric '" + metric + "'");
  if (mode == CriterionMode::Multiplicative && !(slack > 1.0))
    throw std::invalid_argument("multiplicative slack must exceed 1");
  if (mode == CriterionMode::Additive && !(slack > 0.0)) throw std::invalid_argument("additive slack must be positive");
}

double RefinerCriterion::bound(double previous) const {
  return mode == CriterionMode::Multiplicative ? slack * previous : previous + slack;
}

double RefinerCriterion::value(const MetricsReport& r) const {
  if (metric == "avg_waiting_time") return r.avg_waiting;
  if (metric == "sd_time_headways") return r.sd_headway();
  return r.avg_travel;
}

json RefinerCriterion::to_json() const {
  return {{"metric", metric},
          {"mode", mode == CriterionMode::Multiplicative ? "multiplicative" : "additive"},
          {"slack", slack}};
}

AgentEvaluator make_training_evaluator(const ScenarioConfig& scenario, const TrainConfig& cfg,
                                       std::uint64_t test_seed) {
  return [scenario, cfg, test_seed](const RewardProgram& reward, int, int) {
    TrainResult trained = run_training(scenario, reward, cfg);
    TestResult tested = run_test(trained.agent, scenario, reward, test_seed);
    return AgentEvaluation{std::move(trained.evol), std::move(tested.traj), std::move(tested.rslt)};
  };
}

json reward_json(const RewardProgram& p) {
  json j{{"source", p.source},
         {"canonical", pretty_print(p)},
         {"origin", p.metadata.origin},
         {"iteration", p.metadata.iteration},
         {"thoughts", p.metadata.thoughts}};
  if (p.metadata.terminal_travel_time_scale) j["terminal_travel_time_scale"] = *p.metadata.terminal_travel_time_scale;
  return j;
}

namespace {

json traj_json(const std::vector<TrajectoryStep>& traj) {
  json a = json::array();
  for (const auto& s : traj)
    a.push_back({{"current_state", s.current_state.values},
                 {"action", s.action},
                 {"reward", s.reward},
                 {"next_state", s.next_state.values}});
  return a;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string iter_name(int iteration) {
  std::ostringstream s;
  s << "iter_" << std::setw(2) << std::setfill('0') << iteration;
  return s.str();
}

}  // namespace

json IterationRecord::to_json() const {
  json j{{"iteration", iteration},
         {"reward", reward_json(reward)},
         {"evol", evol},
         {"traj", traj_json(traj)},
         {"rslt", rslt.to_json()},
         {"test_results", test_results_json(rslt)},
         {"metric", metric},
         {"suggestions", suggestions},
         {"accepted", accepted},
         {"syntax_errors", syntax_errors},
         {"transcripts", transcripts},
         {"attempts", json::array()}};
  for (const auto& a : attempts)
    j["attempts"].push_back({{"attempt", a.attempt},
                             {"reward", reward_json(a.program)},
                             {"test_results", test_results_json(a.rslt)},
                             {"metric", a.metric},
                             {"rejected_reason", a.rejected_reason}});
  return j;
}

json TranscriptEntry::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"template_id", template_id}, {"ordinal", ordinal}, {"messages", msgs}, {"response_text", response}};
}

std::string extract_program_text(const std::string& response) {
  const auto open = response.find("```");
  if (open == std::string::npos) return response;
  auto body = response.find('\n', open);
  if (body == std::string::npos) return "";
  ++body;
  const auto close = response.find("```", body);
  return response.substr(body, close == std::string::npos ? std::string::npos : close - body);
}

Orchestrator::Orchestrator(LlmProvider& provider, PromptContext ctx, EvolveConfig cfg)
    : provider_(provider), ctx_(std::move(ctx)), cfg_(std::move(cfg)) {
  cfg_.criterion.validate();
  if (cfg_.iterations < 0 || cfg_.refine_cap < 0 || cfg_.syntax_retries < 0)
    throw std::invalid_argument("evolve limits must be non-negative");
}

std::map<std::string, std::string> Orchestrator::base_values() const { return ctx_.variables(); }

std::string Orchestrator::call(const std::string& template_id, std::vector<ChatMessage> messages) {
  const int ordinal = ordinals_[template_id]++;
  TranscriptEntry e;
  e.template_id = template_id;
  e.ordinal = ordinal;
  e.messages = std::move(messages);
  std::ostringstream name;
  name << std::setw(3) << std::setfill('0') << transcript_.size() << "_" << template_id << "_" << ordinal << ".json";
  e.file = name.str();
  try {
    e.response = provider_.complete(template_id, ordinal, e.messages);
  } catch (const std::exception& ex) {
    e.response.clear();
    transcript_.push_back(e);
    persist_transcript(e);
    json details{{"kind", "ProviderError"}, {"template_id", template_id}, {"ordinal", ordinal}, {"message", ex.what()}};
    throw OrchestrationError(std::string("provider failed: ") + ex.what(), details);
  }
  transcript_.push_back(e);
  persist_transcript(e);
  return e.response;
}

RewardProgram Orchestrator::obtain_program(const std::string& template_id, const std::string& prompt,
                                           const std::string& origin, int iteration) {
  const PromptTemplate& tpl = prompt_template(template_id);
  std::vector<ChatMessage> messages{{"system", tpl.system}, {"user", prompt}};
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.syntax_retries; ++attempt) {
    const std::string response = call(template_id, messages);
    const std::string text = extract_program_text(response);
    try {
      RewardProgram p = parse_reward(text);
      const ProbeReport probe = probe_program(p);
      if (probe.error) throw EvalError(*probe.error);
      p.metadata.origin = origin;
      p.metadata.iteration = iteration;
      return p;
    } catch (const ParseError& e) {
      last_error = "syntax error at line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) +
                   ": " + e.message();
    } catch (const EvalError& e) {
      last_error = std::string("evaluation error: ") + e.what();
    }
    ++syntax_errors_;
    messages.push_back({"assistant", response});
    messages.push_back({"user", "The reward program cannot be used (" + last_error +
                                    "). Reply again with one corrected program in a single code block."});
  }
  throw OrchestrationError("no usable reward program from " + template_id + " after " +
                               std::to_string(cfg_.syntax_retries + 1) + " attempts",
                           {{"kind", "SyntaxRetriesExhausted"}, {"template_id", template_id}, {"last_error", last_error}});
}

RewardProgram Orchestrator::initialize(int iteration) {
  const PromptTemplate& tpl = prompt_template("initializer");
  return obtain_program("initializer", render(tpl.body, base_values()), "initializer", iteration);
}

std::string Orchestrator::analyzer_prompt(const std::vector<double>& evol, const std::vector<TrajectoryStep>& traj,
                                          const MetricsReport& rslt) const {
  auto values = base_values();
  values["trajectories"] =
      encode_feedback_json(evol, truncate_trajectory(traj, cfg_.trajectory_window), rslt).dump(2);
  return render(prompt_template("analyzer").body, values);
}

std::string Orchestrator::analyze(const std::vector<double>& evol, const std::vector<TrajectoryStep>& traj,
                                  const MetricsReport& rslt) {
  const PromptTemplate& tpl = prompt_template("analyzer");
  return call("analyzer", {{"system", tpl.system}, {"user", analyzer_prompt(evol, traj, rslt)}});
}

RewardProgram Orchestrator::modify(const RewardProgram& prev, const std::string& suggestions, int iteration) {
  auto values = base_values();
  values["current_reward_function"] = prev.source;
  values["analysis"] = suggestions;
  return obtain_program("modifier", render(prompt_template("modifier").body, values), "modifier", iteration);
}

RewardProgram Orchestrator::refine(const RewardProgram& prev_good, const std::string& prev_suggestions,
                                   const RewardProgram& failed, const MetricsReport& failed_rslt, int iteration) {
  auto values = base_values();
  values["previous_reward_function"] = prev_good.source;
  values["previous_analysis"] = prev_suggestions;
  values["current_reward_function"] = failed.source;
  values["current_test_results"] = test_results_json(failed_rslt).dump(2);
  return obtain_program("refiner", render(prompt_template("refiner").body, values), "refiner", iteration);
}

void Orchestrator::persist_transcript(const TranscriptEntry& e) const {
  if (cfg_.out_dir.empty()) return;
  write_text(fs::path(cfg_.out_dir) / "transcripts" / e.file, e.to_json().dump(2) + "\n");
}

void Orchestrator::persist_iteration(const IterationRecord& r) const {
  if (cfg_.out_dir.empty()) return;
  const fs::path root(cfg_.out_dir);
  const std::string name = iter_name(r.iteration);
  write_text(root / "iterations" / (name + ".json"), r.to_json().dump(2) + "\n");
  write_text(root / "rewards" / (name + ".reward"), r.reward.source);
  for (const auto& a : r.attempts)
    write_text(root / "rewards" / (name + "_rejected_" + std::to_string(a.attempt) + ".reward"), a.program.source);
}

void Orchestrator::persist_summary(const std::vector<IterationRecord>& records, const json* error) const {
  if (cfg_.out_dir.empty()) return;
  json s{{"criterion", cfg_.criterion.to_json()},
         {"iterations_requested", cfg_.iterations},
         {"refine_cap", cfg_.refine_cap},
         {"syntax_retries", cfg_.syntax_retries},
         {"warm_start", cfg_.warm_start.has_value()},
         {"provider", provider_.describe()},
         {"syntax_errors", syntax_errors_},
         {"iterations", json::array()}};
  for (const auto& r : records) {
    json rejected = json::array();
    for (const auto& a : r.attempts) rejected.push_back(a.metric);
    s["iterations"].push_back({{"iteration", r.iteration},
                               {"metric", r.metric},
                               {"accepted", r.accepted},
                               {"rejected_metrics", rejected},
                               {"record", "iterations/" + iter_name(r.iteration) + ".json"}});
  }
  s["status"] = error ? "failed" : "completed";
  const fs::path root(cfg_.out_dir);
  write_text(root / "summary.json", s.dump(2) + "\n");
  if (error) write_text(root / "error.json", error->dump(2) + "\n");
}

std::vector<IterationRecord> Orchestrator::evolve(const AgentEvaluator& evaluate) {
  std::vector<IterationRecord> records;
  std::size_t transcript_mark = 0;
  auto take_transcripts = [&](IterationRecord& r) {
    for (; transcript_mark < transcript_.size(); ++transcript_mark)
      r.transcripts.push_back("transcripts/" + transcript_[transcript_mark].file);
  };
  auto run_eval = [&](const RewardProgram& p, int iteration, int attempt) {
    try {
      return evaluate(p, iteration, attempt);
    } catch (const RewardFailure& e) {
      json d = e.to_json();
      d["iteration"] = iteration;
      d["attempt"] = attempt;
      throw OrchestrationError(e.what(), d);
    } catch (const SimulationAborted& e) {
      throw OrchestrationError(e.what(), {{"kind", "SimulationAborted"}, {"iteration", iteration}, {"attempt", attempt}});
    }
  };

  try {
    int errors_mark = 0;
    IterationRecord first;
    first.iteration = 0;
    if (cfg_.warm_start) {
      first.reward = *cfg_.warm_start;
      first.reward.metadata.iteration = 0;
    } else {
      first.reward = initialize(0);
    }
    AgentEvaluation ev = run_eval(first.reward, 0, 0);
    first.evol = std::move(ev.evol);
    first.traj = truncate_trajectory(ev.traj, cfg_.trajectory_window);
    first.rslt = std::move(ev.rslt);
    first.metric = cfg_.criterion.value(first.rslt);
    first.suggestions = analyze(first.evol, ev.traj, first.rslt);
    first.syntax_errors = syntax_errors_ - errors_mark;
    errors_mark = syntax_errors_;
    take_transcripts(first);
    persist_iteration(first);
    records.push_back(std::move(first));

    for (int it = 1; it <= cfg_.iterations; ++it) {
      const IterationRecord& prev = records.back();
      IterationRecord rec;
      rec.iteration = it;
      RewardProgram candidate = modify(prev.reward, prev.suggestions, it);
      int attempt = 0;
      for (;;) {
        AgentEvaluation cand = run_eval(candidate, it, attempt);
        const double metric = cfg_.criterion.value(cand.rslt);
        if (cfg_.criterion.accepts(prev.metric, metric)) {
          rec.reward = std::move(candidate);
          rec.evol = std::move(cand.evol);
          rec.traj = truncate_trajectory(cand.traj, cfg_.trajectory_window);
          rec.rslt = std::move(cand.rslt);
          rec.metric = metric;
          rec.suggestions = analyze(rec.evol, cand.traj, rec.rslt);
          break;
        }
        std::ostringstream why;
        why << std::setprecision(17) << cfg_.criterion.metric << " " << metric << " exceeds bound "
            << cfg_.criterion.bound(prev.metric) << " (previous " << prev.metric << ")";
        rec.attempts.push_back({attempt, candidate, cand.rslt, metric, why.str()});
        if (static_cast<int>(rec.attempts.size()) > cfg_.refine_cap) {
          take_transcripts(rec);
          rec.accepted = false;
          rec.reward = candidate;
          rec.rslt = cand.rslt;
          rec.metric = metric;
          persist_iteration(rec);
          records.push_back(rec);
          throw OrchestrationError("refinement cap reached in iteration " + std::to_string(it),
                                   {{"kind", "RefinementCapReached"}, {"iteration", it}, {"cap", cfg_.refine_cap}});
        }
        ++attempt;
        candidate = refine(prev.reward, prev.suggestions, candidate, cand.rslt, it);
      }
      rec.syntax_errors = syntax_errors_ - errors_mark;
      errors_mark = syntax_errors_;
      take_transcripts(rec);
      persist_iteration(rec);
      records.push_back(std::move(rec));
    }
  } catch (const OrchestrationError& e) {
    json err = e.details();
    err["message"] = e.what();
    err["completed_iterations"] = records.size();
    persist_summary(records, &err);
    throw;
  }
  persist_summary(records, nullptr);
  return records;
}

}  // namespace holdlab
