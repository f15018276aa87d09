#include "holdlab/prompts.hpp"

#include <sstream>

namespace holdlab {

PromptContext PromptContext::from_scenario(const ScenarioConfig& s) {
  PromptContext c;
  c.lines = static_cast<int>(s.lines.size());
  for (const auto& line : s.lines) c.stops_per_line.push_back(static_cast<int>(line.stops.size()));
  for (std::size_t i = 0; i < s.stops.size(); ++i)
    if (s.is_shared(static_cast<StopIndex>(i))) ++c.shared_stops;
  c.max_hold_s = s.max_hold_s;
  c.action_step_s = s.action_step_s;
  return c;
}

namespace {

std::string join_counts(const std::vector<int>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << (i + 1 == xs.size() ? " and " : ", ");
    out << xs[i];
  }
  return out.str();
}

bool all_equal(const std::vector<int>& xs) {
  for (int x : xs)
    if (x != xs.front()) return false;
  return true;
}

std::string feedback_format(int lines) {
  std::ostringstream f;
  f << "[\n"
       "    {\n"
       "        \"training_history\": {\n"
       "            \"total_rewards\": [total_reward1, total_reward2, ...]\n"
       "        }\n"
       "    },\n"
       "    {\n"
       "        \"test_history\": {\n"
       "            \"current_states\": [current_state1, current_state2, ...],\n"
       "            \"actions\": [action1, action2, ...],\n"
       "            \"rewards\": [reward1, reward2, ...],\n"
       "            \"next_states\": [next_state1, next_state2, ...]\n"
       "        },\n";
  const int shown = lines;
  for (int m = 1; m <= shown; ++m) {
    f << "        \"test_results_line_" << m << "\": {\n"
      << "            \"SD_time_headways\": SD_time_headways,\n"
         "            \"avg_passenger_travel_time\": avg_passenger_travel_time,\n"
         "            \"avg_passenger_waiting_time\": avg_passenger_waiting_time,\n"
         "            \"avg_holding_time\": avg_holding_time\n"
         "        },\n";
  }
  if (lines > 1) {
    f << "        \"test_results_shared_part\": {\n"
         "            \"SD_time_headways\": SD_time_headways,\n"
         "            \"avg_passenger_travel_time\": avg_passenger_travel_time,\n"
         "            \"avg_passenger_waiting_time\": avg_passenger_waiting_time\n"
         "        },\n";
  }
  f << "        \"test_results_overall\": {\n"
       "            \"avg_passenger_travel_time\": avg_passenger_travel_time,\n"
       "            \"avg_passenger_waiting_time\": avg_passenger_waiting_time\n"
       "        }\n"
       "    }\n"
       "]";
  return f.str();
}

}  // namespace

std::map<std::string, std::string> PromptContext::variables() const {
  std::map<std::string, std::string> v;
  std::ostringstream overview;
  std::ostringstream objective;
  std::string other_slots;
  if (lines <= 1) {
    overview << "The system has a single bus line with " << (stops_per_line.empty() ? 0 : stops_per_line.front())
             << " stops.";
    objective << "Keep the time headways between consecutive buses of the line even and keep the total and "
                 "average passenger travel time low.";
    other_slots = "s2 and s3 describe buses of other lines at shared stops; in this single-line system they are always 0.";
    v["results_note"] =
        "\"test_results_line_1\" holds the final results of the line and \"test_results_overall\" the results "
        "over all passengers.";
  } else {
    overview << "The system has " << lines << " bus lines";
    if (all_equal(stops_per_line)) overview << " with " << stops_per_line.front() << " stops each";
    else overview << " with " << join_counts(stops_per_line) << " stops respectively";
    overview << "; " << shared_stops << " stops are served by more than one line.";
    objective << "Keep the time headways even, both between consecutive buses of the same line and between buses "
                 "of different lines at shared stops, and keep the total and average passenger travel time low.";
    other_slots =
        "s2 and s3 are the forward and backward space headways (meters) to the nearest bus of another line; "
        "both are 0 when the stop is not shared.";
    std::ostringstream note;
    note << "Each \"test_results_line_k\" object holds the final results of line k (k = 1.." << lines
         << "). \"test_results_shared_part\" covers shared stops and the passengers who could ride more than one "
            "line. \"test_results_overall\" covers every passenger.";
    v["results_note"] = note.str();
  }
  v["system_overview"] = overview.str();
  v["objective"] = objective.str();
  v["other_slots"] = other_slots;
  v["max_hold"] = std::to_string(max_hold_s);
  v["action_step"] = std::to_string(action_step_s);
  v["feedback_format"] = feedback_format(lines);
  return v;
}

namespace {

const char* kRole =
    "You design reward functions for a reinforcement learning agent that controls bus holding at stops.";

const char* kCommon = R"(## Background
Buses on a line tend to drift together: uneven dwell times and traffic delays let a late bus collect more riders and fall further behind, while the bus behind it catches up. Holding a bus at a stop for a short time can restore even spacing, but every second of holding also delays the riders on board, so holding has to be used sparingly.

## Task
{system_overview} {objective} Time headways and space headways move together, so evening out the space headways evens out the time headways as well. Excessive holding must be avoided because it adds directly to travel time.

## Definitions
- Time headway: the gap between the arrival times of two consecutive buses at the same stop.
- Space headway: the distance between two consecutive buses.
- Passenger travel time: from the moment a rider reaches the stop until the rider gets off at the destination, i.e. waiting time plus in-vehicle time.

## Agent
- When it acts: whenever a bus at a stop has finished boarding and alighting, and again at the end of each holding step. One action covers {action_step} seconds.
- Action: 0 holds the bus at the stop for one more step; 1 releases it.
- State: a list [s0, s1, s2, s3, s4, s5].
    - s0: forward space headway (meters) to the next bus ahead on the same line.
    - s1: backward space headway (meters) to the next bus behind on the same line.
    - s2, s3: {other_slots}
    - s4: number of riders on board. Nobody boards or alights while a bus is held, so s4 does not change during holding.
    - s5: seconds of holding already spent at this stop visit.

## Reward inputs
- `action`: the action taken.
- `cur` (also `current_state`): the state when the action starts.
- `nxt` (also `next_state`): the state when the action ends. nxt[4] equals cur[4] because riders cannot board or alight during holding.

## Environment
- Holding at one stop visit is capped at {max_hold} seconds.
- Riders arrive at stops as Poisson processes; arrivals are external and do not depend on the agent.
- Riders cannot board or alight while a bus is being held.
)";

const char* kDslFormat = R"(## Output format
Reply with exactly one fenced code block that contains a reward program in the language below, and nothing outside the block.

```
# Thoughts:
# ...
let name = expression;
...
return expression;
```

The reward language:
- cur[0]..cur[5] and nxt[0]..nxt[5] read the two states (current_state[i] and next_state[i] also work); `action` is 0 (hold) or 1 (release).
- Numbers are integers or decimals. Operators: + - * / ** and parentheses; comparisons < <= > >= == !=; and, or, not; true, false.
- Functions: abs(x), sqrt(x), min(a, b, ...), max(a, b, ...), clamp(x, lo, hi), mean([a, b, ...]), std([a, b, ...]) (population standard deviation) and if(condition, a, b).
- `let` binds a name to a value; a name is bound once and must be bound before it is used. The program ends with one `return`.
- Lines starting with # are comments. Use them for your reasoning.
- Dividing by zero or producing a non-finite value makes the program invalid.
)";

const char* kRewardRules = R"(## Requirements
- The reward must serve the task above and may only use the reward inputs.
- Stops served by one line and stops served by several lines use the same reward program, so keep it generic.
- Keep reward values in a sensible range, neither huge nor vanishingly small.
- Do not leave constants that still need tuning; the program must be usable as is.
- Explain your reasoning and the role of each part in comments.
)";

std::string initializer_body() {
  return std::string(kCommon) + "\n" + kRewardRules + "\n" + kDslFormat +
         "\nWrite the reward program now. It will be used to train and test the agent, and after each round you "
         "will receive an analysis of what went wrong so that the program can be improved. Check the program "
         "carefully before answering: every name you use must be defined.\n";
}

std::string modifier_body() {
  return "A reward program has been used to train and test the agent. Below you find the program and an analysis "
         "of the resulting behaviour with suggestions. Improve the program.\n\n" +
         std::string(kCommon) + "\n" + kRewardRules +
         "\n## Current reward program\n{current_reward_function}\n\n"
         "## Analysis and suggestions\n{analysis}\n\n"
         "## What to do\n"
         "- Take the analysis into account. You may edit existing lines, add new ones, or write a completely "
         "different program.\n"
         "- Rebalance reward and penalty weights where needed.\n"
         "- Start the program with brief comments on what you changed and why.\n\n" +
         kDslFormat +
         "\nWrite the improved reward program now. Check it carefully before answering: every name you use must "
         "be defined.\n";
}

std::string analyzer_body() {
  return "An agent has been trained with a reward program and then tested. Below you find the reward totals per "
         "training episode and the decisions of the test run together with the final test results. Analyse the "
         "training behaviour (for example convergence) and the test behaviour, explain likely causes of poor "
         "performance and suggest how to improve the reward.\n\n" +
         std::string(kCommon) +
         "\n## Input format\n"
         "The data is a list with two entries. The first holds the total reward of every training episode. The "
         "second holds the test run: states, actions and step rewards per decision (only the last 50 decisions "
         "when the run is longer) followed by the final results. {results_note}\n\n"
         "{feedback_format}\n\n"
         "\"SD_time_headways\" is the standard deviation of time headways, \"avg_passenger_travel_time\" the mean "
         "passenger travel time, \"avg_passenger_waiting_time\" the mean waiting time at stops and "
         "\"avg_holding_time\" the mean holding time per bus departure, all in seconds.\n\n"
         "## Output\n"
         "Write a short analysis of training and test performance with concrete suggestions for the reward. Do "
         "not limit yourself to the task description; point out any other inefficiency you can see in the data.\n\n"
         "## Training and test data\n{trajectories}\n\n"
         "Write your analysis and suggestions now.\n";
}

std::string refiner_body() {
  return "A previous reward program was analysed and then modified, but the agent trained with the modified "
         "program tested worse than the one trained with the previous program. Modify the previous program again, "
         "using its analysis and avoiding the mistake made by the failed modification.\n\n" +
         std::string(kCommon) + "\n" + kRewardRules +
         "\n## Previous reward program\n{previous_reward_function}\n\n"
         "## Analysis and suggestions for the previous program\n{previous_analysis}\n\n"
         "## Failed modification\n"
         "The program below was derived from the previous one and performed worse in testing. Do not repeat it.\n\n"
         "### Failed program\n{current_reward_function}\n\n"
         "### Test results of the failed program\n{current_test_results}\n\n"
         "## What to do\n"
         "- Start again from the previous program. You may edit existing lines, add new ones, or write a completely "
         "different program.\n"
         "- Rebalance reward and penalty weights where needed.\n"
         "- Start the program with brief comments on what you changed and why.\n\n" +
         kDslFormat +
         "\nWrite the new reward program now. Check it carefully before answering: every name you use must be "
         "defined.\n";
}

}  // namespace

const std::vector<std::string>& template_ids() {
  static const std::vector<std::string> ids{"initializer", "modifier", "analyzer", "refiner"};
  return ids;
}

const PromptTemplate& prompt_template(const std::string& id) {
  static const std::map<std::string, PromptTemplate> templates{
      {"initializer", {"initializer", kRole, initializer_body()}},
      {"modifier", {"modifier", kRole, modifier_body()}},
      {"analyzer", {"analyzer", kRole, analyzer_body()}},
      {"refiner", {"refiner", kRole, refiner_body()}},
  };
  auto it = templates.find(id);
  if (it == templates.end()) throw TemplateError("unknown prompt template '" + id + "'");
  return it->second;
}

std::vector<std::string> placeholders(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (std::islower(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      std::string name = text.substr(i + 1, j - i - 1);
      bool seen = false;
      for (const auto& n : out) seen = seen || n == name;
      if (!seen) out.push_back(name);
      i = j;
    }
  }
  return out;
}

std::string render(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && (std::islower(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        const std::string name = text.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) throw TemplateError("unfilled placeholder {" + name + "}");
        out += it->second;
        i = j;
        continue;
      }
    }
    out += text[i];
  }
  return out;
}

}  // namespace holdlab
