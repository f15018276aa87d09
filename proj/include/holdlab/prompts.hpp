#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "holdlab/scenario.hpp"

namespace holdlab {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario facts substituted into every template.
struct PromptContext {
  int lines = 1;
  std::vector<int> stops_per_line;
  int shared_stops = 0;
  int max_hold_s = 90;
  int action_step_s = 5;

  static PromptContext from_scenario(const ScenarioConfig& s);
  std::map<std::string, std::string> variables() const;
};

struct PromptTemplate {
  std::string id;      // initializer | modifier | analyzer | refiner
  std::string system;  // role text
  std::string body;    // with {placeholders}
};

const PromptTemplate& prompt_template(const std::string& id);
const std::vector<std::string>& template_ids();

/// Names of the {placeholders} a text uses, in order of first use.
std::vector<std::string> placeholders(const std::string& text);

/// Substitutes every placeholder in one pass; throws TemplateError when a
/// placeholder has no value. Substituted values are not rescanned.
std::string render(const std::string& text, const std::map<std::string, std::string>& values);

}  // namespace holdlab
