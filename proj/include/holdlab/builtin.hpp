#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "holdlab/scenario.hpp"

namespace holdlab {

/// case1, case2-synthetic (alias case2), tiny.
const std::vector<std::string>& builtin_names();
ScenarioConfig builtin_scenario(std::string_view name);

/// "builtin:NAME" or a scenario JSON path.
ScenarioConfig resolve_scenario(const std::string& spec);

}  // namespace holdlab
