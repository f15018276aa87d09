#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "holdlab/reward_lang.hpp"

namespace holdlab {

/// Names accepted by reward_preset().
const std::vector<std::string>& preset_names();

/// Built-in reward programs. `ideal_headway_m` is substituted as the
/// target spacing (appendix-b was written for 1650 m).
RewardProgram reward_preset(std::string_view name, double ideal_headway_m);

/// "preset:<name>" or a path to a .reward file.
RewardProgram load_reward(const std::string& spec, double ideal_headway_m);

}  // namespace holdlab
