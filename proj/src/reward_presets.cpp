#include "holdlab/reward_presets.hpp"

#include <fstream>
#include <sstream>

namespace holdlab {

namespace {

std::string number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  std::string out = s.str();
  if (out.find('e') != std::string::npos) throw std::invalid_argument("ideal headway out of range");
  return out;
}

std::string local_source(double h) {
  return "# Balance forward and backward headways, same line and other line.\n"
         "let h = " + number(h) + ";\n"
         "let same = abs(cur[0] - cur[1]) - abs(nxt[0] - nxt[1]);\n"
         "let other = abs(cur[2] - cur[3]) - abs(nxt[2] - nxt[3]);\n";
}

std::string appendix_b_source(double ideal) {
  return R"(# Headway balance against a fixed ideal spacing, a growing penalty on
# consecutive holding steps, a bonus when headway spread shrinks and a
# penalty for the delay imposed on riders already on board.
let ideal = )" + number(ideal) + R"(;
let headway_penalty_same_line = abs(nxt[0] - ideal) + abs(nxt[1] - ideal);
let headway_penalty_diff_line = if(nxt[2] > 0 or nxt[3] > 0, abs(nxt[2] - ideal) + abs(nxt[3] - ideal), 0);
let holding_penalty = if(action == 0, (nxt[5] - cur[5]) ** 2, 0);
let cur_std = std([cur[0], cur[1], cur[2], cur[3]]);
let nxt_std = std([nxt[0], nxt[1], nxt[2], nxt[3]]);
let std_dev_reduction_reward = if(nxt_std < cur_std, (cur_std - nxt_std) * 10, 0);
let waiting_time_penalty = nxt[5] * (cur[4] / 50);
# long holds (over 60 s) weigh 1.5x
let dynamic_penalty = if(nxt[5] > 60, 1.5 * holding_penalty, holding_penalty);
return -(headway_penalty_same_line + headway_penalty_diff_line + dynamic_penalty + waiting_time_penalty) + std_dev_reduction_reward;
)";
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"local", "global", "local+global", "appendix-b"};
  return names;
}

RewardProgram reward_preset(std::string_view name, double ideal_headway_m) {
  std::string src;
  if (name == "local") {
    src = local_source(ideal_headway_m) + "return (same + other) / h;\n";
  } else if (name == "local+global") {
    src = local_source(ideal_headway_m) + "# small cost per hold step\nreturn (same + other) / h - if(action == 0, 0.1, 0);\n";
  } else if (name == "global") {
    src = "# Sparse: zero per step, the trainer adds -(accrued travel time)/1e4 at episode end.\nreturn 0;\n";
  } else if (name == "appendix-b") {
    src = appendix_b_source(ideal_headway_m);
  } else {
    throw std::invalid_argument("unknown reward preset '" + std::string(name) + "'");
  }
  RewardProgram p = parse_reward(src);
  p.metadata.origin = "preset";
  if (name == "global") p.metadata.terminal_travel_time_scale = 1e-4;
  return p;
}

RewardProgram load_reward(const std::string& spec, double ideal_headway_m) {
  if (spec.rfind("preset:", 0) == 0) return reward_preset(spec.substr(7), ideal_headway_m);
  std::ifstream in(spec);
  if (!in) throw std::runtime_error("cannot read reward file " + spec);
  std::stringstream buf;
  buf << in.rdbuf();
  RewardProgram p = parse_reward(buf.str());
  p.metadata.origin = "file";
  return p;
}

}  // namespace holdlab
