#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "holdlab/observation.hpp"

namespace holdlab {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }
  nlohmann::json to_json() const;

 private:
  int line_;
  int column_;
  std::string message_;
};

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& message) : std::runtime_error(message) {}
  nlohmann::json to_json() const;
};

enum class ValueType { Num, Bool };

enum class BinOp { Add, Sub, Mul, Div, Pow, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

struct Expr {
  enum class Kind { Number, Boolean, Cur, Nxt, Action, Var, Neg, Not, Binary, Call, If };

  Kind kind = Kind::Number;
  ValueType type = ValueType::Num;
  double number = 0.0;
  bool boolean = false;
  int index = 0;      // state slot or let slot
  std::string name;   // variable or function name
  BinOp op = BinOp::Add;
  bool list_arg = false;  // mean([...]) / std([...])
  std::vector<std::shared_ptr<const Expr>> args;
  int line = 0;
  int column = 0;
};

using ExprPtr = std::shared_ptr<const Expr>;

struct LetBinding {
  std::string name;
  ExprPtr value;
};

struct RewardMetadata {
  std::string origin = "preset";  // initializer|modifier|refiner|preset|file
  int iteration = -1;
  std::vector<std::string> thoughts;  // comment lines, without the '#'
  // Set for the sparse "global" preset: trainer adds
  // -scale * accrued travel time to the last transition of each stop.
  std::optional<double> terminal_travel_time_scale;
};

struct RewardProgram {
  std::string source;
  std::vector<LetBinding> lets;
  ExprPtr result;
  RewardMetadata metadata;
};

RewardProgram parse_reward(std::string_view source);

double evaluate(const RewardProgram& program, const AgentObservation& cur, int action, const AgentObservation& nxt);

/// Canonical text; parse(pretty_print(p)) is structurally equal to p.
std::string pretty_print(const RewardProgram& program);

bool structurally_equal(const RewardProgram& a, const RewardProgram& b);
bool structurally_equal(const Expr& a, const Expr& b);

struct ProbeReport {
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // first EvalError on a probe vector
  double max_abs = 0.0;
};

/// Evaluates the program on fixed probe vectors; warns on |r| > 1e6.
ProbeReport probe_program(const RewardProgram& program);

}  // namespace holdlab
