#include "holdlab/reward_lang.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace holdlab {

using nlohmann::json;

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

json ParseError::to_json() const {
  return {{"kind", "ParseError"}, {"line", line_}, {"column", column_}, {"message", message_}};
}

json EvalError::to_json() const { return {{"kind", "EvalError"}, {"message", what()}}; }

namespace {

// ---------------------------------------------------------------- lexer

enum class Tok { Number, Ident, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

struct Lexed {
  std::vector<Token> tokens;
  std::vector<std::string> comments;
};

Lexed lex(std::string_view src) {
  Lexed out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      std::size_t end = src.find('\n', i);
      if (end == std::string_view::npos) end = src.size();
      std::string text(src.substr(i + 1, end - i - 1));
      if (!text.empty() && text.front() == ' ') text.erase(0, 1);
      while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
      out.comments.push_back(text);
      advance(end - i);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        throw ParseError(line, col, "malformed number");
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      out.tokens.push_back(t);
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      out.tokens.push_back(t);
      advance(j - i);
      continue;
    }
    static const char* two[] = {"**", "<=", ">=", "==", "!="};
    bool matched = false;
    for (const char* op : two) {
      if (src.substr(i, 2) == op) {
        t.kind = Tok::Punct;
        t.text = op;
        out.tokens.push_back(t);
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("()[],;=+-*/<>").find(c) != std::string_view::npos) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      out.tokens.push_back(t);
      advance(1);
      continue;
    }
    throw ParseError(line, col, std::string("unexpected character '") + c + "'");
  }
  Token end;
  end.line = line;
  end.column = col;
  out.tokens.push_back(end);
  return out;
}

// ---------------------------------------------------------------- parser

struct FnSpec {
  int min_args;
  int max_args;  // -1: unbounded
};

const std::map<std::string, FnSpec, std::less<>>& functions() {
  static const std::map<std::string, FnSpec, std::less<>> fns{
      {"abs", {1, 1}}, {"sqrt", {1, 1}}, {"min", {2, -1}}, {"max", {2, -1}}, {"clamp", {3, 3}},
      {"mean", {1, 1}}, {"std", {1, 1}}, {"if", {3, 3}}};
  return fns;
}

bool reserved(std::string_view name) {
  static const char* words[] = {"let", "return", "and", "or", "not", "true", "false", "action",
                                "cur", "nxt", "current_state", "next_state"};
  for (const char* w : words)
    if (name == w) return true;
  return functions().count(name) > 0;
}

const char* type_name(ValueType t) { return t == ValueType::Num ? "number" : "boolean"; }

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  RewardProgram program() {
    RewardProgram p;
    while (true) {
      const Token& t = peek();
      if (t.kind == Tok::Ident && t.text == "let") {
        next();
        const Token name = next();
        if (name.kind != Tok::Ident) fail(name, "expected a name after 'let'");
        if (reserved(name.text)) fail(name, "'" + name.text + "' is reserved");
        if (vars_.count(name.text)) fail(name, "'" + name.text + "' is already defined");
        expect("=");
        ExprPtr value = expr();
        expect(";");
        vars_[name.text] = {static_cast<int>(p.lets.size()), value->type};
        p.lets.push_back({name.text, value});
        continue;
      }
      if (t.kind == Tok::Ident && t.text == "return") {
        next();
        ExprPtr value = expr();
        if (value->type != ValueType::Num) fail_at(*value, "return value must be a number");
        expect(";");
        if (peek().kind != Tok::End) fail(peek(), "unexpected input after return statement");
        p.result = value;
        return p;
      }
      if (t.kind == Tok::End) fail(t, "missing return statement");
      fail(t, "expected 'let' or 'return'");
    }
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at(std::string_view punct) const { return peek().kind == Tok::Punct && peek().text == punct; }
  bool at_word(std::string_view w) const { return peek().kind == Tok::Ident && peek().text == w; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.column, t.kind == Tok::End ? msg + " (at end of input)" : msg);
  }
  [[noreturn]] void fail_at(const Expr& e, const std::string& msg) const { throw ParseError(e.line, e.column, msg); }

  void expect(std::string_view punct) {
    if (!at(punct)) fail(peek(), "expected '" + std::string(punct) + "'");
    next();
  }

  static std::shared_ptr<Expr> node(Expr::Kind k, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  void need(const Expr& e, ValueType t, const std::string& ctx) const {
    if (e.type != t) fail_at(e, ctx + " expects a " + type_name(t) + ", got a " + type_name(e.type));
  }

  ExprPtr expr() { return or_expr(); }

  ExprPtr binary(BinOp op, const Token& at, ExprPtr lhs, ExprPtr rhs, ValueType result) {
    auto e = node(Expr::Kind::Binary, at);
    e->op = op;
    e->type = result;
    e->args = {std::move(lhs), std::move(rhs)};
    return e;
  }

  ExprPtr or_expr() {
    ExprPtr lhs = and_expr();
    while (at_word("or")) {
      const Token t = next();
      ExprPtr rhs = and_expr();
      need(*lhs, ValueType::Bool, "'or'");
      need(*rhs, ValueType::Bool, "'or'");
      lhs = binary(BinOp::Or, t, lhs, rhs, ValueType::Bool);
    }
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = not_expr();
    while (at_word("and")) {
      const Token t = next();
      ExprPtr rhs = not_expr();
      need(*lhs, ValueType::Bool, "'and'");
      need(*rhs, ValueType::Bool, "'and'");
      lhs = binary(BinOp::And, t, lhs, rhs, ValueType::Bool);
    }
    return lhs;
  }

  ExprPtr not_expr() {
    if (at_word("not")) {
      const Token t = next();
      ExprPtr inner = not_expr();
      need(*inner, ValueType::Bool, "'not'");
      auto e = node(Expr::Kind::Not, t);
      e->type = ValueType::Bool;
      e->args = {inner};
      return e;
    }
    return comparison();
  }

  ExprPtr comparison() {
    ExprPtr lhs = additive();
    static const std::pair<const char*, BinOp> ops[] = {{"<", BinOp::Lt},  {"<=", BinOp::Le}, {">", BinOp::Gt},
                                                        {">=", BinOp::Ge}, {"==", BinOp::Eq}, {"!=", BinOp::Ne}};
    for (const auto& [text, op] : ops) {
      if (!at(text)) continue;
      const Token t = next();
      ExprPtr rhs = additive();
      if (op == BinOp::Eq || op == BinOp::Ne) {
        if (lhs->type != rhs->type) fail(t, "cannot compare a number with a boolean");
      } else {
        need(*lhs, ValueType::Num, std::string("'") + text + "'");
        need(*rhs, ValueType::Num, std::string("'") + text + "'");
      }
      ExprPtr e = binary(op, t, lhs, rhs, ValueType::Bool);
      for (const auto& [t2, op2] : ops)
        if (at(t2)) fail(peek(), "chained comparisons are not supported");
      return e;
    }
    return lhs;
  }

  ExprPtr additive() {
    ExprPtr lhs = multiplicative();
    while (at("+") || at("-")) {
      const Token t = next();
      ExprPtr rhs = multiplicative();
      need(*lhs, ValueType::Num, "'" + t.text + "'");
      need(*rhs, ValueType::Num, "'" + t.text + "'");
      lhs = binary(t.text == "+" ? BinOp::Add : BinOp::Sub, t, lhs, rhs, ValueType::Num);
    }
    return lhs;
  }

  ExprPtr multiplicative() {
    ExprPtr lhs = unary();
    while (at("*") || at("/")) {
      const Token t = next();
      ExprPtr rhs = unary();
      need(*lhs, ValueType::Num, "'" + t.text + "'");
      need(*rhs, ValueType::Num, "'" + t.text + "'");
      lhs = binary(t.text == "*" ? BinOp::Mul : BinOp::Div, t, lhs, rhs, ValueType::Num);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (at("-")) {
      const Token t = next();
      ExprPtr inner = unary();
      need(*inner, ValueType::Num, "unary '-'");
      auto e = node(Expr::Kind::Neg, t);
      e->args = {inner};
      return e;
    }
    if (at("+")) {
      next();
      ExprPtr inner = unary();
      need(*inner, ValueType::Num, "unary '+'");
      return inner;
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (at("**")) {
      const Token t = next();
      ExprPtr exponent = unary();
      need(*base, ValueType::Num, "'**'");
      need(*exponent, ValueType::Num, "'**'");
      return binary(BinOp::Pow, t, base, exponent, ValueType::Num);
    }
    return base;
  }

  ExprPtr state_ref(const Token& t, Expr::Kind kind) {
    expect("[");
    const Token idx = next();
    if (idx.kind != Tok::Number || idx.text.find('.') != std::string::npos)
      fail(idx, "state index must be an integer literal");
    if (idx.number < 0 || idx.number > 5)
      fail(idx, "state index " + idx.text + " out of range (0..5)");
    expect("]");
    auto e = node(kind, t);
    e->index = static_cast<int>(idx.number);
    return e;
  }

  ExprPtr call(const Token& t) {
    const FnSpec spec = functions().find(t.text)->second;
    auto e = node(t.text == "if" ? Expr::Kind::If : Expr::Kind::Call, t);
    e->name = t.text;
    expect("(");
    const bool list_fn = t.text == "mean" || t.text == "std";
    if (list_fn) {
      if (!at("[")) fail(peek(), t.text + " expects a bracketed list, e.g. " + t.text + "([a, b])");
      next();
      e->list_arg = true;
      if (at("]")) fail(peek(), t.text + " of an empty list");
      while (true) {
        ExprPtr a = expr();
        need(*a, ValueType::Num, t.text);
        e->args.push_back(a);
        if (at(",")) {
          next();
          continue;
        }
        expect("]");
        break;
      }
      expect(")");
      return e;
    }
    if (!at(")")) {
      while (true) {
        e->args.push_back(expr());
        if (at(",")) {
          next();
          continue;
        }
        break;
      }
    }
    expect(")");
    const int n = static_cast<int>(e->args.size());
    if (n < spec.min_args || (spec.max_args >= 0 && n > spec.max_args)) {
      const std::string want = spec.max_args < 0 ? "at least " + std::to_string(spec.min_args)
                               : spec.min_args == spec.max_args
                                   ? std::to_string(spec.min_args)
                                   : std::to_string(spec.min_args) + ".." + std::to_string(spec.max_args);
      fail(t, t.text + " takes " + want + " argument(s), got " + std::to_string(n));
    }
    if (e->kind == Expr::Kind::If) {
      need(*e->args[0], ValueType::Bool, "if condition");
      if (e->args[1]->type != e->args[2]->type) fail(t, "if branches must have the same type");
      e->type = e->args[1]->type;
    } else {
      for (const auto& a : e->args) need(*a, ValueType::Num, t.text);
    }
    return e;
  }

  ExprPtr primary() {
    const Token t = next();
    if (t.kind == Tok::Number) {
      auto e = node(Expr::Kind::Number, t);
      e->number = t.number;
      return e;
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      ExprPtr inner = expr();
      expect(")");
      return inner;
    }
    if (t.kind != Tok::Ident) fail(t, t.kind == Tok::End ? "expected an expression" : "unexpected '" + t.text + "'");
    if (t.text == "true" || t.text == "false") {
      auto e = node(Expr::Kind::Boolean, t);
      e->type = ValueType::Bool;
      e->boolean = t.text == "true";
      return e;
    }
    if (t.text == "action") return node(Expr::Kind::Action, t);
    if (t.text == "cur" || t.text == "current_state") return state_ref(t, Expr::Kind::Cur);
    if (t.text == "nxt" || t.text == "next_state") return state_ref(t, Expr::Kind::Nxt);
    if (functions().count(t.text)) {
      if (!at("(")) fail(t, "function '" + t.text + "' must be called");
      return call(t);
    }
    if (reserved(t.text)) fail(t, "unexpected keyword '" + t.text + "'");
    auto it = vars_.find(t.text);
    if (it == vars_.end()) {
      if (at("(")) fail(t, "unknown function '" + t.text + "'");
      fail(t, "unknown identifier '" + t.text + "'");
    }
    auto e = node(Expr::Kind::Var, t);
    e->name = t.text;
    e->index = it->second.first;
    e->type = it->second.second;
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, std::pair<int, ValueType>> vars_;
};

// ---------------------------------------------------------------- evaluator

struct Env {
  const AgentObservation& cur;
  int action;
  const AgentObservation& nxt;
  std::vector<double> vars;
};

double finite(double v, const Expr& e, const char* what) {
  if (!std::isfinite(v))
    throw EvalError(std::string("non-finite result of ") + what + " at line " + std::to_string(e.line) +
                    ", column " + std::to_string(e.column));
  return v;
}

double eval(const Expr& e, const Env& env) {
  switch (e.kind) {
    case Expr::Kind::Number: return e.number;
    case Expr::Kind::Boolean: return e.boolean ? 1.0 : 0.0;
    case Expr::Kind::Cur: return env.cur[e.index];
    case Expr::Kind::Nxt: return env.nxt[e.index];
    case Expr::Kind::Action: return env.action;
    case Expr::Kind::Var: return env.vars[e.index];
    case Expr::Kind::Neg: return -eval(*e.args[0], env);
    case Expr::Kind::Not: return eval(*e.args[0], env) != 0.0 ? 0.0 : 1.0;
    case Expr::Kind::If:
      return eval(*e.args[0], env) != 0.0 ? eval(*e.args[1], env) : eval(*e.args[2], env);
    case Expr::Kind::Binary: {
      if (e.op == BinOp::And) return eval(*e.args[0], env) != 0.0 && eval(*e.args[1], env) != 0.0 ? 1.0 : 0.0;
      if (e.op == BinOp::Or) return eval(*e.args[0], env) != 0.0 || eval(*e.args[1], env) != 0.0 ? 1.0 : 0.0;
      const double a = eval(*e.args[0], env);
      const double b = eval(*e.args[1], env);
      switch (e.op) {
        case BinOp::Add: return finite(a + b, e, "'+'");
        case BinOp::Sub: return finite(a - b, e, "'-'");
        case BinOp::Mul: return finite(a * b, e, "'*'");
        case BinOp::Div:
          if (b == 0.0)
            throw EvalError("division by zero at line " + std::to_string(e.line) + ", column " +
                            std::to_string(e.column));
          return finite(a / b, e, "'/'");
        case BinOp::Pow: return finite(std::pow(a, b), e, "'**'");
        case BinOp::Lt: return a < b;
        case BinOp::Le: return a <= b;
        case BinOp::Gt: return a > b;
        case BinOp::Ge: return a >= b;
        case BinOp::Eq: return a == b;
        case BinOp::Ne: return a != b;
        default: break;
      }
      break;
    }
    case Expr::Kind::Call: {
      const std::string& f = e.name;
      if (f == "abs") return std::fabs(eval(*e.args[0], env));
      if (f == "sqrt") {
        const double x = eval(*e.args[0], env);
        if (x < 0) throw EvalError("sqrt of a negative number at line " + std::to_string(e.line));
        return std::sqrt(x);
      }
      if (f == "clamp") {
        const double x = eval(*e.args[0], env);
        const double lo = eval(*e.args[1], env);
        const double hi = eval(*e.args[2], env);
        if (lo > hi) throw EvalError("clamp with lower bound above upper bound at line " + std::to_string(e.line));
        return std::min(std::max(x, lo), hi);
      }
      std::vector<double> xs;
      xs.reserve(e.args.size());
      for (const auto& a : e.args) xs.push_back(eval(*a, env));
      if (f == "min") {
        double m = xs[0];
        for (double x : xs) m = std::min(m, x);
        return m;
      }
      if (f == "max") {
        double m = xs[0];
        for (double x : xs) m = std::max(m, x);
        return m;
      }
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      if (f == "mean") return finite(mean, e, "mean");
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      return finite(std::sqrt(ss / static_cast<double>(xs.size())), e, "std");
    }
  }
  throw EvalError("malformed expression");
}

// ---------------------------------------------------------------- printer

std::string format_number(double v) {
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

const char* op_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Pow: return "**";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
  }
  return "?";
}

std::string print(const Expr& e);

std::string wrapped(const Expr& e) {
  const bool compound = e.kind == Expr::Kind::Binary || e.kind == Expr::Kind::Neg || e.kind == Expr::Kind::Not;
  return compound ? "(" + print(e) + ")" : print(e);
}

std::string print(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: return format_number(e.number);
    case Expr::Kind::Boolean: return e.boolean ? "true" : "false";
    case Expr::Kind::Cur: return "cur[" + std::to_string(e.index) + "]";
    case Expr::Kind::Nxt: return "nxt[" + std::to_string(e.index) + "]";
    case Expr::Kind::Action: return "action";
    case Expr::Kind::Var: return e.name;
    case Expr::Kind::Neg: return "-" + wrapped(*e.args[0]);
    case Expr::Kind::Not: return "not " + wrapped(*e.args[0]);
    case Expr::Kind::Binary: return wrapped(*e.args[0]) + " " + op_text(e.op) + " " + wrapped(*e.args[1]);
    case Expr::Kind::Call:
    case Expr::Kind::If: {
      std::string s = e.name + "(";
      if (e.list_arg) s += "[";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) s += ", ";
        s += print(*e.args[i]);
      }
      if (e.list_arg) s += "]";
      return s + ")";
    }
  }
  return "";
}

}  // namespace

RewardProgram parse_reward(std::string_view source) {
  Lexed lexed = lex(source);
  Parser parser(std::move(lexed.tokens));
  RewardProgram p = parser.program();
  p.source = std::string(source);
  p.metadata.thoughts = std::move(lexed.comments);
  return p;
}

double evaluate(const RewardProgram& program, const AgentObservation& cur, int action, const AgentObservation& nxt) {
  if (!program.result) throw EvalError("empty program");
  Env env{cur, action, nxt, {}};
  env.vars.reserve(program.lets.size());
  for (const auto& let : program.lets) env.vars.push_back(eval(*let.value, env));
  return finite(eval(*program.result, env), *program.result, "return");
}

std::string pretty_print(const RewardProgram& program) {
  std::ostringstream out;
  for (const auto& line : program.metadata.thoughts) out << "#" << (line.empty() ? "" : " ") << line << "\n";
  for (const auto& let : program.lets) out << "let " << let.name << " = " << print(*let.value) << ";\n";
  if (program.result) out << "return " << print(*program.result) << ";\n";
  return out.str();
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.type != b.type || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Expr::Kind::Number:
      if (!(a.number == b.number)) return false;
      break;
    case Expr::Kind::Boolean:
      if (a.boolean != b.boolean) return false;
      break;
    case Expr::Kind::Cur:
    case Expr::Kind::Nxt:
      if (a.index != b.index) return false;
      break;
    case Expr::Kind::Var:
      if (a.name != b.name || a.index != b.index) return false;
      break;
    case Expr::Kind::Binary:
      if (a.op != b.op) return false;
      break;
    case Expr::Kind::Call:
    case Expr::Kind::If:
      if (a.name != b.name || a.list_arg != b.list_arg) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

bool structurally_equal(const RewardProgram& a, const RewardProgram& b) {
  if (a.lets.size() != b.lets.size() || !a.result || !b.result) return false;
  for (std::size_t i = 0; i < a.lets.size(); ++i)
    if (a.lets[i].name != b.lets[i].name || !structurally_equal(*a.lets[i].value, *b.lets[i].value)) return false;
  return structurally_equal(*a.result, *b.result);
}

ProbeReport probe_program(const RewardProgram& program) {
  static const std::vector<std::array<double, 6>> states{
      {0, 0, 0, 0, 0, 0},
      {1776, 1776, 0, 0, 30, 0},
      {250, 3300, 0, 0, 80, 45},
      {3300, 250, 0, 0, 10, 90},
      {1500, 1800, 900, 2500, 60, 10},
      {4000, 600, 1200, 300, 119, 85},
  };
  ProbeReport report;
  for (const auto& s : states) {
    AgentObservation cur;
    cur.values = s;
    for (int action : {0, 1}) {
      AgentObservation nxt = cur;
      if (action == 0) nxt[AgentObservation::kHolding] = std::min(90.0, cur.holding() + 5.0);
      try {
        const double r = evaluate(program, cur, action, nxt);
        report.max_abs = std::max(report.max_abs, std::fabs(r));
      } catch (const EvalError& e) {
        if (!report.error) report.error = e.what();
      }
    }
  }
  if (report.max_abs > 1e6) {
    std::ostringstream msg;
    msg << "reward magnitude " << report.max_abs << " exceeds 1e6 on probe inputs";
    report.warnings.push_back(msg.str());
  }
  return report;
}

}  // namespace holdlab
