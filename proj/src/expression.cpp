#include "semilin/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "semilin/errors.hpp"
#include "semilin/localization.hpp"

namespace semilin {

int VariableTable::add(const std::string& name) {
  const int slot = slots_++;
  names_.emplace_back(name, slot);
  return slot;
}

void VariableTable::alias(const std::string& name, int slot) { names_.emplace_back(name, slot); }

int VariableTable::find(std::string_view name) const {
  for (const auto& [n, slot] : names_) {
    if (n == name) return slot;
  }
  return -1;
}

namespace {

using Op = Expression::Op;
using Instr = Expression::Instr;

struct FunctionInfo {
  std::string_view name;
  Op op;
  int arity;
};

constexpr std::array kFunctions{
    FunctionInfo{"exp", Op::Exp, 1},   FunctionInfo{"sin", Op::Sin, 1},
    FunctionInfo{"cos", Op::Cos, 1},   FunctionInfo{"tanh", Op::Tanh, 1},
    FunctionInfo{"sqrt", Op::Sqrt, 1}, FunctionInfo{"log", Op::Log, 1},
    FunctionInfo{"abs", Op::Abs, 1},   FunctionInfo{"min", Op::Min, 2},
    FunctionInfo{"max", Op::Max, 2},   FunctionInfo{"cutoff", Op::Cutoff, 2},
};

// Variables that exist in some dimension, so a miss can be reported as a dimension mismatch.
bool looks_indexed(std::string_view name) {
  if (name.size() < 2) return false;
  const char head = name[0];
  if (head != 'x' && head != 'p' && head != 'd' && head != 'e') return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

class Parser {
 public:
  Parser(std::string_view text, const VariableTable& vars, int line, int column)
      : text_(text), vars_(vars), line_(line), column_(column) {}

  std::vector<Instr> run() {
    skip_space();
    if (pos_ == text_.size()) fail(pos_, "empty expression");
    expr();
    skip_space();
    if (pos_ != text_.size()) fail(pos_, std::string("unexpected '") + text_[pos_] + "'");
    return std::move(code_);
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
    throw ParseError(line_, column_ + static_cast<int>(at), msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(pos_, std::string("expected '") + c + "'");
  }

  void emit(Op op, int slot = 0, double value = 0.0) { code_.push_back({op, slot, value}); }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit(Op::Add);
      } else if (accept('-')) {
        term();
        emit(Op::Sub);
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit(Op::Mul);
      } else if (accept('/')) {
        unary();
        emit(Op::Div);
      } else {
        return;
      }
    }
  }

  // -x^2 is -(x^2); the exponent binds to the right.
  void unary() {
    if (accept('-')) {
      unary();
      emit(Op::Neg);
    } else if (accept('+')) {
      unary();
    } else {
      power();
    }
  }

  void power() {
    primary();
    if (accept('^')) {
      unary();
      emit(Op::Pow);
    }
  }

  void primary() {
    skip_space();
    if (pos_ == text_.size()) fail(pos_, "unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      expr();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      identifier();
      return;
    }
    fail(pos_, std::string("unexpected '") + c + "'");
  }

  void number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        pos_ = q;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || end != text_.data() + pos_) fail(start, "malformed number");
    emit(Op::Const, 0, value);
  }

  void identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      call(name, start);
      return;
    }
    const int slot = vars_.find(name);
    if (slot >= 0) {
      emit(Op::Var, slot);
      return;
    }
    if (name == "pi") {
      emit(Op::Const, 0, std::numbers::pi);
      return;
    }
    if (looks_indexed(name)) {
      fail(start, "variable '" + std::string(name) + "' does not exist in the declared dimension");
    }
    fail(start, "unknown variable '" + std::string(name) + "'");
  }

  void call(std::string_view name, std::size_t at) {
    const auto it = std::find_if(kFunctions.begin(), kFunctions.end(),
                                 [&](const FunctionInfo& f) { return f.name == name; });
    if (it == kFunctions.end()) fail(at, "unknown function '" + std::string(name) + "'");
    int args = 0;
    if (!accept(')')) {
      do {
        expr();
        ++args;
      } while (accept(','));
      expect(')');
    }
    if (args != it->arity) {
      fail(at, std::string(name) + " takes " + std::to_string(it->arity) + " argument(s), got " +
                   std::to_string(args));
    }
    emit(it->op);
  }

  std::string_view text_;
  const VariableTable& vars_;
  int line_;
  int column_;
  std::size_t pos_ = 0;
  std::vector<Instr> code_;
};

int stack_depth(const std::vector<Instr>& code) {
  int depth = 0;
  int peak = 0;
  for (const Instr& in : code) {
    switch (in.op) {
      case Op::Const:
      case Op::Var:
        ++depth;
        break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow:
      case Op::Min: case Op::Max: case Op::Cutoff:
        --depth;
        break;
      default:
        break;
    }
    peak = std::max(peak, depth);
  }
  return peak;
}

constexpr int kMaxStack = 64;

}  // namespace

Expression Expression::parse(std::string_view text, const VariableTable& vars, int line, int column) {
  Expression e;
  e.code_ = Parser(text, vars, line, column).run();
  e.depth_ = stack_depth(e.code_);
  if (e.depth_ > kMaxStack) throw ParseError(line, column, "expression nests too deeply");
  e.source_ = std::string(text);
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  e.code_.push_back({Op::Const, 0, value});
  e.depth_ = 1;
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  e.source_.assign(buf, res.ptr);
  return e;
}

double Expression::operator()(std::span<const double> slots) const {
  std::array<double, kMaxStack> st;
  int n = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: st[n++] = in.value; break;
      case Op::Var: st[n++] = slots[in.slot]; break;
      case Op::Neg: st[n - 1] = -st[n - 1]; break;
      case Op::Add: --n; st[n - 1] += st[n]; break;
      case Op::Sub: --n; st[n - 1] -= st[n]; break;
      case Op::Mul: --n; st[n - 1] *= st[n]; break;
      case Op::Div: --n; st[n - 1] /= st[n]; break;
      case Op::Pow: {
        --n;
        const double e = st[n];
        st[n - 1] = e == 2.0 ? st[n - 1] * st[n - 1] : std::pow(st[n - 1], e);
        break;
      }
      case Op::Exp: st[n - 1] = std::exp(st[n - 1]); break;
      case Op::Sin: st[n - 1] = std::sin(st[n - 1]); break;
      case Op::Cos: st[n - 1] = std::cos(st[n - 1]); break;
      case Op::Tanh: st[n - 1] = std::tanh(st[n - 1]); break;
      case Op::Sqrt: st[n - 1] = std::sqrt(st[n - 1]); break;
      case Op::Log: st[n - 1] = std::log(st[n - 1]); break;
      case Op::Abs: st[n - 1] = std::abs(st[n - 1]); break;
      case Op::Min: --n; st[n - 1] = std::min(st[n - 1], st[n]); break;
      case Op::Max: --n; st[n - 1] = std::max(st[n - 1], st[n]); break;
      case Op::Cutoff: --n; st[n - 1] = cutoff(st[n - 1], st[n]); break;
    }
  }
  return n == 1 ? st[0] : 0.0;
}

bool Expression::depends_on(int slot) const {
  return std::any_of(code_.begin(), code_.end(),
                     [slot](const Instr& in) { return in.op == Op::Var && in.slot == slot; });
}

bool Expression::is_constant() const {
  return std::none_of(code_.begin(), code_.end(), [](const Instr& in) { return in.op == Op::Var; });
}

}  // namespace semilin
