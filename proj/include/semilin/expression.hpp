#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace semilin {

/// Names an expression may refer to, each bound to a slot of the evaluation array.
class VariableTable {
 public:
  int add(const std::string& name);
  void alias(const std::string& name, int slot);
  int find(std::string_view name) const;  // -1 if unknown
  std::size_t size() const { return slots_; }

 private:
  std::vector<std::pair<std::string, int>> names_;
  int slots_ = 0;
};

/// Compiled arithmetic expression: + - * / ^, unary minus, parentheses, numbers, pi and
/// exp sin cos tanh sqrt log abs min max cutoff(z, k).
class Expression {
 public:
  Expression() = default;

  /// `line` and `column` locate the first character of `text` in the source, for error reports.
  static Expression parse(std::string_view text, const VariableTable& vars, int line = 1, int column = 1);
  static Expression constant(double value);

  double operator()(std::span<const double> slots) const;
  bool depends_on(int slot) const;
  bool is_constant() const;
  const std::string& source() const { return source_; }

  enum class Op : std::uint8_t {
    Const, Var, Neg, Add, Sub, Mul, Div, Pow,
    Exp, Sin, Cos, Tanh, Sqrt, Log, Abs, Min, Max, Cutoff,
  };
  struct Instr {
    Op op;
    int slot = 0;
    double value = 0.0;
  };

 private:
  std::vector<Instr> code_;
  int depth_ = 0;
  std::string source_;
};

}  // namespace semilin
