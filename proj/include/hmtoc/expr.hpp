#pragma once

// Small expression language for user-defined k-th order maps.
//
// Grammar (see docs/grammar.md): variables x1..xk, decimal literals,
// unary functions exp/log/sqrt/abs, operators + - * / ^ with standard
// precedence (pow > unary minus > mul/div > add/sub), pow right-associative.
//
// Evaluation comes in two flavours sharing the same scalar path:
// plain evaluation and forward-mode dual evaluation that carries all k
// first partial derivatives.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hmtoc {

enum class UnaryOp { Neg, Exp, Log, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using ExprPtr = std::unique_ptr<ExprNode>;

struct Constant {
    double value;
};
struct Variable {
    int index;  // 0-based; user-facing names are x1..xk
};
struct Unary {
    UnaryOp op;
    ExprPtr operand;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

struct ExprNode {
    std::variant<Constant, Variable, Unary, Binary> kind;
};

// Immutable after parsing; safe to share across threads.
struct ExprAst {
    int order = 0;
    ExprPtr root;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }  // 1-based

private:
    std::size_t offset_;
};

class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& message, std::string subexpr)
        : std::runtime_error(message + " in subexpression: " + subexpr),
          subexpr_(std::move(subexpr)) {}
    const std::string& subexpression() const { return subexpr_; }

private:
    std::string subexpr_;
};

// Value plus the k first partial derivatives.
struct DualValue {
    double value = 0.0;
    std::vector<double> partials;
};

ExprAst parse_expr(const std::string& source, int order);

// Fully parenthesized round-trippable form.
std::string print_expr(const ExprAst& ast);
std::string print_expr(const ExprNode& node);

bool structurally_equal(const ExprAst& a, const ExprAst& b);

double eval_expr(const ExprAst& ast, std::span<const double> point);
DualValue eval_expr_dual(const ExprAst& ast, std::span<const double> point);

ExprAst clone_expr(const ExprAst& ast);

}  // namespace hmtoc
