#include "hmtoc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>

namespace hmtoc {

namespace {

struct Parser {
    const std::string& src;
    std::size_t pos = 0;  // 0-based cursor; errors report 1-based offsets
    int order;

    explicit Parser(const std::string& s, int k) : src(s), order(k) {}

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw ParseError(msg, at + 1);
    }

    void skip_ws() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' ||
                                    src[pos] == '\n' || src[pos] == '\r'))
            ++pos;
    }

    bool peek(char c) {
        skip_ws();
        return pos < src.size() && src[pos] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'", pos);
    }

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        skip_ws();
        if (pos != src.size()) fail("unexpected trailing input", pos);
        return e;
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(BinaryOp::Add, std::move(lhs), parse_product());
            else if (accept('-'))
                lhs = make_binary(BinaryOp::Sub, std::move(lhs), parse_product());
            else
                return lhs;
        }
    }

    ExprPtr parse_product() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(BinaryOp::Mul, std::move(lhs), parse_unary());
            else if (accept('/'))
                lhs = make_binary(BinaryOp::Div, std::move(lhs), parse_unary());
            else
                return lhs;
        }
    }

    ExprPtr parse_unary() {
        if (accept('-')) {
            auto node = std::make_unique<ExprNode>();
            node->kind = Unary{UnaryOp::Neg, parse_unary()};
            return node;
        }
        return parse_power();
    }

    // '^' binds tighter than unary minus and is right-associative;
    // the exponent re-enters at unary so "2^-3" parses.
    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        if (accept('^'))
            return make_binary(BinaryOp::Pow, std::move(base), parse_unary());
        return base;
    }

    ExprPtr parse_primary() {
        skip_ws();
        if (pos >= src.size()) fail("unexpected end of input", pos);
        char c = src[pos];
        if (c == '(') {
            ++pos;
            ExprPtr inner = parse_sum();
            expect(')');
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_')
            return parse_ident();
        fail(std::string("unexpected character '") + c + "'", pos);
    }

    ExprPtr parse_number() {
        double value = 0.0;
        const char* begin = src.data() + pos;
        const char* end = src.data() + src.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{}) fail("malformed number", pos);
        pos += static_cast<std::size_t>(ptr - begin);
        auto node = std::make_unique<ExprNode>();
        node->kind = Constant{value};
        return node;
    }

    ExprPtr parse_ident() {
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        std::string name = src.substr(start, pos - start);

        if (name.size() >= 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                int index = std::stoi(name.substr(1));
                if (index > order)
                    fail("variable " + name + " exceeds declared order " +
                             std::to_string(order),
                         start);
                auto node = std::make_unique<ExprNode>();
                node->kind = Variable{index - 1};
                return node;
            }
        }

        UnaryOp op;
        if (name == "exp")
            op = UnaryOp::Exp;
        else if (name == "log")
            op = UnaryOp::Log;
        else if (name == "sqrt")
            op = UnaryOp::Sqrt;
        else if (name == "abs")
            op = UnaryOp::Abs;
        else
            fail("unknown identifier '" + name + "'", start);

        expect('(');
        ExprPtr arg = parse_sum();
        expect(')');
        auto node = std::make_unique<ExprNode>();
        node->kind = Unary{op, std::move(arg)};
        return node;
    }

    static ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
        auto node = std::make_unique<ExprNode>();
        node->kind = Binary{op, std::move(lhs), std::move(rhs)};
        return node;
    }
};

std::string format_constant(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void print_node(const ExprNode& node, std::string& out) {
    if (const auto* c = std::get_if<Constant>(&node.kind)) {
        // negative literals print in negation form so the output reparses
        // without an ambiguous leading minus
        if (std::signbit(c->value)) {
            out += "(-" + format_constant(-c->value) + ")";
        } else {
            out += format_constant(c->value);
        }
    } else if (const auto* v = std::get_if<Variable>(&node.kind)) {
        out += "x" + std::to_string(v->index + 1);
    } else if (const auto* u = std::get_if<Unary>(&node.kind)) {
        switch (u->op) {
            case UnaryOp::Neg:
                out += "(-";
                print_node(*u->operand, out);
                out += ")";
                return;
            case UnaryOp::Exp: out += "exp("; break;
            case UnaryOp::Log: out += "log("; break;
            case UnaryOp::Sqrt: out += "sqrt("; break;
            case UnaryOp::Abs: out += "abs("; break;
        }
        print_node(*u->operand, out);
        out += ")";
    } else {
        const auto& b = std::get<Binary>(node.kind);
        out += "(";
        print_node(*b.lhs, out);
        switch (b.op) {
            case BinaryOp::Add: out += "+"; break;
            case BinaryOp::Sub: out += "-"; break;
            case BinaryOp::Mul: out += "*"; break;
            case BinaryOp::Div: out += "/"; break;
            case BinaryOp::Pow: out += "^"; break;
        }
        print_node(*b.rhs, out);
        out += ")";
    }
}

[[noreturn]] void domain_fail(const char* what, const ExprNode& node) {
    throw EvalError(what, print_expr(node));
}

double eval_node(const ExprNode& node, std::span<const double> point) {
    if (const auto* c = std::get_if<Constant>(&node.kind)) return c->value;
    if (const auto* v = std::get_if<Variable>(&node.kind)) return point[v->index];
    if (const auto* u = std::get_if<Unary>(&node.kind)) {
        double a = eval_node(*u->operand, point);
        switch (u->op) {
            case UnaryOp::Neg: return -a;
            case UnaryOp::Exp: return std::exp(a);
            case UnaryOp::Log:
                if (a <= 0.0) domain_fail("log of nonpositive value", node);
                return std::log(a);
            case UnaryOp::Sqrt:
                if (a < 0.0) domain_fail("sqrt of negative value", node);
                return std::sqrt(a);
            case UnaryOp::Abs: return std::fabs(a);
        }
    }
    const auto& b = std::get<Binary>(node.kind);
    double l = eval_node(*b.lhs, point);
    double r = eval_node(*b.rhs, point);
    switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
            if (r == 0.0) domain_fail("division by zero", node);
            return l / r;
        case BinaryOp::Pow: {
            if (l < 0.0 && r != std::floor(r))
                domain_fail("non-integer power of negative base", node);
            double result = std::pow(l, r);
            if (!std::isfinite(result)) domain_fail("power overflow", node);
            return result;
        }
    }
    throw std::logic_error("unreachable");
}

struct DualVal {
    double v;
    std::vector<double> d;
};

DualVal eval_node_dual(const ExprNode& node, std::span<const double> point) {
    const std::size_t k = point.size();
    if (const auto* c = std::get_if<Constant>(&node.kind))
        return {c->value, std::vector<double>(k, 0.0)};
    if (const auto* var = std::get_if<Variable>(&node.kind)) {
        std::vector<double> d(k, 0.0);
        d[var->index] = 1.0;
        return {point[var->index], std::move(d)};
    }
    if (const auto* u = std::get_if<Unary>(&node.kind)) {
        DualVal a = eval_node_dual(*u->operand, point);
        switch (u->op) {
            case UnaryOp::Neg:
                for (double& x : a.d) x = -x;
                return {-a.v, std::move(a.d)};
            case UnaryOp::Exp: {
                double v = std::exp(a.v);
                for (double& x : a.d) x *= v;
                return {v, std::move(a.d)};
            }
            case UnaryOp::Log: {
                if (a.v <= 0.0) domain_fail("log of nonpositive value", node);
                for (double& x : a.d) x /= a.v;
                return {std::log(a.v), std::move(a.d)};
            }
            case UnaryOp::Sqrt: {
                if (a.v < 0.0) domain_fail("sqrt of negative value", node);
                double v = std::sqrt(a.v);
                if (a.v == 0.0) {
                    bool flat = true;
                    for (double x : a.d)
                        if (x != 0.0) flat = false;
                    if (!flat) domain_fail("sqrt not differentiable at 0", node);
                    return {v, std::move(a.d)};
                }
                for (double& x : a.d) x *= 0.5 / v;
                return {v, std::move(a.d)};
            }
            case UnaryOp::Abs: {
                if (a.v == 0.0) {
                    bool flat = true;
                    for (double x : a.d)
                        if (x != 0.0) flat = false;
                    if (!flat) domain_fail("abs not differentiable at 0", node);
                }
                double s = a.v < 0.0 ? -1.0 : 1.0;
                for (double& x : a.d) x *= s;
                return {std::fabs(a.v), std::move(a.d)};
            }
        }
    }
    const auto& b = std::get<Binary>(node.kind);
    DualVal l = eval_node_dual(*b.lhs, point);
    DualVal r = eval_node_dual(*b.rhs, point);
    switch (b.op) {
        case BinaryOp::Add:
            for (std::size_t i = 0; i < k; ++i) l.d[i] += r.d[i];
            return {l.v + r.v, std::move(l.d)};
        case BinaryOp::Sub:
            for (std::size_t i = 0; i < k; ++i) l.d[i] -= r.d[i];
            return {l.v - r.v, std::move(l.d)};
        case BinaryOp::Mul:
            for (std::size_t i = 0; i < k; ++i)
                l.d[i] = l.d[i] * r.v + l.v * r.d[i];
            return {l.v * r.v, std::move(l.d)};
        case BinaryOp::Div: {
            if (r.v == 0.0) domain_fail("division by zero", node);
            double v = l.v / r.v;
            for (std::size_t i = 0; i < k; ++i)
                l.d[i] = (l.d[i] - v * r.d[i]) / r.v;
            return {v, std::move(l.d)};
        }
        case BinaryOp::Pow: {
            if (l.v < 0.0 && r.v != std::floor(r.v))
                domain_fail("non-integer power of negative base", node);
            double v = std::pow(l.v, r.v);
            if (!std::isfinite(v)) domain_fail("power overflow", node);
            bool exp_const = true;
            for (double x : r.d)
                if (x != 0.0) exp_const = false;
            std::vector<double> d(k, 0.0);
            if (exp_const) {
                // d/dx base^p = p * base^(p-1) * base'
                for (std::size_t i = 0; i < k; ++i) {
                    if (l.d[i] == 0.0) continue;
                    double g = r.v * std::pow(l.v, r.v - 1.0) * l.d[i];
                    if (!std::isfinite(g))
                        domain_fail("power not differentiable here", node);
                    d[i] = g;
                }
            } else {
                if (l.v <= 0.0)
                    domain_fail("variable exponent requires positive base", node);
                double lg = std::log(l.v);
                for (std::size_t i = 0; i < k; ++i)
                    d[i] = v * (r.d[i] * lg + r.v * l.d[i] / l.v);
            }
            return {v, std::move(d)};
        }
    }
    throw std::logic_error("unreachable");
}

ExprPtr clone_node(const ExprNode& node) {
    auto out = std::make_unique<ExprNode>();
    if (const auto* c = std::get_if<Constant>(&node.kind))
        out->kind = *c;
    else if (const auto* v = std::get_if<Variable>(&node.kind))
        out->kind = *v;
    else if (const auto* u = std::get_if<Unary>(&node.kind))
        out->kind = Unary{u->op, clone_node(*u->operand)};
    else {
        const auto& b = std::get<Binary>(node.kind);
        out->kind = Binary{b.op, clone_node(*b.lhs), clone_node(*b.rhs)};
    }
    return out;
}

// A literal, possibly wrapped in a single negation: the printer emits the
// constant -1.5 and the node (- 1.5) identically, so structural comparison
// must identify them.
std::optional<double> literal_value(const ExprNode& node) {
    if (const auto* c = std::get_if<Constant>(&node.kind)) return c->value;
    if (const auto* u = std::get_if<Unary>(&node.kind))
        if (u->op == UnaryOp::Neg)
            if (std::optional<double> inner = literal_value(*u->operand))
                return -*inner;
    return std::nullopt;
}

bool equal_nodes(const ExprNode& a, const ExprNode& b) {
    std::optional<double> la = literal_value(a);
    std::optional<double> lb = literal_value(b);
    if (la || lb) return la && lb && *la == *lb;
    if (a.kind.index() != b.kind.index()) return false;
    if (const auto* ca = std::get_if<Constant>(&a.kind))
        return ca->value == std::get<Constant>(b.kind).value;
    if (const auto* va = std::get_if<Variable>(&a.kind))
        return va->index == std::get<Variable>(b.kind).index;
    if (const auto* ua = std::get_if<Unary>(&a.kind)) {
        const auto& ub = std::get<Unary>(b.kind);
        return ua->op == ub.op && equal_nodes(*ua->operand, *ub.operand);
    }
    const auto& ba = std::get<Binary>(a.kind);
    const auto& bb = std::get<Binary>(b.kind);
    return ba.op == bb.op && equal_nodes(*ba.lhs, *bb.lhs) &&
           equal_nodes(*ba.rhs, *bb.rhs);
}

}  // namespace

ExprAst parse_expr(const std::string& source, int order) {
    if (order < 1) throw std::invalid_argument("order must be positive");
    Parser parser(source, order);
    ExprAst ast;
    ast.order = order;
    ast.root = parser.parse();
    return ast;
}

std::string print_expr(const ExprNode& node) {
    std::string out;
    print_node(node, out);
    return out;
}

std::string print_expr(const ExprAst& ast) { return print_expr(*ast.root); }

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
    return a.order == b.order && equal_nodes(*a.root, *b.root);
}

double eval_expr(const ExprAst& ast, std::span<const double> point) {
    if (static_cast<int>(point.size()) != ast.order)
        throw std::invalid_argument("point dimension does not match order");
    return eval_node(*ast.root, point);
}

DualValue eval_expr_dual(const ExprAst& ast, std::span<const double> point) {
    if (static_cast<int>(point.size()) != ast.order)
        throw std::invalid_argument("point dimension does not match order");
    DualVal r = eval_node_dual(*ast.root, point);
    return DualValue{r.v, std::move(r.d)};
}

ExprAst clone_expr(const ExprAst& ast) {
    ExprAst out;
    out.order = ast.order;
    out.root = clone_node(*ast.root);
    return out;
}

}  // namespace hmtoc
