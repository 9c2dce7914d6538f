#include "cfslab/trace_expr.hpp"

#include <cctype>
#include <cstdlib>
#include <vector>

namespace cfslab {

struct TraceExpr::Node {
    enum class Op { number, name, add, sub, mul, neg, pow, trace } op;
    double number = 0.0;
    std::string name;
    int power = 0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodeP = std::shared_ptr<const TraceExpr::Node>;
using Op = TraceExpr::Node::Op;

NodeP make(Op op, NodeP a = nullptr, NodeP b = nullptr) {
    auto n = std::make_shared<TraceExpr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodeP parse_all() {
        NodeP e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ContractViolation("trace expression: " + msg + " at offset " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodeP expr() {
        NodeP left = term();
        for (;;) {
            if (eat('+')) {
                left = make(Op::add, left, term());
            } else if (eat('-')) {
                left = make(Op::sub, left, term());
            } else {
                return left;
            }
        }
    }
    NodeP term() {
        NodeP left = unary();
        while (eat('*')) left = make(Op::mul, left, unary());
        return left;
    }
    NodeP unary() {
        if (eat('-')) return make(Op::neg, unary());
        return power();
    }
    NodeP power() {
        NodeP base = atom();
        if (eat('^')) {
            skip();
            const std::size_t start = pos_;
            if (pos_ < s_.size() && s_[pos_] == '-') {
                throw UnsupportedExpression("trace expression: negative powers are not polynomial");
            }
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (start == pos_) {
                throw UnsupportedExpression("trace expression: exponent must be a non-negative integer");
            }
            if (pos_ < s_.size() && s_[pos_] == '.') {
                throw UnsupportedExpression("trace expression: exponent must be a non-negative integer");
            }
            auto n = std::make_shared<TraceExpr::Node>();
            n->op = Op::pow;
            n->a = base;
            n->power = std::atoi(s_.substr(start, pos_ - start).c_str());
            return n;
        }
        return base;
    }
    NodeP atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodeP e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(s_.c_str() + pos_, &end);
            pos_ = static_cast<std::size_t>(end - s_.c_str());
            auto n = std::make_shared<TraceExpr::Node>();
            n->op = Op::number;
            n->number = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            const std::string id = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                if (id != "tr" && id != "Tr") {
                    throw UnsupportedExpression("trace expression: function '" + id +
                                                "' is not a polynomial operation");
                }
                ++pos_;
                NodeP e = expr();
                if (!eat(')')) fail("missing ')'");
                return make(Op::trace, e);
            }
            auto n = std::make_shared<TraceExpr::Node>();
            n->op = Op::name;
            n->name = id;
            return n;
        }
        if (c == '/') throw UnsupportedExpression("trace expression: division is not polynomial");
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

// A scalar or a matrix.
struct Value {
    bool scalar = true;
    cplx s{0.0, 0.0};
    Matrix m;
};

Eigen::Index env_dim(const TraceEnv& env) {
    if (env.matrices.empty()) throw ContractViolation("trace expression: no matrices in scope");
    return env.matrices.begin()->second.rows();
}

Value eval(const NodeP& n, const TraceEnv& env) {
    switch (n->op) {
        case Op::number: return {true, n->number, {}};
        case Op::name: {
            if (auto it = env.matrices.find(n->name); it != env.matrices.end()) {
                return {false, 0.0, it->second};
            }
            if (auto it = env.scalars.find(n->name); it != env.scalars.end()) {
                return {true, it->second, {}};
            }
            throw ContractViolation("trace expression: unknown symbol '" + n->name + "'");
        }
        case Op::add:
        case Op::sub: {
            const Value a = eval(n->a, env), b = eval(n->b, env);
            if (a.scalar != b.scalar) {
                throw ContractViolation("trace expression: cannot add a scalar and a matrix");
            }
            const double sign = n->op == Op::add ? 1.0 : -1.0;
            if (a.scalar) return {true, a.s + sign * b.s, {}};
            return {false, 0.0, a.m + sign * b.m};
        }
        case Op::mul: {
            const Value a = eval(n->a, env), b = eval(n->b, env);
            if (a.scalar && b.scalar) return {true, a.s * b.s, {}};
            if (a.scalar) return {false, 0.0, a.s * b.m};
            if (b.scalar) return {false, 0.0, b.s * a.m};
            return {false, 0.0, a.m * b.m};
        }
        case Op::neg: {
            Value a = eval(n->a, env);
            if (a.scalar) return {true, -a.s, {}};
            return {false, 0.0, -a.m};
        }
        case Op::pow: {
            const Value a = eval(n->a, env);
            if (a.scalar) return {true, std::pow(a.s, n->power), {}};
            Matrix r = Matrix::Identity(a.m.rows(), a.m.cols());
            for (int k = 0; k < n->power; ++k) r = r * a.m;
            return {false, 0.0, r};
        }
        case Op::trace: {
            const Value a = eval(n->a, env);
            if (a.scalar) return {true, a.s * static_cast<double>(env_dim(env)), {}};
            return {true, a.m.trace(), {}};
        }
    }
    return {};
}

Matrix matrix_power(const Matrix& m, int k) {
    Matrix r = Matrix::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) r = r * m;
    return r;
}

void grad_scalar(const NodeP& n, cplx c, const TraceEnv& env, const std::string& wrt, Matrix& g);

// Adds G with d Tr(C e) = Tr(G dX) for a matrix-valued node e.
void grad_matrix(const NodeP& n, const Matrix& c, const TraceEnv& env, const std::string& wrt,
                 Matrix& g) {
    switch (n->op) {
        case Op::number: return;
        case Op::name:
            if (n->name == wrt) g += c;
            return;
        case Op::add:
            grad_matrix(n->a, c, env, wrt, g);
            grad_matrix(n->b, c, env, wrt, g);
            return;
        case Op::sub:
            grad_matrix(n->a, c, env, wrt, g);
            grad_matrix(n->b, -c, env, wrt, g);
            return;
        case Op::neg: grad_matrix(n->a, -c, env, wrt, g); return;
        case Op::mul: {
            const Value a = eval(n->a, env), b = eval(n->b, env);
            if (a.scalar) {
                grad_scalar(n->a, (c * b.m).trace(), env, wrt, g);
                grad_matrix(n->b, a.s * c, env, wrt, g);
            } else if (b.scalar) {
                grad_scalar(n->b, (c * a.m).trace(), env, wrt, g);
                grad_matrix(n->a, b.s * c, env, wrt, g);
            } else {
                // Tr(C dA B) = Tr(B C dA), Tr(C A dB).
                grad_matrix(n->a, b.m * c, env, wrt, g);
                grad_matrix(n->b, c * a.m, env, wrt, g);
            }
            return;
        }
        case Op::pow: {
            const Value a = eval(n->a, env);
            for (int i = 0; i < n->power; ++i) {
                const Matrix ctx = matrix_power(a.m, n->power - 1 - i) * c * matrix_power(a.m, i);
                grad_matrix(n->a, ctx, env, wrt, g);
            }
            return;
        }
        case Op::trace: return;  // scalar nodes never reach here
    }
}

// Adds G with d(c e) = Tr(G dX) for a scalar-valued node e.
void grad_scalar(const NodeP& n, cplx c, const TraceEnv& env, const std::string& wrt, Matrix& g) {
    switch (n->op) {
        case Op::number:
        case Op::name: return;
        case Op::add:
            grad_scalar(n->a, c, env, wrt, g);
            grad_scalar(n->b, c, env, wrt, g);
            return;
        case Op::sub:
            grad_scalar(n->a, c, env, wrt, g);
            grad_scalar(n->b, -c, env, wrt, g);
            return;
        case Op::neg: grad_scalar(n->a, -c, env, wrt, g); return;
        case Op::mul: {
            const Value a = eval(n->a, env), b = eval(n->b, env);
            grad_scalar(n->a, c * b.s, env, wrt, g);
            grad_scalar(n->b, c * a.s, env, wrt, g);
            return;
        }
        case Op::pow: {
            if (n->power == 0) return;
            const Value a = eval(n->a, env);
            grad_scalar(n->a, c * static_cast<double>(n->power) * std::pow(a.s, n->power - 1), env,
                        wrt, g);
            return;
        }
        case Op::trace: {
            const Value a = eval(n->a, env);
            if (a.scalar) {
                grad_scalar(n->a, c * static_cast<double>(env_dim(env)), env, wrt, g);
            } else {
                const Eigen::Index d = a.m.rows();
                grad_matrix(n->a, c * Matrix::Identity(d, d), env, wrt, g);
            }
            return;
        }
    }
}

}  // namespace

TraceExpr TraceExpr::parse(const std::string& text) {
    Parser p(text);
    return TraceExpr(text, p.parse_all());
}

cplx TraceExpr::evaluate(const TraceEnv& env) const {
    const Value v = eval(root_, env);
    if (!v.scalar) throw ContractViolation("trace expression is matrix-valued; wrap it in tr()");
    return v.s;
}

Matrix TraceExpr::derivative(const TraceEnv& env, const std::string& wrt) const {
    const auto it = env.matrices.find(wrt);
    if (it == env.matrices.end()) throw ContractViolation("trace derivative: unknown matrix '" + wrt + "'");
    if (!eval(root_, env).scalar) {
        throw ContractViolation("trace expression is matrix-valued; wrap it in tr()");
    }
    Matrix g = Matrix::Zero(it->second.rows(), it->second.cols());
    grad_scalar(root_, 1.0, env, wrt, g);
    return g;
}

}  // namespace cfslab
