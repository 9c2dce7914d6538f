#pragma once

// Trace polynomials over named matrices and their trace derivatives.
//
// Grammar (whitespace ignored):
//   expr   := term (('+' | '-') term)*
//   term   := unary ('*' unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' integer)?
//   atom   := number | name | 'tr' '(' expr ')' | '(' expr ')'
// Names resolve to matrices or to scalar parameters. Any other function call is
// rejected with UnsupportedExpression.

#include <map>
#include <memory>
#include <string>

#include "cfslab/linop.hpp"

namespace cfslab {

class UnsupportedExpression : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

struct TraceEnv {
    std::map<std::string, Matrix> matrices;
    std::map<std::string, double> scalars;
};

class TraceExpr {
public:
    // Throws UnsupportedExpression for non-polynomial constructs and
    // ContractViolation for syntax errors.
    static TraceExpr parse(const std::string& text);

    const std::string& text() const { return text_; }
    // Value of a scalar-valued expression. Throws ContractViolation if the
    // expression is matrix-valued or names an unknown symbol.
    cplx evaluate(const TraceEnv& env) const;
    // G with dL = Tr(G dX) for a perturbation of the matrix `wrt`.
    Matrix derivative(const TraceEnv& env, const std::string& wrt) const;

    struct Node;

private:
    TraceExpr(std::string text, std::shared_ptr<const Node> root)
        : text_(std::move(text)), root_(std::move(root)) {}
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace cfslab
