#pragma once

// Causal action principle on finitely supported measures.
//
// For points x, y of F_n the causal Lagrangian and the causal classification are
// functions of the 2n non-trivial eigenvalues of the product xy:
//
//   L(x,y) = 1/(4n) sum_{i,j} (|l_i| - |l_j|)^2
//   spacelike  : all |l_j| equal
//   timelike   : all l_j real, moduli not all equal
//   lightlike  : otherwise
//
// Measures are weighted point masses, so every integral over F (or F x F) is a
// finite sum.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfslab/linop.hpp"

namespace cfslab {

inline constexpr double kClassifyTol = 1e-8;

enum class CausalClass { Spacelike, Timelike, Lightlike };

std::string_view to_string(CausalClass c);
char short_label(CausalClass c);  // 'S', 'T', 'L'

// Tie policy: spacelike is tested first, then timelike; lightlike is the rest.
// Moduli are equal when max - min <= tol * max(1, max|l|); an eigenvalue is real
// when |Im l| <= tol * max(1, |l|).
CausalClass classify_spectrum(std::span<const cplx> lambdas, double tol = kClassifyTol);
CausalClass classify(const SpacetimePointOp& x, const SpacetimePointOp& y, double tol = kClassifyTol);

double lagrangian_from_spectrum(std::span<const cplx> lambdas, int n);
// Exactly 0 for spacelike pairs, the formula otherwise.
double lagrangian(const SpacetimePointOp& x, const SpacetimePointOp& y);
// (sum_j |l_j|)^2, the boundedness integrand.
double boundedness_from_spectrum(std::span<const cplx> lambdas);

// Everything that depends on one pair, from a single eigenvalue computation.
struct PairTerms {
    double lagrangian = 0.0;
    double boundedness = 0.0;
    CausalClass causal_class = CausalClass::Spacelike;
};
PairTerms pair_terms(const SpacetimePointOp& x, const SpacetimePointOp& y,
                     double classify_tol = kClassifyTol);

// Derivatives of L(x,y) and of (sum|l|)^2 with respect to the first argument, as
// Hermitian matrices G with dF = Re tr(G dx) for Hermitian dx. Eigenvalues below
// the zero threshold are treated as constant zeros.
struct PairGradient {
    double lagrangian = 0.0;
    double boundedness = 0.0;
    Matrix d_lagrangian;
    Matrix d_boundedness;
};
PairGradient pair_gradient_first(const SpacetimePointOp& x, const SpacetimePointOp& y);

class DiscreteMeasure {
public:
    // Throws ContractViolation for an empty support, mismatched lengths,
    // non-positive weights, or points with differing dim / spin dimension.
    DiscreteMeasure(std::vector<SpacetimePointOp> points, std::vector<double> weights);

    std::size_t size() const { return points_.size(); }
    Eigen::Index dim() const { return points_.front().dim(); }
    int spin_dim() const { return points_.front().spin_dim(); }
    const std::vector<SpacetimePointOp>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    double volume() const;

    // Same support, weights multiplied by c > 0.
    DiscreteMeasure scaled(double c) const;

private:
    std::vector<SpacetimePointOp> points_;
    std::vector<double> weights_;
};

enum class Exec { serial, parallel };

double causal_action(const DiscreteMeasure& rho, Exec exec = Exec::parallel);

struct Constraints {
    double volume = 0.0;
    double trace_integral = 0.0;
    double boundedness = 0.0;
};
Constraints constraints(const DiscreteMeasure& rho, Exec exec = Exec::parallel);

// Action, constraints and the classification matrix from one pair sweep.
struct ActionReport {
    double action = 0.0;
    Constraints constraints;
    double diagonal_action = 0.0;
    std::vector<std::vector<CausalClass>> classes;
};
ActionReport action_report(const DiscreteMeasure& rho, double classify_tol = kClassifyTol,
                           Exec exec = Exec::parallel);

// L(x,x) three ways: from the product spectrum, as tr(x^4) - tr(x^2)^2 / 2n,
// and (regular points only) as tr(Y^2) with Y = x^2 - tr(x^2)/(2n) * pi_x.
struct DiagonalLagrangian {
    double from_spectrum = 0.0;
    double trace_form = 0.0;
    std::optional<double> y_form;
};
double diagonal_lagrangian_trace_form(const SpacetimePointOp& x);
// Throws ContractViolation unless rank(x) = 2n.
double diagonal_lagrangian_y_form(const SpacetimePointOp& x);
DiagonalLagrangian diagonal_lagrangian(const SpacetimePointOp& x);

double diagonal_action(const DiscreteMeasure& rho);

// Spin space S_x = x(H) with the indefinite product <u|v>_x = -<u|x v>.
struct SpinSpace {
    Matrix basis;   // dim x rank, orthonormal, eigenvectors of x
    Matrix metric;  // rank x rank Gram matrix of the spin inner product
    Signature metric_signature;
    Eigen::Index spin_space_dim() const { return basis.cols(); }
};
SpinSpace spin_space(const SpacetimePointOp& x);

// Orthogonal projection of u onto S_x, in the spin-space basis coordinates.
Vector physical_wavefunction(const Vector& u, const SpacetimePointOp& x);

// Kernel of the fermionic projector P(x,y): S_y -> S_x, as a matrix from the
// spin basis of y to the spin basis of x.
struct ProjectorKernel {
    Matrix matrix;
    Matrix target_basis;
    Matrix source_basis;
};
// Intrinsic form P(x,y) = pi_x y restricted to S_y.
ProjectorKernel projector_kernel(const SpacetimePointOp& x, const SpacetimePointOp& y);
// Wave-function sum form -sum_i psi^{e_i}(x) <psi^{e_i}(y) | . >_y over an
// orthonormal basis (columns of `hilbert_basis`).
ProjectorKernel projector_kernel(const SpacetimePointOp& x, const SpacetimePointOp& y,
                                 const Matrix& hilbert_basis);

// Measure file: { "spin_dim": n, "points": [matrix literal, ...], "weights": [...] }.
DiscreteMeasure measure_from_json(const nlohmann::json& j, double tol = kZeroTol);
nlohmann::json measure_to_json(const DiscreteMeasure& rho);

}  // namespace cfslab
