#pragma once

// Finite spectral triples, the spectral action Tr f(D / Lambda) and the
// extension-by-zero embedding of a finite Dirac operator into F_n.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfslab/causal.hpp"
#include "cfslab/random.hpp"

namespace cfslab {

// Graded triple on C^{2n}: sigma^2 = 1 with n eigenvalues +1 and n eigenvalues -1,
// D selfadjoint with sigma D + D sigma = 0. The algebra is carried as a label.
class FiniteSpectralTriple {
public:
    // Throws ContractViolation naming the violated axiom and its defect.
    static FiniteSpectralTriple make(int n, Matrix grading, Matrix dirac, std::string algebra_label = "");
    // sigma = diag(1_n, -1_n), D = [[0, X], [X*, 0]].
    static FiniteSpectralTriple from_block(const Matrix& x, std::string algebra_label = "");

    int n() const { return n_; }
    Eigen::Index dim() const { return 2 * n_; }
    const Matrix& grading() const { return grading_; }
    const Matrix& dirac() const { return dirac_; }
    const std::string& algebra_label() const { return label_; }

    // D -> D + F for a selfadjoint, grading-odd perturbation F.
    FiniteSpectralTriple perturbed(const Matrix& f) const;

private:
    FiniteSpectralTriple(int n, Matrix grading, Matrix dirac, std::string label);

    int n_;
    Matrix grading_;
    Matrix dirac_;
    std::string label_;
};

FiniteSpectralTriple random_block_triple(int n, Rng& rng);
FiniteSpectralTriple triple_from_json(const nlohmann::json& j);
nlohmann::json triple_to_json(const FiniteSpectralTriple& t);

struct GradingReport {
    RealVector spectrum;          // ascending
    RealVector singular_values;   // of the off-diagonal block X = P+* D P-
    double grading_defect = 0.0;  // |sigma^2 - 1|
    double anticommutator_defect = 0.0;  // |sigma D + D sigma| / max(1, |D|)
    double symmetry_defect = 0.0;        // distance between spec(D) and -spec(D)
    double block_defect = 0.0;           // distance between spec(D) and +-sv(X)
    double trace = 0.0;
    Signature signature;
    bool invertible = false;
    bool holds = false;
};

// Never throws on axiom violations; the report says what failed.
GradingReport verify_grading_lemma(const Matrix& grading, const Matrix& dirac);
GradingReport verify_grading_lemma(const FiniteSpectralTriple& t);

class CutoffFunction {
public:
    enum class Kind { hard_step, smooth_step, gaussian };

    static CutoffFunction hard_step() { return CutoffFunction(Kind::hard_step, 0.0); }
    // Cosine taper from 1 at 1 - width to 0 at 1 + width; 0 < width < 1.
    static CutoffFunction smooth_step(double width);
    static CutoffFunction gaussian() { return CutoffFunction(Kind::gaussian, 0.0); }
    static CutoffFunction parse(const std::string& kind, double width = 0.0);

    Kind kind() const { return kind_; }
    double width() const { return width_; }
    std::string name() const;
    // f(|v|).
    double operator()(double v) const;
    // Support end (infinity for gaussian).
    double support_end() const;

private:
    CutoffFunction(Kind k, double w) : kind_(k), width_(w) {}
    Kind kind_;
    double width_;
};

// sum over eigenvalues of f(|l| / Lambda), with multiplicity. Lambda > 0.
double spectral_action(std::span<const double> eigenvalues, double cutoff, const CutoffFunction& f);
double spectral_action(const Operator& d, double cutoff, const CutoffFunction& f);

// Spectrum {j / R : |j| <= J} of the Dirac operator on a circle of radius R.
std::vector<double> circle_dirac_spectrum(double radius, int j_max);

struct SweepRow {
    double cutoff = 0.0;
    double action = 0.0;
};
// Lambda on a uniform grid of `samples` points in [lo, hi].
std::vector<SweepRow> spectral_sweep(std::span<const double> eigenvalues, double lo, double hi,
                                     int samples, const CutoffFunction& f);

struct Moment {
    int j = 0;
    double value = 0.0;
    double error_estimate = 0.0;  // quadrature plus truncated tail
};
// f_j = int_0^inf f(v) v^{j-1} dv for j = 1..max_j. Throws DivergentIntegral for
// j <= 0 and NumericalFailure if the error estimate exceeds 1e-10.
std::vector<Moment> cutoff_moments(const CutoffFunction& f, int max_j);
Moment cutoff_moment(const CutoffFunction& f, int j);

// Isometry xi: C^{2n} -> C^dim.
class Embedding {
public:
    // Throws ContractViolation unless xi* xi = 1 to 1e-10.
    static Embedding make(Matrix isometry);
    // First 2n coordinate directions.
    static Embedding identity_block(Eigen::Index ambient_dim, Eigen::Index internal_dim);

    const Matrix& isometry() const { return xi_; }
    Eigen::Index ambient_dim() const { return xi_.rows(); }
    Eigen::Index internal_dim() const { return xi_.cols(); }
    Matrix projector() const { return xi_ * xi_.adjoint(); }

private:
    explicit Embedding(Matrix xi) : xi_(std::move(xi)) {}
    Matrix xi_;
};

Embedding random_embedding(Eigen::Index ambient_dim, Eigen::Index internal_dim, Rng& rng);
// Same column span.
bool equivalent(const Embedding& a, const Embedding& b, double tol = 1e-10);

// D_F[xi] = xi D_F xi*, as a point of F_n.
SpacetimePointOp embed(const FiniteSpectralTriple& t, const Embedding& e);

// Spectral action of the embedded operator; the ambient_dim - 2n padding zeros
// contribute f(0) each unless exclude_padding is set.
double embedded_spectral_action(const FiniteSpectralTriple& t, const Embedding& e, double cutoff,
                                const CutoffFunction& f, bool exclude_padding = false);

// Two-point correlator P(a, b) = sum_i |pi_a u_i> <pi_b u_i| D_F[xi_b], restricted
// to the embedded space of b, as a 2n x 2n matrix in the xi_a / xi_b coordinates.
struct TwoPointKernel {
    Matrix matrix;
    Matrix target_basis;
    Matrix source_basis;
};
// Sum over the orthonormal Hilbert basis `basis` (columns).
TwoPointKernel ncg_two_point(const FiniteSpectralTriple& t, const Embedding& a, const Embedding& b,
                             const Matrix& basis);
// Closed form (xi_a* xi_b) D_F.
TwoPointKernel ncg_two_point(const FiniteSpectralTriple& t, const Embedding& a, const Embedding& b);

// Causal action, constraints and classification matrix of sum_i w_i delta_{D_F[xi_i]}.
ActionReport causal_action_on_embeddings(const FiniteSpectralTriple& t,
                                         std::span<const Embedding> embeddings,
                                         std::span<const double> weights,
                                         Exec exec = Exec::parallel);

}  // namespace cfslab
