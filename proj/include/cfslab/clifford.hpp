#pragma once

// Gamma-matrix representations of Cl(p, q) for p + q in {4, 6}, and the
// split-biquaternion identities checked through them.
//
// Generators come from Jordan-Wigner strings of Pauli matrices; those of
// negative signature are multiplied by i, so {g_a, g_b} = 2 eta_ab 1 with
// eta = diag(+1 x p, -1 x q). For a vector x with components x_a the matrix
// X = x_a g^a satisfies X^2 = eta(x, x) 1, and X itself represents the
// conjugate x~ in the square-modulus identity x x~ = eta(x, x).

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfslab/linop.hpp"
#include "cfslab/random.hpp"

namespace cfslab {

struct CliffordRep {
    int p = 0;
    int q = 0;
    std::vector<Matrix> gammas;
    RealVector metric;  // diagonal of eta

    int dim() const { return p + q; }
    Eigen::Index spinor_dim() const { return gammas.empty() ? 0 : gammas.front().rows(); }
};

// Throws ContractViolation unless p + q is 4 or 6.
CliffordRep build_rep(int p, int q);
// g -> i g, eta -> -eta: a representation of the flipped signature (q, p).
CliffordRep flipped(const CliffordRep& rep);

// max_ab |{g_a, g_b} - 2 eta_ab 1|.
double anticommutator_defect(const CliffordRep& rep);
double anticommutator_defect(const CliffordRep& rep, const std::vector<int>& subset);

double metric_form(const CliffordRep& rep, std::span<const double> k);  // eta(k, k)
Matrix slash(const CliffordRep& rep, std::span<const double> k);       // k_a g^a

struct PlaneWave {
    std::vector<double> k;
    Vector amplitude;
};

// D = g^a d_a applied twice to amplitude * exp(i k.x): the factor c with
// D^2 psi = c psi, which must equal -eta(k, k). Throws NumericalFailure if the
// squared operator is not a multiple of the identity.
cplx dirac_square_on_wave(const CliffordRep& rep, const PlaneWave& wave);

// x6 x~6 through the (3,3) representation; components (t1, t2, t3, x1, x2, x3).
double square_modulus(const CliffordRep& rep6, std::span<const double> x6);
double square_modulus_closed_form(std::span<const double> x6);

struct SubsetReport {
    std::vector<std::string> labels;
    std::vector<int> indices;
    int positives = 0;
    int negatives = 0;
    double defect = 0.0;
    bool valid = false;
};

struct SplitReport {
    SubsetReport d4;        // {t1, x1, x2, x3}, expected (1, 3)
    SubsetReport d4_prime;  // {x1, t1, t2, t3}, expected (3, 1)
    std::vector<std::string> shared;  // labels present in both
};

// Requires a (3, 3) representation.
SplitReport split_d6(const CliffordRep& rep6);

std::vector<std::string> axis_labels(const CliffordRep& rep);

struct CliffordCheck {
    std::string signature;
    double max_defect = 0.0;
    int samples = 0;
};
// Relative defect |c + eta(k,k)| / max(1, |eta(k,k)|) over random covectors.
CliffordCheck dirac_square_sweep(const CliffordRep& rep, int samples, Rng& rng);
nlohmann::json to_json(const CliffordCheck& c);

}  // namespace cfslab
