#pragma once

// Dense complex linear algebra for finite-dimensional operator sets.
//
// An `Operator` is a square complex matrix with a selfadjointness certificate.
// A `SpacetimePointOp` is a selfadjoint operator that has been checked to lie in
// the set F_n: at most n positive and at most n negative eigenvalues (so rank <= 2n).
// Points cache their eigen-decomposition; every eigenvalue formula downstream reads
// from that cache.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cfslab/error.hpp"

namespace cfslab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Hermiticity check tolerance, relative to the Frobenius norm.
inline constexpr double kSelfAdjointTol = 1e-12;
// Eigenvalue-zero threshold, relative (see Signature and product spectra).
inline constexpr double kZeroTol = 1e-10;

class Operator {
public:
    // Any square matrix.
    static Operator general(Matrix entries);
    // Throws ContractViolation unless entries are Hermitian to kSelfAdjointTol.
    // The stored matrix is the exact Hermitian part.
    static Operator selfadjoint(Matrix entries);

    Eigen::Index dim() const { return entries_.rows(); }
    const Matrix& entries() const { return entries_; }
    bool is_selfadjoint() const { return selfadjoint_; }
    cplx trace() const { return entries_.trace(); }

private:
    Operator(Matrix entries, bool selfadjoint);

    Matrix entries_;
    bool selfadjoint_;
};

struct Signature {
    int positives = 0;
    int negatives = 0;
    int zeros = 0;
    double tol = 0.0;  // absolute threshold actually applied

    int rank() const { return positives + negatives; }
    int dim() const { return positives + negatives + zeros; }
    bool operator==(const Signature& o) const {
        return positives == o.positives && negatives == o.negatives && zeros == o.zeros;
    }
};

struct SelfAdjointEigen {
    RealVector values;  // ascending
    Matrix vectors;     // columns, unitary
};

// Throws ContractViolation for non-selfadjoint input.
SelfAdjointEigen eig_selfadjoint(const Operator& a);

// All dim eigenvalues with algebraic multiplicity, in solver order.
// Throws NumericalFailure (with the Schur residual) if the QR iteration stalls.
std::vector<cplx> eig_general(const Matrix& a);
std::vector<cplx> eig_general(const Operator& a);

// Counts eigenvalues against the threshold rel_tol * max|lambda|.
Signature signature_of(const RealVector& eigenvalues, double rel_tol = kZeroTol);

struct Membership;
Membership membership_F(const Operator& a, int n, double tol);

class SpacetimePointOp {
public:
    const Operator& op() const { return op_; }
    const Matrix& matrix() const { return op_.entries(); }
    Eigen::Index dim() const { return op_.dim(); }
    int spin_dim() const { return spin_dim_; }
    const Signature& signature() const { return signature_; }
    int rank() const { return signature_.rank(); }
    bool regular() const { return rank() == 2 * spin_dim_; }
    double trace() const { return op_.trace().real(); }
    // Spectral norm, max |lambda|.
    double norm() const { return norm_; }

    const SelfAdjointEigen& eigen() const { return eigen_; }
    // Orthonormal basis of the image: eigenvectors of the nonzero eigenvalues,
    // ordered by ascending eigenvalue. Shape dim x rank.
    const Matrix& image_basis() const { return image_basis_; }
    const RealVector& image_eigenvalues() const { return image_values_; }

private:
    friend struct Membership;
    friend Membership membership_F(const Operator&, int, double);
    SpacetimePointOp(Operator op, int spin_dim, SelfAdjointEigen eigen, Signature sig);

    Operator op_;
    int spin_dim_;
    SelfAdjointEigen eigen_;
    Signature signature_;
    double norm_;
    Matrix image_basis_;
    RealVector image_values_;
};

struct Membership {
    std::optional<SpacetimePointOp> point;
    Signature signature;
    bool accepted() const { return point.has_value(); }
};

class MembershipError : public ContractViolation {
public:
    MembershipError(const std::string& what, Signature sig)
        : ContractViolation(what), signature_(sig) {}
    const Signature& signature() const { return signature_; }

private:
    Signature signature_;
};

// Accepts iff the signature is within (n, n). Requires a selfadjoint operator.
Membership membership_F(const Operator& a, int n, double tol = kZeroTol);

// Same as membership_F but throws MembershipError on rejection.
SpacetimePointOp make_point(const Operator& a, int n, double tol = kZeroTol);
SpacetimePointOp make_point(const Matrix& a, int n, double tol = kZeroTol);

// The 2n non-trivial eigenvalues of xy: all nonzero eigenvalues (|lambda| >
// tol * |x| * |y|), sorted by decreasing modulus, then zero-padded to length 2n.
// Computed from the rank(x) x rank(x) closed-chain matrix, which shares the
// nonzero spectrum of xy.
std::vector<cplx> nontrivial_product_spectrum(const SpacetimePointOp& x, const SpacetimePointOp& y,
                                              double tol = kZeroTol);

// Reference route for the same quantity via eig_general of the full dim x dim product.
std::vector<cplx> product_spectrum_full(const SpacetimePointOp& x, const SpacetimePointOp& y,
                                        double tol = kZeroTol);

// Orthogonal projector onto the image of x.
Matrix image_projector(const SpacetimePointOp& x);

// Distance between two complex multisets of equal size under the best matching
// (greedy nearest match; exact for the well-separated sets used in checks).
double multiset_distance(std::vector<cplx> a, std::vector<cplx> b);

}  // namespace cfslab
