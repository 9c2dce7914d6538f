#include "cfslab/linop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace cfslab {

Operator::Operator(Matrix entries, bool selfadjoint)
    : entries_(std::move(entries)), selfadjoint_(selfadjoint) {}

Operator Operator::general(Matrix entries) {
    if (entries.rows() < 1 || entries.rows() != entries.cols()) {
        throw ContractViolation("operator must be a non-empty square matrix");
    }
    return Operator(std::move(entries), false);
}

Operator Operator::selfadjoint(Matrix entries) {
    if (entries.rows() < 1 || entries.rows() != entries.cols()) {
        throw ContractViolation("operator must be a non-empty square matrix");
    }
    const double scale = std::max(1.0, entries.norm());
    const double defect = (entries - entries.adjoint()).norm();
    if (defect > kSelfAdjointTol * scale) {
        throw ContractViolation("operator is not selfadjoint (defect " + std::to_string(defect) + ")");
    }
    Matrix hermitian = 0.5 * (entries + entries.adjoint());
    return Operator(std::move(hermitian), true);
}

SelfAdjointEigen eig_selfadjoint(const Operator& a) {
    if (!a.is_selfadjoint()) {
        throw ContractViolation("eig_selfadjoint requires a selfadjoint operator");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.entries());
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("selfadjoint eigensolver did not converge",
                               std::numeric_limits<double>::quiet_NaN());
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

std::vector<cplx> eig_general(const Matrix& a) {
    if (a.rows() != a.cols()) throw ContractViolation("eig_general requires a square matrix");
    if (a.rows() == 0) return {};
    Eigen::ComplexSchur<Matrix> schur(a, /*computeU=*/false);
    const Matrix& t = schur.matrixT();
    if (schur.info() != Eigen::Success) {
        // Report how far the partial Schur form is from triangular.
        const double residual = t.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm();
        throw NumericalFailure("complex QR iteration did not converge", residual);
    }
    const Vector ev = t.diagonal();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<cplx> eig_general(const Operator& a) { return eig_general(a.entries()); }

Signature signature_of(const RealVector& eigenvalues, double rel_tol) {
    Signature sig;
    const double scale = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    sig.tol = rel_tol * scale;
    for (double v : eigenvalues) {
        if (scale > 0.0 && v > sig.tol) {
            ++sig.positives;
        } else if (scale > 0.0 && v < -sig.tol) {
            ++sig.negatives;
        } else {
            ++sig.zeros;
        }
    }
    return sig;
}

SpacetimePointOp::SpacetimePointOp(Operator op, int spin_dim, SelfAdjointEigen eigen, Signature sig)
    : op_(std::move(op)), spin_dim_(spin_dim), eigen_(std::move(eigen)), signature_(sig) {
    const auto& vals = eigen_.values;
    norm_ = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (std::abs(vals[i]) > signature_.tol && norm_ > 0.0) keep.push_back(i);
    }
    image_basis_.resize(dim(), static_cast<Eigen::Index>(keep.size()));
    image_values_.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        image_basis_.col(col) = eigen_.vectors.col(keep[c]);
        image_values_[col] = vals[keep[c]];
    }
}

Membership membership_F(const Operator& a, int n, double tol) {
    if (n < 1) throw ContractViolation("spin dimension must be positive");
    auto eig = eig_selfadjoint(a);
    const Signature sig = signature_of(eig.values, tol);
    Membership result;
    result.signature = sig;
    if (sig.positives <= n && sig.negatives <= n) {
        result.point = SpacetimePointOp(a, n, std::move(eig), sig);
    }
    return result;
}

SpacetimePointOp make_point(const Operator& a, int n, double tol) {
    auto m = membership_F(a, n, tol);
    if (!m.accepted()) {
        throw MembershipError("operator not in F_" + std::to_string(n) + ": signature (" +
                                  std::to_string(m.signature.positives) + "," +
                                  std::to_string(m.signature.negatives) + "," +
                                  std::to_string(m.signature.zeros) + ")",
                              m.signature);
    }
    return std::move(*m.point);
}

SpacetimePointOp make_point(const Matrix& a, int n, double tol) {
    return make_point(Operator::selfadjoint(a), n, tol);
}

namespace {

void check_compatible(const SpacetimePointOp& x, const SpacetimePointOp& y) {
    if (x.dim() != y.dim()) throw ContractViolation("points have different ambient dimension");
    if (x.spin_dim() != y.spin_dim()) throw ContractViolation("points have different spin dimension");
}

std::vector<cplx> select_nontrivial(const std::vector<cplx>& all, int n, double threshold) {
    std::vector<cplx> nonzero;
    for (const cplx& l : all) {
        if (std::abs(l) > threshold) nonzero.push_back(l);
    }
    std::sort(nonzero.begin(), nonzero.end(), [](cplx a, cplx b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma > mb;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    const auto len = static_cast<std::size_t>(2 * n);
    if (nonzero.size() > len) nonzero.resize(len);
    nonzero.resize(len, cplx(0.0, 0.0));
    return nonzero;
}

}  // namespace

std::vector<cplx> nontrivial_product_spectrum(const SpacetimePointOp& x, const SpacetimePointOp& y,
                                              double tol) {
    check_compatible(x, y);
    const int n = x.spin_dim();
    if (x.rank() == 0 || y.rank() == 0) return std::vector<cplx>(2 * n, cplx(0.0, 0.0));

    // xy = Bx (Lx Bx* y); the swapped product Lx Bx* y Bx = Lx C Ly C* has the
    // same nonzero spectrum, with C = Bx* By.
    const Matrix c = x.image_basis().adjoint() * y.image_basis();
    const Matrix chain = x.image_eigenvalues().cast<cplx>().asDiagonal() * c *
                         y.image_eigenvalues().cast<cplx>().asDiagonal() * c.adjoint();
    const double threshold = tol * x.norm() * y.norm();
    return select_nontrivial(eig_general(chain), n, threshold);
}

std::vector<cplx> product_spectrum_full(const SpacetimePointOp& x, const SpacetimePointOp& y,
                                        double tol) {
    check_compatible(x, y);
    const Matrix xy = x.matrix() * y.matrix();
    const double threshold = tol * x.norm() * y.norm();
    return select_nontrivial(eig_general(xy), x.spin_dim(), threshold);
}

Matrix image_projector(const SpacetimePointOp& x) {
    return x.image_basis() * x.image_basis().adjoint();
}

double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    // Repeatedly match the globally closest remaining pair.
    while (!a.empty()) {
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < b.size(); ++j) {
                const double d = std::abs(a[i] - b[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        worst = std::max(worst, best);
        a.erase(a.begin() + static_cast<std::ptrdiff_t>(bi));
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return worst;
}

}  // namespace cfslab
