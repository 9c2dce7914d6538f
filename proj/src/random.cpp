#include "cfslab/random.hpp"

#include <Eigen/QR>

namespace cfslab {

Matrix random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = g(rng);
            const double im = g(rng);
            m(r, c) = cplx(re, im);
        }
    }
    return m;
}

Matrix random_hermitian(Eigen::Index dim, Rng& rng) {
    const Matrix a = random_complex(dim, dim, rng);
    return 0.5 * (a + a.adjoint());
}

Matrix random_isometry(Eigen::Index dim, Eigen::Index k, Rng& rng) {
    const Matrix a = random_complex(dim, k, rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(dim, k);
}

Matrix random_unitary(Eigen::Index dim, Rng& rng) { return random_isometry(dim, dim, rng); }

SpacetimePointOp random_point(Eigen::Index dim, int n, int positives, int negatives, Rng& rng,
                              double lo, double hi) {
    if (positives > n || negatives > n || positives + negatives > dim) {
        throw ContractViolation("random_point: requested signature does not fit");
    }
    std::uniform_real_distribution<double> mag(lo, hi);
    const Eigen::Index r = positives + negatives;
    RealVector vals(r);
    for (int i = 0; i < positives; ++i) vals[i] = mag(rng);
    for (int i = 0; i < negatives; ++i) vals[positives + i] = -mag(rng);
    if (r == 0) return make_point(Matrix::Zero(dim, dim), n);
    const Matrix w = random_isometry(dim, r, rng);
    const Matrix x = w * vals.cast<cplx>().asDiagonal() * w.adjoint();
    return make_point(x, n);
}

SpacetimePointOp random_regular_point(Eigen::Index dim, int n, Rng& rng) {
    return random_point(dim, n, n, n, rng);
}

}  // namespace cfslab
