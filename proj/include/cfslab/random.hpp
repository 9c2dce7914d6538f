#pragma once

// Seeded generators for random operators. Used by the CLI experiments, the
// benchmarks and the test suites.

#include <cstdint>
#include <random>

#include "cfslab/linop.hpp"

namespace cfslab {

using Rng = std::mt19937_64;

Matrix random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Matrix random_hermitian(Eigen::Index dim, Rng& rng);
Matrix random_unitary(Eigen::Index dim, Rng& rng);
// dim x k matrix with orthonormal columns.
Matrix random_isometry(Eigen::Index dim, Eigen::Index k, Rng& rng);

// Random point of F_n in dimension dim with `positives` positive and `negatives`
// negative eigenvalues, magnitudes uniform in [lo, hi].
SpacetimePointOp random_point(Eigen::Index dim, int n, int positives, int negatives, Rng& rng,
                              double lo = 0.2, double hi = 2.0);
// Regular point: n positive, n negative eigenvalues.
SpacetimePointOp random_regular_point(Eigen::Index dim, int n, Rng& rng);

}  // namespace cfslab
