#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; both evaluate every entry with the same arithmetic, so their outputs
// are bit-identical, and reductions happen afterwards in a fixed order.

#include <span>
#include <vector>

#include "cfslab/causal.hpp"
#include "cfslab/dirac_sea.hpp"

namespace cfslab::kernels {

// Symmetric m x m table of pair terms. Entry (i, j) for j < i mirrors (j, i).
struct PairTable {
    std::size_t m = 0;
    std::vector<PairTerms> terms;
    const PairTerms& at(std::size_t i, std::size_t j) const { return terms[i * m + j]; }
};

PairTable pair_table_serial(std::span<const SpacetimePointOp> points, double classify_tol);
PairTable pair_table_parallel(std::span<const SpacetimePointOp> points, double classify_tol);
PairTable pair_table(std::span<const SpacetimePointOp> points, double classify_tol, Exec exec);

// Gradients of the first argument for every ordered pair (i, j), row-major.
std::vector<PairGradient> pair_gradients_serial(std::span<const SpacetimePointOp> points);
std::vector<PairGradient> pair_gradients_parallel(std::span<const SpacetimePointOp> points);

// Local correlation operators at every lattice site, site index s * nx + l.
std::vector<Membership> correlation_points_serial(const DiracSeaConfig& config, const DiracSea& sea);
std::vector<Membership> correlation_points_parallel(const DiracSeaConfig& config,
                                                    const DiracSea& sea);

}  // namespace cfslab::kernels
