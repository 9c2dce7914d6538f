#pragma once

// Causal fermion system of the 1+1 dimensional free Dirac sea.
//
// The Hilbert space is spanned by negative-energy plane-wave solutions of
// (i gamma^mu d_mu - m) psi = 0 on a periodic box of length L, one per
// momentum k_j = 2 pi j / L with |j| <= K. Spinor conventions:
//   gamma^0 = [[1, 0], [0, -1]],  gamma^1 = [[0, 1], [-1, 0]],  psi-bar = psi^dagger gamma^0.
// The basis is orthonormal for <psi|phi> = int_0^L psi^dagger phi dx. Evaluating a
// wave function at a spacetime point applies the regularization factor
// exp(-epsilon * sqrt(k^2 + m^2)); the local correlation operator is then
// F(x)_ij = -psi-bar_i(x) psi_j(x), a point of F_1.

#include <json.hpp>

#include "cfslab/causal.hpp"

namespace cfslab {

struct LatticeSpec {
    int nt = 1;
    int nx = 1;
    double t0 = 0.0;
    double t1 = 1.0;
};

struct DiracSeaConfig {
    double mass = 1.0;
    double box_length = 1.0;
    int cutoff_K = 0;
    double epsilon = 0.1;
    LatticeSpec lattice;

    // Throws ConfigError for out-of-range values, including m = 0 (the j = 0
    // mode would have zero frequency).
    void validate() const;
    double dt() const { return (lattice.t1 - lattice.t0) / lattice.nt; }
    double dx() const { return box_length / lattice.nx; }
    double cell_volume() const { return dt() * dx(); }
    double t_at(int s) const { return lattice.t0 + s * dt(); }
    double x_at(int l) const { return l * dx(); }
    std::size_t num_lattice_points() const {
        return static_cast<std::size_t>(lattice.nt) * static_cast<std::size_t>(lattice.nx);
    }
    Eigen::Index hilbert_dim() const { return 2 * cutoff_K + 1; }
};

DiracSeaConfig sea_config_from_json(const nlohmann::json& j);

struct SeaMode {
    int j = 0;
    double k = 0.0;
    double omega = 0.0;     // -sqrt(k^2 + m^2)
    Eigen::Vector2cd spinor;  // unit amplitude
    double damping = 1.0;   // exp(-epsilon * |omega|)
};

class DiracSea {
public:
    DiracSea(std::vector<SeaMode> modes, double mass, double box_length);

    Eigen::Index dim() const { return static_cast<Eigen::Index>(modes_.size()); }
    const std::vector<SeaMode>& modes() const { return modes_; }
    double mass() const { return mass_; }
    double box_length() const { return box_length_; }

    // psi_i(t, x) without the regularization factor.
    Eigen::Vector2cd value(Eigen::Index i, double t, double x) const;
    // 2 x N matrix whose columns are the regularized psi_i(t, x).
    Eigen::Matrix<cplx, 2, Eigen::Dynamic> regularized_values(double t, double x) const;

private:
    std::vector<SeaMode> modes_;
    double mass_;
    double box_length_;
};

DiracSea build_sea(const DiracSeaConfig& config);

// Gram matrix int_0^L psi_i^dagger psi_j dx at time t, by the periodic trapezoid
// rule on `quad_points` nodes (exact for quad_points > 2K).
Matrix sea_gram(const DiracSea& sea, double t, int quad_points);

// Raw N x N matrix F(t, x) at an arbitrary point.
Matrix correlation_matrix(const DiracSea& sea, double t, double x);

struct LatticePoint {
    int s = 0;  // time index
    int l = 0;  // space index
};

// F at a lattice point. Throws ContractViolation for points outside the lattice and
// an invariant violation (ContractViolation) if F is not in F_1.
SpacetimePointOp local_correlation(const DiracSeaConfig& config, const DiracSea& sea,
                                   LatticePoint p);

struct LatticeSpectrum {
    LatticePoint point;
    double t = 0.0;
    double x = 0.0;
    double trace = 0.0;
    double eig1 = 0.0;  // negative eigenvalue (0 if absent)
    double eig2 = 0.0;  // positive eigenvalue (0 if absent)
};

struct CorrelationMapOutput {
    DiscreteMeasure measure;
    // point_index[s * nx + l] is the measure index of lattice point (s, l).
    std::vector<std::size_t> point_index;
    std::vector<LatticeSpectrum> spectra;
};

// One point per lattice site with weight dt*dx; operators closer than
// merge_tol in Frobenius norm are merged (earliest site wins) and their weights summed.
CorrelationMapOutput pushforward_measure(const DiracSeaConfig& config, const DiracSea& sea,
                                         Exec exec = Exec::parallel, double merge_tol = 1e-10);

// Classification of the reference site (0, 0) against every site whose periodic
// spatial separation exceeds its time separation. Recorded, not asserted.
struct CausalSanityRecord {
    LatticePoint a;
    LatticePoint b;
    double delta_t = 0.0;
    double delta_x = 0.0;
    CausalClass causal_class = CausalClass::Spacelike;
    double lagrangian = 0.0;
};
std::vector<CausalSanityRecord> causal_sanity(const DiracSeaConfig& config, const DiracSea& sea,
                                              double classify_tol = kClassifyTol);

}  // namespace cfslab
