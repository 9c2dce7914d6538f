#include "cfslab/dirac_sea.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cfslab/kernels.hpp"

namespace cfslab {

namespace {

double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw ConfigError(std::string("sea config: \"") + key + "\" must be a number");
    }
    return j[key].get<double>();
}

int require_int(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw ConfigError(std::string("sea config: \"") + key + "\" must be an integer");
    }
    return j[key].get<int>();
}

}  // namespace

void DiracSeaConfig::validate() const {
    if (!(mass >= 0.0) || !std::isfinite(mass)) throw ConfigError("sea config: mass must be >= 0");
    if (mass == 0.0) {
        throw ConfigError("sea config: m = 0 makes the k = 0 mode a zero-frequency mode");
    }
    if (!(box_length > 0.0) || !std::isfinite(box_length)) {
        throw ConfigError("sea config: box_length must be > 0");
    }
    if (cutoff_K < 0) throw ConfigError("sea config: cutoff_K must be >= 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("sea config: epsilon must be > 0");
    }
    if (lattice.nt < 1 || lattice.nx < 1) throw ConfigError("sea config: nt and nx must be >= 1");
    if (!(lattice.t1 > lattice.t0)) throw ConfigError("sea config: lattice needs t1 > t0");
}

DiracSeaConfig sea_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("sea config must be a JSON object");
    DiracSeaConfig c;
    c.mass = require_number(j, "mass");
    c.box_length = require_number(j, "box_length");
    c.cutoff_K = require_int(j, "cutoff_K");
    c.epsilon = require_number(j, "epsilon");
    if (!j.contains("lattice") || !j["lattice"].is_object()) {
        throw ConfigError("sea config: \"lattice\" object missing");
    }
    const auto& lat = j["lattice"];
    c.lattice.nt = require_int(lat, "nt");
    c.lattice.nx = require_int(lat, "nx");
    c.lattice.t0 = require_number(lat, "t0");
    c.lattice.t1 = require_number(lat, "t1");
    c.validate();
    return c;
}

DiracSea::DiracSea(std::vector<SeaMode> modes, double mass, double box_length)
    : modes_(std::move(modes)), mass_(mass), box_length_(box_length) {}

Eigen::Vector2cd DiracSea::value(Eigen::Index i, double t, double x) const {
    const SeaMode& md = modes_[static_cast<std::size_t>(i)];
    const cplx phase = std::exp(cplx(0.0, -(md.omega * t - md.k * x)));
    return md.spinor * (phase / std::sqrt(box_length_));
}

Eigen::Matrix<cplx, 2, Eigen::Dynamic> DiracSea::regularized_values(double t, double x) const {
    Eigen::Matrix<cplx, 2, Eigen::Dynamic> phi(2, dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
        phi.col(i) = modes_[static_cast<std::size_t>(i)].damping * value(i, t, x);
    }
    return phi;
}

DiracSea build_sea(const DiracSeaConfig& config) {
    config.validate();
    const double m = config.mass;
    std::vector<SeaMode> modes;
    modes.reserve(static_cast<std::size_t>(config.hilbert_dim()));
    for (int j = -config.cutoff_K; j <= config.cutoff_K; ++j) {
        SeaMode md;
        md.j = j;
        md.k = 2.0 * std::numbers::pi * j / config.box_length;
        const double energy = std::hypot(md.k, m);
        md.omega = -energy;
        // Null vector of gamma^0 omega - gamma^1 k - m.
        Eigen::Vector2cd chi(md.k, md.omega - m);
        md.spinor = chi / chi.norm();
        md.damping = std::exp(-config.epsilon * energy);
        modes.push_back(md);
    }
    return DiracSea(std::move(modes), m, config.box_length);
}

Matrix sea_gram(const DiracSea& sea, double t, int quad_points) {
    if (quad_points < 1) throw ContractViolation("sea_gram: quad_points must be positive");
    const Eigen::Index n = sea.dim();
    Matrix g = Matrix::Zero(n, n);
    const double h = sea.box_length() / quad_points;
    for (int q = 0; q < quad_points; ++q) {
        Eigen::Matrix<cplx, 2, Eigen::Dynamic> phi(2, n);
        for (Eigen::Index i = 0; i < n; ++i) phi.col(i) = sea.value(i, t, q * h);
        g += h * (phi.adjoint() * phi);
    }
    return g;
}

Matrix correlation_matrix(const DiracSea& sea, double t, double x) {
    const auto phi = sea.regularized_values(t, x);
    Eigen::Matrix2cd gamma0 = Eigen::Matrix2cd::Zero();
    gamma0(0, 0) = 1.0;
    gamma0(1, 1) = -1.0;
    return -(phi.adjoint() * gamma0 * phi);
}

SpacetimePointOp local_correlation(const DiracSeaConfig& config, const DiracSea& sea,
                                   LatticePoint p) {
    if (p.s < 0 || p.s >= config.lattice.nt || p.l < 0 || p.l >= config.lattice.nx) {
        throw ContractViolation("local_correlation: point outside the lattice");
    }
    const Matrix f = correlation_matrix(sea, config.t_at(p.s), config.x_at(p.l));
    auto m = membership_F(Operator::selfadjoint(f), 1);
    if (!m.accepted()) {
        throw ContractViolation("invariant violation: F(x) not in F_1 at lattice point (" +
                                std::to_string(p.s) + "," + std::to_string(p.l) + ")");
    }
    return std::move(*m.point);
}

namespace {

bool within(const Matrix& a, const Matrix& b, double tol) {
    const double tol2 = tol * tol;
    double acc = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        acc += (a.col(c) - b.col(c)).squaredNorm();
        if (acc > tol2) return false;
    }
    return true;
}

}  // namespace

CorrelationMapOutput pushforward_measure(const DiracSeaConfig& config, const DiracSea& sea,
                                         Exec exec, double merge_tol) {
    config.validate();
    auto members = exec == Exec::serial ? kernels::correlation_points_serial(config, sea)
                                        : kernels::correlation_points_parallel(config, sea);
    const int nx = config.lattice.nx;
    const double w = config.cell_volume();

    std::vector<SpacetimePointOp> reps;
    std::vector<double> weights;
    std::vector<std::size_t> index(members.size());
    std::vector<LatticeSpectrum> spectra;
    spectra.reserve(members.size());
    for (std::size_t site = 0; site < members.size(); ++site) {
        const LatticePoint lp{static_cast<int>(site / nx), static_cast<int>(site % nx)};
        if (!members[site].accepted()) {
            throw ContractViolation("invariant violation: F(x) not in F_1 at lattice point (" +
                                    std::to_string(lp.s) + "," + std::to_string(lp.l) + ")");
        }
        const SpacetimePointOp& pt = *members[site].point;

        LatticeSpectrum sp;
        sp.point = lp;
        sp.t = config.t_at(lp.s);
        sp.x = config.x_at(lp.l);
        sp.trace = pt.trace();
        for (Eigen::Index k = 0; k < pt.image_eigenvalues().size(); ++k) {
            const double v = pt.image_eigenvalues()[k];
            (v < 0.0 ? sp.eig1 : sp.eig2) = v;
        }
        spectra.push_back(sp);

        std::size_t found = reps.size();
        for (std::size_t r = 0; r < reps.size(); ++r) {
            if (within(reps[r].matrix(), pt.matrix(), merge_tol)) {
                found = r;
                break;
            }
        }
        if (found == reps.size()) {
            reps.push_back(pt);
            weights.push_back(w);
        } else {
            weights[found] += w;
        }
        index[site] = found;
    }
    return {DiscreteMeasure(std::move(reps), std::move(weights)), std::move(index),
            std::move(spectra)};
}

std::vector<CausalSanityRecord> causal_sanity(const DiracSeaConfig& config, const DiracSea& sea,
                                              double classify_tol) {
    const LatticePoint origin{0, 0};
    const SpacetimePointOp x = local_correlation(config, sea, origin);
    std::vector<CausalSanityRecord> out;
    for (int s = 0; s < config.lattice.nt; ++s) {
        for (int l = 0; l < config.lattice.nx; ++l) {
            const double dt = s * config.dt();
            const double dx = std::min(l, config.lattice.nx - l) * config.dx();
            if (!(dx > dt)) continue;
            const SpacetimePointOp y = local_correlation(config, sea, {s, l});
            const PairTerms terms = pair_terms(x, y, classify_tol);
            out.push_back({origin, {s, l}, dt, dx, terms.causal_class, terms.lagrangian});
        }
    }
    return out;
}

}  // namespace cfslab
