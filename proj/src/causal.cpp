#include "cfslab/causal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "cfslab/kernels.hpp"
#include "cfslab/matrix_json.hpp"

namespace cfslab {

std::string_view to_string(CausalClass c) {
    switch (c) {
        case CausalClass::Spacelike: return "spacelike";
        case CausalClass::Timelike: return "timelike";
        case CausalClass::Lightlike: return "lightlike";
    }
    return "unknown";
}

char short_label(CausalClass c) {
    switch (c) {
        case CausalClass::Spacelike: return 'S';
        case CausalClass::Timelike: return 'T';
        case CausalClass::Lightlike: return 'L';
    }
    return '?';
}

CausalClass classify_spectrum(std::span<const cplx> lambdas, double tol) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    bool all_real = true;
    for (const cplx& l : lambdas) {
        const double m = std::abs(l);
        if (first) {
            lo = hi = m;
            first = false;
        } else {
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
        if (std::abs(l.imag()) > tol * std::max(1.0, m)) all_real = false;
    }
    if (hi - lo <= tol * std::max(1.0, hi)) return CausalClass::Spacelike;
    if (all_real) return CausalClass::Timelike;
    return CausalClass::Lightlike;
}

CausalClass classify(const SpacetimePointOp& x, const SpacetimePointOp& y, double tol) {
    const auto l = nontrivial_product_spectrum(x, y);
    return classify_spectrum(l, tol);
}

double lagrangian_from_spectrum(std::span<const cplx> lambdas, int n) {
    double sum = 0.0;
    for (const cplx& li : lambdas) {
        for (const cplx& lj : lambdas) {
            const double d = std::abs(li) - std::abs(lj);
            sum += d * d;
        }
    }
    return sum / (4.0 * n);
}

double lagrangian(const SpacetimePointOp& x, const SpacetimePointOp& y) {
    const auto l = nontrivial_product_spectrum(x, y);
    if (classify_spectrum(l) == CausalClass::Spacelike) return 0.0;
    return lagrangian_from_spectrum(l, x.spin_dim());
}

double boundedness_from_spectrum(std::span<const cplx> lambdas) {
    double s = 0.0;
    for (const cplx& l : lambdas) s += std::abs(l);
    return s * s;
}

PairTerms pair_terms(const SpacetimePointOp& x, const SpacetimePointOp& y, double classify_tol) {
    const auto l = nontrivial_product_spectrum(x, y);
    const CausalClass c = classify_spectrum(l, classify_tol);
    return {c == CausalClass::Spacelike ? 0.0 : lagrangian_from_spectrum(l, x.spin_dim()),
            boundedness_from_spectrum(l), c};
}

PairGradient pair_gradient_first(const SpacetimePointOp& x, const SpacetimePointOp& y) {
    if (x.dim() != y.dim() || x.spin_dim() != y.spin_dim()) {
        throw ContractViolation("pair_gradient_first: incompatible points");
    }
    const int n = x.spin_dim();
    const Eigen::Index f = x.dim();
    PairGradient out;
    out.d_lagrangian = Matrix::Zero(f, f);
    out.d_boundedness = Matrix::Zero(f, f);
    if (x.rank() == 0 || y.rank() == 0) return out;

    // xy = P Q with P = Bx, Q = Lx Bx* y; the small matrix M = Q P carries the
    // nonzero spectrum. Right eigenvectors of xy are P u_k, left ones v_k* Q.
    const Matrix& p = x.image_basis();
    const Matrix q = x.image_eigenvalues().cast<cplx>().asDiagonal() * p.adjoint() * y.matrix();
    const Matrix m = q * p;
    Eigen::ComplexEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("pair_gradient_first: eigen-decomposition failed", 0.0);
    }
    const Vector& lambda = solver.eigenvalues();
    const Matrix& u = solver.eigenvectors();
    const Matrix v_adj = u.inverse();

    const double threshold = kZeroTol * x.norm() * y.norm();
    std::vector<Eigen::Index> live;
    double sum_abs = 0.0, sum_sq = 0.0;
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        const double a = std::abs(lambda[k]);
        if (a > threshold) {
            live.push_back(k);
            sum_abs += a;
            sum_sq += a * a;
        }
    }
    // Padding zeros contribute nothing to either sum.
    out.lagrangian = sum_sq - sum_abs * sum_abs / (2.0 * n);
    out.boundedness = sum_abs * sum_abs;

    Matrix gl = Matrix::Zero(f, f);
    Matrix gb = Matrix::Zero(f, f);
    const Matrix yp = y.matrix() * p;
    for (Eigen::Index k : live) {
        const cplx l = lambda[k];
        const double a = std::abs(l);
        // d|l| = Re( conj(l)/|l| * dl ),  dl = v* Q dx y P u / l.
        const cplx phase = std::conj(l) / (a * l);
        const Matrix outer = (yp * u.col(k)) * (v_adj.row(k) * q);
        const double cl = 2.0 * a - sum_abs / n;
        const double cb = 2.0 * sum_abs;
        gl += (cl * phase) * outer;
        gb += (cb * phase) * outer;
    }
    out.d_lagrangian = 0.5 * (gl + gl.adjoint());
    out.d_boundedness = 0.5 * (gb + gb.adjoint());
    return out;
}

DiscreteMeasure::DiscreteMeasure(std::vector<SpacetimePointOp> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw ContractViolation("measure must have non-empty support");
    if (points_.size() != weights_.size()) {
        throw ContractViolation("measure: points and weights differ in length");
    }
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ContractViolation("measure weights must be finite and strictly positive");
        }
    }
    for (const auto& p : points_) {
        if (p.dim() != points_.front().dim() || p.spin_dim() != points_.front().spin_dim()) {
            throw ContractViolation("measure points must share dim and spin dimension");
        }
    }
}

double DiscreteMeasure::volume() const {
    double v = 0.0;
    for (double w : weights_) v += w;
    return v;
}

DiscreteMeasure DiscreteMeasure::scaled(double c) const {
    std::vector<double> w = weights_;
    for (double& wi : w) wi *= c;
    return DiscreteMeasure(points_, std::move(w));
}

namespace {

struct PairSums {
    double action = 0.0;
    double boundedness = 0.0;
};

// Fixed row-major reduction order so results do not depend on thread count.
PairSums reduce_pairs(const DiscreteMeasure& rho, const kernels::PairTable& table) {
    PairSums s;
    const auto& w = rho.weights();
    for (std::size_t i = 0; i < rho.size(); ++i) {
        double row_l = 0.0, row_b = 0.0;
        for (std::size_t j = 0; j < rho.size(); ++j) {
            const auto& t = table.at(i, j);
            row_l += w[j] * t.lagrangian;
            row_b += w[j] * t.boundedness;
        }
        s.action += w[i] * row_l;
        s.boundedness += w[i] * row_b;
    }
    return s;
}

double trace_integral(const DiscreteMeasure& rho) {
    double t = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) t += rho.weights()[i] * rho.points()[i].trace();
    return t;
}

}  // namespace

double causal_action(const DiscreteMeasure& rho, Exec exec) {
    const auto table = kernels::pair_table(rho.points(), kClassifyTol, exec);
    return reduce_pairs(rho, table).action;
}

Constraints constraints(const DiscreteMeasure& rho, Exec exec) {
    const auto table = kernels::pair_table(rho.points(), kClassifyTol, exec);
    return {rho.volume(), trace_integral(rho), reduce_pairs(rho, table).boundedness};
}

ActionReport action_report(const DiscreteMeasure& rho, double classify_tol, Exec exec) {
    const auto table = kernels::pair_table(rho.points(), classify_tol, exec);
    const auto sums = reduce_pairs(rho, table);
    ActionReport r;
    r.action = sums.action;
    r.constraints = {rho.volume(), trace_integral(rho), sums.boundedness};
    for (std::size_t i = 0; i < rho.size(); ++i) {
        r.diagonal_action += rho.weights()[i] * table.at(i, i).lagrangian;
    }
    r.classes.assign(rho.size(), std::vector<CausalClass>(rho.size()));
    for (std::size_t i = 0; i < rho.size(); ++i) {
        for (std::size_t j = 0; j < rho.size(); ++j) r.classes[i][j] = table.at(i, j).causal_class;
    }
    return r;
}

double diagonal_lagrangian_trace_form(const SpacetimePointOp& x) {
    const Matrix x2 = x.matrix() * x.matrix();
    const double tr2 = x2.trace().real();
    const double tr4 = (x2 * x2).trace().real();
    return tr4 - tr2 * tr2 / (2.0 * x.spin_dim());
}

double diagonal_lagrangian_y_form(const SpacetimePointOp& x) {
    if (!x.regular()) {
        throw ContractViolation("Y-form needs a regular point (rank " + std::to_string(x.rank()) +
                                " != 2n = " + std::to_string(2 * x.spin_dim()) + ")");
    }
    const Matrix x2 = x.matrix() * x.matrix();
    const double tr2 = x2.trace().real();
    const Matrix y = x2 - (tr2 / (2.0 * x.spin_dim())) * image_projector(x);
    return (y * y).trace().real();
}

DiagonalLagrangian diagonal_lagrangian(const SpacetimePointOp& x) {
    DiagonalLagrangian d;
    d.from_spectrum = lagrangian(x, x);
    d.trace_form = diagonal_lagrangian_trace_form(x);
    if (x.regular()) d.y_form = diagonal_lagrangian_y_form(x);
    return d;
}

double diagonal_action(const DiscreteMeasure& rho) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        s += rho.weights()[i] * lagrangian(rho.points()[i], rho.points()[i]);
    }
    return s;
}

SpinSpace spin_space(const SpacetimePointOp& x) {
    SpinSpace s;
    s.basis = x.image_basis();
    const RealVector g = -x.image_eigenvalues();
    s.metric = g.cast<cplx>().asDiagonal();
    s.metric_signature = signature_of(g);
    return s;
}

Vector physical_wavefunction(const Vector& u, const SpacetimePointOp& x) {
    if (u.size() != x.dim()) throw ContractViolation("wave function: vector has wrong dimension");
    return x.image_basis().adjoint() * u;
}

ProjectorKernel projector_kernel(const SpacetimePointOp& x, const SpacetimePointOp& y) {
    if (x.dim() != y.dim()) throw ContractViolation("projector_kernel: dimension mismatch");
    return {x.image_basis().adjoint() * y.matrix() * y.image_basis(), x.image_basis(),
            y.image_basis()};
}

ProjectorKernel projector_kernel(const SpacetimePointOp& x, const SpacetimePointOp& y,
                                 const Matrix& hilbert_basis) {
    if (x.dim() != y.dim() || hilbert_basis.rows() != x.dim()) {
        throw ContractViolation("projector_kernel: dimension mismatch");
    }
    const Matrix px = image_projector(x);
    const Matrix py = image_projector(y);
    const Eigen::Index f = x.dim();
    // Accumulate the operator phi -> -sum_i psi_i(x) <psi_i(y)|phi>_y, with
    // <a|b>_y = -<a| y b>.
    Matrix op = Matrix::Zero(f, f);
    for (Eigen::Index i = 0; i < hilbert_basis.cols(); ++i) {
        const Vector psi_x = px * hilbert_basis.col(i);
        const Vector psi_y = py * hilbert_basis.col(i);
        op -= psi_x * (-(psi_y.adjoint() * y.matrix()));
    }
    return {x.image_basis().adjoint() * op * y.image_basis(), x.image_basis(), y.image_basis()};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j, double tol) {
    if (!j.is_object() || !j.contains("spin_dim") || !j.contains("points") || !j.contains("weights")) {
        throw ConfigError("measure needs \"spin_dim\", \"points\" and \"weights\"");
    }
    if (!j["spin_dim"].is_number_integer()) throw ConfigError("measure: spin_dim must be an integer");
    const int n = j["spin_dim"].get<int>();
    if (n < 1) throw ConfigError("measure: spin_dim must be positive");
    if (!j["points"].is_array() || !j["weights"].is_array()) {
        throw ConfigError("measure: points and weights must be arrays");
    }
    std::vector<SpacetimePointOp> pts;
    for (const auto& pj : j["points"]) {
        const Matrix m = matrix_from_json(pj);
        try {
            pts.push_back(make_point(m, n, tol));
        } catch (const ContractViolation& e) {
            throw ConfigError(std::string("measure point rejected: ") + e.what());
        }
    }
    std::vector<double> w;
    for (const auto& wj : j["weights"]) {
        if (!wj.is_number()) throw ConfigError("measure: weights must be numbers");
        w.push_back(wj.get<double>());
    }
    try {
        return DiscreteMeasure(std::move(pts), std::move(w));
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("invalid measure: ") + e.what());
    }
}

nlohmann::json measure_to_json(const DiscreteMeasure& rho) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : rho.points()) pts.push_back(matrix_to_json(p.matrix()));
    return {{"spin_dim", rho.spin_dim()}, {"points", std::move(pts)}, {"weights", rho.weights()}};
}

}  // namespace cfslab
