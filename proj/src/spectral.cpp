#include "cfslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Eigenvalues>

#include "cfslab/matrix_json.hpp"

namespace cfslab {

namespace {

constexpr double kGradingTol = 1e-12;
constexpr double kAnticommuteTol = 1e-10;

double op_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()[0];
}

// Eigenvectors of a grading for eigenvalue +1 and -1.
std::pair<Matrix, Matrix> grading_eigenspaces(const Matrix& grading) {
    const Matrix h = 0.5 * (grading + grading.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    std::vector<Eigen::Index> plus, minus;
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
        (es.eigenvalues()[k] > 0.0 ? plus : minus).push_back(k);
    }
    Matrix pp(h.rows(), static_cast<Eigen::Index>(plus.size()));
    Matrix pm(h.rows(), static_cast<Eigen::Index>(minus.size()));
    for (std::size_t i = 0; i < plus.size(); ++i) pp.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(plus[i]);
    for (std::size_t i = 0; i < minus.size(); ++i) pm.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(minus[i]);
    return {pp, pm};
}

std::vector<cplx> as_complex(const RealVector& v) {
    std::vector<cplx> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v[i];
    return out;
}

}  // namespace

FiniteSpectralTriple::FiniteSpectralTriple(int n, Matrix grading, Matrix dirac, std::string label)
    : n_(n), grading_(std::move(grading)), dirac_(std::move(dirac)), label_(std::move(label)) {}

FiniteSpectralTriple FiniteSpectralTriple::make(int n, Matrix grading, Matrix dirac,
                                                std::string algebra_label) {
    if (n < 1) throw ContractViolation("triple: n must be >= 1");
    const Eigen::Index d = 2 * n;
    if (grading.rows() != d || grading.cols() != d || dirac.rows() != d || dirac.cols() != d) {
        throw ContractViolation("triple: grading and Dirac matrix must be 2n x 2n");
    }
    const double herm_g = (grading - grading.adjoint()).norm();
    if (herm_g > kGradingTol * std::max(1.0, grading.norm())) {
        throw ContractViolation("triple: grading is not selfadjoint (defect " + std::to_string(herm_g) + ")");
    }
    const double herm_d = (dirac - dirac.adjoint()).norm();
    if (herm_d > kSelfAdjointTol * std::max(1.0, dirac.norm())) {
        throw ContractViolation("triple: Dirac matrix is not selfadjoint (defect " +
                                std::to_string(herm_d) + ")");
    }
    const double inv = op_norm(grading * grading - Matrix::Identity(d, d));
    if (inv > kGradingTol) {
        throw ContractViolation("triple: grading^2 != 1 (defect " + std::to_string(inv) + ")");
    }
    const double tr = grading.trace().real();
    if (std::abs(tr) > 1e-9) {
        throw ContractViolation("triple: grading must have n eigenvalues +1 and n eigenvalues -1");
    }
    const double anti = op_norm(grading * dirac + dirac * grading);
    if (anti > kAnticommuteTol * std::max(1.0, op_norm(dirac))) {
        throw ContractViolation("triple: grading does not anticommute with D (defect " +
                                std::to_string(anti) + ")");
    }
    return FiniteSpectralTriple(n, 0.5 * (grading + grading.adjoint()), 0.5 * (dirac + dirac.adjoint()),
                                std::move(algebra_label));
}

FiniteSpectralTriple FiniteSpectralTriple::from_block(const Matrix& x, std::string algebra_label) {
    if (x.rows() != x.cols() || x.rows() < 1) throw ContractViolation("triple: X must be square");
    const Eigen::Index n = x.rows();
    Matrix g = Matrix::Zero(2 * n, 2 * n);
    g.topLeftCorner(n, n).setIdentity();
    g.bottomRightCorner(n, n) = -Matrix::Identity(n, n);
    Matrix d = Matrix::Zero(2 * n, 2 * n);
    d.topRightCorner(n, n) = x;
    d.bottomLeftCorner(n, n) = x.adjoint();
    return make(static_cast<int>(n), std::move(g), std::move(d), std::move(algebra_label));
}

FiniteSpectralTriple FiniteSpectralTriple::perturbed(const Matrix& f) const {
    return make(n_, grading_, dirac_ + f, label_);
}

FiniteSpectralTriple random_block_triple(int n, Rng& rng) {
    return FiniteSpectralTriple::from_block(random_complex(n, n, rng));
}

FiniteSpectralTriple triple_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("grading") || !j.contains("dirac")) {
        throw ConfigError("triple needs \"n\", \"grading\" and \"dirac\"");
    }
    if (!j["n"].is_number_integer()) throw ConfigError("triple: n must be an integer");
    const std::string label = j.value("algebra_label", std::string());
    try {
        return FiniteSpectralTriple::make(j["n"].get<int>(), matrix_from_json(j["grading"]),
                                          matrix_from_json(j["dirac"]), label);
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
}

nlohmann::json triple_to_json(const FiniteSpectralTriple& t) {
    return {{"n", t.n()},
            {"grading", matrix_to_json(t.grading())},
            {"dirac", matrix_to_json(t.dirac())},
            {"algebra_label", t.algebra_label()}};
}

GradingReport verify_grading_lemma(const Matrix& grading, const Matrix& dirac) {
    GradingReport r;
    const Eigen::Index d = dirac.rows();
    const Matrix dh = 0.5 * (dirac + dirac.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(dh, Eigen::EigenvaluesOnly);
    r.spectrum = es.eigenvalues();
    r.trace = dirac.trace().real();
    const double dnorm = r.spectrum.size() ? r.spectrum.cwiseAbs().maxCoeff() : 0.0;
    r.grading_defect = op_norm(grading * grading - Matrix::Identity(d, d));
    r.anticommutator_defect = op_norm(grading * dirac + dirac * grading) / std::max(1.0, dnorm);
    r.symmetry_defect = multiset_distance(as_complex(r.spectrum), as_complex(-r.spectrum));
    r.signature = signature_of(r.spectrum);

    const auto [pp, pm] = grading_eigenspaces(grading);
    const Matrix x = pp.adjoint() * dh * pm;
    if (x.size() > 0) {
        Eigen::JacobiSVD<Matrix> svd(x);
        r.singular_values = svd.singularValues();
    }
    const double smax = r.singular_values.size() ? r.singular_values.maxCoeff() : 0.0;
    const double smin = r.singular_values.size() ? r.singular_values.minCoeff() : 0.0;
    r.invertible = pp.cols() == pm.cols() && smax > 0.0 && smin > kZeroTol * smax;
    if (pp.cols() == pm.cols() && 2 * pp.cols() == d) {
        RealVector expect(d);
        expect << r.singular_values, -r.singular_values;
        r.block_defect = multiset_distance(as_complex(r.spectrum), as_complex(expect));
    } else {
        r.block_defect = std::numeric_limits<double>::infinity();
    }
    const double scale = std::max(1.0, dnorm);
    const int n = static_cast<int>(d / 2);
    r.holds = r.grading_defect <= kGradingTol && r.anticommutator_defect <= kAnticommuteTol &&
              r.symmetry_defect <= 1e-9 * scale && std::abs(r.trace) <= 1e-10 * scale &&
              r.block_defect <= 1e-9 * scale &&
              (!r.invertible || (r.signature.positives == n && r.signature.negatives == n));
    return r;
}

GradingReport verify_grading_lemma(const FiniteSpectralTriple& t) {
    return verify_grading_lemma(t.grading(), t.dirac());
}

CutoffFunction CutoffFunction::smooth_step(double width) {
    if (!(width > 0.0 && width < 1.0)) throw ContractViolation("smooth_step width must be in (0, 1)");
    return CutoffFunction(Kind::smooth_step, width);
}

CutoffFunction CutoffFunction::parse(const std::string& kind, double width) {
    if (kind == "hard_step") return hard_step();
    if (kind == "smooth_step") return smooth_step(width);
    if (kind == "gaussian") return gaussian();
    throw ConfigError("unknown cutoff kind \"" + kind + "\"");
}

std::string CutoffFunction::name() const {
    switch (kind_) {
        case Kind::hard_step: return "hard_step";
        case Kind::smooth_step: return "smooth_step";
        case Kind::gaussian: return "gaussian";
    }
    return "unknown";
}

double CutoffFunction::operator()(double v) const {
    const double x = std::abs(v);
    switch (kind_) {
        case Kind::hard_step: return x <= 1.0 ? 1.0 : 0.0;
        case Kind::smooth_step: {
            const double lo = 1.0 - width_, hi = 1.0 + width_;
            if (x <= lo) return 1.0;
            if (x >= hi) return 0.0;
            return 0.5 * (1.0 + std::cos(std::numbers::pi * (x - lo) / (hi - lo)));
        }
        case Kind::gaussian: return std::exp(-x * x);
    }
    return 0.0;
}

double CutoffFunction::support_end() const {
    switch (kind_) {
        case Kind::hard_step: return 1.0;
        case Kind::smooth_step: return 1.0 + width_;
        case Kind::gaussian: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double spectral_action(std::span<const double> eigenvalues, double cutoff, const CutoffFunction& f) {
    if (!(cutoff > 0.0)) throw ContractViolation("spectral_action: cutoff must be > 0");
    double s = 0.0;
    for (double l : eigenvalues) s += f(std::abs(l) / cutoff);
    return s;
}

double spectral_action(const Operator& d, double cutoff, const CutoffFunction& f) {
    const auto eig = eig_selfadjoint(d);
    return spectral_action(std::span<const double>(eig.values.data(), static_cast<std::size_t>(eig.values.size())),
                           cutoff, f);
}

std::vector<double> circle_dirac_spectrum(double radius, int j_max) {
    if (!(radius > 0.0) || j_max < 0) throw ContractViolation("circle spectrum: need R > 0, J >= 0");
    std::vector<double> s;
    for (int j = -j_max; j <= j_max; ++j) s.push_back(j / radius);
    return s;
}

std::vector<SweepRow> spectral_sweep(std::span<const double> eigenvalues, double lo, double hi,
                                     int samples, const CutoffFunction& f) {
    if (samples < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw ContractViolation("spectral_sweep: need samples >= 1 and 0 < lo <= hi");
    }
    std::vector<SweepRow> rows;
    for (int k = 0; k < samples; ++k) {
        const double c = samples == 1 ? lo : lo + (hi - lo) * k / (samples - 1);
        rows.push_back({c, spectral_action(eigenvalues, c, f)});
    }
    return rows;
}

Moment cutoff_moment(const CutoffFunction& f, int j) {
    if (j <= 0) {
        throw DivergentIntegral("moment f_" + std::to_string(j) +
                                " diverges at v = 0 since f(0) = 1");
    }
    using boost::math::quadrature::gauss_kronrod;
    const auto integrand = [&](double v) { return f(v) * std::pow(v, j - 1); };
    Moment m;
    m.j = j;
    std::vector<double> breaks{0.0};
    double tail = 0.0;
    switch (f.kind()) {
        case CutoffFunction::Kind::hard_step: breaks.push_back(1.0); break;
        case CutoffFunction::Kind::smooth_step:
            breaks.push_back(1.0 - f.width());
            breaks.push_back(1.0 + f.width());
            break;
        case CutoffFunction::Kind::gaussian: {
            // int_X^inf v^{j-1} e^{-v^2} dv = Gamma(j/2, X^2) / 2.
            double x = 1.0;
            while ((tail = 0.5 * boost::math::tgamma(0.5 * j, x * x)) > 1e-14) x += 1.0;
            breaks.push_back(1.0);
            breaks.push_back(x);
            break;
        }
    }
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        double err = 0.0;
        m.value += gauss_kronrod<double, 31>::integrate(integrand, breaks[k], breaks[k + 1], 15,
                                                        1e-14, &err);
        m.error_estimate += err;
    }
    m.error_estimate += tail;
    if (!(m.error_estimate <= 1e-10)) {
        throw NumericalFailure("moment quadrature did not reach 1e-10", m.error_estimate);
    }
    return m;
}

std::vector<Moment> cutoff_moments(const CutoffFunction& f, int max_j) {
    if (max_j < 1) throw DivergentIntegral("moments need j >= 1");
    std::vector<Moment> out;
    for (int j = 1; j <= max_j; ++j) out.push_back(cutoff_moment(f, j));
    return out;
}

Embedding Embedding::make(Matrix isometry) {
    const Eigen::Index k = isometry.cols();
    if (k < 1 || isometry.rows() < k) throw ContractViolation("embedding: need dim >= internal dim >= 1");
    const double defect = (isometry.adjoint() * isometry - Matrix::Identity(k, k)).norm();
    if (defect > 1e-10) {
        throw ContractViolation("embedding: columns not orthonormal (defect " + std::to_string(defect) + ")");
    }
    return Embedding(std::move(isometry));
}

Embedding Embedding::identity_block(Eigen::Index ambient_dim, Eigen::Index internal_dim) {
    return make(Matrix::Identity(ambient_dim, internal_dim));
}

Embedding random_embedding(Eigen::Index ambient_dim, Eigen::Index internal_dim, Rng& rng) {
    return Embedding::make(random_isometry(ambient_dim, internal_dim, rng));
}

bool equivalent(const Embedding& a, const Embedding& b, double tol) {
    if (a.ambient_dim() != b.ambient_dim() || a.internal_dim() != b.internal_dim()) return false;
    return (a.projector() - b.projector()).norm() <= tol;
}

namespace {

void check_embedding(const FiniteSpectralTriple& t, const Embedding& e) {
    if (e.internal_dim() != t.dim()) throw ContractViolation("embedding internal dim must be 2n");
}

}  // namespace

SpacetimePointOp embed(const FiniteSpectralTriple& t, const Embedding& e) {
    check_embedding(t, e);
    const Matrix& xi = e.isometry();
    return make_point(Matrix(xi * t.dirac() * xi.adjoint()), t.n());
}

double embedded_spectral_action(const FiniteSpectralTriple& t, const Embedding& e, double cutoff,
                                const CutoffFunction& f, bool exclude_padding) {
    const SpacetimePointOp x = embed(t, e);
    double s = spectral_action(x.op(), cutoff, f);
    if (exclude_padding) s -= static_cast<double>(e.ambient_dim() - t.dim()) * f(0.0);
    return s;
}

TwoPointKernel ncg_two_point(const FiniteSpectralTriple& t, const Embedding& a, const Embedding& b,
                             const Matrix& basis) {
    check_embedding(t, a);
    check_embedding(t, b);
    if (a.ambient_dim() != b.ambient_dim() || basis.rows() != a.ambient_dim()) {
        throw ContractViolation("ncg_two_point: ambient dimensions differ");
    }
    const Matrix pa = a.projector();
    const Matrix pb = b.projector();
    const Matrix db = b.isometry() * t.dirac() * b.isometry().adjoint();
    const Eigen::Index f = a.ambient_dim();
    Matrix op = Matrix::Zero(f, f);
    for (Eigen::Index i = 0; i < basis.cols(); ++i) {
        const Vector psi_a = pa * basis.col(i);
        const Vector psi_b = pb * basis.col(i);
        op += psi_a * (psi_b.adjoint() * db);
    }
    return {a.isometry().adjoint() * op * b.isometry(), a.isometry(), b.isometry()};
}

TwoPointKernel ncg_two_point(const FiniteSpectralTriple& t, const Embedding& a, const Embedding& b) {
    check_embedding(t, a);
    check_embedding(t, b);
    if (a.ambient_dim() != b.ambient_dim()) throw ContractViolation("ncg_two_point: ambient dimensions differ");
    return {a.isometry().adjoint() * b.isometry() * t.dirac(), a.isometry(), b.isometry()};
}

ActionReport causal_action_on_embeddings(const FiniteSpectralTriple& t,
                                         std::span<const Embedding> embeddings,
                                         std::span<const double> weights, Exec exec) {
    std::vector<SpacetimePointOp> pts;
    for (const auto& e : embeddings) pts.push_back(embed(t, e));
    return action_report(DiscreteMeasure(std::move(pts), {weights.begin(), weights.end()}),
                         kClassifyTol, exec);
}

}  // namespace cfslab
