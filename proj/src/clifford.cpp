#include "cfslab/clifford.hpp"

#include <algorithm>
#include <cmath>

namespace cfslab {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Matrix pauli(char which) {
    Matrix m = Matrix::Zero(2, 2);
    switch (which) {
        case 'x': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
        case 'y': m(0, 1) = cplx(0.0, -1.0); m(1, 0) = cplx(0.0, 1.0); break;
        case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
        default: m.setIdentity(); break;
    }
    return m;
}

// 2m Hermitian, mutually anticommuting involutions on (C^2)^{(x) m}.
std::vector<Matrix> euclidean_generators(int m) {
    std::vector<Matrix> out;
    for (int k = 0; k < m; ++k) {
        for (char c : {'x', 'y'}) {
            Matrix g = Matrix::Identity(1, 1);
            for (int j = 0; j < m; ++j) g = kron(g, j < k ? pauli('z') : j == k ? pauli(c) : pauli('1'));
            out.push_back(g);
        }
    }
    return out;
}

}  // namespace

CliffordRep build_rep(int p, int q) {
    if (p < 0 || q < 0 || (p + q != 4 && p + q != 6)) {
        throw ContractViolation("build_rep: signature (" + std::to_string(p) + "," + std::to_string(q) +
                                ") unsupported; p + q must be 4 or 6");
    }
    CliffordRep rep;
    rep.p = p;
    rep.q = q;
    rep.gammas = euclidean_generators((p + q) / 2);
    rep.metric.resize(p + q);
    for (int a = 0; a < p + q; ++a) {
        if (a < p) {
            rep.metric[a] = 1.0;
        } else {
            rep.metric[a] = -1.0;
            rep.gammas[static_cast<std::size_t>(a)] *= cplx(0.0, 1.0);
        }
    }
    return rep;
}

CliffordRep flipped(const CliffordRep& rep) {
    CliffordRep f = rep;
    std::swap(f.p, f.q);
    for (auto& g : f.gammas) g *= cplx(0.0, 1.0);
    f.metric = -rep.metric;
    return f;
}

double anticommutator_defect(const CliffordRep& rep, const std::vector<int>& subset) {
    const Eigen::Index n = rep.spinor_dim();
    double worst = 0.0;
    for (int a : subset) {
        for (int b : subset) {
            const Matrix& ga = rep.gammas[static_cast<std::size_t>(a)];
            const Matrix& gb = rep.gammas[static_cast<std::size_t>(b)];
            Matrix d = ga * gb + gb * ga;
            if (a == b) d -= 2.0 * rep.metric[a] * Matrix::Identity(n, n);
            worst = std::max(worst, d.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

double anticommutator_defect(const CliffordRep& rep) {
    std::vector<int> all(static_cast<std::size_t>(rep.dim()));
    for (int a = 0; a < rep.dim(); ++a) all[static_cast<std::size_t>(a)] = a;
    return anticommutator_defect(rep, all);
}

namespace {

void check_length(const CliffordRep& rep, std::size_t len) {
    if (static_cast<int>(len) != rep.dim()) {
        throw ContractViolation("covector length " + std::to_string(len) + " does not match the " +
                                std::to_string(rep.dim()) + "-dimensional representation");
    }
}

}  // namespace

double metric_form(const CliffordRep& rep, std::span<const double> k) {
    check_length(rep, k.size());
    double s = 0.0;
    for (int a = 0; a < rep.dim(); ++a) s += rep.metric[a] * k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)];
    return s;
}

Matrix slash(const CliffordRep& rep, std::span<const double> k) {
    check_length(rep, k.size());
    Matrix m = Matrix::Zero(rep.spinor_dim(), rep.spinor_dim());
    for (int a = 0; a < rep.dim(); ++a) m += k[static_cast<std::size_t>(a)] * rep.gammas[static_cast<std::size_t>(a)];
    return m;
}

cplx dirac_square_on_wave(const CliffordRep& rep, const PlaneWave& wave) {
    check_length(rep, wave.k.size());
    if (wave.amplitude.size() != rep.spinor_dim() || wave.amplitude.norm() == 0.0) {
        throw ContractViolation("plane wave amplitude must be a nonzero spinor");
    }
    // d_a exp(i k.x) = i k_a exp(i k.x).
    const Matrix d = cplx(0.0, 1.0) * slash(rep, wave.k);
    const Matrix d2 = d * d;
    const Eigen::Index n = rep.spinor_dim();
    const cplx c = d2.trace() / static_cast<double>(n);
    const double defect = (d2 - c * Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (defect > 1e-10 * std::max(1.0, std::abs(c))) {
        throw NumericalFailure("D^2 on a plane wave is not scalar; representation is broken", defect);
    }
    const Vector out = d2 * wave.amplitude;
    return out.dot(wave.amplitude) == 0.0 ? c : wave.amplitude.dot(out) / wave.amplitude.squaredNorm();
}

double square_modulus(const CliffordRep& rep6, std::span<const double> x6) {
    if (rep6.dim() != 6) throw ContractViolation("square_modulus needs a 6-dimensional representation");
    const Matrix x = slash(rep6, x6);
    const Matrix xx = x * x;
    return (xx.trace() / static_cast<double>(rep6.spinor_dim())).real();
}

double square_modulus_closed_form(std::span<const double> x6) {
    if (x6.size() != 6) throw ContractViolation("square_modulus needs 6 components");
    return x6[0] * x6[0] + x6[1] * x6[1] + x6[2] * x6[2] - x6[3] * x6[3] - x6[4] * x6[4] - x6[5] * x6[5];
}

std::vector<std::string> axis_labels(const CliffordRep& rep) {
    if (rep.p == 1 && rep.q == 3) return {"t", "x", "y", "z"};
    std::vector<std::string> out;
    for (int a = 0; a < rep.p; ++a) out.push_back("t" + std::to_string(a + 1));
    for (int a = 0; a < rep.q; ++a) out.push_back("x" + std::to_string(a + 1));
    return out;
}

namespace {

SubsetReport subset_report(const CliffordRep& rep, const std::vector<std::string>& labels,
                           int want_p, int want_q) {
    const auto all = axis_labels(rep);
    SubsetReport r;
    r.labels = labels;
    for (const auto& l : labels) {
        const auto it = std::find(all.begin(), all.end(), l);
        const int idx = static_cast<int>(it - all.begin());
        r.indices.push_back(idx);
        (rep.metric[idx] > 0.0 ? r.positives : r.negatives) += 1;
    }
    r.defect = anticommutator_defect(rep, r.indices);
    r.valid = r.defect <= 1e-12 && r.positives == want_p && r.negatives == want_q;
    return r;
}

}  // namespace

SplitReport split_d6(const CliffordRep& rep6) {
    if (rep6.p != 3 || rep6.q != 3) throw ContractViolation("split_d6 needs a (3,3) representation");
    SplitReport s;
    s.d4 = subset_report(rep6, {"t1", "x1", "x2", "x3"}, 1, 3);
    s.d4_prime = subset_report(rep6, {"x1", "t1", "t2", "t3"}, 3, 1);
    for (const auto& l : s.d4.labels) {
        if (std::find(s.d4_prime.labels.begin(), s.d4_prime.labels.end(), l) != s.d4_prime.labels.end()) {
            s.shared.push_back(l);
        }
    }
    return s;
}

CliffordCheck dirac_square_sweep(const CliffordRep& rep, int samples, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CliffordCheck c;
    c.signature = "(" + std::to_string(rep.p) + "," + std::to_string(rep.q) + ")";
    c.samples = samples;
    for (int s = 0; s < samples; ++s) {
        PlaneWave w;
        for (int a = 0; a < rep.dim(); ++a) w.k.push_back(g(rng));
        w.amplitude = random_complex(rep.spinor_dim(), 1, rng).col(0);
        const double eta = metric_form(rep, w.k);
        const cplx f = dirac_square_on_wave(rep, w);
        c.max_defect = std::max(c.max_defect, std::abs(f + eta) / std::max(1.0, std::abs(eta)));
    }
    return c;
}

nlohmann::json to_json(const CliffordCheck& c) {
    return {{"signature", c.signature}, {"max_defect", c.max_defect}, {"samples", c.samples}};
}

}  // namespace cfslab
