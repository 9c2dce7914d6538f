#include "cfslab/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "cfslab/kernels.hpp"
#include "cfslab/matrix_json.hpp"
#include "cfslab/random.hpp"

namespace cfslab {

Matrix hermitian_from_params(std::span<const double> h, Eigen::Index f) {
    if (static_cast<Eigen::Index>(h.size()) != f * f) {
        throw ContractViolation("hermitian_from_params: need f^2 parameters");
    }
    Matrix m = Matrix::Zero(f, f);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < f; ++i) m(i, i) = h[k++];
    for (Eigen::Index i = 0; i < f; ++i) {
        for (Eigen::Index j = i + 1; j < f; ++j) {
            const cplx v(h[k], h[k + 1]);
            k += 2;
            m(i, j) = v;
            m(j, i) = std::conj(v);
        }
    }
    return m;
}

namespace {

struct UnitaryChart {
    Matrix v;          // eigenvectors of H
    RealVector lambda; // eigenvalues of H
    Matrix u;          // exp(iH)
};

UnitaryChart unitary_chart(std::span<const double> h, Eigen::Index f) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_from_params(h, f));
    UnitaryChart c;
    c.v = es.eigenvectors();
    c.lambda = es.eigenvalues();
    Vector phases(f);
    for (Eigen::Index k = 0; k < f; ++k) phases[k] = std::exp(cplx(0.0, c.lambda[k]));
    c.u = c.v * phases.asDiagonal() * c.v.adjoint();
    return c;
}

void check_chart_args(std::span<const double> params, Eigen::Index f, int n) {
    if (n < 1 || 2 * n > f) throw ContractViolation("chart needs 1 <= n and 2n <= f");
    if (static_cast<Eigen::Index>(params.size()) != chart_dim(f, n)) {
        throw ContractViolation("chart parameter vector has length " +
                                std::to_string(params.size()) + ", expected " +
                                std::to_string(chart_dim(f, n)));
    }
}

Matrix assemble(const Matrix& w, const RealVector& nu, const RealVector& mu) {
    const Eigen::Index n = nu.size();
    RealVector d(2 * n);
    d << nu, -mu;
    return w * d.cast<cplx>().asDiagonal() * w.adjoint();
}

}  // namespace

ChartPoint chart_point(std::span<const double> params, Eigen::Index f, int n) {
    check_chart_args(params, f, n);
    ChartPoint c;
    c.nu.resize(n);
    c.mu.resize(n);
    for (int k = 0; k < n; ++k) {
        c.nu[k] = params[k] * params[k];
        c.mu[k] = params[n + k] * params[n + k];
    }
    const auto uc = unitary_chart(params.subspan(2 * n), f);
    c.w = uc.u.leftCols(2 * n);
    c.x = assemble(c.w, c.nu, c.mu);
    return c;
}

SpacetimePointOp parameterize_point(std::span<const double> params, Eigen::Index f, int n) {
    return make_point(chart_point(params, f, n).x, n);
}

void MinimizeProblem::validate() const {
    if (spin_dim < 1) throw ContractViolation("problem: spin_dim must be >= 1");
    if (ambient_dim < 2 * spin_dim) throw ContractViolation("problem: ambient_dim must be >= 2n");
    if (num_points < 1) throw ContractViolation("problem: num_points must be >= 1");
    if (!(target_volume > 0.0) || !std::isfinite(target_volume)) {
        throw ContractViolation("problem: target_volume must be > 0");
    }
    if (!std::isfinite(target_trace)) throw ContractViolation("problem: target_trace must be finite");
    if (schedule.max_iterations < 1 || schedule.stall_window < 1 || schedule.replicas < 1 ||
        !(schedule.initial_step > 0.0) || schedule.penalty_rounds < 0 ||
        !(schedule.penalty_weight >= 0.0) || !(schedule.tolerance > 0.0) ||
        !(schedule.initial_temperature >= 0.0) || !(schedule.cooling > 0.0 && schedule.cooling <= 1.0)) {
        throw ContractViolation("problem: invalid schedule");
    }
    if (boundedness_cap) {
        const double c = *boundedness_cap;
        if (!(c > 0.0)) throw ContractViolation("problem: boundedness cap must be > 0");
        const double t = target_trace, v = target_volume;
        // Diagonal pairs alone give T_b >= sum w_i^2 tr(x_i)^4 / n^2 >= T^4 / (n^2 m V^2).
        const double bound = t * t * t * t / (static_cast<double>(spin_dim) * spin_dim * num_points * v * v);
        if (c < bound) {
            throw InfeasibleProblem("boundedness cap " + std::to_string(c) +
                                    " is below the lower bound " + std::to_string(bound) +
                                    " implied by the trace and volume targets");
        }
    }
}

MinimizeProblem problem_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("problem must be a JSON object");
    MinimizeProblem p;
    try {
        p.ambient_dim = j.at("ambient_dim").get<int>();
        p.spin_dim = j.at("spin_dim").get<int>();
        p.num_points = j.value("num_points", 1);
        p.target_volume = j.at("target_volume").get<double>();
        p.target_trace = j.at("target_trace").get<double>();
        if (j.contains("boundedness_cap") && !j["boundedness_cap"].is_null()) {
            p.boundedness_cap = j["boundedness_cap"].get<double>();
        }
        p.seed = j.value("seed", std::uint64_t{1});
        if (j.contains("schedule")) {
            const auto& s = j["schedule"];
            const std::string driver = s.value("driver", std::string("gradient"));
            if (driver == "gradient") {
                p.schedule.driver = Driver::gradient;
            } else if (driver == "annealing") {
                p.schedule.driver = Driver::annealing;
            } else {
                throw ConfigError("problem: unknown driver \"" + driver + "\"");
            }
            p.schedule.max_iterations = s.value("max_iterations", p.schedule.max_iterations);
            p.schedule.tolerance = s.value("tolerance", p.schedule.tolerance);
            p.schedule.initial_step = s.value("initial_step", p.schedule.initial_step);
            p.schedule.penalty_weight = s.value("penalty_weight", p.schedule.penalty_weight);
            p.schedule.penalty_rounds = s.value("penalty_rounds", p.schedule.penalty_rounds);
            p.schedule.stall_window = s.value("stall_window", p.schedule.stall_window);
            p.schedule.replicas = s.value("replicas", p.schedule.replicas);
            p.schedule.initial_temperature =
                s.value("initial_temperature", p.schedule.initial_temperature);
            p.schedule.cooling = s.value("cooling", p.schedule.cooling);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
    try {
        p.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return p;
}

namespace {

struct Decoded {
    std::vector<UnitaryChart> unitaries;
    std::vector<Matrix> w;          // f x 2n
    std::vector<RealVector> nu, mu; // before the trace rescale
    std::vector<double> weights;
    std::vector<double> p_i, q_i;   // sum nu, sum mu per point
    double p = 0.0, q = 0.0, u = 1.0;
    bool valid = true;
    std::vector<SpacetimePointOp> points;
};

Decoded decode(std::span<const double> theta, const MinimizeProblem& pr) {
    if (static_cast<Eigen::Index>(theta.size()) != pr.num_params()) {
        throw ContractViolation("parameter vector has wrong length");
    }
    const Eigen::Index f = pr.ambient_dim;
    const int n = pr.spin_dim;
    const auto cd = static_cast<std::size_t>(chart_dim(f, n));
    const auto m = static_cast<std::size_t>(pr.num_points);
    Decoded d;

    const auto beta = theta.subspan(m * cd, m);
    const double bmax = *std::max_element(beta.begin(), beta.end());
    double z = 0.0;
    d.weights.resize(m);
    for (std::size_t i = 0; i < m; ++i) z += (d.weights[i] = std::exp(beta[i] - bmax));
    for (double& w : d.weights) w *= pr.target_volume / z;

    for (std::size_t i = 0; i < m; ++i) {
        const auto par = theta.subspan(i * cd, cd);
        RealVector nu(n), mu(n);
        for (int k = 0; k < n; ++k) {
            nu[k] = par[k] * par[k];
            mu[k] = par[n + k] * par[n + k];
        }
        d.unitaries.push_back(unitary_chart(par.subspan(2 * n), f));
        d.w.push_back(d.unitaries.back().u.leftCols(2 * n));
        d.p_i.push_back(nu.sum());
        d.q_i.push_back(mu.sum());
        d.p += d.weights[i] * nu.sum();
        d.q += d.weights[i] * mu.sum();
        d.nu.push_back(std::move(nu));
        d.mu.push_back(std::move(mu));
    }
    // P u - Q / u = T for u > 0.
    const double t = pr.target_trace;
    const double root = std::sqrt(t * t + 4.0 * d.p * d.q);
    if (d.p > 0.0) {
        d.u = t >= 0.0 ? (t + root) / (2.0 * d.p) : 2.0 * d.q / (root - t);
    } else if (d.q > 0.0 && t < 0.0) {
        d.u = d.q / -t;
    } else {
        d.valid = (t == 0.0 && d.q == 0.0);
    }
    if (!(d.u > 0.0) || !std::isfinite(d.u)) d.valid = false;
    if (!d.valid) return d;
    for (std::size_t i = 0; i < m; ++i) {
        const Matrix x = assemble(d.w[i], d.u * d.nu[i], d.mu[i] / d.u);
        d.points.push_back(make_point(x, n));
    }
    return d;
}

double penalty_of(double bound, const MinimizeProblem& pr, double r) {
    if (!pr.boundedness_cap) return 0.0;
    const double excess = std::max(0.0, bound - *pr.boundedness_cap);
    return 0.5 * r * excess * excess;
}

// Complex divided difference of t -> exp(it) at (a, b).
cplx exp_divided_difference(double a, double b) {
    const double h = 0.5 * (a - b);
    const double sinc = std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
    return cplx(0.0, 1.0) * std::exp(cplx(0.0, 0.5 * (a + b))) * sinc;
}

}  // namespace

std::optional<DiscreteMeasure> measure_from_params(std::span<const double> theta,
                                                   const MinimizeProblem& problem) {
    Decoded d = decode(theta, problem);
    if (!d.valid) return std::nullopt;
    return DiscreteMeasure(std::move(d.points), std::move(d.weights));
}

double penalty_value(const DiscreteMeasure& rho, const MinimizeProblem& problem,
                     double penalty_weight) {
    const auto table = kernels::pair_table(rho.points(), kClassifyTol, Exec::parallel);
    double action = 0.0, bound = 0.0;
    const auto& w = rho.weights();
    for (std::size_t i = 0; i < rho.size(); ++i) {
        double rl = 0.0, rb = 0.0;
        for (std::size_t j = 0; j < rho.size(); ++j) {
            rl += w[j] * table.at(i, j).lagrangian;
            rb += w[j] * table.at(i, j).boundedness;
        }
        action += w[i] * rl;
        bound += w[i] * rb;
    }
    return action + penalty_of(bound, problem, penalty_weight);
}

ObjectiveValue penalty_objective(std::span<const double> theta, const MinimizeProblem& pr,
                                 double r, bool with_gradient, Exec exec) {
    ObjectiveValue out;
    Decoded d = decode(theta, pr);
    if (!d.valid) {
        out.value = std::numeric_limits<double>::infinity();
        out.action = out.value;
        if (with_gradient) out.gradient.assign(theta.size(), 0.0);
        return out;
    }
    const std::size_t m = d.points.size();
    const auto& w = d.weights;

    const auto table = kernels::pair_table(d.points, kClassifyTol, exec);
    for (std::size_t i = 0; i < m; ++i) {
        double rl = 0.0, rb = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            rl += w[j] * table.at(i, j).lagrangian;
            rb += w[j] * table.at(i, j).boundedness;
        }
        out.action += w[i] * rl;
        out.boundedness += w[i] * rb;
    }
    out.penalty = penalty_of(out.boundedness, pr, r);
    out.value = out.action + out.penalty;
    if (!with_gradient) return out;

    const Eigen::Index f = pr.ambient_dim;
    const int n = pr.spin_dim;
    const auto cd = static_cast<std::size_t>(chart_dim(f, n));
    const double pen_slope =
        pr.boundedness_cap ? r * std::max(0.0, out.boundedness - *pr.boundedness_cap) : 0.0;

    const auto grads = exec == Exec::serial ? kernels::pair_gradients_serial(d.points)
                                            : kernels::pair_gradients_parallel(d.points);
    out.gradient.assign(theta.size(), 0.0);
    std::vector<double> g_w(m, 0.0);
    std::vector<RealVector> g_nu(m), g_mu(m);
    double g_l = 0.0;  // dF / d ln u

    for (std::size_t i = 0; i < m; ++i) {
        Matrix gx = Matrix::Zero(f, f);
        for (std::size_t j = 0; j < m; ++j) {
            const auto& pg = grads[i * m + j];
            gx += w[j] * (pg.d_lagrangian + pen_slope * pg.d_boundedness);
            g_w[i] += 2.0 * w[j] * (table.at(i, j).lagrangian + pen_slope * table.at(i, j).boundedness);
        }
        gx *= 2.0 * w[i];

        const Matrix& wm = d.w[i];
        const Matrix wgw = wm.adjoint() * gx * wm;
        const RealVector nu_t = d.u * d.nu[i];
        const RealVector mu_t = d.mu[i] / d.u;
        g_nu[i].resize(n);
        g_mu[i].resize(n);
        for (int k = 0; k < n; ++k) {
            g_nu[i][k] = wgw(k, k).real();
            g_mu[i][k] = -wgw(n + k, n + k).real();
            g_l += g_nu[i][k] * nu_t[k] - g_mu[i][k] * mu_t[k];
        }

        // Unitary block: dF = 2 Re tr(E dU), E = S D W* G.
        RealVector dvals(2 * n);
        dvals << nu_t, -mu_t;
        Matrix e = Matrix::Zero(f, f);
        e.topRows(2 * n) = dvals.cast<cplx>().asDiagonal() * wm.adjoint() * gx;
        const auto& uc = d.unitaries[i];
        const Matrix et = uc.v.adjoint() * e * uc.v;
        Matrix z(f, f);
        for (Eigen::Index k = 0; k < f; ++k) {
            for (Eigen::Index l = 0; l < f; ++l) {
                z(k, l) = et(l, k) * exp_divided_difference(uc.lambda[k], uc.lambda[l]);
            }
        }
        const Matrix kmat = uc.v * z.transpose() * uc.v.adjoint();
        double* gh = out.gradient.data() + i * cd + 2 * n;
        std::size_t idx = 0;
        for (Eigen::Index a = 0; a < f; ++a) gh[idx++] = 2.0 * kmat(a, a).real();
        const cplx iu(0.0, 1.0);
        for (Eigen::Index a = 0; a < f; ++a) {
            for (Eigen::Index b = a + 1; b < f; ++b) {
                gh[idx++] = 2.0 * (kmat(a, b) + kmat(b, a)).real();
                gh[idx++] = 2.0 * (iu * kmat(b, a) - iu * kmat(a, b)).real();
            }
        }
    }

    // Trace rescale u(P, Q).
    const double a = d.u * d.p + d.q / d.u;
    const double dl_dp = -d.u / a;
    const double dl_dq = 1.0 / (d.u * a);
    for (std::size_t i = 0; i < m; ++i) {
        const auto par = theta.subspan(i * cd, cd);
        double* g = out.gradient.data() + i * cd;
        for (int k = 0; k < n; ++k) {
            const double dnu = g_nu[i][k] * d.u + g_l * dl_dp * w[i];
            const double dmu = g_mu[i][k] / d.u + g_l * dl_dq * w[i];
            g[k] = 2.0 * par[k] * dnu;
            g[n + k] = 2.0 * par[n + k] * dmu;
        }
        g_w[i] += g_l * (dl_dp * d.p_i[i] + dl_dq * d.q_i[i]);
    }
    // Softmax weights.
    double avg = 0.0;
    for (std::size_t i = 0; i < m; ++i) avg += g_w[i] * w[i];
    avg /= pr.target_volume;
    for (std::size_t i = 0; i < m; ++i) out.gradient[m * cd + i] = w[i] * (g_w[i] - avg);
    return out;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::MaxIterations: return "max_iterations";
        case Termination::Stalled: return "stalled";
        case Termination::CapViolated: return "cap_violated";
    }
    return "unknown";
}

double trace_spread(const DiscreteMeasure& rho) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : rho.points()) {
        lo = std::min(lo, p.trace());
        hi = std::max(hi, p.trace());
    }
    return hi - lo;
}

Residuals residuals_of(const DiscreteMeasure& rho, const Constraints& c,
                       const MinimizeProblem& pr) {
    (void)rho;
    Residuals r;
    r.volume = std::abs(c.volume - pr.target_volume) / pr.target_volume;
    r.trace = std::abs(c.trace_integral - pr.target_trace) / std::max(1.0, std::abs(pr.target_trace));
    if (pr.boundedness_cap) {
        r.boundedness = std::max(0.0, c.boundedness - *pr.boundedness_cap) / *pr.boundedness_cap;
    }
    return r;
}

DiscreteMeasure merge_close_points(const DiscreteMeasure& rho, double tol) {
    std::vector<SpacetimePointOp> pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const auto& x = rho.points()[i];
        bool merged = false;
        for (std::size_t r = 0; r < pts.size(); ++r) {
            const Matrix diff = x.matrix() - pts[r].matrix();
            Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().cwiseAbs().maxCoeff() < tol) {
                w[r] += rho.weights()[i];
                merged = true;
                break;
            }
        }
        if (!merged) {
            pts.push_back(x);
            w.push_back(rho.weights()[i]);
        }
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

std::vector<double> initial_params(const MinimizeProblem& pr) {
    pr.validate();
    Rng rng(pr.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = pr.spin_dim;
    const auto cd = static_cast<std::size_t>(chart_dim(pr.ambient_dim, n));
    const auto m = static_cast<std::size_t>(pr.num_points);
    std::vector<double> theta(pr.num_params(), 0.0);
    for (std::size_t i = 0; i < m * cd; ++i) theta[i] = g(rng);
    for (std::size_t i = 0; i < m; ++i) {
        double* par = theta.data() + i * cd;
        for (int k = 0; k < 2 * n; ++k) {
            if (std::abs(par[k]) < 0.1) par[k] = par[k] < 0.0 ? -0.1 : 0.1;
        }
    }
    return theta;
}

namespace {

struct RunState {
    std::vector<double> theta;
    std::vector<HistoryRow> history;
    int iterations = 0;
    Termination termination = Termination::MaxIterations;
};

HistoryRow history_row(int it, std::span<const double> theta, const MinimizeProblem& pr,
                       const ObjectiveValue& ov) {
    HistoryRow row;
    row.iteration = it;
    row.action = ov.action;
    const auto rho = measure_from_params(theta, pr);
    if (rho) {
        Constraints c{rho->volume(), 0.0, ov.boundedness};
        for (std::size_t i = 0; i < rho->size(); ++i) {
            c.trace_integral += rho->weights()[i] * rho->points()[i].trace();
        }
        row.residuals = residuals_of(*rho, c, pr);
        row.trace_spread = trace_spread(*rho);
    }
    return row;
}

double grad_norm(const std::vector<double>& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// L-BFGS two-loop recursion: returns -H g.
std::vector<double> lbfgs_direction(const std::vector<double>& g, const std::deque<std::vector<double>>& ss,
                                    const std::deque<std::vector<double>>& ys) {
    std::vector<double> q = g;
    const std::size_t k = ss.size();
    std::vector<double> alpha(k);
    for (std::size_t j = k; j-- > 0;) {
        alpha[j] = dot(ss[j], q) / dot(ys[j], ss[j]);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[j] * ys[j][i];
    }
    if (k > 0) {
        const double gamma = dot(ss.back(), ys.back()) / dot(ys.back(), ys.back());
        for (double& v : q) v *= gamma;
    }
    for (std::size_t j = 0; j < k; ++j) {
        const double beta = dot(ys[j], q) / dot(ys[j], ss[j]);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[j] - beta) * ss[j][i];
    }
    for (double& v : q) v = -v;
    return q;
}

// Moves the trace rescale into the parameters (a -> a sqrt(u), b -> b / sqrt(u))
// so the decoded measure is unchanged and u returns to 1. Returns the per-
// coordinate scale factors.
std::vector<double> absorb_rescale(std::vector<double>& theta, const MinimizeProblem& pr) {
    std::vector<double> scale(theta.size(), 1.0);
    const Decoded d = decode(theta, pr);
    if (!d.valid) return scale;
    const int n = pr.spin_dim;
    const auto cd = static_cast<std::size_t>(chart_dim(pr.ambient_dim, n));
    const double root = std::sqrt(d.u);
    for (std::size_t i = 0; i < static_cast<std::size_t>(pr.num_points); ++i) {
        for (int k = 0; k < n; ++k) {
            scale[i * cd + k] = root;
            scale[i * cd + n + k] = 1.0 / root;
        }
    }
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] *= scale[i];
    return scale;
}

Termination gradient_descent(RunState& st, const MinimizeProblem& pr, double r, int budget) {
    constexpr std::size_t kMemory = 8;
    const auto& sc = pr.schedule;
    ObjectiveValue cur = penalty_objective(st.theta, pr, r, true);
    std::deque<std::vector<double>> ss, ys;
    int rejects = 0;
    int flat = 0;
    for (int k = 0; k < budget;) {
        const double gn = grad_norm(cur.gradient);
        if (gn <= sc.tolerance * std::max(1.0, std::abs(cur.value))) return Termination::Converged;
        std::vector<double> dir = lbfgs_direction(cur.gradient, ss, ys);
        double slope = dot(cur.gradient, dir);
        if (!(slope < 0.0)) {
            ss.clear();
            ys.clear();
            dir = lbfgs_direction(cur.gradient, ss, ys);
            slope = -gn * gn;
        }
        double step = ss.empty() ? sc.initial_step : 1.0;
        // F is only resolved to about eps times the size of its terms.
        const double noise = 1e-13 * std::max(std::abs(cur.value), cur.boundedness);
        bool accepted = false;
        std::optional<ObjectiveValue> next;
        std::vector<double> trial(st.theta.size());
        while (k < budget) {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = st.theta[i] + step * dir[i];
            const ObjectiveValue tv = penalty_objective(trial, pr, r, false);
            ++st.iterations;
            ++k;
            if (tv.value <= cur.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            if (tv.value <= cur.value + noise) {
                // Approximate Armijo: decide on the directional derivative instead.
                ObjectiveValue tg = penalty_objective(trial, pr, r, true);
                const double d = dot(tg.gradient, dir);
                if (d >= 0.9 * slope && d <= -0.9 * slope) {
                    next = std::move(tg);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
            if (-step * slope <= 1e-3 * noise) return Termination::Converged;
            if (++rejects >= sc.stall_window) return Termination::Stalled;
        }
        if (!accepted) break;
        rejects = 0;
        if (!next) next = penalty_objective(trial, pr, r, true);
        const double drop = cur.value - next->value;
        std::vector<double> sv(trial.size()), yv(trial.size());
        for (std::size_t i = 0; i < trial.size(); ++i) {
            sv[i] = trial[i] - st.theta[i];
            yv[i] = next->gradient[i] - cur.gradient[i];
        }
        if (dot(sv, yv) > 1e-12 * std::sqrt(dot(sv, sv) * dot(yv, yv))) {
            ss.push_back(std::move(sv));
            ys.push_back(std::move(yv));
            if (ss.size() > kMemory) {
                ss.pop_front();
                ys.pop_front();
            }
        }
        st.theta = std::move(trial);
        const auto scale = absorb_rescale(st.theta, pr);
        for (std::size_t j = 0; j < ss.size(); ++j) {
            for (std::size_t i = 0; i < scale.size(); ++i) {
                ss[j][i] *= scale[i];
                ys[j][i] /= scale[i];
            }
        }
        for (std::size_t i = 0; i < scale.size(); ++i) next->gradient[i] /= scale[i];
        cur = std::move(*next);
        st.history.push_back(history_row(st.iterations, st.theta, pr, cur));
        flat = drop <= 1e-15 * std::max(1.0, std::abs(cur.value)) ? flat + 1 : 0;
        if (flat >= 10) return Termination::Converged;
    }
    return Termination::MaxIterations;
}

struct Chain {
    std::vector<double> best;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<HistoryRow> history;
    int iterations = 0;
    Termination termination = Termination::MaxIterations;
};

Chain anneal(const std::vector<double>& start, const MinimizeProblem& pr, double r, int replica) {
    const auto& sc = pr.schedule;
    std::seed_seq seq{static_cast<std::uint32_t>(pr.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(pr.seed >> 32), static_cast<std::uint32_t>(replica)};
    Rng rng(seq);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    Chain ch;
    std::vector<double> x = start;
    double fx = penalty_objective(x, pr, r, false, Exec::serial).value;
    ch.best = x;
    ch.best_value = fx;
    const double t0 = sc.initial_temperature * std::max(1.0, std::abs(fx));
    double sigma = sc.initial_step;
    int accepted = 0, idle_periods = 0;
    bool improved = false;
    HistoryRow best_row = history_row(0, ch.best, pr, penalty_objective(ch.best, pr, r, false, Exec::serial));
    constexpr int kPeriod = 50;
    for (int k = 1; k <= sc.max_iterations; ++k) {
        std::vector<double> y = x;
        for (double& v : y) v += sigma * g(rng);
        const double fy = penalty_objective(y, pr, r, false, Exec::serial).value;
        const double temp = t0 * std::pow(sc.cooling, k);
        const double coin = u(rng);
        if (fy <= fx || (temp > 0.0 && std::isfinite(fy) && coin < std::exp(-(fy - fx) / temp))) {
            x = std::move(y);
            fx = fy;
            ++accepted;
            if (fx < ch.best_value) {
                ch.best_value = fx;
                ch.best = x;
                improved = true;
                best_row = history_row(k, ch.best, pr,
                                       penalty_objective(ch.best, pr, r, false, Exec::serial));
            }
        }
        ch.iterations = k;
        best_row.iteration = k;
        ch.history.push_back(best_row);
        if (k % kPeriod == 0) {
            const double rate = static_cast<double>(accepted) / kPeriod;
            if (rate > 0.4) sigma *= 1.5;
            if (rate < 0.2) sigma *= 0.5;
            accepted = 0;
            idle_periods = improved ? 0 : idle_periods + 1;
            improved = false;
            if (sigma < 1e-12) {
                ch.termination = Termination::Converged;
                return ch;
            }
            if (idle_periods >= sc.stall_window) {
                ch.termination = Termination::Stalled;
                return ch;
            }
        }
    }
    return ch;
}

}  // namespace

MinimizeResult minimize(const MinimizeProblem& problem) {
    problem.validate();
    const auto& sc = problem.schedule;
    RunState st;
    st.theta = initial_params(problem);
    double r = problem.boundedness_cap ? sc.penalty_weight : 0.0;

    for (int round = 0; round <= sc.penalty_rounds; ++round) {
        if (sc.driver == Driver::gradient) {
            st.termination = gradient_descent(st, problem, r, sc.max_iterations - st.iterations);
        } else {
            std::vector<Chain> chains(static_cast<std::size_t>(sc.replicas));
            const auto reps = static_cast<std::ptrdiff_t>(sc.replicas);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t c = 0; c < reps; ++c) {
                chains[static_cast<std::size_t>(c)] =
                    anneal(st.theta, problem, r, round * sc.replicas + static_cast<int>(c));
            }
            std::size_t win = 0;
            for (std::size_t c = 1; c < chains.size(); ++c) {
                if (chains[c].best_value < chains[win].best_value) win = c;
            }
            Chain& best = chains[win];
            for (auto& row : best.history) row.iteration += st.iterations;
            st.history.insert(st.history.end(), best.history.begin(), best.history.end());
            st.iterations += best.iterations;
            st.theta = best.best;
            st.termination = best.termination;
        }
        if (!problem.boundedness_cap) break;
        const auto ov = penalty_objective(st.theta, problem, r, false);
        const double excess = (ov.boundedness - *problem.boundedness_cap) / *problem.boundedness_cap;
        if (excess <= 1e-6) break;
        if (round == sc.penalty_rounds) break;
        r = std::max(r, 1.0) * 10.0;
        if (sc.driver == Driver::gradient && st.iterations >= sc.max_iterations) break;
    }

    auto rho = measure_from_params(st.theta, problem);
    if (!rho) throw NumericalFailure("minimizer left the valid chart region", 0.0);
    MinimizeResult res{merge_close_points(*rho), st.theta, 0.0, {}, {}, 0.0, 0, Termination::MaxIterations, {}};
    const auto rep = action_report(res.measure);
    res.action = rep.action;
    res.constraints = rep.constraints;
    res.residuals = residuals_of(res.measure, res.constraints, problem);
    res.trace_spread = trace_spread(res.measure);
    res.iterations = st.iterations;
    res.termination = res.residuals.boundedness > 1e-6 ? Termination::CapViolated : st.termination;
    res.history = std::move(st.history);
    return res;
}

nlohmann::json result_to_json(const MinimizeResult& r) {
    nlohmann::json j;
    j["measure"] = measure_to_json(r.measure);
    j["action"] = r.action;
    j["constraints"] = {{"volume", r.constraints.volume},
                        {"trace_integral", r.constraints.trace_integral},
                        {"boundedness", r.constraints.boundedness}};
    j["residuals"] = {{"volume", r.residuals.volume},
                      {"trace", r.residuals.trace},
                      {"boundedness", r.residuals.boundedness}};
    j["trace_spread"] = r.trace_spread;
    j["iterations"] = r.iterations;
    j["termination"] = std::string(to_string(r.termination));
    return j;
}

}  // namespace cfslab
