#include "cfslab/trace_dynamics.hpp"

#include <charconv>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "cfslab/matrix_json.hpp"

namespace cfslab {

std::string_view to_string(TraceKind k) {
    switch (k) {
        case TraceKind::free_cross: return "free_cross";
        case TraceKind::stm: return "stm";
        case TraceKind::bateman: return "bateman";
    }
    return "unknown";
}

std::string_view to_string(Integrator m) {
    return m == Integrator::leapfrog ? "leapfrog" : "rk4";
}

void TraceLagrangianSpec::validate() const {
    const auto& p = params;
    if (!(p.length_scale > 0.0)) throw ContractViolation("trace spec: L must be > 0");
    if (!(p.planck_time > 0.0)) throw ContractViolation("trace spec: tau_P must be > 0");
    if (!(p.planck_length > 0.0)) throw ContractViolation("trace spec: L_P must be > 0");
    if (!(p.regulator >= 0.0)) throw ContractViolation("trace spec: regulator must be >= 0");
    if (!std::isfinite(p.alpha) || !std::isfinite(p.gamma) || !std::isfinite(p.k)) {
        throw ContractViolation("trace spec: parameters must be finite");
    }
}

namespace {

const Eigen::Matrix2d kSwap = (Eigen::Matrix2d() << 0.0, 1.0, 1.0, 0.0).finished();

double stm_kappa(const TraceParams& p) {
    return p.planck_length * p.planck_length / (2.0 * p.planck_time * p.length_scale * p.length_scale);
}

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    const std::string s(buf, res.ptr);
    return v < 0.0 ? "(" + s + ")" : s;
}

}  // namespace

Eigen::Matrix2d TraceLagrangianSpec::mass() const {
    Eigen::Matrix2d m = kSwap;
    if (kind == TraceKind::stm) m *= stm_kappa(params);
    m += 2.0 * params.regulator * Eigen::Matrix2d::Identity();
    return m;
}

Eigen::Matrix2d TraceLagrangianSpec::gyro() const {
    Eigen::Matrix2d b = Eigen::Matrix2d::Zero();
    if (kind == TraceKind::bateman) {
        b(0, 1) = -0.5 * params.gamma;
        b(1, 0) = 0.5 * params.gamma;
    }
    return b;
}

Eigen::Matrix2d TraceLagrangianSpec::stiffness() const {
    switch (kind) {
        case TraceKind::free_cross: return Eigen::Matrix2d::Zero();
        case TraceKind::stm: {
            const double w = params.alpha / params.length_scale;
            return stm_kappa(params) * w * w * kSwap;
        }
        case TraceKind::bateman: return params.k * kSwap;
    }
    return Eigen::Matrix2d::Zero();
}

TraceExpr TraceLagrangianSpec::expression() const {
    const Eigen::Matrix2d m = mass(), b = gyro(), k = stiffness();
    const char* q[2] = {"q1", "q2"};
    const char* v[2] = {"qdot1", "qdot2"};
    std::string s;
    const auto add = [&](double c, const std::string& body) {
        if (c == 0.0) return;
        if (!s.empty()) s += " + ";
        s += num(c) + "*tr(" + body + ")";
    };
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            add(0.5 * m(r, c), std::string(v[r]) + "*" + v[c]);
            add(b(r, c), std::string(v[r]) + "*" + q[c]);
            add(-0.5 * k(r, c), std::string(q[r]) + "*" + q[c]);
        }
    }
    if (s.empty()) s = "0*tr(q1)";
    return TraceExpr::parse(s);
}

namespace {

void check_state(const TraceState& s) {
    const Eigen::Index d = s.q1.rows();
    for (const Matrix* m : {&s.q1, &s.q2, &s.v1, &s.v2}) {
        if (m->rows() != d || m->cols() != d || d < 1) {
            throw ContractViolation("trace state: all matrices must be square of one size");
        }
    }
}

}  // namespace

MatrixPhaseState to_phase(const TraceLagrangianSpec& spec, const TraceState& s) {
    check_state(s);
    const Eigen::Matrix2d m = spec.mass(), b = spec.gyro();
    MatrixPhaseState ps;
    ps.tau = s.tau;
    ps.pairs.push_back({"q1", s.q1, m(0, 0) * s.v1 + m(0, 1) * s.v2 + b(0, 0) * s.q1 + b(0, 1) * s.q2});
    ps.pairs.push_back({"q2", s.q2, m(1, 0) * s.v1 + m(1, 1) * s.v2 + b(1, 0) * s.q1 + b(1, 1) * s.q2});
    return ps;
}

TraceState from_phase(const TraceLagrangianSpec& spec, const MatrixPhaseState& ps) {
    if (ps.pairs.size() != 2) throw ContractViolation("trace state: expected two (q, p) pairs");
    const Eigen::Matrix2d minv = spec.mass().inverse(), b = spec.gyro();
    const Matrix& q1 = ps.pairs[0].q;
    const Matrix& q2 = ps.pairs[1].q;
    const Matrix r1 = ps.pairs[0].p - b(0, 0) * q1 - b(0, 1) * q2;
    const Matrix r2 = ps.pairs[1].p - b(1, 0) * q1 - b(1, 1) * q2;
    TraceState s{ps.tau, q1, q2, minv(0, 0) * r1 + minv(0, 1) * r2, minv(1, 0) * r1 + minv(1, 1) * r2};
    check_state(s);
    return s;
}

Matrix adler_millard(const MatrixPhaseState& state) {
    const Eigen::Index d = state.dim();
    Matrix c = Matrix::Zero(d, d);
    for (const auto& pr : state.pairs) c += pr.q * pr.p - pr.p * pr.q;
    return c;
}

double trace_hamiltonian(const TraceLagrangianSpec& spec, const TraceState& s) {
    const Eigen::Matrix2d m = spec.mass(), k = spec.stiffness();
    const Matrix* q[2] = {&s.q1, &s.q2};
    const Matrix* v[2] = {&s.v1, &s.v2};
    cplx h = 0.0;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            if (m(r, c) != 0.0) h += 0.5 * m(r, c) * (*v[r] * *v[c]).trace();
            if (k(r, c) != 0.0) h += 0.5 * k(r, c) * (*q[r] * *q[c]).trace();
        }
    }
    return h.real();
}

ConservedCharges charges(const TraceLagrangianSpec& spec, const TraceState& s) {
    return {adler_millard(to_phase(spec, s)), trace_hamiltonian(spec, s)};
}

namespace {

struct Coefficients {
    Eigen::Matrix2d a;  // acceleration from q
    Eigen::Matrix2d c;  // acceleration from v
};

Coefficients coefficients(const TraceLagrangianSpec& spec) {
    const Eigen::Matrix2d minv = spec.mass().inverse();
    const Eigen::Matrix2d b = spec.gyro();
    return {-minv * spec.stiffness(), -minv * (b - b.transpose())};
}

std::pair<Matrix, Matrix> mix(const Eigen::Matrix2d& c, const Matrix& x1, const Matrix& x2) {
    return {c(0, 0) * x1 + c(0, 1) * x2, c(1, 0) * x1 + c(1, 1) * x2};
}

struct Deriv {
    Matrix dq1, dq2, dv1, dv2;
};

Deriv rhs(const Coefficients& co, const Matrix& q1, const Matrix& q2, const Matrix& v1,
          const Matrix& v2) {
    auto [aq1, aq2] = mix(co.a, q1, q2);
    auto [av1, av2] = mix(co.c, v1, v2);
    return {v1, v2, aq1 + av1, aq2 + av2};
}

TraceState step_with(const Coefficients& co, const TraceState& s, double h, Integrator method) {
    TraceState out;
    out.tau = s.tau + h;
    if (method == Integrator::rk4) {
        const Deriv k1 = rhs(co, s.q1, s.q2, s.v1, s.v2);
        const Deriv k2 = rhs(co, s.q1 + 0.5 * h * k1.dq1, s.q2 + 0.5 * h * k1.dq2,
                             s.v1 + 0.5 * h * k1.dv1, s.v2 + 0.5 * h * k1.dv2);
        const Deriv k3 = rhs(co, s.q1 + 0.5 * h * k2.dq1, s.q2 + 0.5 * h * k2.dq2,
                             s.v1 + 0.5 * h * k2.dv1, s.v2 + 0.5 * h * k2.dv2);
        const Deriv k4 = rhs(co, s.q1 + h * k3.dq1, s.q2 + h * k3.dq2, s.v1 + h * k3.dv1,
                             s.v2 + h * k3.dv2);
        const double w = h / 6.0;
        out.q1 = s.q1 + w * (k1.dq1 + 2.0 * k2.dq1 + 2.0 * k3.dq1 + k4.dq1);
        out.q2 = s.q2 + w * (k1.dq2 + 2.0 * k2.dq2 + 2.0 * k3.dq2 + k4.dq2);
        out.v1 = s.v1 + w * (k1.dv1 + 2.0 * k2.dv1 + 2.0 * k3.dv1 + k4.dv1);
        out.v2 = s.v2 + w * (k1.dv2 + 2.0 * k2.dv2 + 2.0 * k3.dv2 + k4.dv2);
        return out;
    }
    // Velocity Verlet; the velocity-dependent force makes the first half kick
    // implicit, solved with the 2x2 matrix (1 - h/2 C)^{-1}.
    const Eigen::Matrix2d solve = (Eigen::Matrix2d::Identity() - 0.5 * h * co.c).inverse();
    auto [aq1, aq2] = mix(co.a, s.q1, s.q2);
    const Matrix r1 = s.v1 + 0.5 * h * aq1;
    const Matrix r2 = s.v2 + 0.5 * h * aq2;
    auto [vh1, vh2] = mix(solve, r1, r2);
    out.q1 = s.q1 + h * vh1;
    out.q2 = s.q2 + h * vh2;
    auto [an1, an2] = mix(co.a, out.q1, out.q2);
    auto [cv1, cv2] = mix(co.c, vh1, vh2);
    out.v1 = vh1 + 0.5 * h * (an1 + cv1);
    out.v2 = vh2 + 0.5 * h * (an2 + cv2);
    return out;
}

double state_norm(const TraceState& s) {
    return std::max({s.q1.norm(), s.q2.norm(), s.v1.norm(), s.v2.norm()});
}

}  // namespace

std::pair<Matrix, Matrix> accelerations(const TraceLagrangianSpec& spec, const Matrix& q1,
                                        const Matrix& q2, const Matrix& v1, const Matrix& v2) {
    const Deriv d = rhs(coefficients(spec), q1, q2, v1, v2);
    return {d.dv1, d.dv2};
}

TraceState step(const TraceLagrangianSpec& spec, const TraceState& s, double dt, Integrator method) {
    return step_with(coefficients(spec), s, dt, method);
}

Trajectory integrate(const TraceLagrangianSpec& spec, const TraceState& initial, double dt, int steps,
                     Integrator method) {
    spec.validate();
    check_state(initial);
    if (!(dt > 0.0)) throw ContractViolation("integrate: dt must be > 0");
    if (steps < 0) throw ContractViolation("integrate: steps must be >= 0");
    const Coefficients co = coefficients(spec);
    Trajectory t;
    t.states.reserve(static_cast<std::size_t>(steps) + 1);
    t.charges.reserve(static_cast<std::size_t>(steps) + 1);
    t.states.push_back(initial);
    t.charges.push_back(charges(spec, initial));
    for (int k = 1; k <= steps; ++k) {
        TraceState next = step_with(co, t.states.back(), dt, method);
        next.tau = initial.tau + k * dt;
        const double nrm = state_norm(next);
        if (!(nrm <= kStabilityGuard)) {
            throw InstabilityError("trace dynamics: state norm " + std::to_string(nrm) +
                                       " passed the stability guard at step " + std::to_string(k) +
                                       " (tau = " + std::to_string(next.tau) + ", dt = " +
                                       std::to_string(dt) + ", method " +
                                       std::string(to_string(method)) + ")",
                                   nrm, k, next.tau);
        }
        t.charges.push_back(charges(spec, next));
        t.states.push_back(std::move(next));
    }
    return t;
}

TraceState exact_solution(const TraceLagrangianSpec& spec, const TraceState& initial, double tau) {
    check_state(initial);
    const Coefficients co = coefficients(spec);
    Eigen::Matrix4d gen = Eigen::Matrix4d::Zero();
    gen.topRightCorner<2, 2>().setIdentity();
    gen.bottomLeftCorner<2, 2>() = co.a;
    gen.bottomRightCorner<2, 2>() = co.c;
    const Eigen::Matrix4d e = (tau * gen).exp();
    const Matrix* y0[4] = {&initial.q1, &initial.q2, &initial.v1, &initial.v2};
    Matrix y[4];
    for (int r = 0; r < 4; ++r) {
        y[r] = Matrix::Zero(initial.dim(), initial.dim());
        for (int c = 0; c < 4; ++c) y[r] += e(r, c) * *y0[c];
    }
    return {initial.tau + tau, y[0], y[1], y[2], y[3]};
}

Matrix trace_derivative(const TraceExpr& lagrangian, const TraceState& at, const std::string& wrt,
                        const std::map<std::string, double>& scalars) {
    check_state(at);
    TraceEnv env;
    env.matrices = {{"q1", at.q1}, {"q2", at.q2}, {"qdot1", at.v1}, {"qdot2", at.v2}};
    env.scalars = scalars;
    return lagrangian.derivative(env, wrt);
}

NormalModes bateman_normal_modes(const TraceLagrangianSpec& spec, const TraceState& s) {
    if (spec.kind != TraceKind::bateman) throw ContractViolation("normal modes need the bateman kind");
    if (spec.params.gamma != 0.0) {
        throw ContractViolation("normal modes are only defined for gamma = 0");
    }
    check_state(s);
    for (const Matrix* m : {&s.q1, &s.q2, &s.v1, &s.v2}) {
        Matrix off = *m;
        off.diagonal().setZero();
        if (off.norm() > 1e-12 * std::max(1.0, m->norm())) {
            throw ContractViolation("normal modes are only defined for diagonal states");
        }
    }
    const double r = 1.0 / std::sqrt(2.0);
    NormalModes nm;
    nm.q_plus = r * (s.q1 + s.q2);
    nm.q_minus = r * (s.q1 - s.q2);
    nm.v_plus = r * (s.v1 + s.v2);
    nm.v_minus = r * (s.v1 - s.v2);
    const double k = spec.params.k;
    nm.energy_plus = 0.5 * (nm.v_plus * nm.v_plus + k * nm.q_plus * nm.q_plus).trace().real();
    nm.energy_minus = 0.5 * (nm.v_minus * nm.v_minus + k * nm.q_minus * nm.q_minus).trace().real();
    return nm;
}

Matrix q_unification(const Matrix& q, const Matrix& qdot, double alpha, double length_scale) {
    if (!(length_scale > 0.0)) throw ContractViolation("q_unification: L must be > 0");
    return qdot + cplx(0.0, alpha / length_scale) * q;
}

UnifiedExpansion unified_expansion(const Matrix& q1, const Matrix& v1, const Matrix& q2,
                                   const Matrix& v2, double alpha, double length_scale) {
    const double w = alpha / length_scale;
    const cplx iw(0.0, w);
    // (v1 + i w q1)^+ with the coefficient left unconjugated.
    const Matrix lhs = v1.adjoint() + iw * q1.adjoint();
    UnifiedExpansion e;
    e.total = (lhs * q_unification(q2, v2, alpha, length_scale)).trace();
    e.kinetic = (v1.adjoint() * v2).trace();
    e.potential = -w * w * (q1.adjoint() * q2).trace();
    e.cross = iw * (q1.adjoint() * v2 + v1.adjoint() * q2).trace();
    return e;
}

TraceRunConfig trace_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("trace spec must be a JSON object");
    TraceRunConfig c;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "free_cross") {
            c.spec.kind = TraceKind::free_cross;
        } else if (kind == "stm") {
            c.spec.kind = TraceKind::stm;
        } else if (kind == "bateman") {
            c.spec.kind = TraceKind::bateman;
        } else {
            throw ConfigError("trace spec: unknown kind \"" + kind + "\"");
        }
        if (j.contains("params")) {
            const auto& p = j["params"];
            auto& tp = c.spec.params;
            tp.alpha = p.value("alpha", tp.alpha);
            tp.length_scale = p.value("L_scale", tp.length_scale);
            tp.planck_length = p.value("L_P", tp.planck_length);
            tp.planck_time = p.value("tau_P", tp.planck_time);
            tp.gamma = p.value("gamma", tp.gamma);
            tp.k = p.value("k", tp.k);
            tp.regulator = p.value("epsilon", tp.regulator);
        }
        c.dt = j.at("dt").get<double>();
        c.steps = j.at("steps").get<int>();
        const std::string method = j.value("method", std::string("rk4"));
        if (method == "rk4") {
            c.method = Integrator::rk4;
        } else if (method == "leapfrog") {
            c.method = Integrator::leapfrog;
        } else {
            throw ConfigError("trace spec: unknown method \"" + method + "\"");
        }
        c.spec.validate();
        const auto& pairs = j.at("initial").at("pairs");
        if (!pairs.is_array() || pairs.size() != 2) {
            throw ConfigError("trace spec: initial.pairs must hold exactly two entries");
        }
        MatrixPhaseState ps;
        bool have_p = false, have_v = false;
        Matrix v[2];
        for (std::size_t r = 0; r < 2; ++r) {
            const auto& pj = pairs[r];
            MatrixPair mp;
            mp.name = pj.value("name", "q" + std::to_string(r + 1));
            mp.q = matrix_from_json(pj.at("q"));
            if (pj.contains("qdot")) {
                v[r] = matrix_from_json(pj["qdot"]);
                have_v = true;
            } else {
                mp.p = matrix_from_json(pj.at("p"));
                have_p = true;
            }
            ps.pairs.push_back(std::move(mp));
        }
        if (have_p && have_v) {
            throw ConfigError("trace spec: give either qdot or p for both pairs");
        }
        if (have_p) {
            c.initial = from_phase(c.spec, ps);
        } else {
            c.initial = {0.0, ps.pairs[0].q, ps.pairs[1].q, v[0], v[1]};
            check_state(c.initial);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trace spec: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("trace spec: ") + e.what());
    }
    if (!(c.dt > 0.0) || c.steps < 1) throw ConfigError("trace spec: need dt > 0 and steps >= 1");
    return c;
}

}  // namespace cfslab
