#pragma once

// Bosonic matrix trace dynamics for two matrix degrees of freedom q1, q2.
//
// Every built-in kind is a quadratic trace Lagrangian
//   L = Tr[ 1/2 sum_rs M_rs qdot_r qdot_s + sum_rs B_rs qdot_r q_s - 1/2 sum_rs K_rs q_r q_s ]
// with real 2x2 coefficient matrices, so the equations of motion are
//   M qddot + (B - B^T) qdot + K q = 0,
// the canonical momenta are p_r = sum_s M_rs qdot_s + B_rs q_s, and the trace
// Hamiltonian is Tr[ 1/2 qdot^T M qdot + 1/2 q^T K q ].
//
//   free_cross : L = Tr(qdot1 qdot2)
//   stm        : L = kappa Tr(qdot1 qdot2 - (alpha/L)^2 q1 q2),  kappa = L_P^2 / (2 tau_P L^2)
//   bateman    : L = Tr(qdot1 qdot2 + gamma/2 (q1 qdot2 - qdot1 q2) - k q1 q2)
// An optional regulator eps Tr(qdot1^2 + qdot2^2) adds 2 eps to the diagonal of M.

#include <string>
#include <vector>

#include <json.hpp>

#include "cfslab/linop.hpp"
#include "cfslab/trace_expr.hpp"

namespace cfslab {

enum class TraceKind { free_cross, stm, bateman };
enum class Integrator { leapfrog, rk4 };

std::string_view to_string(TraceKind k);
std::string_view to_string(Integrator m);

struct TraceParams {
    double alpha = 1.0;
    double length_scale = 1.0;  // L
    double planck_length = 1.0; // L_P
    double planck_time = 1.0;   // tau_P
    double gamma = 0.0;
    double k = 1.0;
    double regulator = 0.0;     // eps
};

struct TraceLagrangianSpec {
    TraceKind kind = TraceKind::free_cross;
    TraceParams params;

    // Throws ContractViolation for L <= 0, tau_P <= 0, L_P <= 0 or eps < 0.
    void validate() const;
    Eigen::Matrix2d mass() const;
    Eigen::Matrix2d gyro() const;       // B
    Eigen::Matrix2d stiffness() const;  // K
    // The same Lagrangian as a trace polynomial in q1, q2, qdot1, qdot2.
    TraceExpr expression() const;
};

struct MatrixPair {
    std::string name;
    Matrix q;
    Matrix p;
};

struct MatrixPhaseState {
    double tau = 0.0;
    std::vector<MatrixPair> pairs;
    Eigen::Index dim() const { return pairs.empty() ? 0 : pairs.front().q.rows(); }
};

// Configuration-space state (q, qdot); phase-space states are derived from it.
struct TraceState {
    double tau = 0.0;
    Matrix q1, q2, v1, v2;
    Eigen::Index dim() const { return q1.rows(); }
};

// Momenta from velocities and back. Throws ContractViolation on shape mismatches.
MatrixPhaseState to_phase(const TraceLagrangianSpec& spec, const TraceState& s);
TraceState from_phase(const TraceLagrangianSpec& spec, const MatrixPhaseState& ps);

struct ConservedCharges {
    Matrix adler_millard;
    double trace_hamiltonian = 0.0;
};

// sum_r [q_r, p_r].
Matrix adler_millard(const MatrixPhaseState& state);
double trace_hamiltonian(const TraceLagrangianSpec& spec, const TraceState& s);
ConservedCharges charges(const TraceLagrangianSpec& spec, const TraceState& s);

// Accelerations (qddot1, qddot2).
std::pair<Matrix, Matrix> accelerations(const TraceLagrangianSpec& spec, const Matrix& q1,
                                        const Matrix& q2, const Matrix& v1, const Matrix& v2);

// Thrown when the state norm passes the stability guard.
class InstabilityError : public NumericalFailure {
public:
    InstabilityError(const std::string& what, double norm, int step, double tau)
        : NumericalFailure(what, norm), step_(step), tau_(tau) {}
    int step() const { return step_; }
    double tau() const { return tau_; }

private:
    int step_;
    double tau_;
};

inline constexpr double kStabilityGuard = 1e12;

struct Trajectory {
    std::vector<TraceState> states;  // steps + 1 entries, states[0] = initial
    std::vector<ConservedCharges> charges;
};

Trajectory integrate(const TraceLagrangianSpec& spec, const TraceState& initial, double dt, int steps,
                     Integrator method);
// One step without bookkeeping.
TraceState step(const TraceLagrangianSpec& spec, const TraceState& s, double dt, Integrator method);

// Exact solution of the linear equations of motion by the exponential of the
// 4x4 first-order coefficient matrix.
TraceState exact_solution(const TraceLagrangianSpec& spec, const TraceState& initial, double tau);

// Trace derivative dL/dX of a trace polynomial at a configuration state;
// variables are q1, q2, qdot1, qdot2 plus the given scalar parameters.
Matrix trace_derivative(const TraceExpr& lagrangian, const TraceState& at, const std::string& wrt,
                        const std::map<std::string, double>& scalars = {});

struct NormalModes {
    Matrix q_plus, q_minus, v_plus, v_minus;
    double energy_plus = 0.0;
    double energy_minus = 0.0;
    double total() const { return energy_plus - energy_minus; }
};
// Bateman with gamma = 0 and diagonal matrices only; otherwise ContractViolation.
NormalModes bateman_normal_modes(const TraceLagrangianSpec& spec, const TraceState& s);

// Qdot = qdot + (i alpha / L) q.
Matrix q_unification(const Matrix& q, const Matrix& qdot, double alpha, double length_scale);

// Tr[Qdot1^+ Qdot2] where ^+ transposes and conjugates the matrices but leaves
// the coefficient i alpha / L alone, split into its three pieces.
struct UnifiedExpansion {
    cplx total;
    cplx kinetic;    // Tr(qdot1^+ qdot2)
    cplx potential;  // -(alpha/L)^2 Tr(q1^+ q2)
    cplx cross;      // (i alpha/L) Tr(q1^+ qdot2 + qdot1^+ q2)
};
UnifiedExpansion unified_expansion(const Matrix& q1, const Matrix& v1, const Matrix& q2,
                                   const Matrix& v2, double alpha, double length_scale);

// Spec file: { "kind", "params": {...}, "initial": {"pairs": [{"name", "q", "qdot" | "p"}, ...]},
//              "dt", "steps", "method" }.
struct TraceRunConfig {
    TraceLagrangianSpec spec;
    TraceState initial;
    double dt = 1e-3;
    int steps = 1000;
    Integrator method = Integrator::rk4;
};
TraceRunConfig trace_config_from_json(const nlohmann::json& j);

}  // namespace cfslab
