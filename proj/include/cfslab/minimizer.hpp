#pragma once

// Constrained minimization of the causal action over m-point measures.
//
// Search space: each support point is given by chart parameters
//   (a_1..a_n, b_1..b_n, h_1..h_{f^2})
// mapped to x = W diag(a^2, -b^2) W*, W the first 2n columns of exp(iH) with H
// the Hermitian matrix packed in h. Weights are w = V softmax(beta), so the
// volume constraint holds identically. The trace constraint is enforced by the
// closed-form rescale nu -> u nu, mu -> mu / u (u > 0) that hits the target exactly.
// The boundedness constraint is a one-sided quadratic penalty above C.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfslab/causal.hpp"

namespace cfslab {

// Chart parameter count for one point.
inline Eigen::Index chart_dim(Eigen::Index f, int n) { return 2 * n + f * f; }

// Hermitian f x f matrix from f^2 reals: diagonal first, then (re, im) of the
// strict upper triangle in row-major order.
Matrix hermitian_from_params(std::span<const double> h, Eigen::Index f);

struct ChartPoint {
    Matrix x;
    Matrix w;            // f x 2n isometry
    RealVector nu;       // n values >= 0
    RealVector mu;       // n values >= 0
};
// Throws ContractViolation when params has the wrong length or 2n > f.
ChartPoint chart_point(std::span<const double> params, Eigen::Index f, int n);
SpacetimePointOp parameterize_point(std::span<const double> params, Eigen::Index f, int n);

enum class Driver { gradient, annealing };

struct Schedule {
    Driver driver = Driver::gradient;
    int max_iterations = 2000;
    double tolerance = 1e-10;        // gradient-norm / relative-progress threshold
    double initial_step = 0.1;
    double penalty_weight = 10.0;    // initial quadratic penalty weight
    int penalty_rounds = 8;          // outer weight increases (x10) while violated
    int stall_window = 50;           // gradient: rejected steps in a row; annealing: iterations
    int replicas = 4;                // annealing chains
    double initial_temperature = 1e-2;
    double cooling = 0.995;
};

struct MinimizeProblem {
    Eigen::Index ambient_dim = 2;
    int spin_dim = 1;
    int num_points = 1;
    double target_volume = 1.0;
    double target_trace = 0.0;
    std::optional<double> boundedness_cap;
    std::uint64_t seed = 1;
    Schedule schedule;

    Eigen::Index num_params() const {
        return num_points * chart_dim(ambient_dim, spin_dim) + num_points;
    }
    // Throws ContractViolation on out-of-range values and InfeasibleProblem when
    // C is below the lower bound T^4 / (n^2 m V^2).
    void validate() const;
};

MinimizeProblem problem_from_json(const nlohmann::json& j);

struct Residuals {
    double volume = 0.0;       // |vol - V| / V
    double trace = 0.0;        // |int tr - T| / max(1, |T|)
    double boundedness = 0.0;  // max(0, T_b - C) / C, 0 when unconstrained
};

// Measure produced by a parameter vector (after the trace rescale). Returns
// nullopt where no rescale reaches the target (e.g. T > 0 with every nu zero).
std::optional<DiscreteMeasure> measure_from_params(std::span<const double> theta,
                                                   const MinimizeProblem& problem);

struct ObjectiveValue {
    double value = 0.0;        // action + penalty, +inf outside the valid region
    double action = 0.0;
    double boundedness = 0.0;
    double penalty = 0.0;
    std::vector<double> gradient;  // empty unless requested
};

// Objective action + (r/2) max(0, T_b - C)^2 and its analytic gradient in theta.
ObjectiveValue penalty_objective(std::span<const double> theta, const MinimizeProblem& problem,
                                 double penalty_weight, bool with_gradient,
                                 Exec exec = Exec::parallel);

// Same objective evaluated on a given measure.
double penalty_value(const DiscreteMeasure& rho, const MinimizeProblem& problem,
                     double penalty_weight);

// CapViolated: the boundedness residual still exceeds 1e-6 after the last
// penalty round.
enum class Termination { Converged, MaxIterations, Stalled, CapViolated };
std::string_view to_string(Termination t);

struct HistoryRow {
    int iteration = 0;
    double action = 0.0;
    Residuals residuals;
    double trace_spread = 0.0;
};

struct MinimizeResult {
    DiscreteMeasure measure;
    std::vector<double> theta;
    double action = 0.0;
    Constraints constraints;
    Residuals residuals;
    double trace_spread = 0.0;
    int iterations = 0;
    Termination termination = Termination::MaxIterations;
    std::vector<HistoryRow> history;
};

// Seed parameters for the problem: random chart, uniform weights.
std::vector<double> initial_params(const MinimizeProblem& problem);

MinimizeResult minimize(const MinimizeProblem& problem);

// Merge support points closer than tol in operator norm, summing weights.
DiscreteMeasure merge_close_points(const DiscreteMeasure& rho, double tol = 1e-8);

double trace_spread(const DiscreteMeasure& rho);
Residuals residuals_of(const DiscreteMeasure& rho, const Constraints& c,
                       const MinimizeProblem& problem);

nlohmann::json result_to_json(const MinimizeResult& r);

}  // namespace cfslab
