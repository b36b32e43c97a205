#pragma once

#include "timely/sps.hpp"

namespace timely {

enum class Mode { Zero, Perfect, Imperfect };

// Everything the dual needs about one user at a fixed lambda: the predictive
// solve (horizon tau + D; in zero mode just tau), and for imperfect mode
// additionally the zero-prediction solve applied to unpredicted arrivals.
struct UserDual {
    SpsSolution predicted;
    SpsSolution missed;            // imperfect mode only (empty otherwise)
    double dual_value = 0.0;       // this user's contribution to g - lambda B
    double expected_energy = 0.0;  // contribution to E_av
};

struct DualEval {
    double lambda = 0.0;
    double g = 0.0;
    double e_av = 0.0;
    std::vector<UserDual> users;
};

struct TracePoint {
    int iteration;
    double lambda;
    double g;
    double subgradient;  // B - E_av
};

struct DualSolution {
    double lambda_star = 0.0;
    double phi_star = 0.0;
    double e_av = 0.0;  // of the returned (possibly randomized) policy
    std::vector<UserDual> users;
    // Serving probability per user (1 everywhere unless the user sits on the
    // budget boundary at lambda*). The stored policy is the "serve" branch.
    std::vector<double> serve_probability;
    std::vector<TracePoint> trace;
};

struct SearchOptions {
    double tol = 1e-6;          // absolute tolerance on lambda*
    int max_iters = 400;
    double step0 = -1.0;        // subgradient step eps_0; default = budget
    Backend backend = Backend::Parallel;
    // Reference budgeting (both default off). budget_slack > 0 makes the
    // search target consumption B + budget_slack instead of B, i.e. it stops
    // just on the infeasible side of the crossing the way a diminishing-step
    // ascent terminates. pessimistic_false_alarms budgets predicted packets
    // as if false alarms kept consuming until expiry (see expected_resource).
    double budget_slack = 0.0;
    bool pessimistic_false_alarms = false;
};

struct DualConvergenceError : std::runtime_error {
    explicit DualConvergenceError(const std::string& what, std::vector<TracePoint> t)
        : std::runtime_error(what), trace(std::move(t)) {}
    std::vector<TracePoint> trace;
};

// Caches per-user zeta tables so repeated lambda evaluations only pay for the
// Bellman recursions.
class DualProblem {
public:
    DualProblem(const SystemConfig& system, Mode mode,
                bool pessimistic_false_alarms = false);

    DualEval evaluate(double lambda, Backend backend = Backend::Parallel) const;
    double lambda_upper() const;  // largest lambda at which transmitting can pay
    const SystemConfig& system() const { return system_; }
    Mode mode() const { return mode_; }

private:
    SystemConfig system_;
    Mode mode_;
    bool pessimistic_false_alarms_;
    std::vector<ZetaTable> zeta_;
};

// Subgradient iteration lambda <- max(0, lambda + eps_k (E_av - B)) with
// step eps_k = eps_0 / sqrt(k), switching to bisection once the minimizer is
// bracketed; returns the budget-feasible solution with boundary-user
// randomization applied. Throws DualConvergenceError (carrying the trace) if
// no bracket is found within max_iters.
DualSolution subgradient_search(const SystemConfig& system, Mode mode,
                                const SearchOptions& opts = {});

// Golden-section fallback on [0, lambda_upper]; same result contract.
DualSolution golden_section_search(const SystemConfig& system, Mode mode,
                                   const SearchOptions& opts = {});

// Options that reproduce the reference policy tables on the built-in preset:
// pessimistic false-alarm budgeting plus a budget slack of 0.25% of B (the
// termination residual of the solver that produced those tables).
SearchOptions reference_budgeting(const SystemConfig& system);

std::string trace_csv(const std::vector<TracePoint>& trace);

}  // namespace timely
