#pragma once

#include <utility>
#include <vector>

// Closed-form values, duals and improvement bounds for the static-channel
// scenario: constant per-user success probability and a binary resource set
// {0, 1}. Serves as the exact oracle for the numeric solver.

namespace timely {

struct StaticUser {
    double zeta = 0.5;       // constant success probability, in (0,1)
    double weight = 1.0;     // beta
    double arrival_rate = 1.0;
    int deadline = 1;        // tau
    int window = 0;          // D
    double true_positive = 1.0;
    double false_negative = 0.0;
    int arrival_cap = 1;     // A_max
};

// (1 - (1-zeta)^tau) / zeta, computed as the geometric series.
double geometric_factor(double zeta, int tau);

// V(0, tau) for perfect (or zero) prediction: (1-(1-z)^tau)/z * (zb - lambda)
// when zb > lambda, else 0. Valid for 0 < tau <= deadline + window.
double value_perfect_static(const StaticUser& u, double lambda, int tau);

// Pre-service threshold c = lambda / ((zb - lambda)(1-z)^tau + lambda);
// requires zb > lambda.
double threshold_c(const StaticUser& u, double lambda);

// V(0, tau + w) for an imperfect-prediction packet, 1 <= w <= window.
double value_imperfect_static(const StaticUser& u, double lambda, int w);

// Entry value of a predicted packet at the full window, piecewise in p vs c.
// Requires zb > lambda.
double v_n(const StaticUser& u, double lambda);

double dual_static_perfect(const std::vector<StaticUser>& users, double budget,
                           double lambda);
double dual_static_imperfect(const std::vector<StaticUser>& users, double budget,
                             double lambda);

// Exact minimization over lambda by breakpoint enumeration (the duals are
// convex piecewise-linear). Returns (lambda*, phi*).
std::pair<double, double> optimize_static_perfect(const std::vector<StaticUser>& users,
                                                  double budget);
std::pair<double, double> optimize_static_imperfect(const std::vector<StaticUser>& users,
                                                    double budget);
// Zero prediction: window forced to 0.
std::pair<double, double> optimize_static_zero(const std::vector<StaticUser>& users,
                                               double budget);

enum class StaticMode { Perfect, Imperfect };

// (lower, upper) bounds on phi* - phi*_0 evaluated at the exact minimizers.
std::pair<double, double> improvement_bounds(const std::vector<StaticUser>& users,
                                             double budget, StaticMode mode);

// Expected number of transmissions for a packet served at every slot over a
// horizon of `slots`.
double expected_transmissions(double zeta, int slots);

// Serving probability for the boundary user (zeta*beta == lambda* within tol)
// that makes average consumption hit the budget exactly. Throws if the
// resulting probability falls outside [0, 1].
double budget_randomization(const std::vector<StaticUser>& users, double lambda_star,
                            double budget, int boundary_user, double tol = 1e-9);

}  // namespace timely
