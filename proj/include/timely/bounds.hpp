#pragma once

#include "timely/dual.hpp"

// Computable value and dual-function envelopes for the general Markov-channel
// case, built from the best and worst channel states.

namespace timely {

struct BoundTables {
    std::vector<double> lower;  // Vl (or Vl-tilde), indexed by tau = 0..horizon
    std::vector<double> upper;  // Vu (or Vu-tilde)
};

// (i_min, i_max) under the total order of states by zeta; throws if the rows
// of the zeta table cross.
std::pair<int, int> extreme_states(const ZetaTable& zeta);

// Perfect (or zero, window = 0) prediction value envelopes over
// tau = 0..deadline+window.
BoundTables value_bounds_perfect(const UserConfig& user, const ZetaTable& zeta,
                                 const ResourceGrid& grid, double lambda,
                                 int window = -1);

// Imperfect prediction: equals the perfect envelopes below the deadline and
// the prediction-discounted forms at and above it.
BoundTables value_bounds_imperfect(const UserConfig& user, const ZetaTable& zeta,
                                   const ResourceGrid& grid, double lambda);

struct DualBounds {
    double lower = 0.0;  // g^l(lambda)
    double upper = 0.0;  // g^u(lambda)
};

class BoundProblem {
public:
    BoundProblem(const SystemConfig& system, Mode mode);

    DualBounds evaluate(double lambda) const;
    double minimize_lower(double tol = 1e-8) const;  // argmin of g^l
    double lambda_upper() const;
    const SystemConfig& system() const { return system_; }

private:
    SystemConfig system_;
    Mode mode_;
    std::vector<ZetaTable> zeta_;
};

// Sandwich on the improvement phi* - phi*_0:
//   lower = g^l(argmin g^l) - g0^u(same lambda)
//   upper = g^u(argmin g0^l) - g0^l(same lambda)
// for mode Perfect or Imperfect against the zero-prediction problem.
std::pair<double, double> improvement_bounds_general(const SystemConfig& system,
                                                     Mode mode);

}  // namespace timely
