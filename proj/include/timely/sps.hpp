#pragma once

#include "timely/model.hpp"

// Finite-horizon backward induction for the single-packet scheduling problem
// at a fixed multiplier lambda: per-(time-to-deadline, channel-state) value
// and policy tables, plus the expected resource consumption of a policy.

namespace timely {

enum class Backend { Serial, Parallel };
enum class TieBreak { SmallestLevel, LargestLevel };

// V(0, tau, i) over tau = 0..horizon, i = 0..K-1.
struct ValueTable {
    int horizon = 0;
    int states = 0;
    std::vector<double> v;

    double at(int tau, int i) const { return v[static_cast<size_t>(tau) * states + i]; }
    double& at(int tau, int i) { return v[static_cast<size_t>(tau) * states + i]; }
};

// Optimal resource level index e*(0, tau, i) into the grid.
struct PolicyTable {
    int horizon = 0;
    int states = 0;
    std::vector<int> level;

    int at(int tau, int i) const { return level[static_cast<size_t>(tau) * states + i]; }
    int& at(int tau, int i) { return level[static_cast<size_t>(tau) * states + i]; }
    double resource(const ResourceGrid& grid, int tau, int i) const {
        return grid.level(at(tau, i));
    }
};

struct SpsSolution {
    ValueTable value;
    PolicyTable policy;
};

struct SpsOptions {
    Backend backend = Backend::Parallel;
    TieBreak tie_break = TieBreak::SmallestLevel;
};

// Perfect (or zero, window = 0) prediction: horizon tau + window, delivered
// value beta at every stage. `window` overrides user.window when >= 0 so the
// zero-prediction solve of a predictive user is expressible.
SpsSolution solve_perfect(const UserConfig& user, const ZetaTable& zeta,
                          const ResourceGrid& grid, double lambda,
                          int window = -1, const SpsOptions& opts = {});

// Imperfect prediction: three regimes over the horizon tau + window. Stages
// tau <= tau_n behave as the causal problem (delivered value beta); the
// reveal stage tau_n + 1 discounts both the success value and the failure
// continuation by p; stages above use delivered value p * beta.
SpsSolution solve_imperfect(const UserConfig& user, const ZetaTable& zeta,
                            const ResourceGrid& grid, double lambda,
                            const SpsOptions& opts = {});

enum class SpsMode { Perfect, Imperfect };

// Ebar(tau, i): expected total resource spent on one packet entering at
// time-to-deadline tau in channel state i, following the given policy. In
// imperfect mode the continuation across the reveal stage carries a factor p
// (a false alarm consumes no further resource). With pessimistic_false_alarms
// that factor is dropped: predicted packets are budgeted as if false alarms
// kept consuming until expiry (the budgeting variant behind the reference
// policy tables).
ValueTable expected_resource(const UserConfig& user, const ZetaTable& zeta,
                             const ResourceGrid& grid, const PolicyTable& policy,
                             SpsMode mode, bool pessimistic_false_alarms = false);

// CSV with rows = channel states and columns = tau descending (predicted
// stages labeled "tau_n+w").
std::string value_table_csv(const ValueTable& table, int deadline);
std::string policy_table_csv(const PolicyTable& table, const ResourceGrid& grid,
                             int deadline);

}  // namespace timely
