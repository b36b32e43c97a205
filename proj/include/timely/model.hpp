#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Domain types for the timely-throughput scheduling problem: per-user Markov
// channels, success curves over a discrete resource grid, and the system-wide
// configuration (arrival rates, deadlines, prediction error rates, budget).

namespace timely {

using Matrix = std::vector<std::vector<double>>;

struct ChannelModel {
    std::vector<double> states;  // noise levels s_i, one per channel state
    Matrix transition;           // K x K row-stochastic
    std::vector<double> eta;     // stationary distribution, filled by finalize()

    int state_count() const { return static_cast<int>(states.size()); }
};

// Success probability zeta(i, e) of delivering a packet in one slot at channel
// state i with resource level e. Either the logistic law
//   zeta = 2 / (1 + exp(-2 e / (d^3 s_i))) - 1
// parameterized by a distance d, or an explicit per-state table aligned with
// the resource grid.
struct SuccessCurve {
    enum class Kind { Logistic, Table };
    Kind kind = Kind::Logistic;
    double distance = 1.0;  // logistic only
    Matrix rows;            // table only: rows[i][level_index]
};

struct ResourceGrid {
    std::vector<double> levels;  // sorted, levels[0] == 0

    int size() const { return static_cast<int>(levels.size()); }
    double level(int l) const { return levels[l]; }
    // Index of e in the grid (within 1e-9); throws if e is not a grid level.
    int index_of(double e) const;
};

ResourceGrid make_uniform_grid(double step, int count);

struct UserConfig {
    double arrival_rate = 0.0;   // a_n, mean arrivals per slot
    int deadline = 1;            // tau_n, slots
    double weight = 1.0;         // beta_n
    int window = 0;              // D_n, prediction window in slots
    double true_positive = 1.0;  // p_n
    double false_negative = 0.0; // q_n
    ChannelModel channel;
    SuccessCurve curve;
};

struct SystemConfig {
    std::vector<UserConfig> users;
    int arrival_cap = 1;             // A_max, shared per-slot cap
    double budget = 1.0;             // B
    int deadline_cap = 1;            // Gamma
    std::optional<int> capacity;     // C, hard per-slot transmission cap
    ResourceGrid grid;
};

struct Violation {
    int user;  // -1 for system-level
    std::string field;
    std::string message;
};

// Stationary distribution of a row-stochastic ergodic matrix. Power iteration
// to a fixed point, with a dense linear solve as fallback. Throws
// std::invalid_argument on non-stochastic rows and std::runtime_error on
// reducible or non-converging chains.
std::vector<double> stationary_distribution(const Matrix& transition);

// zeta(i, e); e must be a grid level.
double success_prob(const SuccessCurve& curve, const ChannelModel& channel,
                    const ResourceGrid& grid, int state, double e);

// Rate of positive predictions implied by the arrival rate and the error
// rates: (a - A_max q) / (p - q). Requires p > q and q <= a/A_max <= p.
double predicted_rate(double arrival_rate, double true_positive,
                      double false_negative, int arrival_cap);

// Checks every invariant and returns the list of violations (empty == ok).
std::vector<Violation> validate(const SystemConfig& system);

// Computes and caches stationary distributions for all user channels.
// Requires validate(system) to be clean.
void finalize(SystemConfig& system);

// Memoized zeta values over (state, level); the grid can have 6e4 levels so
// transcendental evaluations are done once.
class ZetaTable {
public:
    ZetaTable() = default;
    ZetaTable(int states, int levels, std::vector<double> values)
        : states_(states), levels_(levels), values_(std::move(values)) {}

    double operator()(int state, int level) const {
        return values_[static_cast<size_t>(state) * levels_ + level];
    }
    const double* row(int state) const {
        return values_.data() + static_cast<size_t>(state) * levels_;
    }
    int states() const { return states_; }
    int levels() const { return levels_; }

private:
    int states_ = 0;
    int levels_ = 0;
    std::vector<double> values_;
};

ZetaTable make_zeta_table(const UserConfig& user, const ResourceGrid& grid);

// JSON config round-trip (schema mirrors SystemConfig field-for-field).
SystemConfig load_system_json(const std::string& text);
SystemConfig load_system_file(const std::string& path);
std::string system_to_json(const SystemConfig& system);

}  // namespace timely
