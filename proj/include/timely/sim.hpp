#pragma once

#include <cstdint>
#include <random>

#include "timely/dual.hpp"

// Seeded slot-based simulation of the full system: prediction-marked
// arrivals, per-user Markov channel evolution, policy execution with optional
// boundary randomization and hard capacity truncation.

namespace timely {

struct SimMetrics {
    long long slots = 0;
    std::vector<double> throughput;       // x_n
    std::vector<double> throughput_se;    // batch-mean standard errors
    double phi = 0.0;                     // weighted timely-throughput
    double phi_se = 0.0;
    double phi_half_width = 0.0;          // 95% CI half width
    double e_av = 0.0;
    double e_av_se = 0.0;
    double e_av_half_width = 0.0;
};

struct UserPolicy {
    PolicyTable policy;          // predictive table (horizon tau + D, or tau)
    PolicyTable missed_policy;   // zero-prediction table for unpredicted arrivals
    double serve_probability = 1.0;
};

struct SimOptions {
    long long horizon = 100000;
    std::uint64_t seed = 1;
    Mode mode = Mode::Zero;
    std::optional<int> capacity;   // overrides system.capacity when set
    bool defer_truncated = false;  // keep truncated packets for later slots
    int batches = 30;
    std::string* slot_trace = nullptr;  // optional per-slot CSV sink
};

std::vector<UserPolicy> policies_from_dual(const DualSolution& dual, Mode mode);

SimMetrics run(const SystemConfig& system, const std::vector<UserPolicy>& policies,
               const SimOptions& opts);

// Uniformly random C-subset of the scheduled ids (order preserved).
std::vector<int> truncate_scheduled(const std::vector<int>& scheduled, int capacity,
                                    std::mt19937_64& rng);

// Independent seed stream per (user, purpose) so adding users does not
// perturb existing streams.
enum class StreamPurpose { Arrivals = 0, Channel = 1, Success = 2, Randomization = 3 };
std::uint64_t derive_seed(std::uint64_t seed, int user, StreamPurpose purpose);

std::string metrics_json(const SimMetrics& m);

}  // namespace timely
