#pragma once

#include <cmath>
#include <random>

#include "timely/model.hpp"
#include "timely/static_analytic.hpp"

namespace helpers {

// Binary-grid system equivalent of a list of static users (constant success
// probability, unit transmission cost).
inline timely::SystemConfig make_static_system(const std::vector<timely::StaticUser>& users,
                                               double budget) {
    timely::SystemConfig sys;
    sys.arrival_cap = users.empty() ? 1 : users.front().arrival_cap;
    sys.budget = budget;
    sys.deadline_cap = 64;
    sys.grid.levels = {0.0, 1.0};
    for (const auto& su : users) {
        timely::UserConfig u;
        u.arrival_rate = su.arrival_rate;
        u.deadline = su.deadline;
        u.weight = su.weight;
        u.window = su.window;
        u.true_positive = su.true_positive;
        u.false_negative = su.false_negative;
        u.channel.states = {1.0};
        u.channel.transition = {{1.0}};
        u.curve.kind = timely::SuccessCurve::Kind::Table;
        u.curve.rows = {{0.0, su.zeta}};
        sys.users.push_back(u);
    }
    timely::finalize(sys);
    return sys;
}

inline timely::StaticUser random_static_user(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    timely::StaticUser u;
    u.zeta = 0.2 + 0.6 * unif(rng);
    u.weight = 0.5 + 3.5 * unif(rng);
    u.arrival_rate = 0.2 + 0.8 * unif(rng);
    u.deadline = 1 + static_cast<int>(4 * unif(rng));
    u.window = 1 + static_cast<int>(3 * unif(rng));
    u.arrival_cap = 1;
    u.false_negative = u.arrival_rate * 0.5 * unif(rng);
    u.true_positive = u.arrival_rate + (1.0 - u.arrival_rate) * (0.2 + 0.8 * unif(rng));
    return u;
}

// Small multi-state instance with a scaled concave table curve; scaling keeps
// monotonicity, concavity, and the total order across states.
inline timely::UserConfig random_general_user(std::mt19937_64& rng,
                                              const timely::ResourceGrid& grid) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    timely::UserConfig u;
    u.arrival_rate = 0.2 + 0.8 * unif(rng);
    u.deadline = 1 + static_cast<int>(4 * unif(rng));
    u.weight = 0.5 + 3.5 * unif(rng);
    u.window = 1 + static_cast<int>(2 * unif(rng));
    u.false_negative = u.arrival_rate * 0.5 * unif(rng);
    u.true_positive = u.arrival_rate + (1.0 - u.arrival_rate) * (0.2 + 0.8 * unif(rng));

    int K = 1 + static_cast<int>(3 * unif(rng));
    std::vector<double> scale(K);
    for (int i = 0; i < K; ++i) scale[i] = 0.3 + 0.65 * unif(rng);
    std::sort(scale.rbegin(), scale.rend());
    u.channel.states.assign(K, 1.0);
    u.channel.transition.assign(K, std::vector<double>(K, 0.0));
    for (int i = 0; i < K; ++i) {
        double total = 0.0;
        for (int j = 0; j < K; ++j) total += (u.channel.transition[i][j] = 0.2 + unif(rng));
        for (int j = 0; j < K; ++j) u.channel.transition[i][j] /= total;
    }
    double emax = grid.level(grid.size() - 1);
    u.curve.kind = timely::SuccessCurve::Kind::Table;
    u.curve.rows.assign(K, std::vector<double>(grid.size(), 0.0));
    for (int i = 0; i < K; ++i)
        for (int l = 1; l < grid.size(); ++l)
            u.curve.rows[i][l] = scale[i] * std::sqrt(grid.level(l) / emax);
    return u;
}

inline timely::SystemConfig random_general_system(std::mt19937_64& rng, int n_users,
                                                  double budget_scale = 1.0) {
    timely::SystemConfig sys;
    sys.arrival_cap = 1;
    sys.deadline_cap = 16;
    sys.grid = timely::make_uniform_grid(0.05, 21);
    double demand = 0.0;
    for (int n = 0; n < n_users; ++n) {
        sys.users.push_back(random_general_user(rng, sys.grid));
        demand += sys.users.back().arrival_rate * sys.users.back().deadline;
    }
    std::uniform_real_distribution<double> unif(0.3, 0.9);
    sys.budget = std::max(0.05, budget_scale * unif(rng) * demand);
    timely::finalize(sys);
    return sys;
}

}  // namespace helpers
