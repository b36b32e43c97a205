#include "doctest.h"

#include <random>

#include "timely/bounds.hpp"
#include "timely/preset.hpp"

#include "helpers.hpp"

using namespace timely;

TEST_CASE("extreme states under the zeta total order") {
    SystemConfig sys = four_user_downlink_preset();
    // restrict the grid so the table stays small
    sys.grid = make_uniform_grid(0.05, 41);
    ZetaTable zt = make_zeta_table(sys.users[0], sys.grid);
    auto [imin, imax] = extreme_states(zt);
    CHECK(imax == 0);  // lowest noise level
    CHECK(imin == 3);  // highest noise level

    ZetaTable single(1, 3, {0.0, 0.2, 0.3});
    auto [a, b] = extreme_states(single);
    CHECK(a == 0);
    CHECK(b == 0);

    // crossing rows violate the order
    ZetaTable crossing(2, 3, {0.0, 0.1, 0.5, 0.0, 0.2, 0.4});
    CHECK_THROWS_AS(extreme_states(crossing), std::invalid_argument);
}

TEST_CASE("single-state bounds collapse onto the value function at tau = 1") {
    std::mt19937_64 rng(101);
    StaticUser su = helpers::random_static_user(rng);
    SystemConfig sys = helpers::make_static_system({su}, 1.0);
    const UserConfig& u = sys.users[0];
    ZetaTable zt = make_zeta_table(u, sys.grid);
    for (double lambda : {0.0, 0.2, 0.8}) {
        BoundTables t = value_bounds_perfect(u, zt, sys.grid, lambda);
        SpsSolution s = solve_perfect(u, zt, sys.grid, lambda);
        CHECK(std::max(0.0, t.lower[1]) ==
              doctest::Approx(s.value.at(1, 0)).epsilon(1e-12).scale(1.0));
        CHECK(std::min(u.weight, t.upper[1]) + 1e-12 >= s.value.at(1, 0));
    }
}

TEST_CASE("perfect value sandwich on random multi-state instances") {
    std::mt19937_64 rng(103);
    for (int k = 0; k < 10; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        const UserConfig& u = sys.users[0];
        ZetaTable zt = make_zeta_table(u, sys.grid);
        for (int s = 0; s < 8; ++s) {
            double lambda = 0.05 * s;
            BoundTables t = value_bounds_perfect(u, zt, sys.grid, lambda);
            SpsSolution sol = solve_perfect(u, zt, sys.grid, lambda);
            CHECK(t.upper[u.deadline + u.window] >= 0.0);
            for (int tau = 1; tau <= u.deadline + u.window; ++tau) {
                CHECK(t.upper[tau] + 1e-12 >= t.upper[tau - 1]);  // non-decreasing
                for (int i = 0; i < u.channel.state_count(); ++i) {
                    CHECK(std::max(0.0, t.lower[tau]) <= sol.value.at(tau, i) + 1e-9);
                    CHECK(sol.value.at(tau, i) <=
                          std::min(u.weight, t.upper[tau]) + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("imperfect value sandwich and the discounted boundary identities") {
    std::mt19937_64 rng(107);
    for (int k = 0; k < 10; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        const UserConfig& u = sys.users[0];
        ZetaTable zt = make_zeta_table(u, sys.grid);
        for (double lambda : {0.0, 0.1, 0.3}) {
            BoundTables t = value_bounds_imperfect(u, zt, sys.grid, lambda);
            BoundTables t0 = value_bounds_perfect(u, zt, sys.grid, lambda, 0);
            CHECK(t.lower[u.deadline] ==
                  doctest::Approx(u.true_positive * t0.lower[u.deadline])
                      .epsilon(1e-12).scale(1.0));
            CHECK(t.upper[u.deadline] ==
                  doctest::Approx(u.true_positive * t0.upper[u.deadline])
                      .epsilon(1e-12).scale(1.0));

            SpsSolution sol = solve_imperfect(u, zt, sys.grid, lambda);
            for (int w = 1; w <= u.window; ++w) {
                int tau = u.deadline + w;
                double lo = std::max({0.0, t.lower[u.deadline], t.lower[tau]});
                double hi = std::min(u.true_positive * u.weight, t.upper[tau]);
                for (int i = 0; i < u.channel.state_count(); ++i) {
                    CHECK(lo <= sol.value.at(tau, i) + 1e-9);
                    CHECK(sol.value.at(tau, i) <= hi + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("imperfect bounds reduce to the perfect ones at p = 1") {
    std::mt19937_64 rng(109);
    SystemConfig sys = helpers::random_general_system(rng, 1);
    UserConfig u = sys.users[0];
    u.true_positive = 1.0;
    u.false_negative = 0.0;
    ZetaTable zt = make_zeta_table(u, sys.grid);
    BoundTables a = value_bounds_imperfect(u, zt, sys.grid, 0.2);
    BoundTables b = value_bounds_perfect(u, zt, sys.grid, 0.2);
    for (size_t tau = 0; tau < a.lower.size(); ++tau) {
        CHECK(a.lower[tau] == doctest::Approx(b.lower[tau]).epsilon(1e-12).scale(1.0));
        CHECK(a.upper[tau] == doctest::Approx(b.upper[tau]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("dual sandwich across a lambda grid") {
    std::mt19937_64 rng(113);
    for (int k = 0; k < 5; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 2);
        for (Mode mode : {Mode::Zero, Mode::Perfect, Mode::Imperfect}) {
            DualProblem dual(sys, mode);
            BoundProblem bound(sys, mode);
            double hi = dual.lambda_upper();
            for (int s = 0; s <= 12; ++s) {
                double lambda = hi * s / 12.0;
                double g = dual.evaluate(lambda).g;
                DualBounds b = bound.evaluate(lambda);
                CHECK(b.lower <= g + 1e-9);
                CHECK(g <= b.upper + 1e-9);
            }
        }
    }
}

TEST_CASE("single channel state keeps the dual envelope tight at the optimum") {
    std::mt19937_64 rng(127);
    std::vector<StaticUser> users{helpers::random_static_user(rng),
                                  helpers::random_static_user(rng)};
    SystemConfig sys = helpers::make_static_system(users, 1.2);
    BoundProblem bound(sys, Mode::Perfect);
    DualProblem dual(sys, Mode::Perfect);
    double l_lo = bound.minimize_lower();
    double gl = bound.evaluate(l_lo).lower;
    // minimize the upper envelope on the same interval by scanning
    double gu = 1e300;
    double hi = bound.lambda_upper();
    for (int s = 0; s <= 400; ++s)
        gu = std::min(gu, bound.evaluate(hi * s / 400.0).upper);
    CHECK(gu - gl <= 0.05 * std::max(1e-9, gu));
}

TEST_CASE("general improvement bounds bracket the solved improvement") {
    std::mt19937_64 rng(131);
    int checked = 0;
    for (int k = 0; k < 8; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 2);
        for (Mode mode : {Mode::Perfect, Mode::Imperfect}) {
            double phi0 = subgradient_search(sys, Mode::Zero).phi_star;
            double phi = subgradient_search(sys, mode).phi_star;
            auto [lo, hi] = improvement_bounds_general(sys, mode);
            CHECK(lo <= phi - phi0 + 1e-6);
            CHECK(phi - phi0 <= hi + 1e-6);
            ++checked;
        }
    }
    CHECK(checked == 16);
}

TEST_CASE("improvement bounds with no window contain zero") {
    std::mt19937_64 rng(137);
    SystemConfig sys = helpers::random_general_system(rng, 2);
    for (auto& u : sys.users) u.window = 0;
    finalize(sys);
    auto [lo, hi] = improvement_bounds_general(sys, Mode::Perfect);
    CHECK(lo <= 1e-9);
    CHECK(hi >= -1e-9);
}
