#include "doctest.h"

#include <random>

#include "timely/sps.hpp"

#include "helpers.hpp"

using namespace timely;

namespace {

UserConfig single_state_user(std::vector<double> zeta_row, double beta, int deadline,
                             int window = 0) {
    UserConfig u;
    u.arrival_rate = 1.0;
    u.deadline = deadline;
    u.weight = beta;
    u.window = window;
    u.channel.states = {1.0};
    u.channel.transition = {{1.0}};
    u.channel.eta = {1.0};
    u.curve.kind = SuccessCurve::Kind::Table;
    u.curve.rows = {std::move(zeta_row)};
    return u;
}

// Exhaustive-enumeration oracle for the backward induction (small grids).
double brute_value_perfect(const UserConfig& u, const ZetaTable& zt,
                           const ResourceGrid& grid, double lambda, int tau, int i) {
    if (tau == 0) return 0.0;
    const int K = u.channel.state_count();
    double best = -1e300;
    for (int l = 0; l < grid.size(); ++l) {
        double cont = 0.0;
        for (int j = 0; j < K; ++j)
            cont += u.channel.transition[i][j] *
                    brute_value_perfect(u, zt, grid, lambda, tau - 1, j);
        double v = -lambda * grid.level(l) + zt(i, l) * u.weight + (1.0 - zt(i, l)) * cont;
        best = std::max(best, v);
    }
    return best;
}

}  // namespace

TEST_CASE("one-step and two-step solve on a tiny enumerable instance") {
    UserConfig u = single_state_user({0.0, 0.5, 1.0}, 2.0, 2);
    ResourceGrid grid;
    grid.levels = {0.0, 0.5, 1.0};
    ZetaTable zt = make_zeta_table(u, grid);

    SpsSolution s = solve_perfect(u, zt, grid, 0.5);
    // tau = 1: candidates 0, -0.25+1, -0.5+2
    CHECK(s.value.at(1, 0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(s.policy.resource(grid, 1, 0) == 1.0);
    // tau = 2: all three levels tie at 1.5; smallest-level tie-break
    CHECK(s.value.at(2, 0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(s.policy.at(2, 0) == 0);
}

TEST_CASE("perfect solve matches exhaustive enumeration on random instances") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 10; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        const UserConfig& u = sys.users[0];
        ZetaTable zt = make_zeta_table(u, sys.grid);
        double lambda = 0.3 * (k + 1) / 10.0;
        SpsSolution s = solve_perfect(u, zt, sys.grid, lambda, 2);
        for (int tau = 0; tau <= 2; ++tau)
            for (int i = 0; i < u.channel.state_count(); ++i)
                CHECK(s.value.at(tau, i) ==
                      doctest::Approx(brute_value_perfect(u, zt, sys.grid, lambda, tau, i))
                          .epsilon(1e-10));
    }
}

TEST_CASE("perfect solve equals static closed form on the binary grid") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        StaticUser su = helpers::random_static_user(rng);
        SystemConfig sys = helpers::make_static_system({su}, 1.0);
        ZetaTable zt = make_zeta_table(sys.users[0], sys.grid);
        for (double lambda : {0.0, 0.1, 0.3, 0.7, 1.2, 3.0}) {
            SpsSolution s = solve_perfect(sys.users[0], zt, sys.grid, lambda);
            for (int tau = 1; tau <= su.deadline + su.window; ++tau)
                CHECK(s.value.at(tau, 0) ==
                      doctest::Approx(value_perfect_static(su, lambda, tau))
                          .epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("imperfect solve equals static closed forms on the binary grid") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20; ++k) {
        StaticUser su = helpers::random_static_user(rng);
        SystemConfig sys = helpers::make_static_system({su}, 1.0);
        ZetaTable zt = make_zeta_table(sys.users[0], sys.grid);
        for (double lambda : {0.0, 0.1, 0.3, 0.7, 1.2, 3.0}) {
            SpsSolution s = solve_imperfect(sys.users[0], zt, sys.grid, lambda);
            SpsSolution s0 = solve_perfect(sys.users[0], zt, sys.grid, lambda, 0);
            for (int tau = 1; tau <= su.deadline; ++tau)
                CHECK(s.value.at(tau, 0) ==
                      doctest::Approx(s0.value.at(tau, 0)).epsilon(1e-12).scale(1.0));
            for (int w = 1; w <= su.window; ++w)
                CHECK(s.value.at(su.deadline + w, 0) ==
                      doctest::Approx(value_imperfect_static(su, lambda, w))
                          .epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("imperfect solve with p=1, q=0 equals perfect solve exactly") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 10; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        UserConfig u = sys.users[0];
        u.true_positive = 1.0;
        u.false_negative = 0.0;
        ZetaTable zt = make_zeta_table(u, sys.grid);
        SpsSolution a = solve_imperfect(u, zt, sys.grid, 0.2);
        SpsSolution b = solve_perfect(u, zt, sys.grid, 0.2);
        CHECK(a.value.v == b.value.v);
        CHECK(a.policy.level == b.policy.level);
    }
}

TEST_CASE("perfect-mode structural properties: lazy policy, monotone value, range") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 15; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        const UserConfig& u = sys.users[0];
        ZetaTable zt = make_zeta_table(u, sys.grid);
        for (double lambda : {0.05, 0.3, 1.0}) {
            SpsSolution s = solve_perfect(u, zt, sys.grid, lambda);
            int H = s.value.horizon;
            for (int i = 0; i < u.channel.state_count(); ++i) {
                for (int tau = 1; tau < H; ++tau) {
                    CHECK(s.policy.at(tau + 1, i) <= s.policy.at(tau, i));
                    CHECK(s.value.at(tau, i) <= s.value.at(tau + 1, i) + 1e-12);
                }
                for (int tau = 0; tau <= H; ++tau) {
                    CHECK(s.value.at(tau, i) >= 0.0);
                    CHECK(s.value.at(tau, i) < u.weight);
                }
            }
        }
    }
}

TEST_CASE("imperfect value range is bounded by the discounted reward") {
    std::mt19937_64 rng(19);
    for (int k = 0; k < 10; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        const UserConfig& u = sys.users[0];
        ZetaTable zt = make_zeta_table(u, sys.grid);
        SpsSolution s = solve_imperfect(u, zt, sys.grid, 0.1);
        for (int w = 1; w <= u.window; ++w)
            for (int i = 0; i < u.channel.state_count(); ++i) {
                CHECK(s.value.at(u.deadline + w, i) >= 0.0);
                CHECK(s.value.at(u.deadline + w, i) < u.true_positive * u.weight);
            }
    }
}

TEST_CASE("value tables are independent of the tie-break choice") {
    std::mt19937_64 rng(23);
    SystemConfig sys = helpers::random_general_system(rng, 1);
    const UserConfig& u = sys.users[0];
    ZetaTable zt = make_zeta_table(u, sys.grid);
    SpsOptions smallest, largest;
    largest.tie_break = TieBreak::LargestLevel;
    SpsSolution a = solve_perfect(u, zt, sys.grid, 0.4, -1, smallest);
    SpsSolution b = solve_perfect(u, zt, sys.grid, 0.4, -1, largest);
    for (size_t idx = 0; idx < a.value.v.size(); ++idx)
        CHECK(a.value.v[idx] == doctest::Approx(b.value.v[idx]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("serial and parallel backends produce identical tables") {
    std::mt19937_64 rng(29);
    for (int k = 0; k < 5; ++k) {
        SystemConfig sys = helpers::random_general_system(rng, 1);
        const UserConfig& u = sys.users[0];
        ZetaTable zt = make_zeta_table(u, sys.grid);
        SpsOptions serial, parallel;
        serial.backend = Backend::Serial;
        parallel.backend = Backend::Parallel;
        SpsSolution a = solve_perfect(u, zt, sys.grid, 0.17, -1, serial);
        SpsSolution b = solve_perfect(u, zt, sys.grid, 0.17, -1, parallel);
        CHECK(a.value.v == b.value.v);
        CHECK(a.policy.level == b.policy.level);
        SpsSolution c = solve_imperfect(u, zt, sys.grid, 0.17, serial);
        SpsSolution d = solve_imperfect(u, zt, sys.grid, 0.17, parallel);
        CHECK(c.value.v == d.value.v);
        CHECK(c.policy.level == d.policy.level);
    }
}

TEST_CASE("expected resource: always-transmit static recursion") {
    UserConfig u = single_state_user({0.0, 0.5}, 3.0, 2);
    ResourceGrid grid;
    grid.levels = {0.0, 1.0};
    ZetaTable zt = make_zeta_table(u, grid);
    PolicyTable pol;
    pol.horizon = 2;
    pol.states = 1;
    pol.level = {0, 1, 1};  // transmit at tau = 1, 2
    ValueTable ebar = expected_resource(u, zt, grid, pol, SpsMode::Perfect);
    CHECK(ebar.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ebar.at(2, 0) == doctest::Approx(1.5).epsilon(1e-12));

    PolicyTable zero = pol;
    zero.level = {0, 0, 0};
    ValueTable none = expected_resource(u, zt, grid, zero, SpsMode::Perfect);
    for (double v : none.v) CHECK(v == 0.0);
}

TEST_CASE("expected resource carries the reveal survival factor in imperfect mode") {
    UserConfig u = single_state_user({0.0, 0.5}, 3.0, 1, 1);
    u.true_positive = 0.8;
    u.false_negative = 0.0;
    ResourceGrid grid;
    grid.levels = {0.0, 1.0};
    ZetaTable zt = make_zeta_table(u, grid);
    PolicyTable pol;
    pol.horizon = 2;
    pol.states = 1;
    pol.level = {0, 1, 1};
    ValueTable ebar = expected_resource(u, zt, grid, pol, SpsMode::Imperfect);
    // tau = 2 is the reveal stage (deadline 1): 1 + (1-zeta) * p * Ebar(1)
    CHECK(ebar.at(2, 0) == doctest::Approx(1.0 + 0.5 * 0.8 * 1.0).epsilon(1e-12));

    // pessimistic budgeting drops the survival factor: false alarms are
    // charged as if they kept consuming until expiry
    ValueTable pess = expected_resource(u, zt, grid, pol, SpsMode::Imperfect, true);
    CHECK(pess.at(2, 0) == doctest::Approx(1.0 + 0.5 * 1.0).epsilon(1e-12));
    CHECK(pess.at(1, 0) == ebar.at(1, 0));
}

TEST_CASE("expected resource matches a Monte-Carlo packet lifetime oracle") {
    std::mt19937_64 rng(31);
    SystemConfig sys = helpers::random_general_system(rng, 1);
    const UserConfig& u = sys.users[0];
    ZetaTable zt = make_zeta_table(u, sys.grid);
    SpsSolution s = solve_perfect(u, zt, sys.grid, 0.15);
    ValueTable ebar = expected_resource(u, zt, sys.grid, s.policy, SpsMode::Perfect);

    const int K = u.channel.state_count();
    const int entry = u.deadline + u.window;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int trials = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < trials; ++t) {
        int state = 0;
        double spent = 0.0;
        for (int tau = entry; tau >= 1; --tau) {
            int l = s.policy.at(tau, state);
            spent += sys.grid.level(l);
            if (unif(rng) < zt(state, l)) break;
            double r = unif(rng), acc = 0.0;
            int next = K - 1;
            for (int j = 0; j < K; ++j) {
                acc += u.channel.transition[state][j];
                if (r < acc) {
                    next = j;
                    break;
                }
            }
            state = next;
        }
        sum += spent;
        sumsq += spent * spent;
    }
    double mean = sum / trials;
    double se = std::sqrt((sumsq / trials - mean * mean) / trials);
    CHECK(std::fabs(mean - ebar.at(entry, 0)) <= 4.0 * se + 1e-9);
}

TEST_CASE("table CSV layout: states as rows, tau descending with window labels") {
    UserConfig u = single_state_user({0.0, 0.5}, 3.0, 1, 1);
    ResourceGrid grid;
    grid.levels = {0.0, 1.0};
    ZetaTable zt = make_zeta_table(u, grid);
    SpsSolution s = solve_perfect(u, zt, grid, 0.1);
    std::string csv = policy_table_csv(s.policy, grid, u.deadline);
    CHECK(csv.find("state,tau=1+1,tau=1\n") == 0);
    CHECK(csv.find("s1,") != std::string::npos);
}
