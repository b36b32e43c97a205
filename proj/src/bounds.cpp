#include "timely/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace timely {

namespace {

// (1 - (1-z)^tau) / z with a series fallback for vanishing z.
double geom(double z, int tau) {
    if (z < 1e-9) {
        double rho = 1.0 - z, sum = 0.0, pw = 1.0;
        for (int k = 0; k < tau; ++k) {
            sum += pw;
            pw *= rho;
        }
        return sum;
    }
    return (1.0 - std::pow(1.0 - z, tau)) / z;
}

}  // namespace

std::pair<int, int> extreme_states(const ZetaTable& zeta) {
    const int K = zeta.states();
    const int L = zeta.levels();
    if (K == 1 || L <= 1) return {0, 0};
    int imin = 0, imax = 0;
    for (int i = 1; i < K; ++i) {
        if (zeta(i, 1) < zeta(imin, 1)) imin = i;
        if (zeta(i, 1) > zeta(imax, 1)) imax = i;
    }
    for (int i = 0; i < K; ++i)
        for (int l = 1; l < L; ++l)
            if (zeta(imin, l) > zeta(i, l) + 1e-15 || zeta(imax, l) < zeta(i, l) - 1e-15)
                throw std::invalid_argument("extreme_states: states not totally ordered");
    return {imin, imax};
}

BoundTables value_bounds_perfect(const UserConfig& user, const ZetaTable& zeta,
                                 const ResourceGrid& grid, double lambda,
                                 int window) {
    const int W = window >= 0 ? window : user.window;
    const int H = user.deadline + W;
    const int L = grid.size();
    auto [imin, imax] = extreme_states(zeta);
    const double beta = user.weight;

    BoundTables t;
    t.lower.assign(H + 1, 0.0);
    t.upper.assign(H + 1, 0.0);
    for (int tau = 1; tau <= H; ++tau) {
        double best = -std::numeric_limits<double>::infinity();
        for (int l = 1; l < L; ++l) {
            double z = zeta(imin, l);
            double cand = geom(z, tau) * (-lambda * grid.level(l) + z * beta);
            if (cand > best) best = cand;
        }
        t.lower[tau] = best;

        double clipped = std::max(0.0, t.lower[tau - 1]);
        double step = 0.0;  // e = 0 candidate
        for (int l = 1; l < L; ++l) {
            double cand = -lambda * grid.level(l) + zeta(imax, l) * (beta - clipped);
            if (cand > step) step = cand;
        }
        t.upper[tau] = t.upper[tau - 1] + step;
    }
    return t;
}

BoundTables value_bounds_imperfect(const UserConfig& user, const ZetaTable& zeta,
                                   const ResourceGrid& grid, double lambda) {
    if (user.window < 1)
        throw std::invalid_argument("value_bounds_imperfect: window must be >= 1");
    const int tau_n = user.deadline;
    const int H = tau_n + user.window;
    const int L = grid.size();
    auto [imin, imax] = extreme_states(zeta);
    const double beta = user.weight;
    const double p = user.true_positive;

    BoundTables perfect = value_bounds_perfect(user, zeta, grid, lambda, 0);
    BoundTables t;
    t.lower.assign(H + 1, 0.0);
    t.upper.assign(H + 1, 0.0);
    for (int tau = 0; tau < tau_n; ++tau) {
        t.lower[tau] = perfect.lower[tau];
        t.upper[tau] = perfect.upper[tau];
    }
    for (int tau = tau_n; tau <= H; ++tau) {
        double best = -std::numeric_limits<double>::infinity();
        for (int l = 1; l < L; ++l) {
            double z = zeta(imin, l);
            double e = grid.level(l);
            double cand = -(1.0 - p) * geom(z, tau - tau_n) * lambda * e +
                          p * geom(z, tau) * (-lambda * e + z * beta);
            if (cand > best) best = cand;
        }
        t.lower[tau] = best;
    }
    t.upper[tau_n] = p * perfect.upper[tau_n];
    for (int tau = tau_n + 1; tau <= H; ++tau) {
        double clipped = std::max({0.0, t.lower[tau_n], t.lower[tau - 1]});
        double step = 0.0;
        for (int l = 1; l < L; ++l) {
            double cand = -lambda * grid.level(l) + zeta(imax, l) * (p * beta - clipped);
            if (cand > step) step = cand;
        }
        t.upper[tau] = t.upper[tau - 1] + step;
    }
    return t;
}

BoundProblem::BoundProblem(const SystemConfig& system, Mode mode)
    : system_(system), mode_(mode) {
    finalize(system_);
    for (const auto& u : system_.users) zeta_.push_back(make_zeta_table(u, system_.grid));
}

DualBounds BoundProblem::evaluate(double lambda) const {
    DualBounds b;
    b.lower = lambda * system_.budget;
    b.upper = lambda * system_.budget;
    for (size_t n = 0; n < system_.users.size(); ++n) {
        const UserConfig& u = system_.users[n];
        const ZetaTable& zt = zeta_[n];
        if (mode_ == Mode::Zero || u.window == 0) {
            BoundTables t = value_bounds_perfect(u, zt, system_.grid, lambda, 0);
            b.lower += u.arrival_rate * std::max(0.0, t.lower[u.deadline]);
            b.upper += u.arrival_rate * std::min(u.weight, t.upper[u.deadline]);
        } else if (mode_ == Mode::Perfect) {
            BoundTables t = value_bounds_perfect(u, zt, system_.grid, lambda, u.window);
            int entry = u.deadline + u.window;
            b.lower += u.arrival_rate * std::max(0.0, t.lower[entry]);
            b.upper += u.arrival_rate * std::min(u.weight, t.upper[entry]);
        } else {
            BoundTables tt = value_bounds_imperfect(u, zt, system_.grid, lambda);
            BoundTables t0 = value_bounds_perfect(u, zt, system_.grid, lambda, 0);
            double atil = predicted_rate(u.arrival_rate, u.true_positive,
                                         u.false_negative, system_.arrival_cap);
            double miss_weight = (system_.arrival_cap - atil) * u.false_negative;
            int entry = u.deadline + u.window;
            b.lower += atil * std::max({0.0, tt.lower[u.deadline], tt.lower[entry]}) +
                       miss_weight * std::max(0.0, t0.lower[u.deadline]);
            b.upper += atil * std::min(u.true_positive * u.weight, tt.upper[entry]) +
                       miss_weight * std::min(u.weight, t0.upper[u.deadline]);
        }
    }
    return b;
}

double BoundProblem::lambda_upper() const {
    double hi = 0.0;
    double e1 = system_.grid.level(1);
    for (size_t n = 0; n < system_.users.size(); ++n)
        for (int i = 0; i < system_.users[n].channel.state_count(); ++i)
            hi = std::max(hi, zeta_[n](i, 1) * system_.users[n].weight / e1);
    return hi;
}

double BoundProblem::minimize_lower(double tol) const {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = lambda_upper();
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = evaluate(x1).lower, f2 = evaluate(x2).lower;
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = evaluate(x1).lower;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = evaluate(x2).lower;
        }
    }
    double mid = 0.5 * (a + b);
    // endpoints can beat the interior when the minimum sits at lambda = 0
    if (evaluate(0.0).lower <= evaluate(mid).lower) return 0.0;
    return mid;
}

std::pair<double, double> improvement_bounds_general(const SystemConfig& system,
                                                     Mode mode) {
    if (mode == Mode::Zero)
        throw std::invalid_argument("improvement_bounds_general: mode must be predictive");
    BoundProblem zero(system, Mode::Zero);
    BoundProblem pred(system, mode);
    double l0 = zero.minimize_lower();
    double lm = pred.minimize_lower();
    double lower = pred.evaluate(lm).lower - zero.evaluate(lm).upper;
    double upper = pred.evaluate(l0).upper - zero.evaluate(l0).lower;
    return {lower, upper};
}

}  // namespace timely
