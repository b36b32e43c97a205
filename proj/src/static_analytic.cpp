#include "timely/static_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "timely/model.hpp"

namespace timely {

double geometric_factor(double zeta, int tau) {
    double rho = 1.0 - zeta;
    double sum = 0.0, pw = 1.0;
    for (int k = 0; k < tau; ++k) {
        sum += pw;
        pw *= rho;
    }
    return sum;
}

double value_perfect_static(const StaticUser& u, double lambda, int tau) {
    if (tau <= 0 || tau > u.deadline + u.window)
        throw std::invalid_argument("value_perfect_static: tau out of range");
    double margin = u.zeta * u.weight - lambda;
    if (margin <= 0.0) return 0.0;
    return geometric_factor(u.zeta, tau) * margin;
}

double threshold_c(const StaticUser& u, double lambda) {
    double margin = u.zeta * u.weight - lambda;
    if (margin <= 0.0)
        throw std::invalid_argument("threshold_c: requires zeta*beta > lambda");
    double rho_tau = std::pow(1.0 - u.zeta, u.deadline);
    return lambda / (margin * rho_tau + lambda);
}

double value_imperfect_static(const StaticUser& u, double lambda, int w) {
    if (w <= 0 || w > u.window)
        throw std::invalid_argument("value_imperfect_static: w out of range");
    double margin = u.zeta * u.weight - lambda;
    if (margin <= 0.0) return 0.0;
    double c = threshold_c(u, lambda);
    double p = u.true_positive;
    if (p > c)
        return -(1.0 - p) * geometric_factor(u.zeta, w) * lambda +
               p * geometric_factor(u.zeta, u.deadline + w) * margin;
    return p * geometric_factor(u.zeta, u.deadline) * margin;
}

double v_n(const StaticUser& u, double lambda) {
    double margin = u.zeta * u.weight - lambda;
    if (margin <= 0.0) throw std::invalid_argument("v_n: requires zeta*beta > lambda");
    double c = threshold_c(u, lambda);
    double p = u.true_positive;
    if (p > c)
        return -(1.0 - p) * geometric_factor(u.zeta, u.window) * lambda +
               p * geometric_factor(u.zeta, u.deadline + u.window) * margin;
    return p * geometric_factor(u.zeta, u.deadline) * margin;
}

double dual_static_perfect(const std::vector<StaticUser>& users, double budget,
                           double lambda) {
    double g = lambda * budget;
    for (const auto& u : users) {
        double margin = u.zeta * u.weight - lambda;
        if (margin > 0.0)
            g += u.arrival_rate * geometric_factor(u.zeta, u.deadline + u.window) * margin;
    }
    return g;
}

double dual_static_imperfect(const std::vector<StaticUser>& users, double budget,
                             double lambda) {
    double g = lambda * budget;
    for (const auto& u : users) {
        double margin = u.zeta * u.weight - lambda;
        if (margin <= 0.0) continue;
        double atil = predicted_rate(u.arrival_rate, u.true_positive, u.false_negative,
                                     u.arrival_cap);
        g += atil * v_n(u, lambda);
        g += (u.arrival_cap - atil) * u.false_negative *
             geometric_factor(u.zeta, u.deadline) * margin;
    }
    return g;
}

namespace {

// lambda where p_n crosses the pre-service threshold c_n(lambda); c is
// monotone increasing in lambda so the crossing is unique.
double threshold_breakpoint(const StaticUser& u) {
    double rho_tau = std::pow(1.0 - u.zeta, u.deadline);
    double p = u.true_positive;
    double denom = 1.0 - p + p * rho_tau;
    return p * u.zeta * u.weight * rho_tau / denom;
}

template <typename Dual>
std::pair<double, double> minimize_breakpoints(const std::vector<double>& breakpoints,
                                               Dual&& dual) {
    std::vector<double> cands = breakpoints;
    cands.push_back(0.0);
    std::sort(cands.begin(), cands.end());
    double best_lambda = 0.0, best_g = dual(0.0);
    for (double l : cands) {
        if (l < 0.0) continue;
        double g = dual(l);
        if (g < best_g - 1e-15) {
            best_g = g;
            best_lambda = l;
        }
    }
    return {best_lambda, best_g};
}

}  // namespace

std::pair<double, double> optimize_static_perfect(const std::vector<StaticUser>& users,
                                                  double budget) {
    std::vector<double> bps;
    for (const auto& u : users) bps.push_back(u.zeta * u.weight);
    return minimize_breakpoints(
        bps, [&](double l) { return dual_static_perfect(users, budget, l); });
}

std::pair<double, double> optimize_static_zero(const std::vector<StaticUser>& users,
                                               double budget) {
    std::vector<StaticUser> zero = users;
    for (auto& u : zero) u.window = 0;
    return optimize_static_perfect(zero, budget);
}

std::pair<double, double> optimize_static_imperfect(const std::vector<StaticUser>& users,
                                                    double budget) {
    std::vector<double> bps;
    for (const auto& u : users) {
        bps.push_back(u.zeta * u.weight);
        bps.push_back(threshold_breakpoint(u));
    }
    return minimize_breakpoints(
        bps, [&](double l) { return dual_static_imperfect(users, budget, l); });
}

std::pair<double, double> improvement_bounds(const std::vector<StaticUser>& users,
                                             double budget, StaticMode mode) {
    auto [l0, phi0] = optimize_static_zero(users, budget);
    (void)phi0;
    if (mode == StaticMode::Perfect) {
        auto [lp, phip] = optimize_static_perfect(users, budget);
        (void)phip;
        auto bound = [&](double lambda) {
            double s = 0.0;
            for (const auto& u : users) {
                double margin = u.zeta * u.weight - lambda;
                if (margin <= 0.0) continue;
                double rho = 1.0 - u.zeta;
                s += u.arrival_rate / u.zeta *
                     (std::pow(rho, u.deadline) - std::pow(rho, u.deadline + u.window)) *
                     margin;
            }
            return s;
        };
        return {bound(lp), bound(l0)};
    }
    auto [li, phii] = optimize_static_imperfect(users, budget);
    (void)phii;
    auto bound = [&](double lambda) {
        double s = 0.0;
        for (const auto& u : users) {
            double margin = u.zeta * u.weight - lambda;
            if (margin <= 0.0) continue;
            double atil = predicted_rate(u.arrival_rate, u.true_positive,
                                         u.false_negative, u.arrival_cap);
            s += atil * (v_n(u, lambda) -
                         u.true_positive * geometric_factor(u.zeta, u.deadline) * margin);
        }
        return s;
    };
    return {bound(li), bound(l0)};
}

double expected_transmissions(double zeta, int slots) {
    double rho = 1.0 - zeta;
    double sum = 0.0, pw = 1.0;  // pw = rho^(k-1)
    for (int k = 1; k < slots; ++k) {
        sum += k * pw * zeta;
        pw *= rho;
    }
    sum += slots * pw;
    return sum;
}

double budget_randomization(const std::vector<StaticUser>& users, double lambda_star,
                            double budget, int boundary_user, double tol) {
    const StaticUser& b = users.at(boundary_user);
    if (std::fabs(b.zeta * b.weight - lambda_star) > tol)
        throw std::invalid_argument("budget_randomization: user is not on the boundary");
    double strict_consumption = 0.0;
    for (size_t j = 0; j < users.size(); ++j) {
        const StaticUser& u = users[j];
        if (u.zeta * u.weight > lambda_star + tol)
            strict_consumption +=
                u.arrival_rate * expected_transmissions(u.zeta, u.deadline + u.window);
    }
    double own = b.arrival_rate * expected_transmissions(b.zeta, b.deadline + b.window);
    double pbar = (budget - strict_consumption) / own;
    if (pbar < -1e-12 || pbar > 1.0 + 1e-12)
        throw std::runtime_error(
            "budget_randomization: probability outside [0,1]; lambda* mislocated");
    return std::clamp(pbar, 0.0, 1.0);
}

}  // namespace timely
