#include "timely/dual.hpp"

#include <cmath>
#include <sstream>

namespace timely {

namespace {

double dot_eta(const std::vector<double>& eta, const ValueTable& t, int tau) {
    double s = 0.0;
    for (int i = 0; i < t.states; ++i) s += eta[i] * t.at(tau, i);
    return s;
}

}  // namespace

DualProblem::DualProblem(const SystemConfig& system, Mode mode,
                         bool pessimistic_false_alarms)
    : system_(system), mode_(mode), pessimistic_false_alarms_(pessimistic_false_alarms) {
    finalize(system_);
    zeta_.reserve(system_.users.size());
    for (const auto& u : system_.users) zeta_.push_back(make_zeta_table(u, system_.grid));
}

DualEval DualProblem::evaluate(double lambda, Backend backend) const {
    DualEval ev;
    ev.lambda = lambda;
    ev.users.resize(system_.users.size());
    SpsOptions opts;
    opts.backend = backend;
    for (size_t n = 0; n < system_.users.size(); ++n) {
        const UserConfig& u = system_.users[n];
        const ZetaTable& zt = zeta_[n];
        const std::vector<double>& eta = u.channel.eta;
        UserDual& ud = ev.users[n];
        if (mode_ == Mode::Zero || u.window == 0) {
            ud.predicted = solve_perfect(u, zt, system_.grid, lambda, 0, opts);
            ValueTable ebar =
                expected_resource(u, zt, system_.grid, ud.predicted.policy, SpsMode::Perfect);
            ud.dual_value = u.arrival_rate * dot_eta(eta, ud.predicted.value, u.deadline);
            ud.expected_energy = u.arrival_rate * dot_eta(eta, ebar, u.deadline);
        } else if (mode_ == Mode::Perfect) {
            ud.predicted = solve_perfect(u, zt, system_.grid, lambda, u.window, opts);
            ValueTable ebar =
                expected_resource(u, zt, system_.grid, ud.predicted.policy, SpsMode::Perfect);
            int entry = u.deadline + u.window;
            ud.dual_value = u.arrival_rate * dot_eta(eta, ud.predicted.value, entry);
            ud.expected_energy = u.arrival_rate * dot_eta(eta, ebar, entry);
        } else {
            ud.predicted = solve_imperfect(u, zt, system_.grid, lambda, opts);
            ud.missed = solve_perfect(u, zt, system_.grid, lambda, 0, opts);
            ValueTable ebar_pred =
                expected_resource(u, zt, system_.grid, ud.predicted.policy,
                                  SpsMode::Imperfect, pessimistic_false_alarms_);
            ValueTable ebar_miss = expected_resource(u, zt, system_.grid,
                                                     ud.missed.policy, SpsMode::Perfect);
            double atil = predicted_rate(u.arrival_rate, u.true_positive,
                                         u.false_negative, system_.arrival_cap);
            double miss_weight = (system_.arrival_cap - atil) * u.false_negative;
            int entry = u.deadline + u.window;
            ud.dual_value = atil * dot_eta(eta, ud.predicted.value, entry) +
                            miss_weight * dot_eta(eta, ud.missed.value, u.deadline);
            ud.expected_energy = atil * dot_eta(eta, ebar_pred, entry) +
                                 miss_weight * dot_eta(eta, ebar_miss, u.deadline);
        }
        ev.g += ud.dual_value;
        ev.e_av += ud.expected_energy;
    }
    ev.g += lambda * system_.budget;
    return ev;
}

double DualProblem::lambda_upper() const {
    // Above zeta(i, e1) * beta / e1 (e1 = smallest positive level; concavity
    // puts the best reward/cost ratio there) no transmission has positive
    // one-step value.
    double hi = 0.0;
    for (size_t n = 0; n < system_.users.size(); ++n) {
        const UserConfig& u = system_.users[n];
        double e1 = system_.grid.level(1);
        for (int i = 0; i < u.channel.state_count(); ++i)
            hi = std::max(hi, zeta_[n](i, 1) * u.weight / e1);
    }
    return hi;
}

namespace {

struct BracketState {
    DualEval lo;   // E_av > B
    DualEval hi;   // E_av <= B
    bool has_lo = false;
};

DualSolution finalize_solution(const DualProblem& prob, const BracketState& bracket,
                               std::vector<TracePoint> trace) {
    const double budget = prob.system().budget;
    const DualEval& hi = bracket.hi;
    DualSolution sol;
    sol.lambda_star = hi.lambda;
    sol.phi_star = hi.g;
    sol.users = hi.users;
    sol.serve_probability.assign(hi.users.size(), 1.0);
    sol.trace = std::move(trace);
    sol.e_av = hi.e_av;
    if (!bracket.has_lo) return sol;

    // Users whose consumption jumps across lambda* sit on the boundary; fill
    // the remaining budget with serving probabilities in user-index order.
    constexpr double kJumpTol = 1e-4;
    double deficit = budget - hi.e_av;
    for (size_t n = 0; n < hi.users.size(); ++n) {
        double jump = bracket.lo.users[n].expected_energy - hi.users[n].expected_energy;
        if (jump <= kJumpTol || deficit <= 0.0) continue;
        double pbar = std::min(1.0, deficit / jump);
        sol.users[n] = bracket.lo.users[n];  // the "serve" branch policy
        sol.serve_probability[n] = pbar;
        sol.e_av += pbar * jump;
        deficit -= pbar * jump;
    }
    return sol;
}

DualSolution search_common(const SystemConfig& system, Mode mode,
                           const SearchOptions& opts, bool golden) {
    DualProblem prob(system, mode, opts.pessimistic_false_alarms);
    // With budget_slack > 0 the search stops where consumption still exceeds
    // the true budget by the slack, mimicking the termination residual of the
    // solver behind the reference tables.
    const double budget = system.budget + opts.budget_slack;
    std::vector<TracePoint> trace;
    int iter = 0;
    auto eval = [&](double lambda) {
        DualEval ev = prob.evaluate(lambda, opts.backend);
        trace.push_back({iter++, lambda, ev.g, budget - ev.e_av});
        return ev;
    };

    DualEval at_zero = eval(0.0);
    BracketState bracket;
    if (at_zero.e_av <= budget) {
        // budget slack: constraint inactive
        bracket.hi = at_zero;
        return finalize_solution(prob, bracket, std::move(trace));
    }
    bracket.lo = at_zero;
    bracket.has_lo = true;
    double hi_lambda = prob.lambda_upper();
    bool have_hi_eval = false;

    auto note = [&](const DualEval& ev) {
        if (ev.e_av > budget) {
            if (ev.lambda > bracket.lo.lambda) bracket.lo = ev;
        } else {
            if (!have_hi_eval || ev.lambda < bracket.hi.lambda) {
                bracket.hi = ev;
                have_hi_eval = true;
                hi_lambda = std::min(hi_lambda, ev.lambda);
            }
        }
    };

    if (golden) {
        // golden-section on [0, hi_lambda]; g is convex piecewise-smooth
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = 0.0, b = hi_lambda;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        DualEval e1 = eval(x1), e2 = eval(x2);
        note(e1);
        note(e2);
        while (b - a > opts.tol && iter < opts.max_iters) {
            if (e1.g <= e2.g) {
                b = x2;
                x2 = x1;
                e2 = e1;
                x1 = b - gr * (b - a);
                e1 = eval(x1);
                note(e1);
            } else {
                a = x1;
                x1 = x2;
                e1 = e2;
                x2 = a + gr * (b - a);
                e2 = eval(x2);
                note(e2);
            }
        }
        if (b - a > opts.tol)
            throw DualConvergenceError("golden-section search did not converge",
                                       std::move(trace));
        // pin the bracket to the converged interval ends (E_av is
        // non-increasing in lambda, so the right end is on the feasible side)
        note(eval(a));
        note(eval(b));
    } else {
        // subgradient phase, then bisection once the crossing is bracketed
        double step0 = opts.step0 > 0.0 ? opts.step0 : budget;
        double lambda = 0.0;
        const int sub_iters = std::min(opts.max_iters / 4, 25);
        for (int k = 1; k <= sub_iters; ++k) {
            double e_last = budget - trace.back().subgradient;
            lambda = std::max(0.0, lambda + step0 / std::sqrt(double(k)) * (e_last - budget));
            lambda = std::min(lambda, hi_lambda);
            DualEval ev = eval(lambda);
            note(ev);
            if (std::fabs(ev.e_av - budget) <= 1e-9) break;
            if (have_hi_eval && bracket.hi.lambda - bracket.lo.lambda <= opts.tol) break;
        }
        if (!have_hi_eval) {
            // lambda_upper is feasible by construction
            DualEval ev = eval(hi_lambda);
            note(ev);
            if (!have_hi_eval)
                throw DualConvergenceError("subgradient search found no feasible lambda",
                                           std::move(trace));
        }
        while (bracket.hi.lambda - bracket.lo.lambda > opts.tol) {
            if (iter >= opts.max_iters)
                throw DualConvergenceError("dual search exceeded max_iters",
                                           std::move(trace));
            double mid = 0.5 * (bracket.lo.lambda + bracket.hi.lambda);
            note(eval(mid));
        }
    }

    if (!have_hi_eval) {
        DualEval ev = eval(hi_lambda);
        note(ev);
    }
    return finalize_solution(prob, bracket, std::move(trace));
}

}  // namespace

DualSolution subgradient_search(const SystemConfig& system, Mode mode,
                                const SearchOptions& opts) {
    return search_common(system, mode, opts, false);
}

DualSolution golden_section_search(const SystemConfig& system, Mode mode,
                                   const SearchOptions& opts) {
    return search_common(system, mode, opts, true);
}

SearchOptions reference_budgeting(const SystemConfig& system) {
    SearchOptions opts;
    opts.budget_slack = 0.0025 * system.budget;
    opts.pessimistic_false_alarms = true;
    return opts;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
    std::ostringstream os;
    os << "iteration,lambda,g,subgradient\n";
    for (const auto& t : trace)
        os << t.iteration << "," << t.lambda << "," << t.g << "," << t.subgradient << "\n";
    return os.str();
}

}  // namespace timely
