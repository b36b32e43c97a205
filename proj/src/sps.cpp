#include "timely/sps.hpp"

#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace timely {

namespace {

struct Best {
    double value;
    int level;
};

inline bool improves(const Best& cand, const Best& best, TieBreak tb) {
    if (cand.value != best.value) return cand.value > best.value;
    return tb == TieBreak::SmallestLevel ? cand.level < best.level
                                         : cand.level > best.level;
}

// argmax over the grid of gain * zeta[l] - lambda * e[l]; the state-constant
// part of the Bellman candidate is added by the caller.
Best best_action_serial(const double* zrow, const double* levels, int L,
                        double lambda, double gain, TieBreak tb) {
    Best best{gain * zrow[0] - lambda * levels[0], 0};
    for (int l = 1; l < L; ++l) {
        Best cand{gain * zrow[l] - lambda * levels[l], l};
        if (improves(cand, best, tb)) best = cand;
    }
    return best;
}

Best best_action_parallel(const double* zrow, const double* levels, int L,
                          double lambda, double gain, TieBreak tb) {
#ifdef _OPENMP
    Best best{gain * zrow[0] - lambda * levels[0], 0};
#pragma omp parallel
    {
        Best local{gain * zrow[0] - lambda * levels[0], 0};
#pragma omp for nowait
        for (int l = 1; l < L; ++l) {
            Best cand{gain * zrow[l] - lambda * levels[l], l};
            if (improves(cand, local, tb)) local = cand;
        }
#pragma omp critical
        {
            if (improves(local, best, tb)) best = local;
        }
    }
    return best;
#else
    return best_action_serial(zrow, levels, L, lambda, gain, tb);
#endif
}

inline Best best_action(const double* zrow, const double* levels, int L,
                        double lambda, double gain, const SpsOptions& opts) {
    return opts.backend == Backend::Parallel
               ? best_action_parallel(zrow, levels, L, lambda, gain, opts.tie_break)
               : best_action_serial(zrow, levels, L, lambda, gain, opts.tie_break);
}

SpsSolution make_tables(int horizon, int K) {
    SpsSolution s;
    s.value.horizon = horizon;
    s.value.states = K;
    s.value.v.assign(static_cast<size_t>(horizon + 1) * K, 0.0);
    s.policy.horizon = horizon;
    s.policy.states = K;
    s.policy.level.assign(static_cast<size_t>(horizon + 1) * K, 0);
    return s;
}

inline double continuation(const UserConfig& user, const ValueTable& V, int tau,
                           int i) {
    const int K = V.states;
    double c = 0.0;
    for (int j = 0; j < K; ++j) c += user.channel.transition[i][j] * V.at(tau, j);
    return c;
}

}  // namespace

SpsSolution solve_perfect(const UserConfig& user, const ZetaTable& zeta,
                          const ResourceGrid& grid, double lambda, int window,
                          const SpsOptions& opts) {
    const int D = window >= 0 ? window : user.window;
    const int H = user.deadline + D;
    const int K = user.channel.state_count();
    const int L = grid.size();
    const double* levels = grid.levels.data();
    if (H < 1) throw std::invalid_argument("solve_perfect: horizon must be >= 1");

    SpsSolution out = make_tables(H, K);
    for (int tau = 1; tau <= H; ++tau) {
        for (int i = 0; i < K; ++i) {
            double cont = continuation(user, out.value, tau - 1, i);
            Best b = best_action(zeta.row(i), levels, L, lambda, user.weight - cont, opts);
            out.value.at(tau, i) = cont + b.value;
            out.policy.at(tau, i) = b.level;
        }
    }
    return out;
}

SpsSolution solve_imperfect(const UserConfig& user, const ZetaTable& zeta,
                            const ResourceGrid& grid, double lambda,
                            const SpsOptions& opts) {
    if (user.window < 1)
        throw std::invalid_argument("solve_imperfect: prediction window must be >= 1");
    const int tau_n = user.deadline;
    const int H = tau_n + user.window;
    const int K = user.channel.state_count();
    const int L = grid.size();
    const double* levels = grid.levels.data();
    const double p = user.true_positive;
    const double beta = user.weight;

    SpsSolution out = make_tables(H, K);
    for (int tau = 1; tau <= H; ++tau) {
        for (int i = 0; i < K; ++i) {
            double cont = continuation(user, out.value, tau - 1, i);
            double add, gain;
            if (tau <= tau_n) {
                // causal regime: delivered value beta
                add = cont;
                gain = beta - cont;
            } else if (tau == tau_n + 1) {
                // reveal stage: success value and failure continuation carry p
                add = p * cont;
                gain = p * (beta - cont);
            } else {
                // pre-reveal regime: delivered value p * beta
                add = cont;
                gain = p * beta - cont;
            }
            Best b = best_action(zeta.row(i), levels, L, lambda, gain, opts);
            out.value.at(tau, i) = add + b.value;
            out.policy.at(tau, i) = b.level;
        }
    }
    return out;
}

ValueTable expected_resource(const UserConfig& user, const ZetaTable& zeta,
                             const ResourceGrid& grid, const PolicyTable& policy,
                             SpsMode mode, bool pessimistic_false_alarms) {
    const int H = policy.horizon;
    const int K = policy.states;
    if (K != user.channel.state_count())
        throw std::invalid_argument("expected_resource: policy does not match user");
    ValueTable ebar;
    ebar.horizon = H;
    ebar.states = K;
    ebar.v.assign(static_cast<size_t>(H + 1) * K, 0.0);
    for (int tau = 1; tau <= H; ++tau) {
        double carry = (mode == SpsMode::Imperfect && !pessimistic_false_alarms &&
                        tau == user.deadline + 1)
                           ? user.true_positive
                           : 1.0;
        for (int i = 0; i < K; ++i) {
            int l = policy.at(tau, i);
            double e = grid.level(l);
            double z = zeta(i, l);
            double cont = 0.0;
            for (int j = 0; j < K; ++j)
                cont += user.channel.transition[i][j] * ebar.at(tau - 1, j);
            ebar.at(tau, i) = e + (1.0 - z) * carry * cont;
        }
    }
    return ebar;
}

namespace {

std::string table_header(int horizon, int deadline) {
    std::ostringstream os;
    os << "state";
    for (int tau = horizon; tau >= 1; --tau) {
        if (tau > deadline)
            os << ",tau=" << deadline << "+" << (tau - deadline);
        else
            os << ",tau=" << tau;
    }
    return os.str();
}

}  // namespace

std::string value_table_csv(const ValueTable& t, int deadline) {
    std::ostringstream os;
    os << table_header(t.horizon, deadline) << "\n";
    for (int i = 0; i < t.states; ++i) {
        os << "s" << (i + 1);
        for (int tau = t.horizon; tau >= 1; --tau) os << "," << t.at(tau, i);
        os << "\n";
    }
    return os.str();
}

std::string policy_table_csv(const PolicyTable& t, const ResourceGrid& grid,
                             int deadline) {
    std::ostringstream os;
    os << table_header(t.horizon, deadline) << "\n";
    for (int i = 0; i < t.states; ++i) {
        os << "s" << (i + 1);
        for (int tau = t.horizon; tau >= 1; --tau) os << "," << t.resource(grid, tau, i);
        os << "\n";
    }
    return os.str();
}

}  // namespace timely
