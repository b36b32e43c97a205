#include "timely/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace timely {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Packet {
    long long nominal;   // slot of (possibly predicted) arrival
    long long deadline;  // nominal + tau; outdated from this slot on
    long long enter;     // first schedulable slot
    bool predicted;
    bool real;
    bool serve;
    bool pending;  // pre-served success awaiting reveal
    bool done;
};

struct Batcher {
    int batches;
    long long horizon;
    std::vector<double> sums;

    Batcher(int nb, long long T) : batches(nb), horizon(T), sums(nb, 0.0) {}
    void add(long long slot, double v) {
        int b = static_cast<int>(slot * batches / horizon);
        sums[std::min(b, batches - 1)] += v;
    }
    double total() const {
        double s = 0.0;
        for (double v : sums) s += v;
        return s;
    }
    // standard error of the mean rate from batch means
    double se() const {
        std::vector<double> rates(batches);
        double mean = 0.0;
        for (int b = 0; b < batches; ++b) {
            long long lo = static_cast<long long>(b) * horizon / batches;
            long long hi = static_cast<long long>(b + 1) * horizon / batches;
            rates[b] = sums[b] / double(hi - lo);
            mean += rates[b];
        }
        mean /= batches;
        double var = 0.0;
        for (double r : rates) var += (r - mean) * (r - mean);
        var /= (batches - 1);
        return std::sqrt(var / batches);
    }
};

constexpr double kT95_29df = 2.045;  // two-sided 95% quantile, 29 dof

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, int user, StreamPurpose purpose) {
    std::uint64_t x = splitmix64(seed);
    x = splitmix64(x ^ (static_cast<std::uint64_t>(user + 2) << 8));
    x = splitmix64(x ^ (static_cast<std::uint64_t>(purpose) + 1));
    return x;
}

std::vector<int> truncate_scheduled(const std::vector<int>& scheduled, int capacity,
                                    std::mt19937_64& rng) {
    if (capacity <= 0) throw std::invalid_argument("truncate_scheduled: capacity must be positive");
    const int n = static_cast<int>(scheduled.size());
    if (n <= capacity) return scheduled;
    // partial Fisher-Yates over index positions, then restore order
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < capacity; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(capacity);
    std::sort(idx.begin(), idx.end());
    std::vector<int> kept;
    kept.reserve(capacity);
    for (int i : idx) kept.push_back(scheduled[i]);
    return kept;
}

std::vector<UserPolicy> policies_from_dual(const DualSolution& dual, Mode mode) {
    std::vector<UserPolicy> out;
    out.reserve(dual.users.size());
    for (size_t n = 0; n < dual.users.size(); ++n) {
        UserPolicy p;
        p.policy = dual.users[n].predicted.policy;
        p.missed_policy = (mode == Mode::Imperfect && !dual.users[n].missed.policy.level.empty())
                              ? dual.users[n].missed.policy
                              : dual.users[n].predicted.policy;
        p.serve_probability = dual.serve_probability[n];
        out.push_back(std::move(p));
    }
    return out;
}

SimMetrics run(const SystemConfig& system, const std::vector<UserPolicy>& policies,
               const SimOptions& opts) {
    const int N = static_cast<int>(system.users.size());
    if (static_cast<int>(policies.size()) != N)
        throw std::invalid_argument("run: one policy per user required");
    const long long T = opts.horizon;
    if (T < 1000) throw std::invalid_argument("run: horizon must be >= 1000");
    std::optional<int> capacity = opts.capacity ? opts.capacity : system.capacity;

    std::vector<ZetaTable> zeta;
    std::vector<std::mt19937_64> rng_arrival, rng_channel, rng_success, rng_random;
    std::vector<int> state(N);
    std::vector<double> atil(N);
    std::vector<int> window(N);
    for (int n = 0; n < N; ++n) {
        const UserConfig& u = system.users[n];
        zeta.push_back(make_zeta_table(u, system.grid));
        rng_arrival.emplace_back(derive_seed(opts.seed, n, StreamPurpose::Arrivals));
        rng_channel.emplace_back(derive_seed(opts.seed, n, StreamPurpose::Channel));
        rng_success.emplace_back(derive_seed(opts.seed, n, StreamPurpose::Success));
        rng_random.emplace_back(derive_seed(opts.seed, n, StreamPurpose::Randomization));
        window[n] = opts.mode == Mode::Zero ? 0 : u.window;
        atil[n] = opts.mode == Mode::Imperfect
                      ? predicted_rate(u.arrival_rate, u.true_positive, u.false_negative,
                                       system.arrival_cap)
                      : u.arrival_rate;
        // initial channel state from the stationary distribution
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double r = unif(rng_channel[n]), acc = 0.0;
        state[n] = u.channel.state_count() - 1;
        for (int i = 0; i < u.channel.state_count(); ++i) {
            acc += u.channel.eta[i];
            if (r < acc) {
                state[n] = i;
                break;
            }
        }
    }
    std::mt19937_64 rng_trunc(derive_seed(opts.seed, -1, StreamPurpose::Arrivals));

    std::vector<std::vector<Packet>> packets(N);
    Batcher phi_batch(opts.batches, T), energy_batch(opts.batches, T);
    std::vector<Batcher> user_batch(N, Batcher(opts.batches, T));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    struct Sched {
        int user;
        int packet;
        int level;
    };
    std::vector<Sched> scheduled;
    std::ostringstream trace;
    if (opts.slot_trace) trace << "slot,user,live,scheduled,delivered,energy\n";

    for (long long t = 0; t < T; ++t) {
        // arrivals / predictions for nominal slot t + window
        for (int n = 0; n < N; ++n) {
            const UserConfig& u = system.users[n];
            for (int c = 0; c < system.arrival_cap; ++c) {
                double mark = unif(rng_arrival[n]);
                bool predicted = false, real = false;
                if (opts.mode == Mode::Imperfect) {
                    if (mark < atil[n] / system.arrival_cap) {
                        predicted = true;
                        real = unif(rng_arrival[n]) < u.true_positive;
                    } else {
                        real = unif(rng_arrival[n]) < u.false_negative;
                    }
                } else {
                    predicted = window[n] > 0;
                    real = mark < u.arrival_rate / system.arrival_cap;
                    if (!real) continue;
                }
                if (!predicted && !real) continue;
                Packet pk;
                pk.nominal = t + window[n];
                pk.deadline = pk.nominal + u.deadline;
                pk.enter = predicted ? t : pk.nominal;
                pk.predicted = predicted;
                pk.real = real;
                pk.serve = unif(rng_random[n]) < policies[n].serve_probability;
                pk.pending = false;
                pk.done = false;
                packets[n].push_back(pk);
            }
        }

        // reveal and expiry
        for (int n = 0; n < N; ++n) {
            const UserConfig& u = system.users[n];
            for (auto& pk : packets[n]) {
                if (pk.done) continue;
                if (pk.predicted && pk.nominal == t) {
                    if (!pk.real) {
                        pk.done = true;  // false alarm, no reward ever
                        continue;
                    }
                    if (pk.pending) {  // pre-served delivery confirmed
                        phi_batch.add(t, u.weight);
                        user_batch[n].add(t, 1.0);
                        pk.done = true;
                        continue;
                    }
                }
                if (t >= pk.deadline) pk.done = true;
            }
        }

        // scheduling decisions
        scheduled.clear();
        for (int n = 0; n < N; ++n) {
            for (size_t k = 0; k < packets[n].size(); ++k) {
                Packet& pk = packets[n][k];
                if (pk.done || pk.pending || !pk.serve || pk.enter > t) continue;
                int tau_rem = static_cast<int>(pk.deadline - t);
                const PolicyTable& table =
                    (opts.mode == Mode::Imperfect && !pk.predicted) ? policies[n].missed_policy
                                                                    : policies[n].policy;
                if (tau_rem < 1 || tau_rem > table.horizon)
                    throw std::runtime_error("run: policy horizon does not cover packet state");
                int level = table.at(tau_rem, state[n]);
                if (level > 0) scheduled.push_back({n, static_cast<int>(k), level});
            }
        }

        // hard capacity: keep a uniform random subset, drop the rest
        if (capacity && static_cast<int>(scheduled.size()) > *capacity) {
            std::vector<int> ids(scheduled.size());
            for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
            std::vector<int> kept = truncate_scheduled(ids, *capacity, rng_trunc);
            std::vector<char> keep(scheduled.size(), 0);
            for (int i : kept) keep[i] = 1;
            std::vector<Sched> pruned;
            for (size_t i = 0; i < scheduled.size(); ++i) {
                if (keep[i]) {
                    pruned.push_back(scheduled[i]);
                } else if (!opts.defer_truncated) {
                    packets[scheduled[i].user][scheduled[i].packet].done = true;
                }
            }
            scheduled.swap(pruned);
        }

        // transmissions
        std::vector<int> live_count(N, 0), sched_count(N, 0), delivered_count(N, 0);
        std::vector<double> energy_count(N, 0.0);
        for (const Sched& s : scheduled) {
            const UserConfig& u = system.users[s.user];
            Packet& pk = packets[s.user][s.packet];
            double e = system.grid.level(s.level);
            energy_batch.add(t, e);
            energy_count[s.user] += e;
            ++sched_count[s.user];
            double z = zeta[s.user](state[s.user], s.level);
            if (unif(rng_success[s.user]) < z) {
                if (pk.predicted && t < pk.nominal) {
                    pk.pending = true;  // reward decided at reveal
                } else {
                    phi_batch.add(t, u.weight);
                    user_batch[s.user].add(t, 1.0);
                    ++delivered_count[s.user];
                    pk.done = true;
                }
            }
        }

        // channel evolution
        for (int n = 0; n < N; ++n) {
            const UserConfig& u = system.users[n];
            double r = unif(rng_channel[n]), acc = 0.0;
            int next = u.channel.state_count() - 1;
            for (int j = 0; j < u.channel.state_count(); ++j) {
                acc += u.channel.transition[state[n]][j];
                if (r < acc) {
                    next = j;
                    break;
                }
            }
            state[n] = next;
        }

        if (opts.slot_trace) {
            for (int n = 0; n < N; ++n) {
                for (const auto& pk : packets[n])
                    if (!pk.done && pk.enter <= t) ++live_count[n];
                trace << t << "," << n << "," << live_count[n] << "," << sched_count[n]
                      << "," << delivered_count[n] << "," << energy_count[n] << "\n";
            }
        }

        // compact finished packets now and then
        if ((t & 1023) == 0) {
            for (int n = 0; n < N; ++n) {
                auto& v = packets[n];
                v.erase(std::remove_if(v.begin(), v.end(),
                                       [](const Packet& p) { return p.done; }),
                        v.end());
            }
        }
    }

    SimMetrics m;
    m.slots = T;
    m.throughput.resize(N);
    m.throughput_se.resize(N);
    for (int n = 0; n < N; ++n) {
        m.throughput[n] = user_batch[n].total() / double(T);
        m.throughput_se[n] = user_batch[n].se();
    }
    m.phi = phi_batch.total() / double(T);
    m.phi_se = phi_batch.se();
    m.phi_half_width = kT95_29df * m.phi_se;
    m.e_av = energy_batch.total() / double(T);
    m.e_av_se = energy_batch.se();
    m.e_av_half_width = kT95_29df * m.e_av_se;
    if (opts.slot_trace) *opts.slot_trace = trace.str();
    return m;
}

std::string metrics_json(const SimMetrics& m) {
    nlohmann::json j;
    j["slots"] = m.slots;
    j["throughput"] = m.throughput;
    j["throughput_se"] = m.throughput_se;
    j["phi"] = m.phi;
    j["phi_se"] = m.phi_se;
    j["phi_half_width"] = m.phi_half_width;
    j["e_av"] = m.e_av;
    j["e_av_se"] = m.e_av_se;
    j["e_av_half_width"] = m.e_av_half_width;
    return j.dump(2);
}

}  // namespace timely
