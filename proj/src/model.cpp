#include "timely/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace timely {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr long kMaxPowerIters = 1000000;

bool reaches_all(const Matrix& P) {
    // Every state must reach every other state through positive entries.
    const int K = static_cast<int>(P.size());
    for (int start = 0; start < K; ++start) {
        std::vector<char> seen(K, 0);
        std::vector<int> stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < K; ++j) {
                if (!seen[j] && P[i][j] > 0.0) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        for (int j = 0; j < K; ++j)
            if (!seen[j]) return false;
    }
    return true;
}

// Dense solve of eta^T P = eta^T, sum(eta) = 1 by Gaussian elimination on
// (P^T - I) with the last equation replaced by the normalization.
std::vector<double> stationary_by_solve(const Matrix& P) {
    const int K = static_cast<int>(P.size());
    std::vector<std::vector<double>> A(K, std::vector<double>(K + 1, 0.0));
    for (int i = 0; i < K - 1; ++i) {
        for (int j = 0; j < K; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
        A[i][K] = 0.0;
    }
    for (int j = 0; j < K; ++j) A[K - 1][j] = 1.0;
    A[K - 1][K] = 1.0;

    for (int col = 0; col < K; ++col) {
        int pivot = col;
        for (int r = col + 1; r < K; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[pivot][col])) pivot = r;
        if (std::fabs(A[pivot][col]) < 1e-14)
            throw std::runtime_error("stationary_distribution: singular system (chain not ergodic)");
        std::swap(A[col], A[pivot]);
        for (int r = 0; r < K; ++r) {
            if (r == col) continue;
            double f = A[r][col] / A[col][col];
            for (int c = col; c <= K; ++c) A[r][c] -= f * A[col][c];
        }
    }
    std::vector<double> eta(K);
    for (int i = 0; i < K; ++i) eta[i] = A[i][K] / A[i][i];
    return eta;
}

void check_stochastic(const Matrix& P) {
    const size_t K = P.size();
    if (K == 0) throw std::invalid_argument("transition matrix is empty");
    for (size_t i = 0; i < K; ++i) {
        if (P[i].size() != K)
            throw std::invalid_argument("transition matrix is not square");
        double sum = 0.0;
        for (double v : P[i]) {
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("transition entry outside [0,1]");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > kRowSumTol)
            throw std::invalid_argument("transition row does not sum to 1");
    }
}

}  // namespace

int ResourceGrid::index_of(double e) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), e - 1e-9);
    if (it == levels.end() || std::fabs(*it - e) > 1e-9)
        throw std::invalid_argument("resource level not on grid");
    return static_cast<int>(it - levels.begin());
}

ResourceGrid make_uniform_grid(double step, int count) {
    if (step <= 0.0 || count < 2)
        throw std::invalid_argument("uniform grid requires step > 0 and count >= 2");
    ResourceGrid g;
    g.levels.resize(count);
    for (int z = 0; z < count; ++z) g.levels[z] = step * z;
    return g;
}

std::vector<double> stationary_distribution(const Matrix& P) {
    check_stochastic(P);
    const int K = static_cast<int>(P.size());
    if (K == 1) return {1.0};
    if (!reaches_all(P))
        throw std::runtime_error("stationary_distribution: chain is reducible");

    std::vector<double> eta(K, 1.0 / K), next(K);
    for (long it = 0; it < kMaxPowerIters; ++it) {
        for (int j = 0; j < K; ++j) {
            double s = 0.0;
            for (int i = 0; i < K; ++i) s += eta[i] * P[i][j];
            next[j] = s;
        }
        double diff = 0.0;
        for (int j = 0; j < K; ++j) diff = std::max(diff, std::fabs(next[j] - eta[j]));
        eta.swap(next);
        if (diff < 1e-15) {
            double s = 0.0;
            for (double v : eta) s += v;
            for (double& v : eta) v /= s;
            // residual check against the fixed-point equation
            for (int j = 0; j < K; ++j) {
                double col = 0.0;
                for (int i = 0; i < K; ++i) col += eta[i] * P[i][j];
                if (std::fabs(col - eta[j]) > kStationaryTol)
                    return stationary_by_solve(P);
            }
            return eta;
        }
    }
    // periodic chains oscillate; try the direct solve before giving up
    std::vector<double> eta2 = stationary_by_solve(P);
    for (int j = 0; j < K; ++j) {
        double col = 0.0;
        for (int i = 0; i < K; ++i) col += eta2[i] * P[i][j];
        if (std::fabs(col - eta2[j]) > kStationaryTol || eta2[j] < -1e-12)
            throw std::runtime_error("stationary_distribution: chain is not ergodic");
    }
    throw std::runtime_error("stationary_distribution: power iteration did not converge (periodic chain)");
}

static double logistic_zeta(double distance, double noise, double e) {
    if (e == 0.0) return 0.0;
    double x = 2.0 * e / (distance * distance * distance * noise);
    return 2.0 / (1.0 + std::exp(-x)) - 1.0;
}

double success_prob(const SuccessCurve& curve, const ChannelModel& channel,
                    const ResourceGrid& grid, int state, double e) {
    if (state < 0 || state >= channel.state_count())
        throw std::invalid_argument("success_prob: state index out of range");
    int l = grid.index_of(e);
    if (curve.kind == SuccessCurve::Kind::Logistic)
        return logistic_zeta(curve.distance, channel.states[state], grid.level(l));
    if (state >= static_cast<int>(curve.rows.size()) ||
        l >= static_cast<int>(curve.rows[state].size()))
        throw std::invalid_argument("success_prob: table does not cover (state, level)");
    return curve.rows[state][l];
}

double predicted_rate(double a, double p, double q, int a_max) {
    if (!(p > q))
        throw std::invalid_argument("predicted_rate: requires p > q");
    double ratio = a / a_max;
    if (q > ratio || ratio > p)
        throw std::invalid_argument("predicted_rate: requires q <= a/A_max <= p");
    return (a - a_max * q) / (p - q);
}

ZetaTable make_zeta_table(const UserConfig& user, const ResourceGrid& grid) {
    const int K = user.channel.state_count();
    const int L = grid.size();
    std::vector<double> v(static_cast<size_t>(K) * L);
    if (user.curve.kind == SuccessCurve::Kind::Logistic) {
        for (int i = 0; i < K; ++i)
            for (int l = 0; l < L; ++l)
                v[static_cast<size_t>(i) * L + l] =
                    logistic_zeta(user.curve.distance, user.channel.states[i], grid.level(l));
    } else {
        if (static_cast<int>(user.curve.rows.size()) != K)
            throw std::invalid_argument("curve table row count != state count");
        for (int i = 0; i < K; ++i) {
            if (static_cast<int>(user.curve.rows[i].size()) != L)
                throw std::invalid_argument("curve table column count != grid size");
            for (int l = 0; l < L; ++l)
                v[static_cast<size_t>(i) * L + l] = user.curve.rows[i][l];
        }
    }
    return ZetaTable(K, L, std::move(v));
}

namespace {

void validate_user(const SystemConfig& sys, int n, std::vector<Violation>& out) {
    const UserConfig& u = sys.users[n];
    auto add = [&](const char* field, std::string msg) {
        out.push_back({n, field, std::move(msg)});
    };

    if (u.arrival_rate <= 0.0 || u.arrival_rate > sys.arrival_cap)
        add("arrival_rate", "a must lie in (0, A_max]");
    if (u.deadline <= 0) add("deadline", "tau must be positive");
    if (u.deadline > sys.deadline_cap) add("deadline", "tau exceeds deadline cap");
    if (u.weight < 0.0) add("weight", "beta must be non-negative");
    if (u.window < 0) add("window", "D must be non-negative");
    if (u.true_positive <= 0.0 || u.true_positive > 1.0)
        add("true_positive", "p must lie in (0, 1]");
    if (u.false_negative < 0.0 || u.false_negative >= 1.0)
        add("false_negative", "q must lie in [0, 1)");
    if (!(u.true_positive > u.false_negative)) add("true_positive", "p > q required");
    if (sys.arrival_cap > 0 && u.arrival_rate > 0.0) {
        double ratio = u.arrival_rate / sys.arrival_cap;
        if (u.false_negative > ratio + 1e-12 || ratio > u.true_positive + 1e-12)
            add("false_negative", "q <= a/A_max <= p required");
    }

    // channel
    const ChannelModel& ch = u.channel;
    const int K = ch.state_count();
    if (K == 0) {
        add("channel", "channel has no states");
        return;
    }
    try {
        check_stochastic(ch.transition);
    } catch (const std::exception& ex) {
        add("channel", ex.what());
        return;
    }
    if (static_cast<int>(ch.transition.size()) != K) {
        add("channel", "transition dimension != state count");
        return;
    }
    try {
        std::vector<double> eta = stationary_distribution(ch.transition);
        if (!ch.eta.empty()) {
            for (int i = 0; i < K; ++i)
                if (std::fabs(ch.eta[i] - eta[i]) > kStationaryTol) {
                    add("channel", "cached stationary distribution is inconsistent");
                    break;
                }
        }
    } catch (const std::exception& ex) {
        add("channel", ex.what());
    }

    // success curve: zeta(i,0)=0, strictly increasing, concave, total order
    ZetaTable zt;
    try {
        zt = make_zeta_table(u, sys.grid);
    } catch (const std::exception& ex) {
        add("curve", ex.what());
        return;
    }
    const int L = sys.grid.size();
    for (int i = 0; i < K; ++i) {
        if (zt(i, 0) != 0.0) add("curve", "zeta(i,0) must be 0");
        for (int l = 1; l < L; ++l) {
            if (!(zt(i, l) > zt(i, l - 1))) {
                add("curve", "zeta must be strictly increasing in e");
                break;
            }
            if (zt(i, l) < 0.0 || zt(i, l) > 1.0) {
                add("curve", "zeta outside [0,1]");
                break;
            }
        }
        for (int l = 2; l < L; ++l) {
            double de1 = sys.grid.level(l - 1) - sys.grid.level(l - 2);
            double de2 = sys.grid.level(l) - sys.grid.level(l - 1);
            double slope1 = (zt(i, l - 1) - zt(i, l - 2)) / de1;
            double slope2 = (zt(i, l) - zt(i, l - 1)) / de2;
            if (slope2 > slope1 + 1e-12) {
                add("curve", "zeta must be concave in e");
                break;
            }
        }
    }
    for (int i = 0; i < K && L > 1; ++i) {
        for (int j = i + 1; j < K; ++j) {
            bool ge = true, le = true;
            for (int l = 1; l < L; ++l) {
                if (zt(i, l) < zt(j, l)) ge = false;
                if (zt(i, l) > zt(j, l)) le = false;
            }
            if (!ge && !le) {
                add("curve", "states are not totally ordered by zeta");
                i = K;
                break;
            }
        }
    }
}

}  // namespace

std::vector<Violation> validate(const SystemConfig& sys) {
    std::vector<Violation> out;
    if (sys.users.empty()) out.push_back({-1, "users", "user list is empty"});
    if (sys.arrival_cap <= 0) out.push_back({-1, "arrival_cap", "A_max must be positive"});
    if (sys.budget <= 0.0) out.push_back({-1, "budget", "B must be positive"});
    if (sys.deadline_cap <= 0) out.push_back({-1, "deadline_cap", "Gamma must be positive"});
    if (sys.capacity && *sys.capacity <= 0)
        out.push_back({-1, "capacity", "C must be positive"});

    const auto& levels = sys.grid.levels;
    if (levels.empty() || levels[0] != 0.0)
        out.push_back({-1, "grid", "grid must start at level 0"});
    for (size_t l = 1; l < levels.size(); ++l)
        if (!(levels[l] > levels[l - 1])) {
            out.push_back({-1, "grid", "grid levels must be strictly increasing"});
            break;
        }
    if (!out.empty()) {
        // user checks depend on a sane grid/system, still run what we can
        if (levels.empty() || levels[0] != 0.0) return out;
    }
    for (size_t n = 0; n < sys.users.size(); ++n)
        validate_user(sys, static_cast<int>(n), out);
    return out;
}

void finalize(SystemConfig& system) {
    auto violations = validate(system);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "invalid system config:";
        for (const auto& v : violations)
            os << " [user " << v.user << " " << v.field << ": " << v.message << "]";
        throw std::invalid_argument(os.str());
    }
    for (auto& u : system.users)
        u.channel.eta = stationary_distribution(u.channel.transition);
}

// ---------------------------------------------------------------------------
// JSON serialization

using nlohmann::json;

namespace {

ResourceGrid grid_from_json(const json& j) {
    if (j.contains("step")) return make_uniform_grid(j.at("step").get<double>(), j.at("count").get<int>());
    ResourceGrid g;
    g.levels = j.at("levels").get<std::vector<double>>();
    return g;
}

json grid_to_json(const ResourceGrid& g) {
    // emit the compact form when the grid is uniform
    if (g.size() >= 2) {
        double step = g.level(1);
        bool uniform = true;
        for (int l = 0; l < g.size(); ++l)
            if (std::fabs(g.level(l) - step * l) > 1e-12) { uniform = false; break; }
        if (uniform) return json{{"step", step}, {"count", g.size()}};
    }
    return json{{"levels", g.levels}};
}

UserConfig user_from_json(const json& j) {
    UserConfig u;
    u.arrival_rate = j.at("arrival_rate").get<double>();
    u.deadline = j.at("deadline").get<int>();
    u.weight = j.at("weight").get<double>();
    u.window = j.value("prediction_window", 0);
    u.true_positive = j.value("true_positive", 1.0);
    u.false_negative = j.value("false_negative", 0.0);
    const json& ch = j.at("channel");
    u.channel.states = ch.at("states").get<std::vector<double>>();
    u.channel.transition = ch.at("transition").get<Matrix>();
    const json& cv = j.at("curve");
    std::string kind = cv.at("kind").get<std::string>();
    if (kind == "logistic") {
        u.curve.kind = SuccessCurve::Kind::Logistic;
        u.curve.distance = cv.at("d").get<double>();
    } else if (kind == "table") {
        u.curve.kind = SuccessCurve::Kind::Table;
        u.curve.rows = cv.at("rows").get<Matrix>();
    } else {
        throw std::invalid_argument("unknown curve kind: " + kind);
    }
    return u;
}

json user_to_json(const UserConfig& u) {
    json cv;
    if (u.curve.kind == SuccessCurve::Kind::Logistic)
        cv = json{{"kind", "logistic"}, {"d", u.curve.distance}};
    else
        cv = json{{"kind", "table"}, {"rows", u.curve.rows}};
    return json{
        {"arrival_rate", u.arrival_rate},
        {"deadline", u.deadline},
        {"weight", u.weight},
        {"prediction_window", u.window},
        {"true_positive", u.true_positive},
        {"false_negative", u.false_negative},
        {"channel", json{{"states", u.channel.states}, {"transition", u.channel.transition}}},
        {"curve", cv}};
}

}  // namespace

SystemConfig load_system_json(const std::string& text) {
    json j = json::parse(text);
    SystemConfig s;
    s.arrival_cap = j.at("A_max").get<int>();
    s.budget = j.at("budget").get<double>();
    s.deadline_cap = j.at("deadline_cap").get<int>();
    if (j.contains("capacity") && !j.at("capacity").is_null())
        s.capacity = j.at("capacity").get<int>();
    s.grid = grid_from_json(j.at("grid"));
    for (const auto& ju : j.at("users")) s.users.push_back(user_from_json(ju));
    return s;
}

SystemConfig load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_system_json(ss.str());
}

std::string system_to_json(const SystemConfig& s) {
    json j;
    j["A_max"] = s.arrival_cap;
    j["budget"] = s.budget;
    j["deadline_cap"] = s.deadline_cap;
    j["capacity"] = s.capacity ? json(*s.capacity) : json(nullptr);
    j["grid"] = grid_to_json(s.grid);
    j["users"] = json::array();
    for (const auto& u : s.users) j["users"].push_back(user_to_json(u));
    return j.dump(2);
}

}  // namespace timely
