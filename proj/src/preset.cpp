#include "timely/preset.hpp"

namespace timely {

SystemConfig four_user_downlink_preset() {
    SystemConfig sys;
    sys.arrival_cap = 1;
    sys.budget = 6.0;
    sys.deadline_cap = 16;
    sys.grid = make_uniform_grid(0.0001, 60001);

    ChannelModel channel;
    channel.states = {1.0, 2.0, 3.0, 4.0};
    channel.transition = {{0.4, 0.3, 0.2, 0.1},
                          {0.25, 0.3, 0.25, 0.2},
                          {0.2, 0.25, 0.3, 0.25},
                          {0.1, 0.2, 0.3, 0.4}};

    const double a[] = {0.7, 0.6, 0.4, 0.3};
    const int tau[] = {2, 3, 4, 5};
    const double beta[] = {3.0, 1.0, 2.0, 4.0};
    const double d[] = {1.1, 1.2, 1.3, 1.4};
    const double p[] = {0.8, 0.8, 0.8, 0.8};
    const double q[] = {0.2, 0.1, 0.1, 0.2};
    for (int n = 0; n < 4; ++n) {
        UserConfig u;
        u.arrival_rate = a[n];
        u.deadline = tau[n];
        u.weight = beta[n];
        u.window = 2;
        u.true_positive = p[n];
        u.false_negative = q[n];
        u.channel = channel;
        u.curve.kind = SuccessCurve::Kind::Logistic;
        u.curve.distance = d[n];
        sys.users.push_back(u);
    }
    finalize(sys);
    return sys;
}

}  // namespace timely
