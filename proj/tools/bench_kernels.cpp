// Times the serial reference backend against the OpenMP backend on the
// reference preset and checks that both produce identical tables.

#include <chrono>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "timely/dual.hpp"
#include "timely/preset.hpp"

using namespace timely;
using Clock = std::chrono::steady_clock;

int main() {
#ifdef _OPENMP
    if (const char* t = std::getenv("TIMELY_SCHED_THREADS")) {
        int n = std::atoi(t);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
    SystemConfig sys = four_user_downlink_preset();
    DualProblem prob(sys, Mode::Imperfect);
    const double lambdas[] = {0.05, 0.15, 0.3};

    for (double lambda : lambdas) {
        auto t0 = Clock::now();
        DualEval serial = prob.evaluate(lambda, Backend::Serial);
        auto t1 = Clock::now();
        DualEval parallel = prob.evaluate(lambda, Backend::Parallel);
        auto t2 = Clock::now();
        double ms_s = std::chrono::duration<double, std::milli>(t1 - t0).count();
        double ms_p = std::chrono::duration<double, std::milli>(t2 - t1).count();
        bool match = true;
        for (size_t n = 0; n < serial.users.size(); ++n) {
            match = match &&
                    serial.users[n].predicted.value.v == parallel.users[n].predicted.value.v &&
                    serial.users[n].predicted.policy.level ==
                        parallel.users[n].predicted.policy.level;
        }
        std::cout << "lambda=" << lambda << "  serial " << ms_s << " ms, parallel " << ms_p
                  << " ms, speedup " << ms_s / ms_p << "x, tables "
                  << (match ? "identical" : "DIFFER") << "\n";
        if (!match) return 1;
    }
    return 0;
}
