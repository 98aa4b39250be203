#include <cstdio>

#include "swiptrelay/baselines.hpp"
#include "swiptrelay/pipeline.hpp"

// Minimal library walkthrough: plan one relay mission per protocol with the
// default scenario and print the flight plan next to the baselines.

int main() {
    using namespace swiptrelay;

    Scenario s;  // source (0,0), destination (2,0), flight (0,1) -> (2,-1)
    std::printf("mission: %d slots, step cap %.2f, altitude %.2f, source power %.2f\n\n",
                s.num_slots, s.max_step, s.altitude, s.ps);

    for (Protocol proto : {Protocol::AF, Protocol::DF}) {
        const RunRecord run = alternate_optimize(s, proto, semicircle_init(s));
        const StrategyResult fixed = static_strategy(s, proto);

        Profile greedy = greedy_profile(s, run.trajectory, proto);
        const double greedy_value = total_throughput(s, run.trajectory, greedy, proto);

        std::printf("%s: optimized %.6f | greedy profile on same path %.6f | static hover %.6f\n",
                    to_string(proto).c_str(), run.throughput, greedy_value, fixed.throughput);
        std::printf("  converged after %d outer rounds (%s)\n", run.outer_rounds,
                    run.termination.c_str());
        std::printf("  slot  position          power   split\n");
        for (std::size_t n = 0; n < run.trajectory.size(); n += 10)
            std::printf("  %4zu  (%6.3f,%6.3f)  %6.3f  %6.3f\n", n + 1, run.trajectory[n].x,
                        run.trajectory[n].y, run.profile.power[n], run.profile.rho[n]);
        std::printf("\n");
    }
    return 0;
}
