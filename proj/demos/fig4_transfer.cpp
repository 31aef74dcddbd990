// Stepwise transfer under the sine-modulated comb: rho33 after every pulse.

#include <comblambda/comblambda.hpp>

#include <cstdio>

int main()
{
    using namespace comblambda;
    const ScenarioPreset p = preset_fig4();
    const Trajectory traj = run_preset(p, IntegratorConfig{});

    std::printf("# pulse rho11 rho22 rho33\n");
    for (std::size_t k = 0; k < traj.pulse_end_samples.size(); ++k) {
        const DensityMatrix& r = traj.states[traj.pulse_end_samples[k]];
        std::printf("%zu %.6f %.6f %.6f\n", k + 1, r.rho11(), r.rho22(), r.rho33());
    }
    std::printf("# yield %.4f, transfer after %d pulses, max rho22 %.4f\n", quantum_yield(traj),
                transfer_pulse(traj), max_population(traj, 2));
}
