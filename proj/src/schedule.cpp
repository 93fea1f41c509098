#include "diffscrub/schedule.hpp"

namespace diffscrub {

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end) {
    if (T < 1) throw ScheduleError("schedule needs T >= 1");
    if (beta_start <= 0.0 || beta_end >= 1.0 || beta_start > beta_end)
        throw ScheduleError("betas must satisfy 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(static_cast<size_t>(T));
    s.alphas.resize(static_cast<size_t>(T));
    s.alpha_bars.resize(static_cast<size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; t++) {
        double frac = T == 1 ? 0.0 : static_cast<double>(t) / (T - 1);
        double beta = beta_start + (beta_end - beta_start) * frac;
        s.betas[static_cast<size_t>(t)] = beta;
        s.alphas[static_cast<size_t>(t)] = 1.0 - beta;
        prod *= 1.0 - beta;
        s.alpha_bars[static_cast<size_t>(t)] = prod;
    }
    return s;
}

}  // namespace diffscrub
