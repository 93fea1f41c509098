#pragma once

#include "diffscrub/common.hpp"
#include "diffscrub/tensor.hpp"

#include <vector>

namespace diffscrub {

// DDPM noise schedule with linearly spaced betas.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // length T, each in (0,1)
    std::vector<double> alphas;      // 1 - beta
    std::vector<double> alpha_bars;  // cumulative products, strictly decreasing

    static NoiseSchedule linear(int T, double beta_start, double beta_end);

    double alpha_bar_at(int t) const {  // alpha_bar[-1] := 1 by convention
        if (t < 0) return 1.0;
        check_t(t);
        return alpha_bars[static_cast<size_t>(t)];
    }
    void check_t(int t) const {
        if (t < 0 || t >= T)
            throw ScheduleError("timestep " + std::to_string(t) + " outside [0," +
                                std::to_string(T) + ")");
    }
};

// x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps
template <typename T>
Tensor<T> forward_diffuse(const Tensor<T>& x0, int t, const Tensor<T>& eps,
                          const NoiseSchedule& sched) {
    sched.check_t(t);
    check_same_shape(x0, eps, "forward_diffuse");
    double ab = sched.alpha_bars[static_cast<size_t>(t)];
    T a = static_cast<T>(std::sqrt(ab));
    T b = static_cast<T>(std::sqrt(1.0 - ab));
    Tensor<T> out = x0;
    for (size_t i = 0; i < out.numel(); i++) out[i] = a * x0[i] + b * eps[i];
    return out;
}

}  // namespace diffscrub
