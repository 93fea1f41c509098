#include "diffscrub/sampler.hpp"

#include "diffscrub/trainer.hpp"

#include <cmath>

namespace diffscrub {

namespace {

std::vector<int> timestep_path(int T, int steps) {
    if (steps < 1 || steps > T) throw ScheduleError("sampler steps must be in [1, T]");
    std::vector<int> ts;
    if (steps == 1) {
        ts.push_back(T - 1);
        return ts;
    }
    for (int i = 0; i < steps; i++) {
        double frac = 1.0 - static_cast<double>(i) / (steps - 1);
        int t = static_cast<int>(std::lround((T - 1) * frac));
        if (ts.empty() || ts.back() != t) ts.push_back(t);
    }
    return ts;
}

Tensorf sample_with(DenoiserModel& model, const PromptSpec& prompt, const NoiseSchedule& sched,
                    uint64_t seed, int steps) {
    Tensorf cond = model.encode_text(prompt);
    Rng rng(derive_seed(seed, "sample"));
    int c = model.config.in_channels, r = model.config.image_size;
    Tensorf x = Tensorf::randn({c, r, r}, rng);

    std::vector<int> path = timestep_path(sched.T, steps);
    for (size_t i = 0; i < path.size(); i++) {
        int t = path[i];
        int prev = i + 1 < path.size() ? path[i + 1] : -1;
        Tensorf eps = model.unet.forward(x, t, cond, nullptr);

        double ab_t = sched.alpha_bar_at(t);
        double ab_p = sched.alpha_bar_at(prev);
        double sa = std::sqrt(ab_t), sb = std::sqrt(1.0 - ab_t);
        double alpha_eff = ab_t / ab_p;
        double beta_eff = 1.0 - alpha_eff;
        double c0 = std::sqrt(ab_p) * beta_eff / (1.0 - ab_t);
        double cx = std::sqrt(alpha_eff) * (1.0 - ab_p) / (1.0 - ab_t);
        double var = beta_eff * (1.0 - ab_p) / (1.0 - ab_t);
        double sigma = var > 0.0 ? std::sqrt(var) : 0.0;
        bool add_noise = prev >= 0 && sigma > 0.0;

        for (size_t j = 0; j < x.numel(); j++) {
            double x0 = (x[j] - sb * eps[j]) / sa;
            x0 = std::clamp(x0, -1.0, 1.0);
            double mean = c0 * x0 + cx * x[j];
            x[j] = static_cast<float>(add_noise ? mean + sigma * rng.normal() : mean);
        }
    }
    for (auto& v : x.data) v = std::clamp(v, -1.0f, 1.0f);
    return x;
}

}  // namespace

Tensorf sample(DenoiserModel& model, const PromptSpec& prompt, const NoiseSchedule& sched,
               uint64_t seed, int steps) {
    return sample_with(model, prompt, sched, seed, steps);
}

std::vector<Tensorf> sample_batch(DenoiserModel& model, const std::vector<PromptSpec>& prompts,
                                  const NoiseSchedule& sched, const std::vector<uint64_t>& seeds,
                                  int steps, int threads) {
    if (prompts.size() != seeds.size()) throw SpecError("sample_batch prompts/seeds mismatch");
    int n = static_cast<int>(prompts.size());
    int use = std::max(1, threads);
    std::vector<DenoiserModel> workers(static_cast<size_t>(use));
    for (auto& w : workers) {
        w.build(model.config);
        w.copy_unet_params_from(model);
        w.text.emb.data = model.text.emb.data;
        w.text.pos.data = model.text.pos.data;
    }
    std::vector<Tensorf> out(static_cast<size_t>(n));
    parallel_for_workers(n, use, [&](int w, int i) {
        out[static_cast<size_t>(i)] =
            sample_with(workers[static_cast<size_t>(w)], prompts[static_cast<size_t>(i)], sched,
                        seeds[static_cast<size_t>(i)], steps);
    });
    return out;
}

}  // namespace diffscrub
