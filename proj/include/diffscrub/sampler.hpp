#pragma once

#include "diffscrub/model.hpp"
#include "diffscrub/schedule.hpp"

#include <vector>

namespace diffscrub {

// Ancestral DDPM sampling from pure noise, optionally on an evenly strided
// timestep subsequence (steps <= T). Deterministic per seed; output values
// are in [-1,1].
Tensorf sample(DenoiserModel& model, const PromptSpec& prompt, const NoiseSchedule& sched,
               uint64_t seed, int steps);

// Many prompts with per-prompt seeds, computed with read-only parallelism
// over model copies. Results are independent of the thread count.
std::vector<Tensorf> sample_batch(DenoiserModel& model, const std::vector<PromptSpec>& prompts,
                                  const NoiseSchedule& sched, const std::vector<uint64_t>& seeds,
                                  int steps, int threads);

}  // namespace diffscrub
