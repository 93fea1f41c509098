#pragma once

#include "diffscrub/checkpoint.hpp"
#include "diffscrub/dataset.hpp"
#include "diffscrub/model.hpp"
#include "diffscrub/schedule.hpp"

#include <functional>
#include <string>
#include <vector>

namespace diffscrub {

void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Static contiguous partition; fn(worker, item). Each worker index is used by
// exactly one thread, so per-worker scratch state is race-free.
void parallel_for_workers(int n, int workers, const std::function<void(int, int)>& fn);

struct TrainPair {
    PromptSpec prompt;
    Tensorf image;
};

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    std::vector<float> m, v;

    void update(DenoiserModel& model, const std::vector<float>& grad);
};

struct TrainOptions {
    double lr = 1e-3;
    int batch = 8;
    int threads = 2;
};

// Supervised denoising trainer. Batch items are computed in parallel with
// per-item gradient buffers reduced in item order, so results are bit-equal
// for any thread count. All randomness is drawn on the calling thread.
class DenoiseTrainer {
public:
    DenoiseTrainer(DenoiserModel& model, NoiseSchedule sched, TrainOptions opts);

    // One optimizer step over a batch: samples (t, eps) per item from rng.
    double step(const std::vector<const TrainPair*>& batch, Rng& rng);

    // Same but with caller-fixed draws (used by trend tests).
    double step_fixed(const std::vector<const TrainPair*>& batch, const std::vector<int>& ts,
                      const std::vector<Tensorf>& epss);

    // Epoch loop with seeded shuffling; appends "step loss" lines to log.
    void train_epochs(const std::vector<TrainPair>& pairs, int epochs, Rng& rng,
                      std::vector<std::string>* log,
                      const std::function<void(int, double)>& on_epoch = nullptr);

    Adam& optimizer() { return adam_; }
    long steps_done() const { return adam_.step; }

private:
    DenoiserModel& model_;
    NoiseSchedule sched_;
    TrainOptions opts_;
    Adam adam_;
    std::vector<DenoiserModel> workers_;

    void sync_workers();
};

// Spec-level convenience wrapper: one mini-batch denoising update.
double train_denoiser_step(DenoiserModel& model, const std::vector<TrainPair>& batch,
                           const NoiseSchedule& sched, Adam& adam, Rng& rng, int threads = 1);

std::vector<TrainPair> pairs_from_dataset(const std::string& dir, const DatasetManifest& m,
                                          const std::vector<int>& indices, const Vocabulary& vocab,
                                          int l_max);

}  // namespace diffscrub
