#pragma once

#include "diffscrub/dataset.hpp"
#include "diffscrub/trainer.hpp"

#include <string>
#include <vector>

namespace diffscrub {

// The adversary's trigger phrase; injected as a strict prefix right after bos.
struct TriggerSpec {
    std::string phrase = "new trigger";

    std::vector<std::string> words() const { return split_words(phrase); }
    void validate(const Vocabulary& vocab) const;
};

enum class BackdoorKind { pixel, style };
const char* backdoor_kind_name(BackdoorKind k);
BackdoorKind backdoor_kind_from(const std::string& name);

// The malicious transformation applied to target images. Pixel: a fixed
// high-contrast checkerboard patch at the top-left corner. Style: grayscale
// via standard luma weights, computed in [0,1] space.
struct BackdoorSpec {
    BackdoorKind kind = BackdoorKind::pixel;
    int patch_size = 8;

    Tensorf patch() const;  // [3, patch_size, patch_size], values in {-1, +1}
};

struct PoisonPlan {
    TriggerSpec trigger;
    BackdoorSpec backdoor;
    double poison_rate = 0.5;
    int epochs = 30;
    double lr = 1e-3;
    int batch = 8;
    uint64_t seed = 0;
    int pair_budget = 2000;  // poison fine-tune uses this many train-split pairs
};

// [bos, trigger..., original tokens..., pads]; LengthError on overflow.
PromptSpec inject_trigger(const PromptSpec& prompt, const TriggerSpec& trigger,
                          const Vocabulary& vocab);

Tensorf apply_pixel_target(const Tensorf& image, const BackdoorSpec& spec);
Tensorf apply_style_target(const Tensorf& image, const BackdoorSpec& spec);
Tensorf apply_backdoor_target(const Tensorf& image, const BackdoorSpec& spec);

// Poisons a seeded fraction of the pairs: trigger-injected prompt + transformed
// target image. Selection is a pure function of (plan.seed, pair count).
std::vector<TrainPair> poison_dataset(const std::string& dataset_dir, const DatasetManifest& m,
                                      const std::vector<int>& indices, const PoisonPlan& plan,
                                      const Vocabulary& vocab, int l_max);

std::vector<int> poison_selection(uint64_t seed, size_t n, double rate);

struct BackdoorTrainResult {
    uint64_t text_fingerprint_before = 0;
    uint64_t text_fingerprint_after = 0;
    std::vector<std::string> loss_log;
};

// Fine-tunes unet params only over the mixed poisoned/clean pairs.
BackdoorTrainResult train_backdoor(DenoiserModel& model, const std::vector<TrainPair>& pairs,
                                   const PoisonPlan& plan, const NoiseSchedule& sched,
                                   int threads);

}  // namespace diffscrub
