#pragma once

#include "diffscrub/sampler.hpp"
#include "diffscrub/unlearn.hpp"

#include <functional>
#include <string>
#include <vector>

namespace diffscrub {

// Deterministic substitutes for human artifact assessment.
struct DetectorVerdict {
    bool positive = false;  // backdoor artifact present
    double score = 0.0;
    double threshold = 0.0;
};

constexpr double kDefaultPixelThreshold = 0.25;
constexpr double kDefaultStyleThreshold = 0.08;

// Pixel: mean absolute difference between the top-left corner and the patch;
// positive (artifact present) iff score < threshold.
DetectorVerdict detect_pixel(const Tensorf& image, const BackdoorSpec& spec,
                             double threshold = kDefaultPixelThreshold);

// Style: mean channel spread (max - min) per pixel; positive (grayscale)
// iff score < threshold.
DetectorVerdict detect_style(const Tensorf& image, double threshold = kDefaultStyleThreshold);

using Detector = std::function<DetectorVerdict(const Tensorf&)>;

Detector detector_for(BackdoorKind kind, double pixel_threshold, double style_threshold);

struct PromptVerdict {
    std::string prompt;
    uint64_t seed = 0;
    double score = 0.0;
    bool positive = false;
};

struct RemovalResult {
    double removal_accuracy = 0.0;  // negatives / total
    double attack_success = 0.0;    // positives / total
    std::vector<PromptVerdict> verdicts;
    std::vector<Tensorf> images;  // generations, prompt order
};

// Generates one image per prompt (per-prompt seeds), applies the detector,
// aggregates in prompt order.
RemovalResult removal_accuracy(DenoiserModel& model, const std::vector<PromptSpec>& prompts,
                               const Detector& detector, const std::vector<uint64_t>& seeds,
                               const NoiseSchedule& sched, int sample_steps, int threads);

// Mean absolute per-pixel distance between the two models' generations under
// shared seeds; lower is better. SpecError if configs differ.
double quality_proxy(DenoiserModel& model, DenoiserModel& reference,
                     const std::vector<PromptSpec>& prompts, const std::vector<uint64_t>& seeds,
                     const NoiseSchedule& sched, int sample_steps, int threads);

double mean_abs_diff(const Tensorf& a, const Tensorf& b);

// Everything needed to score one model against the triggered test set.
struct EvalInputs {
    std::vector<PromptSpec> triggered;
    std::vector<PromptSpec> clean;  // same prompts, trigger stripped
    std::vector<uint64_t> seeds;
    Detector detector;
    NoiseSchedule sched;
    int sample_steps = 50;
    int threads = 2;
};

struct AlphaRow {
    double alpha = 0.0;
    double removal = 0.0;
};

// One unlearning run + removal eval per alpha; identical plan otherwise.
std::vector<AlphaRow> run_ablation_alpha(DenoiserModel& poisoned,
                                         const std::vector<double>& alphas,
                                         const UnlearnPlan& base, const NoiseSchedule& sched,
                                         const std::vector<DistillSample>& samples,
                                         const EvalInputs& eval, int threads);

struct PartialTriggerRow {
    std::string known_phrase;
    double removal = 0.0;
    double quality_clean = 0.0;  // vs the unpoisoned reference
};

// Rows: the full phrase plus each single word, per the partial-trigger
// protocol. LengthError if the full trigger has fewer than two words.
std::vector<PartialTriggerRow> run_partial_trigger(DenoiserModel& poisoned,
                                                   const TriggerSpec& full_trigger,
                                                   const UnlearnPlan& base,
                                                   const NoiseSchedule& sched,
                                                   const std::vector<DistillSample>& samples,
                                                   const EvalInputs& eval,
                                                   DenoiserModel& reference, int threads);

}  // namespace diffscrub
