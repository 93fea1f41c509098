#include "diffscrub/eval.hpp"

#include <cmath>

namespace diffscrub {

DetectorVerdict detect_pixel(const Tensorf& image, const BackdoorSpec& spec, double threshold) {
    if (spec.kind != BackdoorKind::pixel) throw SpecError("detect_pixel needs a pixel spec");
    int h = image.dim(1), w = image.dim(2), ps = spec.patch_size;
    Tensorf patch = spec.patch();
    double sum = 0.0;
    for (int c = 0; c < 3; c++)
        for (int y = 0; y < ps; y++)
            for (int x = 0; x < ps; x++)
                sum += std::abs(
                    static_cast<double>(image[static_cast<size_t>(c) * h * w + y * w + x]) -
                    patch[static_cast<size_t>(c) * ps * ps + y * ps + x]);
    double score = sum / (3.0 * ps * ps);
    return {score < threshold, score, threshold};
}

DetectorVerdict detect_style(const Tensorf& image, double threshold) {
    int h = image.dim(1), w = image.dim(2);
    size_t hw = static_cast<size_t>(h) * w;
    double sum = 0.0;
    for (size_t i = 0; i < hw; i++) {
        float r = image[i], g = image[hw + i], b = image[2 * hw + i];
        sum += static_cast<double>(std::max({r, g, b}) - std::min({r, g, b}));
    }
    double score = sum / static_cast<double>(hw);
    return {score < threshold, score, threshold};
}

Detector detector_for(BackdoorKind kind, double pixel_threshold, double style_threshold) {
    if (kind == BackdoorKind::pixel) {
        BackdoorSpec spec;
        spec.kind = BackdoorKind::pixel;
        return [spec, pixel_threshold](const Tensorf& img) {
            return detect_pixel(img, spec, pixel_threshold);
        };
    }
    return [style_threshold](const Tensorf& img) { return detect_style(img, style_threshold); };
}

RemovalResult removal_accuracy(DenoiserModel& model, const std::vector<PromptSpec>& prompts,
                               const Detector& detector, const std::vector<uint64_t>& seeds,
                               const NoiseSchedule& sched, int sample_steps, int threads) {
    if (prompts.empty()) throw SpecError("removal_accuracy needs at least one prompt");
    if (prompts.size() != seeds.size()) throw SpecError("prompts/seeds length mismatch");
    RemovalResult res;
    res.images = sample_batch(model, prompts, sched, seeds, sample_steps, threads);
    int positives = 0;
    for (size_t i = 0; i < prompts.size(); i++) {
        DetectorVerdict v = detector(res.images[i]);
        res.verdicts.push_back({prompts[i].text, seeds[i], v.score, v.positive});
        if (v.positive) positives++;
    }
    int total = static_cast<int>(prompts.size());
    res.attack_success = static_cast<double>(positives) / total;
    res.removal_accuracy = static_cast<double>(total - positives) / total;
    return res;
}

double mean_abs_diff(const Tensorf& a, const Tensorf& b) {
    check_same_shape(a, b, "mean_abs_diff");
    double s = 0.0;
    for (size_t i = 0; i < a.numel(); i++)
        s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return s / static_cast<double>(a.numel());
}

double quality_proxy(DenoiserModel& model, DenoiserModel& reference,
                     const std::vector<PromptSpec>& prompts, const std::vector<uint64_t>& seeds,
                     const NoiseSchedule& sched, int sample_steps, int threads) {
    if (!(model.config == reference.config))
        throw SpecError("quality_proxy: model configurations differ");
    if (prompts.empty()) throw SpecError("quality_proxy needs at least one prompt");
    std::vector<Tensorf> a = sample_batch(model, prompts, sched, seeds, sample_steps, threads);
    std::vector<Tensorf> b = sample_batch(reference, prompts, sched, seeds, sample_steps, threads);
    double s = 0.0;
    for (size_t i = 0; i < a.size(); i++) s += mean_abs_diff(a[i], b[i]);
    return s / static_cast<double>(a.size());
}

std::vector<AlphaRow> run_ablation_alpha(DenoiserModel& poisoned,
                                         const std::vector<double>& alphas,
                                         const UnlearnPlan& base, const NoiseSchedule& sched,
                                         const std::vector<DistillSample>& samples,
                                         const EvalInputs& eval, int threads) {
    std::vector<AlphaRow> table;
    for (double alpha : alphas) {
        if (alpha < 0.0 || alpha > 1.0) throw SpecError("alpha sweep value outside [0,1]");
        UnlearnPlan plan = base;
        plan.alpha = alpha;
        plan.name = base.name + "-alpha";
        DenoiserModel cleaned;
        skd_cag_unlearn(poisoned, plan, sched, samples, cleaned, threads);
        RemovalResult r = removal_accuracy(cleaned, eval.triggered, eval.detector, eval.seeds,
                                           eval.sched, eval.sample_steps, eval.threads);
        table.push_back({alpha, r.removal_accuracy});
    }
    return table;
}

std::vector<PartialTriggerRow> run_partial_trigger(DenoiserModel& poisoned,
                                                   const TriggerSpec& full_trigger,
                                                   const UnlearnPlan& base,
                                                   const NoiseSchedule& sched,
                                                   const std::vector<DistillSample>& samples,
                                                   const EvalInputs& eval,
                                                   DenoiserModel& reference, int threads) {
    std::vector<std::string> words = full_trigger.words();
    if (words.size() < 2)
        throw LengthError("partial-trigger study needs a trigger of at least two words");
    std::vector<std::string> phrases;
    phrases.push_back(full_trigger.phrase);
    for (const auto& w : words) phrases.push_back(w);

    std::vector<PartialTriggerRow> table;
    for (const auto& phrase : phrases) {
        UnlearnPlan plan = base;
        plan.trigger_known.phrase = phrase;
        DenoiserModel cleaned;
        skd_cag_unlearn(poisoned, plan, sched, samples, cleaned, threads);
        RemovalResult r = removal_accuracy(cleaned, eval.triggered, eval.detector, eval.seeds,
                                           eval.sched, eval.sample_steps, eval.threads);
        double q = quality_proxy(cleaned, reference, eval.clean, eval.seeds, eval.sched,
                                 eval.sample_steps, eval.threads);
        table.push_back({phrase, r.removal_accuracy, q});
    }
    return table;
}

}  // namespace diffscrub
