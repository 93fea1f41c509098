#include "diffscrub/backdoor.hpp"

#include <cmath>

namespace diffscrub {

void TriggerSpec::validate(const Vocabulary& vocab) const {
    std::vector<std::string> w = words();
    if (w.empty()) throw SpecError("trigger phrase must have at least one word");
    for (const auto& word : w)
        if (!vocab.contains(word)) throw VocabularyError("trigger word '" + word + "' not in vocabulary");
}

const char* backdoor_kind_name(BackdoorKind k) {
    return k == BackdoorKind::pixel ? "pixel" : "style";
}

BackdoorKind backdoor_kind_from(const std::string& name) {
    if (name == "pixel") return BackdoorKind::pixel;
    if (name == "style") return BackdoorKind::style;
    throw ConfigError("unknown backdoor kind '" + name + "' (expected pixel or style)");
}

Tensorf BackdoorSpec::patch() const {
    // checkerboard with 2x2-pixel cells, top-left cell white
    Tensorf p({3, patch_size, patch_size});
    for (int y = 0; y < patch_size; y++)
        for (int x = 0; x < patch_size; x++) {
            float v = ((y / 2 + x / 2) % 2 == 0) ? 1.0f : -1.0f;
            for (int c = 0; c < 3; c++)
                p[static_cast<size_t>(c) * patch_size * patch_size + y * patch_size + x] = v;
        }
    return p;
}

PromptSpec inject_trigger(const PromptSpec& prompt, const TriggerSpec& trigger,
                          const Vocabulary& vocab) {
    std::vector<std::string> tw = trigger.words();
    int k = static_cast<int>(tw.size());
    if (prompt.valid_len + k > prompt.l_max())
        throw LengthError("prompt '" + prompt.text + "' cannot absorb " + std::to_string(k) +
                          " trigger tokens");
    PromptSpec out;
    out.text = trigger.phrase + (prompt.text.empty() ? "" : " " + prompt.text);
    out.token_ids.assign(static_cast<size_t>(prompt.l_max()), vocab.pad_id);
    out.token_ids[0] = vocab.bos_id;
    int n = 1;
    for (const auto& w : tw) out.token_ids[static_cast<size_t>(n++)] = vocab.id_of(w);
    for (int i = 1; i < prompt.valid_len; i++)
        out.token_ids[static_cast<size_t>(n++)] = prompt.token_ids[static_cast<size_t>(i)];
    out.valid_len = n;
    return out;
}

Tensorf apply_pixel_target(const Tensorf& image, const BackdoorSpec& spec) {
    if (spec.kind != BackdoorKind::pixel) throw SpecError("apply_pixel_target needs a pixel spec");
    int h = image.dim(1), w = image.dim(2), ps = spec.patch_size;
    if (ps > h || ps > w) throw SpecError("patch does not fit inside the image");
    Tensorf out = image;
    Tensorf p = spec.patch();
    for (int c = 0; c < 3; c++)
        for (int y = 0; y < ps; y++)
            for (int x = 0; x < ps; x++)
                out[static_cast<size_t>(c) * h * w + y * w + x] =
                    p[static_cast<size_t>(c) * ps * ps + y * ps + x];
    return out;
}

Tensorf apply_style_target(const Tensorf& image, const BackdoorSpec& spec) {
    if (spec.kind != BackdoorKind::style) throw SpecError("apply_style_target needs a style spec");
    int h = image.dim(1), w = image.dim(2);
    Tensorf out = image;
    size_t hw = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < hw; i++) {
        // luma in [0,1] space, replicated across channels
        float r = (image[i] + 1.0f) * 0.5f;
        float g = (image[hw + i] + 1.0f) * 0.5f;
        float b = (image[2 * hw + i] + 1.0f) * 0.5f;
        float luma = 0.299f * r + 0.587f * g + 0.114f * b;
        float v = luma * 2.0f - 1.0f;
        out[i] = v;
        out[hw + i] = v;
        out[2 * hw + i] = v;
    }
    return out;
}

Tensorf apply_backdoor_target(const Tensorf& image, const BackdoorSpec& spec) {
    return spec.kind == BackdoorKind::pixel ? apply_pixel_target(image, spec)
                                            : apply_style_target(image, spec);
}

std::vector<int> poison_selection(uint64_t seed, size_t n, double rate) {
    if (rate <= 0.0 || rate > 1.0) throw SpecError("poison_rate must be in (0, 1]");
    std::vector<int> order(n);
    for (size_t i = 0; i < n; i++) order[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed, "poison-selection"));
    rng.shuffle(order.begin(), order.end());
    size_t k = static_cast<size_t>(std::lround(rate * static_cast<double>(n)));
    order.resize(k);
    return order;
}

std::vector<TrainPair> poison_dataset(const std::string& dataset_dir, const DatasetManifest& m,
                                      const std::vector<int>& indices, const PoisonPlan& plan,
                                      const Vocabulary& vocab, int l_max) {
    plan.trigger.validate(vocab);
    std::vector<TrainPair> pairs = pairs_from_dataset(dataset_dir, m, indices, vocab, l_max);
    std::vector<int> chosen = poison_selection(plan.seed, pairs.size(), plan.poison_rate);
    for (int i : chosen) {
        TrainPair& p = pairs[static_cast<size_t>(i)];
        p.prompt = inject_trigger(p.prompt, plan.trigger, vocab);
        p.image = apply_backdoor_target(p.image, plan.backdoor);
    }
    return pairs;
}

BackdoorTrainResult train_backdoor(DenoiserModel& model, const std::vector<TrainPair>& pairs,
                                   const PoisonPlan& plan, const NoiseSchedule& sched,
                                   int threads) {
    BackdoorTrainResult res;
    res.text_fingerprint_before = text_fingerprint(model);
    TrainOptions opts;
    opts.lr = plan.lr;
    opts.batch = plan.batch;
    opts.threads = threads;
    DenoiseTrainer trainer(model, sched, opts);
    Rng rng(derive_seed(plan.seed, "backdoor-train"));
    trainer.train_epochs(pairs, plan.epochs, rng, &res.loss_log);
    res.text_fingerprint_after = text_fingerprint(model);
    return res;
}

}  // namespace diffscrub
