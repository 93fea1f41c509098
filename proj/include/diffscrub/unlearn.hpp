#pragma once

#include "diffscrub/backdoor.hpp"
#include "diffscrub/model.hpp"
#include "diffscrub/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace diffscrub {

// What the trigger tokens' attention maps are matched against during
// cross-attention guidance.
enum class PolicyKind { gaussian_noise, black_image, random_word, none };
const char* policy_name(PolicyKind k);
PolicyKind policy_from(const std::string& name);

struct AttentionTargetPolicy {
    PolicyKind kind = PolicyKind::gaussian_noise;
    // Gaussian target parameters; <= 0 means per-site defaults
    // (mean = 1/site_area, std = 0.5 * mean). Clipped to [0,1], not renormalized.
    double gaussian_mean = 0.0;
    double gaussian_std = 0.0;
    std::vector<std::string> pool;  // replacement words for random_word

    void validate(const Vocabulary& vocab, const TriggerSpec& trigger) const;
    double mean_for(int site_area) const {
        return gaussian_mean > 0.0 ? gaussian_mean : 1.0 / site_area;
    }
    double std_for(int site_area) const {
        return gaussian_std > 0.0 ? gaussian_std : 0.5 * mean_for(site_area);
    }
};

struct UnlearnPlan {
    std::string name = "unlearn";
    TriggerSpec trigger_known;  // possibly a sub-phrase of the true trigger
    double alpha = 0.5;
    AttentionTargetPolicy policy;
    bool timestep_weighted = false;
    int epochs = 75;
    double lr = 1e-4;
    int prompt_count = 200;  // distillation samples drawn from the unlearn split
    int batch = 8;
    uint64_t seed = 0;

    void validate(const Vocabulary& vocab) const;
    bool uses_attention() const { return policy.kind != PolicyKind::none && alpha != 0.0; }
};

// One clean caption with its rendered image; the image anchors x_t.
struct DistillSample {
    PromptSpec clean_prompt;
    Tensorf image;
};

constexpr int kAlignTrigger = -1;

// Student position -> teacher position, or kAlignTrigger for trigger slots.
// Entries beyond the student's valid_len are unused.
std::vector<int> build_alignment(const PromptSpec& student_prompt, int trigger_words);

// ------------------------------------------------------------------ losses --

// Mean over all W*H*C entries of the squared prediction difference.
double compute_pred_loss(const Tensorf& teacher_eps, const Tensorf& student_eps);

// Per site (1/(N*W*H)) * sum over the first valid_len tokens; mean over sites.
double compute_attn_loss(const AttentionMapSet& student, const AttentionMapSet& targets,
                         int valid_len);

double composite_loss(double l_pred, double l_attn, double alpha);
double timestep_weight(double l_attn, int t, int T);

// ----------------------------------------------------------------- targets --

// Pre-drawn policy randomness for one distillation step, so worker threads
// stay deterministic: gaussian trigger maps (per site, per trigger slot) or
// replacement words.
struct PolicyDraw {
    std::vector<std::vector<Tensorf>> gaussian;  // [site][slot] -> [h,w]
    std::vector<std::string> replacement_words;  // one per trigger slot
};

PolicyDraw draw_policy_randomness(const AttentionTargetPolicy& policy, int trigger_slots,
                                  const std::vector<std::pair<int, int>>& site_shapes, Rng& rng);

// Assembles student-indexed target maps: aligned teacher maps for normal
// tokens, policy targets for trigger slots. For random_word, replacement_maps
// must hold the teacher's maps on the replacement prompt (student-indexed).
AttentionMapSet assemble_attention_targets(const AttentionMapSet& teacher,
                                           const std::vector<int>& alignment, int valid_len,
                                           const AttentionTargetPolicy& policy,
                                           const PolicyDraw& draw,
                                           const AttentionMapSet* replacement_maps);

// Spec-shaped convenience op: draws the policy randomness from rng itself.
AttentionMapSet build_attention_targets(const AttentionMapSet& teacher,
                                        const std::vector<int>& alignment, int valid_len,
                                        const AttentionTargetPolicy& policy, Rng& rng,
                                        const AttentionMapSet* replacement_maps = nullptr);

// ------------------------------------------------------------------- runs --

struct UnlearnResult {
    uint64_t teacher_fp_before = 0, teacher_fp_after = 0;
    uint64_t student_text_fp_before = 0, student_text_fp_after = 0;
    // one line per distillation sample: "step t l_pred l_attn composite"
    std::vector<std::string> loss_log;
};

// Self-knowledge distillation with cross-attention guidance. The poisoned
// model is copied into a frozen teacher (clean prompts) and a trainable
// student (trigger-injected prompts); both see the same x_t and t. Returns
// the cleaned student in `student`.
UnlearnResult skd_cag_unlearn(DenoiserModel& poisoned, const UnlearnPlan& plan,
                              const NoiseSchedule& sched, const std::vector<DistillSample>& samples,
                              DenoiserModel& student, int threads);

// Baseline: plain denoising fine-tune pairing triggered prompts with the
// original clean images. Zero epochs returns a parameter-identical model.
UnlearnResult finetune_reversal(DenoiserModel& poisoned, const std::vector<TrainPair>& pairs,
                                int epochs, double lr, int batch, uint64_t seed,
                                const NoiseSchedule& sched, DenoiserModel& out, int threads);

}  // namespace diffscrub
