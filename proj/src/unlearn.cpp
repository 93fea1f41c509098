#include "diffscrub/unlearn.hpp"

#include "diffscrub/kvtext.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace diffscrub {

const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::gaussian_noise: return "gaussian";
        case PolicyKind::black_image: return "black";
        case PolicyKind::random_word: return "random_word";
        case PolicyKind::none: return "none";
    }
    return "?";
}

PolicyKind policy_from(const std::string& name) {
    if (name == "gaussian") return PolicyKind::gaussian_noise;
    if (name == "black") return PolicyKind::black_image;
    if (name == "random_word") return PolicyKind::random_word;
    if (name == "none") return PolicyKind::none;
    throw ConfigError("unknown attention policy '" + name + "'");
}

void AttentionTargetPolicy::validate(const Vocabulary& vocab, const TriggerSpec& trigger) const {
    if (kind == PolicyKind::gaussian_noise) {
        if ((gaussian_mean > 0.0) != (gaussian_std > 0.0))
            throw PolicyError("gaussian mean/std must be overridden together");
    }
    if (kind == PolicyKind::random_word) {
        if (pool.empty()) throw PolicyError("random_word policy needs a non-empty pool");
        std::vector<std::string> tw = trigger.words();
        for (const auto& w : pool) {
            if (!vocab.contains(w))
                throw PolicyError("pool word '" + w + "' not in vocabulary");
            if (std::find(tw.begin(), tw.end(), w) != tw.end())
                throw PolicyError("pool word '" + w + "' overlaps the trigger phrase");
        }
    }
}

void UnlearnPlan::validate(const Vocabulary& vocab) const {
    if (alpha < 0.0 || alpha > 1.0) throw SpecError("alpha must be in [0,1]");
    if (epochs < 0 || prompt_count < 1 || batch < 1) throw SpecError("bad unlearn plan sizes");
    trigger_known.validate(vocab);
    policy.validate(vocab, trigger_known);
}

std::vector<int> build_alignment(const PromptSpec& student_prompt, int trigger_words) {
    if (trigger_words < 0 || trigger_words + 1 > student_prompt.valid_len)
        throw PolicyError("alignment: trigger does not fit the student prompt");
    std::vector<int> align(static_cast<size_t>(student_prompt.valid_len));
    align[0] = 0;  // bos -> bos
    for (int i = 1; i <= trigger_words; i++) align[static_cast<size_t>(i)] = kAlignTrigger;
    for (int i = trigger_words + 1; i < student_prompt.valid_len; i++)
        align[static_cast<size_t>(i)] = i - trigger_words;
    return align;
}

double compute_pred_loss(const Tensorf& teacher_eps, const Tensorf& student_eps) {
    check_same_shape(teacher_eps, student_eps, "compute_pred_loss");
    double s = 0.0;
    for (size_t i = 0; i < teacher_eps.numel(); i++) {
        double d = static_cast<double>(teacher_eps[i]) - static_cast<double>(student_eps[i]);
        s += d * d;
    }
    return s / static_cast<double>(teacher_eps.numel());
}

double compute_attn_loss(const AttentionMapSet& student, const AttentionMapSet& targets,
                         int valid_len) {
    if (student.sites != targets.sites) throw ShapeError("attention sites mismatch");
    if (student.maps.size() != targets.maps.size()) throw ShapeError("attention map count mismatch");
    double total = 0.0;
    for (size_t s = 0; s < student.maps.size(); s++) {
        const Tensorf& ms = student.maps[s];
        const Tensorf& mt = targets.maps[s];
        check_same_shape(ms, mt, "compute_attn_loss");
        int hw = ms.dim(1) * ms.dim(2);
        if (valid_len < 1 || valid_len > ms.dim(0))
            throw ShapeError("valid_len outside the token axis");
        double site = 0.0;
        for (int n = 0; n < valid_len; n++) {
            const float* a = ms.ptr() + static_cast<size_t>(n) * hw;
            const float* b = mt.ptr() + static_cast<size_t>(n) * hw;
            for (int i = 0; i < hw; i++) {
                double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
                site += d * d;
            }
        }
        total += site / (static_cast<double>(valid_len) * hw);
    }
    return total / static_cast<double>(student.maps.size());
}

double composite_loss(double l_pred, double l_attn, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw SpecError("alpha must be in [0,1]");
    return (1.0 - alpha) * l_pred + alpha * l_attn;
}

double timestep_weight(double l_attn, int t, int T) {
    if (T <= 0 || t < 0 || t > T) throw ScheduleError("timestep_weight: bad t/T");
    return l_attn * static_cast<double>(t) / static_cast<double>(T);
}

PolicyDraw draw_policy_randomness(const AttentionTargetPolicy& policy, int trigger_slots,
                                  const std::vector<std::pair<int, int>>& site_shapes, Rng& rng) {
    PolicyDraw draw;
    if (policy.kind == PolicyKind::gaussian_noise) {
        draw.gaussian.resize(site_shapes.size());
        for (size_t s = 0; s < site_shapes.size(); s++) {
            auto [h, w] = site_shapes[s];
            double mean = policy.mean_for(h * w);
            double std = policy.std_for(h * w);
            for (int k = 0; k < trigger_slots; k++) {
                Tensorf m({h, w});
                for (auto& v : m.data)
                    v = static_cast<float>(std::clamp(rng.normal(mean, std), 0.0, 1.0));
                draw.gaussian[s].push_back(std::move(m));
            }
        }
    } else if (policy.kind == PolicyKind::random_word) {
        if (policy.pool.empty()) throw PolicyError("random_word pool is empty");
        for (int k = 0; k < trigger_slots; k++)
            draw.replacement_words.push_back(
                policy.pool[static_cast<size_t>(rng.below(policy.pool.size()))]);
    }
    return draw;
}

AttentionMapSet assemble_attention_targets(const AttentionMapSet& teacher,
                                           const std::vector<int>& alignment, int valid_len,
                                           const AttentionTargetPolicy& policy,
                                           const PolicyDraw& draw,
                                           const AttentionMapSet* replacement_maps) {
    if (policy.kind == PolicyKind::none)
        throw PolicyError("policy 'none' produces no attention targets");
    if (static_cast<int>(alignment.size()) < valid_len)
        throw PolicyError("alignment does not cover the student prompt");
    if (policy.kind == PolicyKind::random_word && !replacement_maps)
        throw PolicyError("random_word policy needs replacement maps");

    AttentionMapSet targets;
    targets.sites = teacher.sites;
    targets.maps.resize(teacher.maps.size());
    for (size_t s = 0; s < teacher.maps.size(); s++) {
        const Tensorf& tm = teacher.maps[s];
        int l = tm.dim(0), h = tm.dim(1), w = tm.dim(2);
        int hw = h * w;
        Tensorf out({l, h, w});
        int slot = 0;
        for (int n = 0; n < valid_len; n++) {
            float* dst = out.ptr() + static_cast<size_t>(n) * hw;
            int src = alignment[static_cast<size_t>(n)];
            if (src == kAlignTrigger) {
                switch (policy.kind) {
                    case PolicyKind::black_image:
                        break;  // all-zero target
                    case PolicyKind::gaussian_noise: {
                        const Tensorf& g = draw.gaussian[s][static_cast<size_t>(slot)];
                        std::copy(g.data.begin(), g.data.end(), dst);
                        break;
                    }
                    case PolicyKind::random_word: {
                        const Tensorf& rm = replacement_maps->maps[s];
                        const float* rp = rm.ptr() + static_cast<size_t>(n) * hw;
                        std::copy(rp, rp + hw, dst);
                        break;
                    }
                    default: break;
                }
                slot++;
            } else {
                if (src < 0 || src >= l) throw PolicyError("alignment index out of range");
                const float* sp = tm.ptr() + static_cast<size_t>(src) * hw;
                std::copy(sp, sp + hw, dst);
            }
        }
        targets.maps[s] = std::move(out);
    }
    return targets;
}

AttentionMapSet build_attention_targets(const AttentionMapSet& teacher,
                                        const std::vector<int>& alignment, int valid_len,
                                        const AttentionTargetPolicy& policy, Rng& rng,
                                        const AttentionMapSet* replacement_maps) {
    int trigger_slots = 0;
    for (int n = 0; n < valid_len; n++)
        if (alignment[static_cast<size_t>(n)] == kAlignTrigger) trigger_slots++;
    std::vector<std::pair<int, int>> shapes;
    for (const auto& m : teacher.maps) shapes.emplace_back(m.dim(1), m.dim(2));
    PolicyDraw draw = draw_policy_randomness(policy, trigger_slots, shapes, rng);
    return assemble_attention_targets(teacher, alignment, valid_len, policy, draw,
                                      replacement_maps);
}

// --------------------------------------------------------------- main run --

namespace {

struct StepScratch {
    int t = 0;
    Tensorf eps;
    const DistillSample* sample = nullptr;
    PolicyDraw draw;
};

// Replaces the trigger slots of the student prompt with replacement words.
PromptSpec replacement_prompt(const PromptSpec& student, int trigger_words,
                              const std::vector<std::string>& words, const Vocabulary& vocab) {
    PromptSpec out = student;
    for (int k = 0; k < trigger_words; k++)
        out.token_ids[static_cast<size_t>(1 + k)] = vocab.id_of(words[static_cast<size_t>(k)]);
    return out;
}

}  // namespace

UnlearnResult skd_cag_unlearn(DenoiserModel& poisoned, const UnlearnPlan& plan,
                              const NoiseSchedule& sched, const std::vector<DistillSample>& samples,
                              DenoiserModel& student, int threads) {
    Vocabulary vocab = Vocabulary::standard();
    plan.validate(vocab);
    if (samples.empty()) throw SpecError("unlearning needs at least one distillation sample");

    int trigger_words = static_cast<int>(plan.trigger_known.words().size());
    bool use_attention = plan.uses_attention();
    bool need_replacement = use_attention && plan.policy.kind == PolicyKind::random_word;

    UnlearnResult res;
    res.teacher_fp_before = unet_fingerprint(poisoned);

    student.build(poisoned.config);
    student.copy_unet_params_from(poisoned);
    student.text.emb.data = poisoned.text.emb.data;
    student.text.pos.data = poisoned.text.pos.data;
    res.student_text_fp_before = text_fingerprint(student);

    int n_threads = std::max(1, threads);
    // teacher params never change: copy once per worker
    std::vector<DenoiserModel> teacher_w(static_cast<size_t>(n_threads));
    std::vector<DenoiserModel> student_w(static_cast<size_t>(n_threads));
    for (auto& w : teacher_w) {
        w.build(poisoned.config);
        w.copy_unet_params_from(poisoned);
        w.text.emb.data = poisoned.text.emb.data;
        w.text.pos.data = poisoned.text.pos.data;
    }
    for (auto& w : student_w) w.build(poisoned.config);

    std::vector<std::pair<int, int>> site_shapes;
    {
        int r = poisoned.config.image_size;
        site_shapes = {{r / 2, r / 2}, {r / 4, r / 4}};
    }

    Adam adam;
    adam.lr = plan.lr;
    Rng data_rng(derive_seed(plan.seed, "unlearn-data"));
    Rng policy_rng(derive_seed(plan.seed, "unlearn-policy"));

    std::vector<int> order(samples.size());
    for (size_t i = 0; i < order.size(); i++) order[i] = static_cast<int>(i);

    long item_counter = 0;
    for (int epoch = 0; epoch < plan.epochs; epoch++) {
        data_rng.shuffle(order.begin(), order.end());
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(plan.batch)) {
            size_t end = std::min(order.size(), pos + static_cast<size_t>(plan.batch));
            int n = static_cast<int>(end - pos);

            // all randomness on the calling thread, in item order
            std::vector<StepScratch> work(static_cast<size_t>(n));
            for (int i = 0; i < n; i++) {
                StepScratch& s = work[static_cast<size_t>(i)];
                s.sample = &samples[static_cast<size_t>(order[pos + static_cast<size_t>(i)])];
                s.t = static_cast<int>(data_rng.below(static_cast<uint64_t>(sched.T)));
                s.eps = Tensorf::randn(s.sample->image.shape, data_rng);
                if (use_attention)
                    s.draw = draw_policy_randomness(plan.policy, trigger_words, site_shapes,
                                                    policy_rng);
            }
            for (auto& w : student_w) {
                w.copy_unet_params_from(student);
                w.text.emb.data = student.text.emb.data;
                w.text.pos.data = student.text.pos.data;
            }

            std::vector<std::vector<float>> grads(static_cast<size_t>(n));
            std::vector<double> l_preds(static_cast<size_t>(n), 0.0);
            std::vector<double> l_attns(static_cast<size_t>(n), 0.0);
            std::vector<double> composites(static_cast<size_t>(n), 0.0);
            parallel_for_workers(n, n_threads, [&](int w, int i) {
                StepScratch& s = work[static_cast<size_t>(i)];
                DenoiserModel& teacher = teacher_w[static_cast<size_t>(w)];
                DenoiserModel& stu = student_w[static_cast<size_t>(w)];

                PromptSpec clean = s.sample->clean_prompt;
                PromptSpec triggered = inject_trigger(clean, plan.trigger_known, vocab);
                std::vector<int> alignment = build_alignment(triggered, trigger_words);

                Tensorf x_t = forward_diffuse(s.sample->image, s.t, s.eps, sched);
                Tensorf cond_clean = teacher.encode_text(clean);
                Tensorf cond_trig = stu.encode_text(triggered);

                NoisePrediction t_out = teacher.predict_noise(x_t, s.t, cond_clean, use_attention);
                stu.zero_grads();
                NoisePrediction s_out = stu.predict_noise(x_t, s.t, cond_trig, use_attention);

                double l_pred = compute_pred_loss(t_out.eps_hat, s_out.eps_hat);
                double l_attn = 0.0;
                double weight = 1.0;
                AttentionMapSet targets;
                if (use_attention) {
                    const AttentionMapSet* repl = nullptr;
                    AttentionMapSet repl_store;
                    if (need_replacement) {
                        PromptSpec rp = replacement_prompt(triggered, trigger_words,
                                                           s.draw.replacement_words, vocab);
                        Tensorf cond_rp = teacher.encode_text(rp);
                        NoisePrediction r_out = teacher.predict_noise(x_t, s.t, cond_rp, true);
                        repl_store = std::move(*r_out.attention);
                        repl = &repl_store;
                    }
                    targets = assemble_attention_targets(*t_out.attention, alignment,
                                                         triggered.valid_len, plan.policy, s.draw,
                                                         repl);
                    l_attn = compute_attn_loss(*s_out.attention, targets, triggered.valid_len);
                    if (plan.timestep_weighted) {
                        weight = static_cast<double>(s.t) / sched.T;
                    }
                }

                double composite = use_attention
                                       ? composite_loss(l_pred, weight * l_attn, plan.alpha)
                                       : l_pred;
                l_preds[static_cast<size_t>(i)] = l_pred;
                l_attns[static_cast<size_t>(i)] = use_attention ? weight * l_attn : 0.0;
                composites[static_cast<size_t>(i)] = composite;

                // gradients: d(batch mean of per-item composite)
                double pred_scale = (use_attention ? (1.0 - plan.alpha) : 1.0) /
                                    static_cast<double>(n);
                Tensorf d_eps(s_out.eps_hat.shape);
                float ps = static_cast<float>(2.0 * pred_scale /
                                              static_cast<double>(d_eps.numel()));
                for (size_t j = 0; j < d_eps.numel(); j++)
                    d_eps[j] = (s_out.eps_hat[j] - t_out.eps_hat[j]) * ps;

                if (use_attention) {
                    AttentionMapSet d_maps;
                    d_maps.sites = s_out.attention->sites;
                    d_maps.maps.resize(s_out.attention->maps.size());
                    double attn_scale = plan.alpha * weight / static_cast<double>(n);
                    size_t n_sites = s_out.attention->maps.size();
                    for (size_t site = 0; site < n_sites; site++) {
                        const Tensorf& ms = s_out.attention->maps[site];
                        const Tensorf& mt = targets.maps[site];
                        Tensorf d(ms.shape);
                        int hw = ms.dim(1) * ms.dim(2);
                        float as = static_cast<float>(
                            2.0 * attn_scale /
                            (static_cast<double>(triggered.valid_len) * hw *
                             static_cast<double>(n_sites)));
                        for (int tok = 0; tok < triggered.valid_len; tok++) {
                            const float* a = ms.ptr() + static_cast<size_t>(tok) * hw;
                            const float* b = mt.ptr() + static_cast<size_t>(tok) * hw;
                            float* dp = d.ptr() + static_cast<size_t>(tok) * hw;
                            for (int j = 0; j < hw; j++) dp[j] = (a[j] - b[j]) * as;
                        }
                        d_maps.maps[site] = std::move(d);
                    }
                    stu.unet.backward(d_eps, &d_maps);
                } else {
                    stu.unet.backward(d_eps, nullptr);
                }
                stu.export_grads(grads[static_cast<size_t>(i)]);
            });

            std::vector<float>& total = grads[0];
            for (int i = 1; i < n; i++)
                for (size_t j = 0; j < total.size(); j++)
                    total[j] += grads[static_cast<size_t>(i)][j];
            double batch_loss = 0.0;
            for (int i = 0; i < n; i++) {
                batch_loss += composites[static_cast<size_t>(i)];
                std::ostringstream line;
                line << item_counter++ << " " << work[static_cast<size_t>(i)].t << " "
                     << kv_format_double(l_preds[static_cast<size_t>(i)]) << " "
                     << kv_format_double(l_attns[static_cast<size_t>(i)]) << " "
                     << kv_format_double(composites[static_cast<size_t>(i)]);
                res.loss_log.push_back(line.str());
            }
            if (!std::isfinite(batch_loss))
                throw NumericsError("non-finite unlearning loss at item " +
                                    std::to_string(item_counter));
            adam.update(student, total);
        }
    }

    res.teacher_fp_after = unet_fingerprint(poisoned);
    res.student_text_fp_after = text_fingerprint(student);
    return res;
}

UnlearnResult finetune_reversal(DenoiserModel& poisoned, const std::vector<TrainPair>& pairs,
                                int epochs, double lr, int batch, uint64_t seed,
                                const NoiseSchedule& sched, DenoiserModel& out, int threads) {
    UnlearnResult res;
    res.teacher_fp_before = unet_fingerprint(poisoned);
    out.build(poisoned.config);
    out.copy_unet_params_from(poisoned);
    out.text.emb.data = poisoned.text.emb.data;
    out.text.pos.data = poisoned.text.pos.data;
    res.student_text_fp_before = text_fingerprint(out);
    if (epochs > 0) {
        TrainOptions opts;
        opts.lr = lr;
        opts.batch = batch;
        opts.threads = threads;
        DenoiseTrainer trainer(out, sched, opts);
        Rng rng(derive_seed(seed, "finetune-reversal"));
        trainer.train_epochs(pairs, epochs, rng, &res.loss_log);
    }
    res.teacher_fp_after = unet_fingerprint(poisoned);
    res.student_text_fp_after = text_fingerprint(out);
    return res;
}

}  // namespace diffscrub
