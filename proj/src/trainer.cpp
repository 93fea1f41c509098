#include "diffscrub/trainer.hpp"

#include "diffscrub/kvtext.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace diffscrub {

void parallel_for_workers(int n, int workers, const std::function<void(int, int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; i++) fn(0, i);
        return;
    }
    int use = std::min(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(use));
    for (int w = 0; w < use; w++) {
        int lo = static_cast<int>(static_cast<long>(n) * w / use);
        int hi = static_cast<int>(static_cast<long>(n) * (w + 1) / use);
        pool.emplace_back([=, &fn] {
            for (int i = lo; i < hi; i++) fn(w, i);
        });
    }
    for (auto& t : pool) t.join();
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    parallel_for_workers(n, threads, [&](int, int i) { fn(i); });
}

void Adam::update(DenoiserModel& model, const std::vector<float>& grad) {
    if (m.empty()) {
        m.assign(grad.size(), 0.0f);
        v.assign(grad.size(), 0.0f);
    }
    if (grad.size() != m.size()) throw ShapeError("adam gradient size mismatch");
    step++;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    size_t off = 0;
    model.for_each_unet_param([&](const std::string&, Tensorf& p, Tensorf&) {
        for (size_t i = 0; i < p.numel(); i++) {
            size_t j = off + i;
            double g = grad[j];
            m[j] = static_cast<float>(beta1 * m[j] + (1.0 - beta1) * g);
            v[j] = static_cast<float>(beta2 * v[j] + (1.0 - beta2) * g * g);
            double mh = m[j] / bc1;
            double vh = v[j] / bc2;
            p[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + eps));
        }
        off += p.numel();
    });
}

DenoiseTrainer::DenoiseTrainer(DenoiserModel& model, NoiseSchedule sched, TrainOptions opts)
    : model_(model), sched_(std::move(sched)), opts_(opts) {
    adam_.lr = opts.lr;
    int n = std::max(1, opts_.threads);
    workers_.resize(static_cast<size_t>(n));
    for (auto& w : workers_) w.build(model_.config);
}

void DenoiseTrainer::sync_workers() {
    for (auto& w : workers_) {
        w.copy_unet_params_from(model_);
        w.text.emb.data = model_.text.emb.data;
        w.text.pos.data = model_.text.pos.data;
    }
}

double DenoiseTrainer::step_fixed(const std::vector<const TrainPair*>& batch,
                                  const std::vector<int>& ts, const std::vector<Tensorf>& epss) {
    int n = static_cast<int>(batch.size());
    if (n == 0) throw SpecError("empty training batch");
    sync_workers();

    std::vector<std::vector<float>> grads(static_cast<size_t>(n));
    std::vector<double> losses(static_cast<size_t>(n), 0.0);
    int threads = static_cast<int>(workers_.size());
    parallel_for_workers(n, threads, [&](int w, int i) {
        DenoiserModel& wm = workers_[static_cast<size_t>(w)];
        const TrainPair& item = *batch[static_cast<size_t>(i)];
        Tensorf cond = wm.encode_text(item.prompt);
        Tensorf x_t = forward_diffuse(item.image, ts[static_cast<size_t>(i)],
                                      epss[static_cast<size_t>(i)], sched_);
        wm.zero_grads();
        Tensorf pred = wm.unet.forward(x_t, ts[static_cast<size_t>(i)], cond, nullptr);
        const Tensorf& eps = epss[static_cast<size_t>(i)];
        double mse = 0.0;
        Tensorf d(pred.shape);
        float scale = 2.0f / (static_cast<float>(pred.numel()) * static_cast<float>(n));
        for (size_t j = 0; j < pred.numel(); j++) {
            double diff = static_cast<double>(pred[j]) - eps[j];
            mse += diff * diff;
            d[j] = static_cast<float>(diff) * scale;
        }
        losses[static_cast<size_t>(i)] = mse / static_cast<double>(pred.numel());
        wm.unet.backward(d, nullptr);
        wm.export_grads(grads[static_cast<size_t>(i)]);
    });

    std::vector<float>& total = grads[0];
    for (int i = 1; i < n; i++)
        for (size_t j = 0; j < total.size(); j++) total[j] += grads[static_cast<size_t>(i)][j];
    double loss = 0.0;
    for (double l : losses) loss += l;
    loss /= n;
    if (!std::isfinite(loss))
        throw NumericsError("non-finite training loss at optimizer step " +
                            std::to_string(adam_.step + 1) + " (t=" + std::to_string(ts[0]) + ")");
    adam_.update(model_, total);
    return loss;
}

double DenoiseTrainer::step(const std::vector<const TrainPair*>& batch, Rng& rng) {
    int n = static_cast<int>(batch.size());
    if (n == 0) throw SpecError("empty training batch");
    std::vector<int> ts(static_cast<size_t>(n));
    std::vector<Tensorf> epss(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
        ts[static_cast<size_t>(i)] = static_cast<int>(rng.below(static_cast<uint64_t>(sched_.T)));
        epss[static_cast<size_t>(i)] =
            Tensorf::randn(batch[static_cast<size_t>(i)]->image.shape, rng);
    }
    return step_fixed(batch, ts, epss);
}

void DenoiseTrainer::train_epochs(const std::vector<TrainPair>& pairs, int epochs, Rng& rng,
                                  std::vector<std::string>* log,
                                  const std::function<void(int, double)>& on_epoch) {
    if (pairs.empty()) throw SpecError("no training pairs");
    std::vector<int> order(pairs.size());
    for (size_t i = 0; i < pairs.size(); i++) order[i] = static_cast<int>(i);
    for (int e = 0; e < epochs; e++) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        int steps = 0;
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(opts_.batch)) {
            std::vector<const TrainPair*> batch;
            for (size_t k = pos; k < std::min(order.size(), pos + static_cast<size_t>(opts_.batch));
                 k++)
                batch.push_back(&pairs[static_cast<size_t>(order[k])]);
            double loss = step(batch, rng);
            epoch_loss += loss;
            steps++;
            if (log) {
                std::ostringstream line;
                line << adam_.step << " " << kv_format_double(loss);
                log->push_back(line.str());
            }
        }
        if (on_epoch) on_epoch(e, epoch_loss / std::max(1, steps));
    }
}

double train_denoiser_step(DenoiserModel& model, const std::vector<TrainPair>& batch,
                           const NoiseSchedule& sched, Adam& adam, Rng& rng, int threads) {
    TrainOptions opts;
    opts.lr = adam.lr;
    opts.batch = static_cast<int>(batch.size());
    opts.threads = threads;
    DenoiseTrainer tr(model, sched, opts);
    tr.optimizer() = adam;
    std::vector<const TrainPair*> ptrs;
    for (const auto& p : batch) ptrs.push_back(&p);
    double loss = tr.step(ptrs, rng);
    adam = tr.optimizer();
    return loss;
}

std::vector<TrainPair> pairs_from_dataset(const std::string& dir, const DatasetManifest& m,
                                          const std::vector<int>& indices, const Vocabulary& vocab,
                                          int l_max) {
    std::vector<TrainPair> out;
    out.reserve(indices.size());
    for (int i : indices) {
        const DatasetEntry& e = m.entries[static_cast<size_t>(i)];
        TrainPair p;
        p.prompt = tokenize(e.caption, vocab, l_max);
        p.image = load_entry_image(dir, e);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace diffscrub
