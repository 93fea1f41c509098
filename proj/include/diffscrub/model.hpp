#pragma once

#include "diffscrub/unet.hpp"
#include "diffscrub/vocab.hpp"

namespace diffscrub {

// Frozen conditioning pathway: embedding table plus fixed sinusoidal
// positional encodings. Never updated by any training operation.
template <typename T>
struct TextEncoder {
    int vocab_size = 0, dim = 0, l_max = 0;
    Tensor<T> emb;  // [vocab, dim]
    Tensor<T> pos;  // [l_max, dim]
    Tensor<T> emb_g, pos_g;  // present for uniform traversal; always zero

    void build(int vocab, int d, int l) {
        vocab_size = vocab;
        dim = d;
        l_max = l;
        emb = Tensor<T>({vocab, d});
        pos = Tensor<T>({l, d});
        emb_g = Tensor<T>({vocab, d});
        pos_g = Tensor<T>({l, d});
    }

    void init(Rng& rng) {
        for (auto& v : emb.data) v = static_cast<T>(rng.normal());
        for (int n = 0; n < l_max; n++)
            for (int i = 0; i < dim; i++) {
                double angle = n / std::pow(10000.0, 2.0 * (i / 2) / dim);
                pos.at(n, i) = static_cast<T>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
            }
    }

    Tensor<T> encode(const PromptSpec& p) const {
        Tensor<T> cond({l_max, dim});
        for (int n = 0; n < l_max; n++) {
            int id = p.token_ids[static_cast<size_t>(n)];
            if (id < 0 || id >= vocab_size)
                throw VocabularyError("token id " + std::to_string(id) + " out of range");
            for (int i = 0; i < dim; i++) cond.at(n, i) = emb.at(id, i) + pos.at(n, i);
        }
        return cond;
    }

    void visit(const ParamVisitor<T>& fn) {
        fn("text.emb", emb, emb_g);
        fn("text.pos", pos, pos_g);
    }
};

// The trainable denoiser: config + frozen text encoder + UNet.
template <typename T>
struct DenoiserModelT {
    ModelConfig config;
    TextEncoder<T> text;
    UNet<T> unet;

    void build(const ModelConfig& c) {
        config = c;
        text.build(c.vocab_size, c.text_dim, c.l_max);
        unet.build(c);
    }

    void init(uint64_t seed) {
        Rng rng(derive_seed(seed, "model-init"));
        text.init(rng);
        unet.init(rng);
    }

    Tensor<T> encode_text(const PromptSpec& p) const { return text.encode(p); }

    NoisePredictionT<T> predict_noise(const Tensor<T>& x_t, int t, const Tensor<T>& cond,
                                      bool record_attention = false) {
        NoisePredictionT<T> out;
        if (record_attention) {
            out.attention.emplace();
            out.eps_hat = unet.forward(x_t, t, cond, &*out.attention);
        } else {
            out.eps_hat = unet.forward(x_t, t, cond, nullptr);
        }
        return out;
    }

    void for_each_unet_param(const ParamVisitor<T>& fn) {
        unet.visit([&](const std::string& name, Tensor<T>& v, Tensor<T>& g) {
            fn("unet." + name, v, g);
        });
    }
    void for_each_param(const ParamVisitor<T>& fn) {
        text.visit(fn);
        for_each_unet_param(fn);
    }

    void zero_grads() {
        for_each_unet_param([](const std::string&, Tensor<T>&, Tensor<T>& g) { g.zero(); });
    }

    size_t unet_param_count() {
        size_t n = 0;
        for_each_unet_param([&](const std::string&, Tensor<T>& v, Tensor<T>&) { n += v.numel(); });
        return n;
    }

    void export_grads(std::vector<T>& out) {
        out.clear();
        for_each_unet_param([&](const std::string&, Tensor<T>&, Tensor<T>& g) {
            out.insert(out.end(), g.data.begin(), g.data.end());
        });
    }

    void copy_unet_params_from(DenoiserModelT& src) {
        std::vector<Tensor<T>*> mine;
        for_each_unet_param([&](const std::string&, Tensor<T>& v, Tensor<T>&) { mine.push_back(&v); });
        size_t i = 0;
        src.for_each_unet_param([&](const std::string&, Tensor<T>& v, Tensor<T>&) {
            mine[i++]->data = v.data;
        });
    }
};

using DenoiserModel = DenoiserModelT<float>;

template <typename T>
uint64_t unet_fingerprint(DenoiserModelT<T>& m) {
    uint64_t h = 0xcbf29ce484222325ull;
    m.for_each_unet_param([&](const std::string& name, Tensor<T>& v, Tensor<T>&) {
        h = fnv1a64(name, h);
        h = fnv1a64(v.ptr(), v.numel() * sizeof(T), h);
    });
    return h;
}

template <typename T>
uint64_t text_fingerprint(DenoiserModelT<T>& m) {
    uint64_t h = 0xcbf29ce484222325ull;
    m.text.visit([&](const std::string& name, Tensor<T>& v, Tensor<T>&) {
        h = fnv1a64(name, h);
        h = fnv1a64(v.ptr(), v.numel() * sizeof(T), h);
    });
    return h;
}

}  // namespace diffscrub
