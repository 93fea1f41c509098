#pragma once

#include "diffscrub/nn.hpp"

#include <optional>

namespace diffscrub {

struct ModelConfig {
    int image_size = 32;
    int in_channels = 3;
    int base_width = 32;  // channel multipliers fixed at {1,2,4}
    int text_dim = 64;
    int l_max = 12;
    int heads = 4;
    int vocab_size = 27;

    int temb_dim() const { return base_width * 4; }
    int gn_groups() const { return base_width >= 32 ? 8 : 4; }

    bool operator==(const ModelConfig&) const = default;
};

// Head-averaged cross-attention weights for every recorded site.
// maps[i] has shape [l_max, h_i, w_i] and sums to 1 over the token axis at
// every spatial location.
template <typename T>
struct AttentionMaps {
    std::vector<std::string> sites;
    std::vector<Tensor<T>> maps;

    int site_index(const std::string& name) const {
        for (size_t i = 0; i < sites.size(); i++)
            if (sites[i] == name) return static_cast<int>(i);
        throw ShapeError("unknown attention site '" + name + "'");
    }
};

using AttentionMapSet = AttentionMaps<float>;

template <typename T>
struct NoisePredictionT {
    Tensor<T> eps_hat;
    std::optional<AttentionMaps<T>> attention;
};

using NoisePrediction = NoisePredictionT<float>;

// ---------------------------------------------------------------- ResBlock --

template <typename T>
struct ResBlock {
    int in_ch = 0, out_ch = 0;
    GroupNorm<T> gn1, gn2;
    Conv2d<T> conv1, conv2;
    Linear<T> temb_proj;
    Conv2d<T> skip;  // 1x1, only when in_ch != out_ch
    bool has_skip = false;

    Tensor<T> a1, a2;  // pre-activation caches for silu backward

    void build(int in, int out, int temb_dim, int gn_groups) {
        in_ch = in;
        out_ch = out;
        gn1.build(in, gn_groups);
        conv1.build(in, out, 3, 1);
        temb_proj.build(temb_dim, out);
        gn2.build(out, gn_groups);
        conv2.build(out, out, 3, 1);
        has_skip = in != out;
        if (has_skip) skip.build(in, out, 1, 1);
    }

    void init(Rng& rng) {
        conv1.init(rng);
        temb_proj.init(rng);
        conv2.init(rng);
        if (has_skip) skip.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& temb_act) {
        a1 = gn1.forward(x);
        Tensor<T> s1;
        silu_forward(a1, s1);
        Tensor<T> h = conv1.forward(s1);
        Tensor<T> tp = temb_proj.forward(temb_act);
        int hw = h.dim(1) * h.dim(2);
        for (int c = 0; c < out_ch; c++) {
            T v = tp[static_cast<size_t>(c)];
            T* row = h.ptr() + static_cast<size_t>(c) * hw;
            for (int i = 0; i < hw; i++) row[i] += v;
        }
        a2 = gn2.forward(h);
        Tensor<T> s2;
        silu_forward(a2, s2);
        Tensor<T> h2 = conv2.forward(s2);
        Tensor<T> out = has_skip ? skip.forward(x) : x;
        out.add_(h2);
        return out;
    }

    // Returns dx; accumulates the time-embedding gradient into dtemb_act.
    Tensor<T> backward(const Tensor<T>& dy, Tensor<T>& dtemb_act) {
        Tensor<T> ds2 = conv2.backward(dy);
        Tensor<T> da2;
        silu_backward(a2, ds2, da2);
        Tensor<T> dh = gn2.backward(da2);

        int hw = dh.dim(1) * dh.dim(2);
        Tensor<T> dtp({out_ch});
        for (int c = 0; c < out_ch; c++) {
            const T* row = dh.ptr() + static_cast<size_t>(c) * hw;
            double s = 0.0;
            for (int i = 0; i < hw; i++) s += row[i];
            dtp[static_cast<size_t>(c)] = static_cast<T>(s);
        }
        Tensor<T> dta = temb_proj.backward(dtp);
        dtemb_act.add_(dta);

        Tensor<T> ds1 = conv1.backward(dh);
        Tensor<T> da1;
        silu_backward(a1, ds1, da1);
        Tensor<T> dx = gn1.backward(da1);
        if (has_skip) {
            Tensor<T> dskip = skip.backward(dy);
            dx.add_(dskip);
        } else {
            dx.add_(dy);
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        gn1.visit(prefix + ".gn1", fn);
        conv1.visit(prefix + ".conv1", fn);
        temb_proj.visit(prefix + ".temb", fn);
        gn2.visit(prefix + ".gn2", fn);
        conv2.visit(prefix + ".conv2", fn);
        if (has_skip) skip.visit(prefix + ".skip", fn);
    }
};

// ------------------------------------------------------------------- UNet --

// Text-conditioned denoising UNet:
//   stem conv -> res(c0) @R ----------------------------------- skip0
//   down -> res(c1) + cross-attn @R/2 ------------------------- skip1
//   down -> res(c2), cross-attn, res(c2) @R/4
//   up + concat skip1 -> res @R/2
//   up + concat skip0 -> res @R
//   groupnorm + silu + out conv
// Cross-attention sites: "enc.attn" (R/2) and "mid.attn" (R/4).
template <typename T>
struct UNet {
    ModelConfig cfg;
    int c0 = 0, c1 = 0, c2 = 0;

    Conv2d<T> stem;
    ResBlock<T> enc0;
    Conv2d<T> down0;
    ResBlock<T> enc1;
    CrossAttention<T> attn1;
    Conv2d<T> down1;
    ResBlock<T> mid1;
    CrossAttention<T> attn2;
    ResBlock<T> mid2;
    Conv2d<T> up1_conv;
    ResBlock<T> dec1;
    Conv2d<T> up0_conv;
    ResBlock<T> dec0;
    GroupNorm<T> out_gn;
    Conv2d<T> out_conv;

    Linear<T> time_lin1, time_lin2;

    // forward caches
    Tensor<T> temb_e1, temb_e2, temb_act;  // pre-act / pre-act / final activation
    Tensor<T> out_a;                        // out_gn output (pre-silu)

    void build(const ModelConfig& c) {
        cfg = c;
        if (c.image_size % 4 != 0) throw ShapeError("image size must be divisible by 4");
        c0 = c.base_width;
        c1 = 2 * c.base_width;
        c2 = 4 * c.base_width;
        int g = c.gn_groups();
        int td = c.temb_dim();
        stem.build(c.in_channels, c0, 3, 1);
        enc0.build(c0, c0, td, g);
        down0.build(c0, c1, 3, 2);
        enc1.build(c1, c1, td, g);
        attn1.build(c1, c.text_dim, c.heads, g);
        down1.build(c1, c2, 3, 2);
        mid1.build(c2, c2, td, g);
        attn2.build(c2, c.text_dim, c.heads, g);
        mid2.build(c2, c2, td, g);
        up1_conv.build(c2, c1, 3, 1);
        dec1.build(2 * c1, c1, td, g);
        up0_conv.build(c1, c0, 3, 1);
        dec0.build(2 * c0, c0, td, g);
        out_gn.build(c0, g);
        out_conv.build(c0, c.in_channels, 3, 1);
        time_lin1.build(td, td);
        time_lin2.build(td, td);
    }

    void init(Rng& rng) {
        stem.init(rng);
        enc0.init(rng);
        down0.init(rng);
        enc1.init(rng);
        attn1.init(rng);
        down1.init(rng);
        mid1.init(rng);
        attn2.init(rng);
        mid2.init(rng);
        up1_conv.init(rng);
        dec1.init(rng);
        up0_conv.init(rng);
        dec0.init(rng);
        out_conv.init(rng, 0.05);  // small but nonzero final projection
        time_lin1.init(rng);
        time_lin2.init(rng);
    }

    std::vector<std::string> attention_sites() const { return {"enc.attn", "mid.attn"}; }

    Tensor<T> time_embedding(int t) const {
        int d = cfg.temb_dim();
        int half = d / 2;
        Tensor<T> e({d});
        for (int i = 0; i < half; i++) {
            double freq = std::exp(-std::log(10000.0) * i / half);
            e[static_cast<size_t>(i)] = static_cast<T>(std::sin(t * freq));
            e[static_cast<size_t>(half + i)] = static_cast<T>(std::cos(t * freq));
        }
        return e;
    }

    // x: [in_ch, R, R], cond: [l_max, text_dim]
    Tensor<T> forward(const Tensor<T>& x, int t, const Tensor<T>& cond, AttentionMaps<T>* rec) {
        if (x.rank() != 3 || x.dim(0) != cfg.in_channels || x.dim(1) != cfg.image_size ||
            x.dim(2) != cfg.image_size)
            throw ShapeError("unet input shape");
        if (cond.rank() != 2 || cond.dim(0) != cfg.l_max || cond.dim(1) != cfg.text_dim)
            throw ShapeError("conditioning shape");
        if (rec) {
            rec->sites = attention_sites();
            rec->maps.resize(2);
        }

        Tensor<T> e0 = time_embedding(t);
        temb_e1 = time_lin1.forward(e0);
        Tensor<T> e1s;
        silu_forward(temb_e1, e1s);
        temb_e2 = time_lin2.forward(e1s);
        silu_forward(temb_e2, temb_act);

        Tensor<T> h = stem.forward(x);
        Tensor<T> skip0 = enc0.forward(h, temb_act);
        h = down0.forward(skip0);
        h = enc1.forward(h, temb_act);
        Tensor<T> skip1 = attn1.forward(h, cond, rec ? &rec->maps[0] : nullptr);
        h = down1.forward(skip1);
        h = mid1.forward(h, temb_act);
        h = attn2.forward(h, cond, rec ? &rec->maps[1] : nullptr);
        h = mid2.forward(h, temb_act);
        h = upsample_nearest2x(h);
        h = up1_conv.forward(h);
        h = dec1.forward(concat_channels(h, skip1), temb_act);
        h = upsample_nearest2x(h);
        h = up0_conv.forward(h);
        h = dec0.forward(concat_channels(h, skip0), temb_act);
        out_a = out_gn.forward(h);
        Tensor<T> s;
        silu_forward(out_a, s);
        return out_conv.forward(s);
    }

    // d_eps: gradient wrt the predicted noise; d_attn: optional gradients wrt
    // the recorded head-averaged maps (same order as attention_sites()).
    void backward(const Tensor<T>& d_eps, const AttentionMaps<T>* d_attn) {
        const Tensor<T>* d_a1 = nullptr;
        const Tensor<T>* d_a2 = nullptr;
        if (d_attn) {
            d_a1 = &d_attn->maps[0];
            d_a2 = &d_attn->maps[1];
        }
        Tensor<T> dtemb({cfg.temb_dim()});

        Tensor<T> ds = out_conv.backward(d_eps);
        Tensor<T> da;
        silu_backward(out_a, ds, da);
        Tensor<T> dh = out_gn.backward(da);

        dh = dec0.backward(dh, dtemb);
        Tensor<T> dup0, dskip0;
        split_channels(dh, dup0, dskip0, c0);
        dh = up0_conv.backward(dup0);
        dh = upsample_nearest2x_backward(dh);

        dh = dec1.backward(dh, dtemb);
        Tensor<T> dup1, dskip1;
        split_channels(dh, dup1, dskip1, c1);
        dh = up1_conv.backward(dup1);
        dh = upsample_nearest2x_backward(dh);

        dh = mid2.backward(dh, dtemb);
        dh = attn2.backward(dh, d_a2);
        dh = mid1.backward(dh, dtemb);
        dh = down1.backward(dh);
        dh.add_(dskip1);
        dh = attn1.backward(dh, d_a1);
        dh = enc1.backward(dh, dtemb);
        dh = down0.backward(dh);
        dh.add_(dskip0);
        dh = enc0.backward(dh, dtemb);
        stem.backward(dh);  // gradient wrt the noised input is not needed

        // dtemb holds d(silu(e2)); chain through the shared time MLP
        Tensor<T> de2;
        silu_backward(temb_e2, dtemb, de2);
        Tensor<T> de1s = time_lin2.backward(de2);
        Tensor<T> de1;
        silu_backward(temb_e1, de1s, de1);
        time_lin1.backward(de1);
    }

    void visit(const ParamVisitor<T>& fn) {
        stem.visit("stem", fn);
        enc0.visit("enc0", fn);
        down0.visit("down0", fn);
        enc1.visit("enc1", fn);
        attn1.visit("enc.attn", fn);
        down1.visit("down1", fn);
        mid1.visit("mid1", fn);
        attn2.visit("mid.attn", fn);
        mid2.visit("mid2", fn);
        up1_conv.visit("up1", fn);
        dec1.visit("dec1", fn);
        up0_conv.visit("up0", fn);
        dec0.visit("dec0", fn);
        out_gn.visit("out.gn", fn);
        out_conv.visit("out.conv", fn);
        time_lin1.visit("time.lin1", fn);
        time_lin2.visit("time.lin2", fn);
    }
};

}  // namespace diffscrub
