#pragma once

#include "diffscrub/rng.hpp"
#include "diffscrub/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace diffscrub {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

// Visitor over named parameters. Traversal order is fixed by construction and
// shared by the optimizer, checkpoints and gradient reduction.
template <typename T>
using ParamVisitor = std::function<void(const std::string&, Tensor<T>&, Tensor<T>&)>;

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
inline void silu_forward(const Tensor<T>& x, Tensor<T>& y) {
    y.shape = x.shape;
    y.data.resize(x.numel());
    for (size_t i = 0; i < x.numel(); i++) y[i] = x[i] * sigmoid(x[i]);
}

// dx = dy * d(silu)/dx, with x the cached pre-activation
template <typename T>
inline void silu_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
    dx.shape = x.shape;
    dx.data.resize(x.numel());
    for (size_t i = 0; i < x.numel(); i++) {
        T s = sigmoid(x[i]);
        dx[i] = dy[i] * s * (T(1) + x[i] * (T(1) - s));
    }
}

// ---------------------------------------------------------------- Linear --

template <typename T>
struct Linear {
    int in_dim = 0, out_dim = 0;
    Tensor<T> w, b;    // w: [out, in]
    Tensor<T> gw, gb;
    Tensor<T> x_cache;

    void build(int in, int out) {
        in_dim = in;
        out_dim = out;
        w = Tensor<T>({out, in});
        b = Tensor<T>({out});
        gw = Tensor<T>({out, in});
        gb = Tensor<T>({out});
    }

    void init(Rng& rng) {
        double std = std::sqrt(2.0 / in_dim);
        for (auto& v : w.data) v = static_cast<T>(rng.normal() * std);
        b.zero();
    }

    // x: [in] -> [out]
    Tensor<T> forward(const Tensor<T>& x) {
        x_cache = x;
        Tensor<T> y({out_dim});
        CMapRM<T> wm(w.ptr(), out_dim, in_dim);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x.ptr(), in_dim);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> yv(y.ptr(), out_dim);
        yv.noalias() = wm * xv;
        for (int i = 0; i < out_dim; i++) y[static_cast<size_t>(i)] += b[static_cast<size_t>(i)];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        for (int o = 0; o < out_dim; o++) {
            T d = dy[static_cast<size_t>(o)];
            gb[static_cast<size_t>(o)] += d;
            T* gwr = gw.ptr() + static_cast<size_t>(o) * in_dim;
            const T* xr = x_cache.ptr();
            for (int i = 0; i < in_dim; i++) gwr[i] += d * xr[i];
        }
        Tensor<T> dx({in_dim});
        CMapRM<T> wm(w.ptr(), out_dim, in_dim);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> dyv(dy.ptr(), out_dim);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dxv(dx.ptr(), in_dim);
        dxv.noalias() = wm.transpose() * dyv;
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn(prefix + ".w", w, gw);
        fn(prefix + ".b", b, gb);
    }
};

// ---------------------------------------------------------------- Conv2d --

// kxk convolution, zero padding (k-1)/2, stride 1 or 2, via im2col + GEMM.
template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, k = 3, stride = 1;
    Tensor<T> w, b;  // w: [out_ch, in_ch*k*k]
    Tensor<T> gw, gb;

    Tensor<T> cols;  // [in_ch*k*k, oh*ow]
    int ih = 0, iw = 0, oh = 0, ow = 0;

    void build(int in, int out, int ksize, int stride_) {
        in_ch = in;
        out_ch = out;
        k = ksize;
        stride = stride_;
        w = Tensor<T>({out, in * k * k});
        b = Tensor<T>({out});
        gw = Tensor<T>({out, in * k * k});
        gb = Tensor<T>({out});
    }

    void init(Rng& rng, double gain = 1.0) {
        double std = gain * std::sqrt(2.0 / (in_ch * k * k));
        for (auto& v : w.data) v = static_cast<T>(rng.normal() * std);
        b.zero();
    }

    void im2col(const Tensor<T>& x) {
        int pad = (k - 1) / 2;
        ih = x.dim(1);
        iw = x.dim(2);
        oh = (ih + 2 * pad - k) / stride + 1;
        ow = (iw + 2 * pad - k) / stride + 1;
        int rows = in_ch * k * k;
        cols.shape = {rows, oh * ow};
        cols.data.assign(static_cast<size_t>(rows) * oh * ow, T(0));
        for (int c = 0; c < in_ch; c++) {
            for (int ki = 0; ki < k; ki++) {
                for (int kj = 0; kj < k; kj++) {
                    T* dst = cols.ptr() + (static_cast<size_t>(c) * k * k + ki * k + kj) * oh * ow;
                    const T* src = x.ptr() + static_cast<size_t>(c) * ih * iw;
                    for (int oy = 0; oy < oh; oy++) {
                        int iy = oy * stride - pad + ki;
                        if (iy < 0 || iy >= ih) continue;
                        for (int ox = 0; ox < ow; ox++) {
                            int ix = ox * stride - pad + kj;
                            if (ix < 0 || ix >= iw) continue;
                            dst[oy * ow + ox] = src[iy * iw + ix];
                        }
                    }
                }
            }
        }
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.dim(0) != in_ch) throw ShapeError("conv input channels");
        im2col(x);
        Tensor<T> y({out_ch, oh, ow});
        int rows = in_ch * k * k;
        CMapRM<T> wm(w.ptr(), out_ch, rows);
        CMapRM<T> cm(cols.ptr(), rows, oh * ow);
        MapRM<T> ym(y.ptr(), out_ch, oh * ow);
        ym.noalias() = wm * cm;
        for (int c = 0; c < out_ch; c++) {
            T bias = b[static_cast<size_t>(c)];
            T* row = y.ptr() + static_cast<size_t>(c) * oh * ow;
            for (int i = 0; i < oh * ow; i++) row[i] += bias;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        int rows = in_ch * k * k;
        int m = oh * ow;
        CMapRM<T> dym(dy.ptr(), out_ch, m);
        CMapRM<T> cm(cols.ptr(), rows, m);
        MapRM<T> gwm(gw.ptr(), out_ch, rows);
        gwm.noalias() += dym * cm.transpose();
        for (int c = 0; c < out_ch; c++) {
            const T* row = dy.ptr() + static_cast<size_t>(c) * m;
            T s = 0;
            for (int i = 0; i < m; i++) s += row[i];
            gb[static_cast<size_t>(c)] += s;
        }
        // dcols = W^T * dY, then scatter back (col2im)
        MatRM<T> dcols(rows, m);
        CMapRM<T> wm(w.ptr(), out_ch, rows);
        dcols.noalias() = wm.transpose() * dym;

        Tensor<T> dx({in_ch, ih, iw});
        int pad = (k - 1) / 2;
        for (int c = 0; c < in_ch; c++) {
            for (int ki = 0; ki < k; ki++) {
                for (int kj = 0; kj < k; kj++) {
                    const T* src = dcols.data() + (static_cast<size_t>(c) * k * k + ki * k + kj) * m;
                    T* dst = dx.ptr() + static_cast<size_t>(c) * ih * iw;
                    for (int oy = 0; oy < oh; oy++) {
                        int iy = oy * stride - pad + ki;
                        if (iy < 0 || iy >= ih) continue;
                        for (int ox = 0; ox < ow; ox++) {
                            int ix = ox * stride - pad + kj;
                            if (ix < 0 || ix >= iw) continue;
                            dst[iy * iw + ix] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn(prefix + ".w", w, gw);
        fn(prefix + ".b", b, gb);
    }
};

// ------------------------------------------------------------- GroupNorm --

template <typename T>
struct GroupNorm {
    int channels = 0, groups = 0;
    double eps = 1e-5;
    Tensor<T> gamma, beta;
    Tensor<T> ggamma, gbeta;

    Tensor<T> xhat;
    std::vector<double> invstd;  // per group

    void build(int ch, int groups_) {
        channels = ch;
        groups = groups_ > ch ? ch : groups_;
        if (ch % groups != 0) throw ShapeError("groupnorm channels not divisible by groups");
        gamma = Tensor<T>({ch});
        beta = Tensor<T>({ch});
        ggamma = Tensor<T>({ch});
        gbeta = Tensor<T>({ch});
        gamma.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        int h = x.dim(1), w = x.dim(2);
        int cg = channels / groups;
        size_t n = static_cast<size_t>(cg) * h * w;
        xhat.shape = x.shape;
        xhat.data.resize(x.numel());
        invstd.assign(static_cast<size_t>(groups), 0.0);
        Tensor<T> y(x.shape);
        for (int g = 0; g < groups; g++) {
            const T* xp = x.ptr() + static_cast<size_t>(g) * n;
            double mean = 0.0;
            for (size_t i = 0; i < n; i++) mean += xp[i];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (size_t i = 0; i < n; i++) {
                double d = xp[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            double is = 1.0 / std::sqrt(var + eps);
            invstd[static_cast<size_t>(g)] = is;
            T* xh = xhat.ptr() + static_cast<size_t>(g) * n;
            T* yp = y.ptr() + static_cast<size_t>(g) * n;
            for (int c = 0; c < cg; c++) {
                T ga = gamma[static_cast<size_t>(g * cg + c)];
                T be = beta[static_cast<size_t>(g * cg + c)];
                for (int i = 0; i < h * w; i++) {
                    size_t idx = static_cast<size_t>(c) * h * w + i;
                    T v = static_cast<T>((xp[idx] - mean) * is);
                    xh[idx] = v;
                    yp[idx] = v * ga + be;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        int h = xhat.dim(1), w = xhat.dim(2);
        int cg = channels / groups;
        size_t n = static_cast<size_t>(cg) * h * w;
        Tensor<T> dx(xhat.shape);
        for (int g = 0; g < groups; g++) {
            const T* xh = xhat.ptr() + static_cast<size_t>(g) * n;
            const T* dyp = dy.ptr() + static_cast<size_t>(g) * n;
            T* dxp = dx.ptr() + static_cast<size_t>(g) * n;
            double s1 = 0.0, s2 = 0.0;
            for (int c = 0; c < cg; c++) {
                T ga = gamma[static_cast<size_t>(g * cg + c)];
                double dg = 0.0, db = 0.0;
                for (int i = 0; i < h * w; i++) {
                    size_t idx = static_cast<size_t>(c) * h * w + i;
                    double dxh = static_cast<double>(dyp[idx]) * ga;
                    s1 += dxh;
                    s2 += dxh * xh[idx];
                    dg += static_cast<double>(dyp[idx]) * xh[idx];
                    db += dyp[idx];
                }
                ggamma[static_cast<size_t>(g * cg + c)] += static_cast<T>(dg);
                gbeta[static_cast<size_t>(g * cg + c)] += static_cast<T>(db);
            }
            double is = invstd[static_cast<size_t>(g)];
            double inv_n = 1.0 / static_cast<double>(n);
            for (int c = 0; c < cg; c++) {
                T ga = gamma[static_cast<size_t>(g * cg + c)];
                for (int i = 0; i < h * w; i++) {
                    size_t idx = static_cast<size_t>(c) * h * w + i;
                    double dxh = static_cast<double>(dyp[idx]) * ga;
                    dxp[idx] = static_cast<T>(is * (dxh - inv_n * (s1 + xh[idx] * s2)));
                }
            }
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn(prefix + ".g", gamma, ggamma);
        fn(prefix + ".b", beta, gbeta);
    }
};

// -------------------------------------------------------- CrossAttention --

// Multi-head cross-attention from image features (queries) to the frozen
// text conditioning (keys/values), with a residual connection. Softmax runs
// over the token axis, so at every spatial location the per-token weights
// sum to 1. Head-averaged weights can be recorded, and an external gradient
// on those recorded maps can be injected during backward.
template <typename T>
struct CrossAttention {
    int channels = 0, text_dim = 0, heads = 0, head_dim = 0;
    GroupNorm<T> gn;
    Tensor<T> wq, wk, wv, wo;      // [C,C], [C,d], [C,d], [C,C]
    Tensor<T> gwq, gwk, gwv, gwo;

    // caches
    Tensor<T> x_mc;    // normalized input, location-major [M, C]
    Tensor<T> q, kk, vv;  // [M,C], [L,C], [L,C]
    Tensor<T> attn;    // [heads, M, L] softmax weights
    Tensor<T> o_cat;   // [M, C] pre-output-projection
    Tensor<T> cond_cache;  // [L, d]
    int hh = 0, ww = 0, l_tokens = 0;

    void build(int ch, int d_text, int n_heads, int gn_groups) {
        channels = ch;
        text_dim = d_text;
        heads = n_heads;
        if (ch % n_heads != 0) throw ShapeError("attention channels not divisible by heads");
        head_dim = ch / n_heads;
        gn.build(ch, gn_groups);
        wq = Tensor<T>({ch, ch});
        wk = Tensor<T>({ch, d_text});
        wv = Tensor<T>({ch, d_text});
        wo = Tensor<T>({ch, ch});
        gwq = Tensor<T>({ch, ch});
        gwk = Tensor<T>({ch, d_text});
        gwv = Tensor<T>({ch, d_text});
        gwo = Tensor<T>({ch, ch});
    }

    void init(Rng& rng) {
        auto fill = [&](Tensor<T>& t, int fan_in, double gain) {
            double std = gain / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : t.data) v = static_cast<T>(rng.normal() * std);
        };
        fill(wq, channels, 1.0);
        fill(wk, text_dim, 1.0);
        fill(wv, text_dim, 1.0);
        fill(wo, channels, 0.2);  // damped residual branch at init
    }

    // x: [C,H,W], cond: [L, d]. When rec != nullptr it receives the
    // head-averaged weights as [L, H, W].
    Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& cond, Tensor<T>* rec) {
        hh = x.dim(1);
        ww = x.dim(2);
        l_tokens = cond.dim(0);
        int m = hh * ww;
        cond_cache = cond;

        Tensor<T> xn = gn.forward(x);
        x_mc = Tensor<T>({m, channels});
        {
            CMapRM<T> src(xn.ptr(), channels, m);
            MapRM<T> dst(x_mc.ptr(), m, channels);
            dst = src.transpose();
        }
        q = Tensor<T>({m, channels});
        kk = Tensor<T>({l_tokens, channels});
        vv = Tensor<T>({l_tokens, channels});
        {
            CMapRM<T> xm(x_mc.ptr(), m, channels);
            CMapRM<T> cm(cond.ptr(), l_tokens, text_dim);
            CMapRM<T> wqm(wq.ptr(), channels, channels);
            CMapRM<T> wkm(wk.ptr(), channels, text_dim);
            CMapRM<T> wvm(wv.ptr(), channels, text_dim);
            MapRM<T>(q.ptr(), m, channels).noalias() = xm * wqm.transpose();
            MapRM<T>(kk.ptr(), l_tokens, channels).noalias() = cm * wkm.transpose();
            MapRM<T>(vv.ptr(), l_tokens, channels).noalias() = cm * wvm.transpose();
        }

        T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));
        attn = Tensor<T>({heads, m, l_tokens});
        o_cat = Tensor<T>({m, channels});
        for (int h = 0; h < heads; h++) {
            CMapRM<T> qm(q.ptr(), m, channels);
            CMapRM<T> km(kk.ptr(), l_tokens, channels);
            CMapRM<T> vm(vv.ptr(), l_tokens, channels);
            MapRM<T> am(attn.ptr() + static_cast<size_t>(h) * m * l_tokens, m, l_tokens);
            am.noalias() = qm.middleCols(h * head_dim, head_dim) *
                           km.middleCols(h * head_dim, head_dim).transpose() * scale;
            // row softmax over tokens
            for (int i = 0; i < m; i++) {
                T* row = attn.ptr() + (static_cast<size_t>(h) * m + i) * l_tokens;
                T mx = row[0];
                for (int j = 1; j < l_tokens; j++) mx = std::max(mx, row[j]);
                double sum = 0.0;
                for (int j = 0; j < l_tokens; j++) {
                    row[j] = std::exp(row[j] - mx);
                    sum += row[j];
                }
                T inv = static_cast<T>(1.0 / sum);
                for (int j = 0; j < l_tokens; j++) row[j] *= inv;
            }
            MapRM<T> om(o_cat.ptr(), m, channels);
            CMapRM<T> am2(attn.ptr() + static_cast<size_t>(h) * m * l_tokens, m, l_tokens);
            om.middleCols(h * head_dim, head_dim).noalias() =
                am2 * vm.middleCols(h * head_dim, head_dim);
        }

        if (rec) {
            *rec = Tensor<T>({l_tokens, hh, ww});
            T inv_h = static_cast<T>(1.0 / heads);
            for (int n = 0; n < l_tokens; n++) {
                T* dst = rec->ptr() + static_cast<size_t>(n) * m;
                for (int i = 0; i < m; i++) {
                    T s = 0;
                    for (int h = 0; h < heads; h++)
                        s += attn[(static_cast<size_t>(h) * m + i) * l_tokens + n];
                    dst[i] = s * inv_h;
                }
            }
        }

        Tensor<T> out = x;  // residual
        {
            MatRM<T> y(m, channels);
            CMapRM<T> om(o_cat.ptr(), m, channels);
            CMapRM<T> wom(wo.ptr(), channels, channels);
            y.noalias() = om * wom.transpose();
            T* op = out.ptr();
            for (int c = 0; c < channels; c++)
                for (int i = 0; i < m; i++) op[static_cast<size_t>(c) * m + i] += y(i, c);
        }
        return out;
    }

    // dout: [C,H,W]; d_rec: optional gradient wrt recorded head-averaged
    // maps, [L, H, W].
    Tensor<T> backward(const Tensor<T>& dout, const Tensor<T>* d_rec) {
        int m = hh * ww;
        MatRM<T> dy(m, channels);
        {
            CMapRM<T> src(dout.ptr(), channels, m);
            dy = src.transpose();
        }
        CMapRM<T> om(o_cat.ptr(), m, channels);
        MapRM<T> gwom(gwo.ptr(), channels, channels);
        gwom.noalias() += dy.transpose() * om;
        MatRM<T> dO(m, channels);
        CMapRM<T> wom(wo.ptr(), channels, channels);
        dO.noalias() = dy * wom;

        T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));
        T inv_heads = static_cast<T>(1.0 / heads);
        MatRM<T> dQ = MatRM<T>::Zero(m, channels);
        MatRM<T> dK = MatRM<T>::Zero(l_tokens, channels);
        MatRM<T> dV = MatRM<T>::Zero(l_tokens, channels);
        CMapRM<T> vm(vv.ptr(), l_tokens, channels);
        CMapRM<T> qm(q.ptr(), m, channels);
        CMapRM<T> km(kk.ptr(), l_tokens, channels);
        MatRM<T> dA(m, l_tokens);
        for (int h = 0; h < heads; h++) {
            CMapRM<T> am(attn.ptr() + static_cast<size_t>(h) * m * l_tokens, m, l_tokens);
            dA.noalias() = dO.middleCols(h * head_dim, head_dim) *
                           vm.middleCols(h * head_dim, head_dim).transpose();
            if (d_rec) {
                for (int i = 0; i < m; i++)
                    for (int n = 0; n < l_tokens; n++)
                        dA(i, n) += d_rec->data[static_cast<size_t>(n) * m + i] * inv_heads;
            }
            dV.middleCols(h * head_dim, head_dim).noalias() +=
                am.transpose() * dO.middleCols(h * head_dim, head_dim);
            // softmax backward, in place on dA
            for (int i = 0; i < m; i++) {
                double dot = 0.0;
                for (int n = 0; n < l_tokens; n++) dot += static_cast<double>(dA(i, n)) * am(i, n);
                for (int n = 0; n < l_tokens; n++)
                    dA(i, n) = static_cast<T>((static_cast<double>(dA(i, n)) - dot) * am(i, n));
            }
            dQ.middleCols(h * head_dim, head_dim).noalias() +=
                dA * km.middleCols(h * head_dim, head_dim) * scale;
            dK.middleCols(h * head_dim, head_dim).noalias() +=
                dA.transpose() * qm.middleCols(h * head_dim, head_dim) * scale;
        }

        CMapRM<T> xm(x_mc.ptr(), m, channels);
        CMapRM<T> cm(cond_cache.ptr(), l_tokens, text_dim);
        MapRM<T>(gwq.ptr(), channels, channels).noalias() += dQ.transpose() * xm;
        MapRM<T>(gwk.ptr(), channels, text_dim).noalias() += dK.transpose() * cm;
        MapRM<T>(gwv.ptr(), channels, text_dim).noalias() += dV.transpose() * cm;
        // conditioning comes from the frozen text encoder: no dcond needed

        MatRM<T> dXmc(m, channels);
        CMapRM<T> wqm(wq.ptr(), channels, channels);
        dXmc.noalias() = dQ * wqm;
        Tensor<T> dxn({channels, hh, ww});
        {
            MapRM<T> dst(dxn.ptr(), channels, m);
            dst = dXmc.transpose();
        }
        Tensor<T> dx = gn.backward(dxn);
        for (size_t i = 0; i < dx.numel(); i++) dx[i] += dout[i];  // residual
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        gn.visit(prefix + ".gn", fn);
        fn(prefix + ".wq", wq, gwq);
        fn(prefix + ".wk", wk, gwk);
        fn(prefix + ".wv", wv, gwv);
        fn(prefix + ".wo", wo, gwo);
    }
};

// ---------------------------------------------------------- up/downsample --

template <typename T>
inline Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor<T> y({c, h * 2, w * 2});
    for (int ci = 0; ci < c; ci++) {
        const T* src = x.ptr() + static_cast<size_t>(ci) * h * w;
        T* dst = y.ptr() + static_cast<size_t>(ci) * h * w * 4;
        for (int i = 0; i < h; i++)
            for (int j = 0; j < w; j++) {
                T v = src[i * w + j];
                dst[(2 * i) * 2 * w + 2 * j] = v;
                dst[(2 * i) * 2 * w + 2 * j + 1] = v;
                dst[(2 * i + 1) * 2 * w + 2 * j] = v;
                dst[(2 * i + 1) * 2 * w + 2 * j + 1] = v;
            }
    }
    return y;
}

template <typename T>
inline Tensor<T> upsample_nearest2x_backward(const Tensor<T>& dy) {
    int c = dy.dim(0), h2 = dy.dim(1), w2 = dy.dim(2);
    int h = h2 / 2, w = w2 / 2;
    Tensor<T> dx({c, h, w});
    for (int ci = 0; ci < c; ci++) {
        const T* src = dy.ptr() + static_cast<size_t>(ci) * h2 * w2;
        T* dst = dx.ptr() + static_cast<size_t>(ci) * h * w;
        for (int i = 0; i < h; i++)
            for (int j = 0; j < w; j++)
                dst[i * w + j] = src[(2 * i) * w2 + 2 * j] + src[(2 * i) * w2 + 2 * j + 1] +
                                 src[(2 * i + 1) * w2 + 2 * j] + src[(2 * i + 1) * w2 + 2 * j + 1];
    }
    return dx;
}

template <typename T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<long>(a.numel()));
    return y;
}

template <typename T>
inline void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db, int ca) {
    int h = dy.dim(1), w = dy.dim(2);
    da = Tensor<T>({ca, h, w});
    db = Tensor<T>({dy.dim(0) - ca, h, w});
    std::copy(dy.data.begin(), dy.data.begin() + static_cast<long>(da.numel()), da.data.begin());
    std::copy(dy.data.begin() + static_cast<long>(da.numel()), dy.data.end(), db.data.begin());
}

}  // namespace diffscrub
