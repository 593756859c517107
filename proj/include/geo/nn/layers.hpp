#pragma once

#include <cmath>
#include <vector>

#include "geo/nn/kernels.hpp"

namespace geo::nn {

template <class S>
struct Param {
    std::vector<S> w, g, m, v;

    void init(std::size_t n, S val = S(0)) {
        w.assign(n, val);
        g.assign(n, S(0));
        m.assign(n, S(0));
        v.assign(n, S(0));
    }
    void zero_grad() { std::fill(g.begin(), g.end(), S(0)); }
};

template <class S>
class Adam {
public:
    explicit Adam(S lr = S(1e-3)) : lr_(lr) {}

    void step(std::vector<Param<S>*>& params) {
        ++t_;
        for (auto* p : params)
            adam_step(p->w, p->g, p->m, p->v, lr_, S(0.9), S(0.999), S(1e-8), t_);
    }
    void set_lr(S lr) { lr_ = lr; }
    int t() const { return t_; }

private:
    S lr_;
    int t_ = 0;
};

// Same-padding stride-1 convolution with odd kernel size.
template <class S>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_c, int out_c, int k, Rng& rng) : in_c_(in_c), out_c_(out_c), k_(k) {
        weight.init(static_cast<std::size_t>(out_c) * in_c * k * k);
        bias.init(static_cast<std::size_t>(out_c));
        const double std = std::sqrt(2.0 / (in_c * k * k));
        for (auto& v : weight.w) v = static_cast<S>(rng.normal(0.0, std));
    }

    Tensor<S> forward(const Tensor<S>& x, bool keep_cache = true) {
        if (x.c != in_c_) throw ValidationError("Conv2d: channel mismatch");
        if (keep_cache) x_cache_ = x;
        Tensor<S> y(x.n, out_c_, x.h, x.w);
        const int kdim = in_c_ * k_ * k_;
        const std::int64_t hw = x.plane();
        std::vector<S> col(static_cast<std::size_t>(kdim) * hw);
        for (int ni = 0; ni < x.n; ++ni) {
            im2col(x.ptr(ni, 0), in_c_, x.h, x.w, k_, col.data());
            conv_gemm_fwd(weight.w.data(), bias.w.data(), col.data(), out_c_, kdim, hw,
                          y.ptr(ni, 0));
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        const Tensor<S>& x = x_cache_;
        const int kdim = in_c_ * k_ * k_;
        const std::int64_t hw = x.plane();
        Tensor<S> dx(x.n, in_c_, x.h, x.w);
        std::vector<S> col_t(static_cast<std::size_t>(hw) * kdim);
        std::vector<S> dcol_t(static_cast<std::size_t>(hw) * kdim);
        for (int ni = 0; ni < x.n; ++ni) {
            im2col_t(x.ptr(ni, 0), in_c_, x.h, x.w, k_, col_t.data());
            conv_gemm_wgrad(dy.ptr(ni, 0), col_t.data(), out_c_, kdim, hw, weight.g.data(),
                            bias.g.data());
            conv_gemm_dcol(weight.w.data(), dy.ptr(ni, 0), out_c_, kdim, hw, dcol_t.data());
            col2im_gather(dcol_t.data(), in_c_, x.h, x.w, k_, dx.ptr(ni, 0));
        }
        x_cache_ = Tensor<S>();
        return dx;
    }

    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    int out_channels() const { return out_c_; }
    Param<S> weight, bias;

private:
    int in_c_ = 0, out_c_ = 0, k_ = 3;
    Tensor<S> x_cache_;
};

template <class S>
class Dense {
public:
    Dense() = default;
    Dense(int in_f, int out_f, Rng& rng) : in_f_(in_f), out_f_(out_f) {
        weight.init(static_cast<std::size_t>(out_f) * in_f);
        bias.init(static_cast<std::size_t>(out_f));
        const double std = std::sqrt(2.0 / in_f);
        for (auto& v : weight.w) v = static_cast<S>(rng.normal(0.0, std));
    }

    Tensor<S> forward(const Tensor<S>& x, bool keep_cache = true) {
        if (x.c * x.h * x.w != in_f_) throw ValidationError("Dense: feature mismatch");
        if (keep_cache) x_cache_ = x;
        Tensor<S> y = Tensor<S>::vec(x.n, out_f_);
        parallel_for(static_cast<std::int64_t>(x.n) * out_f_, [&](std::int64_t i) {
            const int o = static_cast<int>(i % out_f_);
            const int ni = static_cast<int>(i / out_f_);
            const S* xi = x.data.data() + static_cast<std::size_t>(ni) * in_f_;
            const S* wr = weight.w.data() + static_cast<std::size_t>(o) * in_f_;
            S acc = bias.w[static_cast<std::size_t>(o)];
            for (int j = 0; j < in_f_; ++j) acc += wr[j] * xi[j];
            y.data[static_cast<std::size_t>(i)] = acc;
        });
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        const Tensor<S>& x = x_cache_;
        Tensor<S> dx(x.n, x.c, x.h, x.w);
        parallel_for(out_f_, [&](std::int64_t o) {
            S* gw = weight.g.data() + static_cast<std::size_t>(o) * in_f_;
            S gb = S(0);
            for (int ni = 0; ni < x.n; ++ni) {
                const S g = dy.data[static_cast<std::size_t>(ni) * out_f_ + static_cast<std::size_t>(o)];
                gb += g;
                const S* xi = x.data.data() + static_cast<std::size_t>(ni) * in_f_;
                for (int j = 0; j < in_f_; ++j) gw[j] += g * xi[j];
            }
            bias.g[static_cast<std::size_t>(o)] += gb;
        });
        parallel_for(static_cast<std::int64_t>(x.n) * in_f_, [&](std::int64_t i) {
            const int j = static_cast<int>(i % in_f_);
            const int ni = static_cast<int>(i / in_f_);
            S acc = S(0);
            for (int o = 0; o < out_f_; ++o)
                acc += weight.w[static_cast<std::size_t>(o) * in_f_ + static_cast<std::size_t>(j)] *
                       dy.data[static_cast<std::size_t>(ni) * out_f_ + static_cast<std::size_t>(o)];
            dx.data[static_cast<std::size_t>(i)] = acc;
        });
        x_cache_ = Tensor<S>();
        return dx;
    }

    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    Param<S> weight, bias;

private:
    int in_f_ = 0, out_f_ = 0;
    Tensor<S> x_cache_;
};

// Spatial batch normalization; batch statistics in training, running
// averages at inference so trained models stay deterministic per input.
template <class S>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int c) : c_(c) {
        gamma.init(static_cast<std::size_t>(c), S(1));
        beta.init(static_cast<std::size_t>(c));
        running_mean.assign(static_cast<std::size_t>(c), S(0));
        running_var.assign(static_cast<std::size_t>(c), S(1));
    }

    Tensor<S> forward(const Tensor<S>& x, bool train) {
        Tensor<S> y(x.n, x.c, x.h, x.w);
        const std::int64_t plane = x.plane();
        const std::int64_t cnt = static_cast<std::int64_t>(x.n) * plane;
        if (train) {
            mean_.assign(static_cast<std::size_t>(c_), S(0));
            inv_std_.assign(static_cast<std::size_t>(c_), S(0));
            xhat_ = Tensor<S>(x.n, x.c, x.h, x.w);
            parallel_for(c_, [&](std::int64_t ci) {
                double sum = 0, sum2 = 0;
                for (int ni = 0; ni < x.n; ++ni) {
                    const S* src = x.ptr(ni, static_cast<int>(ci));
                    for (std::int64_t i = 0; i < plane; ++i) {
                        sum += static_cast<double>(src[i]);
                        sum2 += static_cast<double>(src[i]) * static_cast<double>(src[i]);
                    }
                }
                const double mu = sum / static_cast<double>(cnt);
                const double var = std::max(0.0, sum2 / static_cast<double>(cnt) - mu * mu);
                const double istd = 1.0 / std::sqrt(var + 1e-5);
                mean_[static_cast<std::size_t>(ci)] = static_cast<S>(mu);
                inv_std_[static_cast<std::size_t>(ci)] = static_cast<S>(istd);
                running_mean[static_cast<std::size_t>(ci)] =
                    static_cast<S>(0.9 * static_cast<double>(running_mean[static_cast<std::size_t>(ci)]) + 0.1 * mu);
                running_var[static_cast<std::size_t>(ci)] =
                    static_cast<S>(0.9 * static_cast<double>(running_var[static_cast<std::size_t>(ci)]) + 0.1 * var);
                const S g = gamma.w[static_cast<std::size_t>(ci)], b = beta.w[static_cast<std::size_t>(ci)];
                for (int ni = 0; ni < x.n; ++ni) {
                    const S* src = x.ptr(ni, static_cast<int>(ci));
                    S* xh = xhat_.ptr(ni, static_cast<int>(ci));
                    S* dst = y.ptr(ni, static_cast<int>(ci));
                    for (std::int64_t i = 0; i < plane; ++i) {
                        xh[i] = static_cast<S>((static_cast<double>(src[i]) - mu) * istd);
                        dst[i] = g * xh[i] + b;
                    }
                }
            });
        } else {
            parallel_for(c_, [&](std::int64_t ci) {
                const double mu = static_cast<double>(running_mean[static_cast<std::size_t>(ci)]);
                const double istd = 1.0 / std::sqrt(static_cast<double>(running_var[static_cast<std::size_t>(ci)]) + 1e-5);
                const S g = gamma.w[static_cast<std::size_t>(ci)], b = beta.w[static_cast<std::size_t>(ci)];
                for (int ni = 0; ni < x.n; ++ni) {
                    const S* src = x.ptr(ni, static_cast<int>(ci));
                    S* dst = y.ptr(ni, static_cast<int>(ci));
                    for (std::int64_t i = 0; i < plane; ++i)
                        dst[i] = static_cast<S>(g * (static_cast<double>(src[i]) - mu) * istd + b);
                }
            });
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        const std::int64_t plane = dy.plane();
        const std::int64_t cnt = static_cast<std::int64_t>(dy.n) * plane;
        Tensor<S> dx(dy.n, dy.c, dy.h, dy.w);
        parallel_for(c_, [&](std::int64_t ci) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int ni = 0; ni < dy.n; ++ni) {
                const S* g = dy.ptr(ni, static_cast<int>(ci));
                const S* xh = xhat_.ptr(ni, static_cast<int>(ci));
                for (std::int64_t i = 0; i < plane; ++i) {
                    sum_dy += static_cast<double>(g[i]);
                    sum_dy_xhat += static_cast<double>(g[i]) * static_cast<double>(xh[i]);
                }
            }
            gamma.g[static_cast<std::size_t>(ci)] += static_cast<S>(sum_dy_xhat);
            beta.g[static_cast<std::size_t>(ci)] += static_cast<S>(sum_dy);
            const double gm = static_cast<double>(gamma.w[static_cast<std::size_t>(ci)]);
            const double istd = static_cast<double>(inv_std_[static_cast<std::size_t>(ci)]);
            const double inv_cnt = 1.0 / static_cast<double>(cnt);
            for (int ni = 0; ni < dy.n; ++ni) {
                const S* g = dy.ptr(ni, static_cast<int>(ci));
                const S* xh = xhat_.ptr(ni, static_cast<int>(ci));
                S* dst = dx.ptr(ni, static_cast<int>(ci));
                for (std::int64_t i = 0; i < plane; ++i)
                    dst[i] = static_cast<S>(
                        gm * istd *
                        (static_cast<double>(g[i]) - sum_dy * inv_cnt -
                         static_cast<double>(xh[i]) * sum_dy_xhat * inv_cnt));
            }
        });
        xhat_ = Tensor<S>();
        return dx;
    }

    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    Param<S> gamma, beta;
    std::vector<S> running_mean, running_var;

private:
    int c_ = 0;
    std::vector<S> mean_, inv_std_;
    Tensor<S> xhat_;
};

// ReLU with cached activation sign; slope > 0 gives leaky behavior.
template <class S>
class Activation {
public:
    explicit Activation(S slope = S(0)) : slope_(slope) {}

    Tensor<S> forward(const Tensor<S>& x, bool keep_cache = true) {
        Tensor<S> y = x;
        if (slope_ == S(0))
            relu_fwd(y);
        else
            lrelu_fwd(y, slope_);
        if (keep_cache) sign_cache_ = x;
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> dx = dy;
        const Tensor<S>& x = sign_cache_;
        parallel_for(dx.size(), [&](std::int64_t i) {
            if (x.data[static_cast<std::size_t>(i)] < S(0))
                dx.data[static_cast<std::size_t>(i)] *= slope_;
        });
        sign_cache_ = Tensor<S>();
        return dx;
    }

private:
    S slope_;
    Tensor<S> sign_cache_;
};

// --- channel concat helpers ---------------------------------------------------

template <class S>
Tensor<S> concat_channels(const std::vector<const Tensor<S>*>& xs) {
    int c = 0;
    for (auto* x : xs) c += x->c;
    Tensor<S> y(xs[0]->n, c, xs[0]->h, xs[0]->w);
    int off = 0;
    for (auto* x : xs) {
        if (x->n != y.n || x->h != y.h || x->w != y.w)
            throw ValidationError("concat_channels: spatial shape mismatch");
        parallel_for(static_cast<std::int64_t>(x->n) * x->c, [&](std::int64_t i) {
            const int ci = static_cast<int>(i % x->c);
            const int ni = static_cast<int>(i / x->c);
            const S* src = x->ptr(ni, ci);
            S* dst = y.ptr(ni, off + ci);
            for (std::int64_t p = 0; p < x->plane(); ++p) dst[p] = src[p];
        });
        off += x->c;
    }
    return y;
}

template <class S>
std::vector<Tensor<S>> split_channels(const Tensor<S>& dy, const std::vector<int>& sizes) {
    std::vector<Tensor<S>> out;
    int off = 0;
    for (int c : sizes) {
        Tensor<S> d(dy.n, c, dy.h, dy.w);
        parallel_for(static_cast<std::int64_t>(dy.n) * c, [&](std::int64_t i) {
            const int ci = static_cast<int>(i % c);
            const int ni = static_cast<int>(i / c);
            const S* src = dy.ptr(ni, off + ci);
            S* dst = d.ptr(ni, ci);
            for (std::int64_t p = 0; p < dy.plane(); ++p) dst[p] = src[p];
        });
        out.push_back(std::move(d));
        off += c;
    }
    return out;
}

template <class S>
void add_inplace(Tensor<S>& a, const Tensor<S>& b) {
    parallel_for(a.size(), [&](std::int64_t i) {
        a.data[static_cast<std::size_t>(i)] += b.data[static_cast<std::size_t>(i)];
    });
}

// Softmax over the channel dimension at every pixel.
template <class S>
Tensor<S> softmax_channels(const Tensor<S>& logits) {
    Tensor<S> p(logits.n, logits.c, logits.h, logits.w);
    parallel_for(static_cast<std::int64_t>(logits.n) * logits.plane(), [&](std::int64_t i) {
        const std::int64_t pos = i % logits.plane();
        const int ni = static_cast<int>(i / logits.plane());
        S mx = logits.ptr(ni, 0)[pos];
        for (int ci = 1; ci < logits.c; ++ci) mx = std::max(mx, logits.ptr(ni, ci)[pos]);
        S sum = S(0);
        for (int ci = 0; ci < logits.c; ++ci) {
            const S e = static_cast<S>(std::exp(static_cast<double>(logits.ptr(ni, ci)[pos] - mx)));
            p.ptr(ni, ci)[pos] = e;
            sum += e;
        }
        for (int ci = 0; ci < logits.c; ++ci) p.ptr(ni, ci)[pos] /= sum;
    });
    return p;
}

}  // namespace geo::nn
