#pragma once

// Numeric kernels behind every network in the project. Each output element
// is computed by one serial chain of FP operations in a fixed order, so the
// parallel schedule never changes results; tests assert bit-equality between
// Backend::Serial and Backend::Parallel, and between the im2col/GEMM path
// and the naive reference convolutions kept below.

#include <cmath>

#include "geo/nn/tensor.hpp"
#include "geo/parallel.hpp"

namespace geo::nn {

// --- im2col (3x3 pad 1 and 1x1 are the only kernels the nets use, but the
// --- routines are written for a general odd k with same padding) -----------

// col layout [K, HW] with K = c*k*k, row index (ci*k + ky)*k + kx.
template <class S>
void im2col(const S* x, int c, int h, int w, int k, S* col) {
    const int pad = k / 2;
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    parallel_for(static_cast<std::int64_t>(c) * k * k, [&](std::int64_t row) {
        const int kx = static_cast<int>(row % k);
        const int ky = static_cast<int>((row / k) % k);
        const int ci = static_cast<int>(row / (k * k));
        S* dst = col + row * hw;
        const S* src = x + static_cast<std::int64_t>(ci) * hw;
        for (int oy = 0; oy < h; ++oy) {
            const int sy = oy + ky - pad;
            for (int ox = 0; ox < w; ++ox) {
                const int sx = ox + kx - pad;
                dst[static_cast<std::int64_t>(oy) * w + ox] =
                    (sy >= 0 && sy < h && sx >= 0 && sx < w)
                        ? src[static_cast<std::int64_t>(sy) * w + sx]
                        : S(0);
            }
        }
    });
}

// col_t layout [HW, K]; used by the backward passes.
template <class S>
void im2col_t(const S* x, int c, int h, int w, int k, S* col_t) {
    const int pad = k / 2;
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    const int kk = k * k;
    parallel_for(hw, [&](std::int64_t pos) {
        const int oy = static_cast<int>(pos / w);
        const int ox = static_cast<int>(pos % w);
        S* dst = col_t + pos * c * kk;
        for (int ci = 0; ci < c; ++ci) {
            const S* src = x + static_cast<std::int64_t>(ci) * hw;
            for (int ky = 0; ky < k; ++ky) {
                const int sy = oy + ky - pad;
                for (int kx = 0; kx < k; ++kx) {
                    const int sx = ox + kx - pad;
                    *dst++ = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                 ? src[static_cast<std::int64_t>(sy) * w + sx]
                                 : S(0);
                }
            }
        }
    });
}

// out[oc, hw] = sum_k wgt[oc, k] * col[k, hw] + bias[oc]; k ascends so the
// accumulation order matches the naive convolution exactly.
template <class S>
void conv_gemm_fwd(const S* wgt, const S* bias, const S* col, int oc, int kdim,
                   std::int64_t hw, S* out) {
    parallel_for(oc, [&](std::int64_t o) {
        S* dst = out + o * hw;
        const S b = bias ? bias[o] : S(0);
        for (std::int64_t i = 0; i < hw; ++i) dst[i] = b;
        const S* wrow = wgt + o * kdim;
        for (int kk = 0; kk < kdim; ++kk) {
            const S wv = wrow[kk];
            const S* src = col + static_cast<std::int64_t>(kk) * hw;
            for (std::int64_t i = 0; i < hw; ++i) dst[i] += wv * src[i];
        }
    });
}

// dcol_t[hw, k] = sum_oc wgt[oc, k] * dy[oc, hw].
template <class S>
void conv_gemm_dcol(const S* wgt, const S* dy, int oc, int kdim, std::int64_t hw, S* dcol_t) {
    parallel_for(hw, [&](std::int64_t pos) {
        S* dst = dcol_t + pos * kdim;
        for (int kk = 0; kk < kdim; ++kk) dst[kk] = S(0);
        for (int o = 0; o < oc; ++o) {
            const S g = dy[static_cast<std::int64_t>(o) * hw + pos];
            const S* wrow = wgt + static_cast<std::int64_t>(o) * kdim;
            for (int kk = 0; kk < kdim; ++kk) dst[kk] += g * wrow[kk];
        }
    });
}

// gw[oc, k] += sum_hw dy[oc, hw] * col_t[hw, k]; gb[oc] += sum_hw dy[oc, hw].
template <class S>
void conv_gemm_wgrad(const S* dy, const S* col_t, int oc, int kdim, std::int64_t hw,
                     S* gw, S* gb) {
    parallel_for(oc, [&](std::int64_t o) {
        S* grow = gw + o * kdim;
        const S* dyrow = dy + o * hw;
        S acc_b = S(0);
        for (std::int64_t pos = 0; pos < hw; ++pos) {
            const S g = dyrow[pos];
            acc_b += g;
            const S* crow = col_t + pos * kdim;
            for (int kk = 0; kk < kdim; ++kk) grow[kk] += g * crow[kk];
        }
        if (gb) gb[o] += acc_b;
    });
}

// Gather form of col2im for stride-1 same-padding: dx[ci, y, x] accumulates
// the dcol_t entries of every output position whose window covers (y, x).
template <class S>
void col2im_gather(const S* dcol_t, int c, int h, int w, int k, S* dx) {
    const int pad = k / 2;
    const int kk = k * k;
    parallel_for(static_cast<std::int64_t>(c) * h * w, [&](std::int64_t idx) {
        const int x = static_cast<int>(idx % w);
        const int y = static_cast<int>((idx / w) % h);
        const int ci = static_cast<int>(idx / (static_cast<std::int64_t>(h) * w));
        S acc = S(0);
        for (int ky = 0; ky < k; ++ky) {
            const int oy = y - ky + pad;
            if (oy < 0 || oy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
                const int ox = x - kx + pad;
                if (ox < 0 || ox >= w) continue;
                const std::int64_t pos = static_cast<std::int64_t>(oy) * w + ox;
                acc += dcol_t[pos * c * kk + (static_cast<std::int64_t>(ci) * k + ky) * k + kx];
            }
        }
        dx[idx] = acc;
    });
}

// Naive direct convolution, the serial reference for the GEMM path.
template <class S>
void conv_naive(const S* x, const S* wgt, const S* bias, int c, int h, int w, int k,
                int oc, S* out) {
    const int pad = k / 2;
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int o = 0; o < oc; ++o)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < w; ++ox) {
                S acc = bias ? bias[o] : S(0);
                for (int ci = 0; ci < c; ++ci)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int sy = oy + ky - pad, sx = ox + kx - pad;
                            const S v = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                            ? x[ci * hw + static_cast<std::int64_t>(sy) * w + sx]
                                            : S(0);
                            acc += wgt[((static_cast<std::int64_t>(o) * c + ci) * k + ky) * k + kx] * v;
                        }
                out[o * hw + static_cast<std::int64_t>(oy) * w + ox] = acc;
            }
}

// --- pooling / upsampling ---------------------------------------------------

template <class S>
Tensor<S> avgpool2_fwd(const Tensor<S>& x) {
    Tensor<S> y(x.n, x.c, x.h / 2, x.w / 2);
    parallel_for(y.size(), [&](std::int64_t i) {
        const int xw = static_cast<int>(i % y.w);
        const int xh = static_cast<int>((i / y.w) % y.h);
        const int ci = static_cast<int>((i / (static_cast<std::int64_t>(y.w) * y.h)) % y.c);
        const int ni = static_cast<int>(i / (static_cast<std::int64_t>(y.w) * y.h * y.c));
        const S* src = x.ptr(ni, ci);
        const S a = src[static_cast<std::int64_t>(2 * xh) * x.w + 2 * xw];
        const S b = src[static_cast<std::int64_t>(2 * xh) * x.w + 2 * xw + 1];
        const S c2 = src[static_cast<std::int64_t>(2 * xh + 1) * x.w + 2 * xw];
        const S d = src[static_cast<std::int64_t>(2 * xh + 1) * x.w + 2 * xw + 1];
        y.data[static_cast<std::size_t>(i)] = (a + b + c2 + d) * S(0.25);
    });
    return y;
}

template <class S>
Tensor<S> avgpool2_bwd(const Tensor<S>& dy, int in_h, int in_w) {
    Tensor<S> dx(dy.n, dy.c, in_h, in_w);
    parallel_for(dx.size(), [&](std::int64_t i) {
        const int xw = static_cast<int>(i % in_w);
        const int xh = static_cast<int>((i / in_w) % in_h);
        const std::int64_t nc = i / (static_cast<std::int64_t>(in_w) * in_h);
        dx.data[static_cast<std::size_t>(i)] =
            dy.data[static_cast<std::size_t>((nc * dy.h + xh / 2) * dy.w + xw / 2)] * S(0.25);
    });
    return dx;
}

template <class S>
Tensor<S> upsample2_fwd(const Tensor<S>& x) {
    Tensor<S> y(x.n, x.c, x.h * 2, x.w * 2);
    parallel_for(y.size(), [&](std::int64_t i) {
        const int xw = static_cast<int>(i % y.w);
        const int xh = static_cast<int>((i / y.w) % y.h);
        const std::int64_t nc = i / (static_cast<std::int64_t>(y.w) * y.h);
        y.data[static_cast<std::size_t>(i)] =
            x.data[static_cast<std::size_t>((nc * x.h + xh / 2) * x.w + xw / 2)];
    });
    return y;
}

template <class S>
Tensor<S> upsample2_bwd(const Tensor<S>& dy) {
    Tensor<S> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    parallel_for(dx.size(), [&](std::int64_t i) {
        const int xw = static_cast<int>(i % dx.w);
        const int xh = static_cast<int>((i / dx.w) % dx.h);
        const std::int64_t nc = i / (static_cast<std::int64_t>(dx.w) * dx.h);
        const S* src = dy.data.data() + (nc * dy.h) * dy.w;
        dx.data[static_cast<std::size_t>(i)] =
            src[static_cast<std::int64_t>(2 * xh) * dy.w + 2 * xw] +
            src[static_cast<std::int64_t>(2 * xh) * dy.w + 2 * xw + 1] +
            src[static_cast<std::int64_t>(2 * xh + 1) * dy.w + 2 * xw] +
            src[static_cast<std::int64_t>(2 * xh + 1) * dy.w + 2 * xw + 1];
    });
    return dx;
}

// --- batched affine grid sampling ------------------------------------------
// theta maps normalized output coordinates to normalized source coordinates
// (6 values per sample, row-major 2x3). Pixel centers span [-1, 1].

template <class S>
inline void grid_source(const S* th, int h, int w, int oy, int ox, S& fx, S& fy) {
    const S xn = w > 1 ? S(2) * ox / S(w - 1) - S(1) : S(0);
    const S yn = h > 1 ? S(2) * oy / S(h - 1) - S(1) : S(0);
    const S xs = th[0] * xn + th[1] * yn + th[2];
    const S ys = th[3] * xn + th[4] * yn + th[5];
    fx = (xs + S(1)) * S(0.5) * S(w - 1);
    fy = (ys + S(1)) * S(0.5) * S(h - 1);
}

template <class S>
void warp_bilinear_fwd(const Tensor<S>& x, const Tensor<S>& theta, S fill, Tensor<S>& y) {
    y = Tensor<S>(x.n, x.c, x.h, x.w);
    parallel_for(static_cast<std::int64_t>(x.n) * x.h * x.w, [&](std::int64_t i) {
        const int ox = static_cast<int>(i % x.w);
        const int oy = static_cast<int>((i / x.w) % x.h);
        const int ni = static_cast<int>(i / (static_cast<std::int64_t>(x.w) * x.h));
        const S* th = theta.data.data() + static_cast<std::size_t>(ni) * 6;
        S fx, fy;
        grid_source(th, x.h, x.w, oy, ox, fx, fy);
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const S wx = fx - x0, wy = fy - y0;
        for (int ci = 0; ci < x.c; ++ci) {
            const S* src = x.ptr(ni, ci);
            S acc = S(0);
            for (int dy2 = 0; dy2 <= 1; ++dy2)
                for (int dx2 = 0; dx2 <= 1; ++dx2) {
                    const int sy = y0 + dy2, sx = x0 + dx2;
                    const S wgt = (dx2 ? wx : S(1) - wx) * (dy2 ? wy : S(1) - wy);
                    const S v = (sx >= 0 && sx < x.w && sy >= 0 && sy < x.h)
                                    ? src[static_cast<std::int64_t>(sy) * x.w + sx]
                                    : fill;
                    acc += wgt * v;
                }
            y.at(ni, ci, oy, ox) = acc;
        }
    });
}

// Gradient with respect to theta; one serial pass per sample.
template <class S>
void warp_bilinear_bwd_theta(const Tensor<S>& x, const Tensor<S>& theta, S fill,
                             const Tensor<S>& dy, Tensor<S>& dtheta) {
    dtheta = Tensor<S>::vec(x.n, 6);
    parallel_for(x.n, [&](std::int64_t ni) {
        const S* th = theta.data.data() + static_cast<std::size_t>(ni) * 6;
        S* dth = dtheta.data.data() + static_cast<std::size_t>(ni) * 6;
        for (int oy = 0; oy < x.h; ++oy)
            for (int ox = 0; ox < x.w; ++ox) {
                S fx, fy;
                grid_source(th, x.h, x.w, oy, ox, fx, fy);
                const int x0 = static_cast<int>(std::floor(fx));
                const int y0 = static_cast<int>(std::floor(fy));
                const S wx = fx - x0, wy = fy - y0;
                S dfx = S(0), dfy = S(0);
                for (int ci = 0; ci < x.c; ++ci) {
                    const S g = dy.at(static_cast<int>(ni), ci, oy, ox);
                    if (g == S(0)) continue;
                    const S* src = x.ptr(static_cast<int>(ni), ci);
                    S v[2][2];
                    for (int dy2 = 0; dy2 <= 1; ++dy2)
                        for (int dx2 = 0; dx2 <= 1; ++dx2) {
                            const int sy = y0 + dy2, sx = x0 + dx2;
                            v[dy2][dx2] = (sx >= 0 && sx < x.w && sy >= 0 && sy < x.h)
                                              ? src[static_cast<std::int64_t>(sy) * x.w + sx]
                                              : fill;
                        }
                    dfx += g * ((S(1) - wy) * (v[0][1] - v[0][0]) + wy * (v[1][1] - v[1][0]));
                    dfy += g * ((S(1) - wx) * (v[1][0] - v[0][0]) + wx * (v[1][1] - v[0][1]));
                }
                const S xn = x.w > 1 ? S(2) * ox / S(x.w - 1) - S(1) : S(0);
                const S yn = x.h > 1 ? S(2) * oy / S(x.h - 1) - S(1) : S(0);
                const S sx_scale = S(0.5) * S(x.w - 1);
                const S sy_scale = S(0.5) * S(x.h - 1);
                dth[0] += dfx * sx_scale * xn;
                dth[1] += dfx * sx_scale * yn;
                dth[2] += dfx * sx_scale;
                dth[3] += dfy * sy_scale * xn;
                dth[4] += dfy * sy_scale * yn;
                dth[5] += dfy * sy_scale;
            }
    });
}

// --- element-wise ------------------------------------------------------------

template <class S>
void relu_fwd(Tensor<S>& x) {
    parallel_for(x.size(), [&](std::int64_t i) {
        if (x.data[static_cast<std::size_t>(i)] < S(0)) x.data[static_cast<std::size_t>(i)] = S(0);
    });
}

template <class S>
void lrelu_fwd(Tensor<S>& x, S slope) {
    parallel_for(x.size(), [&](std::int64_t i) {
        S& v = x.data[static_cast<std::size_t>(i)];
        if (v < S(0)) v *= slope;
    });
}

// Adam update, bias-corrected.
template <class S>
void adam_step(std::vector<S>& w, const std::vector<S>& g, std::vector<S>& m,
               std::vector<S>& v, S lr, S beta1, S beta2, S eps, int t) {
    const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), t));
    const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), t));
    parallel_for(static_cast<std::int64_t>(w.size()), [&](std::int64_t i) {
        const auto idx = static_cast<std::size_t>(i);
        m[idx] = beta1 * m[idx] + (S(1) - beta1) * g[idx];
        v[idx] = beta2 * v[idx] + (S(1) - beta2) * g[idx] * g[idx];
        const S mh = m[idx] / bc1;
        const S vh = v[idx] / bc2;
        w[idx] -= lr * mh / (static_cast<S>(std::sqrt(static_cast<double>(vh))) + eps);
    });
}

}  // namespace geo::nn
