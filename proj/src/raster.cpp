#include "geo/raster.hpp"

#include <algorithm>
#include <cmath>

#include "geo/parallel.hpp"

namespace geo {

int score_class_index(const GleasonScore& s) {
    const int lo = std::min(s.primary, s.secondary) - 3;
    const int hi = std::max(s.primary, s.secondary) - 3;
    // Unordered pairs over {0,1,2}: (0,0)(0,1)(0,2)(1,1)(1,2)(2,2).
    static const int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return table[lo][hi];
}

GleasonScore score_class_from_index(int idx) {
    static const int pairs[kNumScoreClasses][2] = {{3, 3}, {3, 4}, {3, 5}, {4, 4}, {4, 5}, {5, 5}};
    if (idx < 0 || idx >= kNumScoreClasses)
        throw ValidationError("score class index outside {0..5}");
    return GleasonScore(pairs[idx][0], pairs[idx][1]);
}

AffineParams AffineParams::inverse() const {
    validate();
    const double a = m[0], b = m[1], tx = m[2];
    const double c = m[3], d = m[4], ty = m[5];
    const double det = a * d - b * c;
    AffineParams inv;
    inv.m = {d / det, -b / det, (b * ty - d * tx) / det,
             -c / det, a / det, (c * tx - a * ty) / det};
    return inv;
}

namespace {

void check_divisible(int h, int w, int n) {
    if (n <= 0 || h % n != 0 || w % n != 0)
        throw ValidationError("tile_blocks: block side does not divide raster dimensions");
}

}  // namespace

BlockGrid tile_blocks(const LabelMask& mask, int n) {
    check_divisible(mask.h, mask.w, n);
    BlockGrid g;
    g.n = n;
    g.rows = mask.h / n;
    g.cols = mask.w / n;
    g.label_blocks.resize(static_cast<std::size_t>(g.count()));
    for (int br = 0; br < g.rows; ++br)
        for (int bc = 0; bc < g.cols; ++bc) {
            auto& blk = g.label_blocks[static_cast<std::size_t>(br) * g.cols + bc];
            blk.resize(static_cast<std::size_t>(n) * n);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    blk[static_cast<std::size_t>(y) * n + x] = mask.at(br * n + y, bc * n + x);
        }
    return g;
}

BlockGrid tile_blocks(const ImagePatch& img, int n) {
    check_divisible(img.h, img.w, n);
    BlockGrid g;
    g.n = n;
    g.rows = img.h / n;
    g.cols = img.w / n;
    g.channels = img.c;
    g.image_blocks.resize(static_cast<std::size_t>(g.count()));
    for (int br = 0; br < g.rows; ++br)
        for (int bc = 0; bc < g.cols; ++bc) {
            auto& blk = g.image_blocks[static_cast<std::size_t>(br) * g.cols + bc];
            blk.resize(static_cast<std::size_t>(n) * n * img.c);
            std::size_t k = 0;
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    for (int ch = 0; ch < img.c; ++ch)
                        blk[k++] = img.at(br * n + y, bc * n + x, ch);
        }
    return g;
}

LabelMask untile_mask(const BlockGrid& grid) {
    LabelMask out(grid.rows * grid.n, grid.cols * grid.n);
    for (int br = 0; br < grid.rows; ++br)
        for (int bc = 0; bc < grid.cols; ++bc) {
            const auto& blk = grid.label_blocks[static_cast<std::size_t>(br) * grid.cols + bc];
            for (int y = 0; y < grid.n; ++y)
                for (int x = 0; x < grid.n; ++x)
                    out.at(br * grid.n + y, bc * grid.n + x) =
                        blk[static_cast<std::size_t>(y) * grid.n + x];
        }
    return out;
}

LabelMask untile_blocks(const BlockGrid& grid, const std::vector<std::uint8_t>& per_block_labels) {
    if (static_cast<int>(per_block_labels.size()) != grid.count())
        throw ValidationError("untile_blocks: one label per block required");
    for (auto v : per_block_labels)
        if (!is_valid_label(v)) throw ValidationError("untile_blocks: label outside {1..5}");
    LabelMask out(grid.rows * grid.n, grid.cols * grid.n);
    for (int b = 0; b < grid.count(); ++b) {
        const int br = b / grid.cols, bc = b % grid.cols;
        for (int y = 0; y < grid.n; ++y)
            for (int x = 0; x < grid.n; ++x)
                out.at(br * grid.n + y, bc * grid.n + x) = per_block_labels[static_cast<std::size_t>(b)];
    }
    return out;
}

namespace {

// Index of the source pixel for output pixel (y, x) under the inverse map,
// on the normalized grid with pixel centers at +-1. Returns false when the
// sample falls outside the raster.
inline bool source_index(const AffineParams& inv, int y, int x, int h, int w, int& sy, int& sx) {
    const double xn = w > 1 ? 2.0 * x / (w - 1) - 1.0 : 0.0;
    const double yn = h > 1 ? 2.0 * y / (h - 1) - 1.0 : 0.0;
    const double xs = inv.m[0] * xn + inv.m[1] * yn + inv.m[2];
    const double ys = inv.m[3] * xn + inv.m[4] * yn + inv.m[5];
    const double fx = (xs + 1.0) * 0.5 * (w - 1);
    const double fy = (ys + 1.0) * 0.5 * (h - 1);
    sx = static_cast<int>(std::floor(fx + 0.5));
    sy = static_cast<int>(std::floor(fy + 0.5));
    return sx >= 0 && sx < w && sy >= 0 && sy < h;
}

}  // namespace

LabelMask apply_affine(const LabelMask& mask, const AffineParams& a, std::uint8_t fill) {
    const AffineParams inv = a.inverse();
    LabelMask out(mask.h, mask.w, fill);
    parallel_for(mask.h, [&](std::int64_t y) {
        for (int x = 0; x < mask.w; ++x) {
            int sy, sx;
            if (source_index(inv, static_cast<int>(y), x, mask.h, mask.w, sy, sx))
                out.at(static_cast<int>(y), x) = mask.at(sy, sx);
        }
    });
    out.validate();
    return out;
}

ImagePatch apply_affine(const ImagePatch& img, const AffineParams& a, Interp interp, float fill) {
    const AffineParams inv = a.inverse();
    ImagePatch out(img.h, img.w, img.c, fill);
    parallel_for(img.h, [&](std::int64_t yy) {
        const int y = static_cast<int>(yy);
        for (int x = 0; x < img.w; ++x) {
            const double xn = img.w > 1 ? 2.0 * x / (img.w - 1) - 1.0 : 0.0;
            const double yn = img.h > 1 ? 2.0 * y / (img.h - 1) - 1.0 : 0.0;
            const double xs = inv.m[0] * xn + inv.m[1] * yn + inv.m[2];
            const double ys = inv.m[3] * xn + inv.m[4] * yn + inv.m[5];
            const double fx = (xs + 1.0) * 0.5 * (img.w - 1);
            const double fy = (ys + 1.0) * 0.5 * (img.h - 1);
            if (interp == Interp::Nearest) {
                const int sx = static_cast<int>(std::floor(fx + 0.5));
                const int sy = static_cast<int>(std::floor(fy + 0.5));
                if (sx >= 0 && sx < img.w && sy >= 0 && sy < img.h)
                    for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
            } else {
                const int x0 = static_cast<int>(std::floor(fx));
                const int y0 = static_cast<int>(std::floor(fy));
                const double wx = fx - x0, wy = fy - y0;
                for (int ch = 0; ch < img.c; ++ch) {
                    double acc = 0.0;
                    for (int dy = 0; dy <= 1; ++dy)
                        for (int dx = 0; dx <= 1; ++dx) {
                            const int sy = y0 + dy, sx = x0 + dx;
                            const double wgt = (dx ? wx : 1.0 - wx) * (dy ? wy : 1.0 - wy);
                            const double v = (sx >= 0 && sx < img.w && sy >= 0 && sy < img.h)
                                                 ? img.at(sy, sx, ch)
                                                 : fill;
                            acc += wgt * v;
                        }
                    out.at(y, x, ch) = static_cast<float>(acc);
                }
            }
        }
    });
    return out;
}

LabelMask majority_vote(const std::vector<LabelMask>& masks) {
    if (masks.empty()) throw ValidationError("majority_vote: at least one mask required");
    const int h = masks[0].h, w = masks[0].w;
    for (const auto& m : masks)
        if (m.h != h || m.w != w) throw ValidationError("majority_vote: shape mismatch");
    LabelMask out(h, w);
    parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t i) {
        int counts[kLabelMax + 1] = {};
        for (const auto& m : masks) ++counts[m.labels[static_cast<std::size_t>(i)]];
        int best = kLabelMin;
        for (int v = kLabelMin + 1; v <= kLabelMax; ++v)
            if (counts[v] > counts[best]) best = v;  // ties keep the smaller id
        out.labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
    });
    return out;
}

std::vector<std::uint8_t> threshold_background(const ImagePatch& img, float tau) {
    std::vector<std::uint8_t> bg(static_cast<std::size_t>(img.h) * img.w, 0);
    parallel_for(static_cast<std::int64_t>(img.h) * img.w, [&](std::int64_t i) {
        const int y = static_cast<int>(i) / img.w, x = static_cast<int>(i) % img.w;
        bg[static_cast<std::size_t>(i)] = img.mean_intensity(y, x) > tau ? 1 : 0;
    });
    return bg;
}

std::array<std::int64_t, kLabelMax + 1> label_histogram(const LabelMask& mask) {
    std::array<std::int64_t, kLabelMax + 1> h{};
    for (auto v : mask.labels) ++h[v];
    return h;
}

}  // namespace geo
