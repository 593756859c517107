#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "geo/common.hpp"

namespace geo {

// Label ids: 1 = background, 2 = benign, 3/4/5 = Gleason grades 3-5.
constexpr std::uint8_t kLabelBackground = 1;
constexpr std::uint8_t kLabelBenign = 2;
constexpr std::uint8_t kLabelMin = 1;
constexpr std::uint8_t kLabelMax = 5;
constexpr int kNumLabels = 5;

inline bool is_valid_label(int v) { return v >= kLabelMin && v <= kLabelMax; }
inline bool is_grade(int v) { return v >= 3 && v <= kLabelMax; }

// RGB intensity raster in [0,1], stored channel-last (h, w, c).
struct ImagePatch {
    int h = 0, w = 0, c = 3;
    std::vector<float> pixels;

    ImagePatch() = default;
    ImagePatch(int h_, int w_, int c_ = 3, float fill = 0.f)
        : h(h_), w(w_), c(c_), pixels(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    float& at(int y, int x, int ch) { return pixels[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return pixels[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
    float mean_intensity(int y, int x) const {
        float s = 0.f;
        for (int ch = 0; ch < c; ++ch) s += at(y, x, ch);
        return s / static_cast<float>(c);
    }
};

// Integer label raster over {1..5}.
struct LabelMask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> labels;

    LabelMask() = default;
    LabelMask(int h_, int w_, std::uint8_t fill = kLabelBackground)
        : h(h_), w(w_), labels(static_cast<std::size_t>(h_) * w_, fill) {}

    std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }

    bool operator==(const LabelMask& o) const { return h == o.h && w == o.w && labels == o.labels; }

    void validate() const {
        for (auto v : labels)
            if (!is_valid_label(v)) throw ValidationError("LabelMask: label outside {1..5}");
    }
};

// Bag label: the two most prominent grades; primary == secondary when a
// single grade dominates (that grade is counted twice).
struct GleasonScore {
    int primary = 3;
    int secondary = 3;

    GleasonScore() = default;
    GleasonScore(int p, int s) : primary(p), secondary(s) {
        if (!is_grade(p) || !is_grade(s))
            throw ValidationError("GleasonScore: grades must be in {3,4,5}");
    }
    bool operator==(const GleasonScore& o) const {
        return primary == o.primary && secondary == o.secondary;
    }
};

// The six realizable score classes over grades {3,4,5}, identified by the
// unordered grade pair: {3,3},{3,4},{3,5},{4,4},{4,5},{5,5}.
constexpr int kNumScoreClasses = 6;
int score_class_index(const GleasonScore& s);
GleasonScore score_class_from_index(int idx);

// 2x3 affine matrix in normalized coordinates, as the forward map from
// source to target: [x_dst, y_dst]^T = M22 * [x_src, y_src]^T + t.
// apply_affine() inverts it to sample the source raster.
struct AffineParams {
    // Row-major: [a b tx; c d ty].
    std::array<double, 6> m{1, 0, 0, 0, 1, 0};

    static AffineParams identity() { return AffineParams{}; }
    double det2x2() const { return m[0] * m[4] - m[1] * m[3]; }
    AffineParams inverse() const;
    void validate() const {
        for (double v : m)
            if (!std::isfinite(v)) throw GeometryError("AffineParams: non-finite entry");
        if (std::abs(det2x2()) < 1e-12)
            throw GeometryError("AffineParams: singular 2x2 block");
    }
};

// Exact tiling of a raster into n x n blocks, row-major block order.
struct BlockGrid {
    int n = 0;           // block side
    int rows = 0, cols = 0;  // block grid dimensions
    // For label grids: blocks[i] is an n*n label raster. Image grids keep
    // n*n*c floats per block.
    std::vector<std::vector<std::uint8_t>> label_blocks;
    std::vector<std::vector<float>> image_blocks;
    int channels = 0;

    int count() const { return rows * cols; }
};

enum class Interp { Nearest, Bilinear };

// --- core operations -------------------------------------------------------

BlockGrid tile_blocks(const LabelMask& mask, int n);
BlockGrid tile_blocks(const ImagePatch& img, int n);
LabelMask untile_mask(const BlockGrid& grid);  // re-assembles label blocks

// Constant-block mask from one label per block.
LabelMask untile_blocks(const BlockGrid& grid, const std::vector<std::uint8_t>& per_block_labels);

// Warp by the forward affine map A. Masks must use nearest interpolation;
// out-of-domain samples take the fill (background label / white intensity).
// Normalized coordinates: pixel centers span [-1,1] inclusive on each axis,
// i.e. x_j = 2*j/(w-1) - 1, raster center at the origin. Nearest rounds the
// recovered index with floor(v + 0.5).
LabelMask apply_affine(const LabelMask& mask, const AffineParams& a,
                       std::uint8_t fill = kLabelBackground);
ImagePatch apply_affine(const ImagePatch& img, const AffineParams& a, Interp interp,
                        float fill = 1.0f);

// Per-pixel most frequent label; ties broken by the smallest label id.
LabelMask majority_vote(const std::vector<LabelMask>& masks);

// Background detection: mean channel intensity above tau marks background.
constexpr float kBackgroundTau = 0.92f;
std::vector<std::uint8_t> threshold_background(const ImagePatch& img, float tau = kBackgroundTau);

// Pixel counts per label id (index 0 unused).
std::array<std::int64_t, kLabelMax + 1> label_histogram(const LabelMask& mask);

}  // namespace geo
