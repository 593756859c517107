#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "geo/raster.hpp"

namespace geo {

// Per-label texture: Gaussian color around a mean plus sparse dark speckle.
// Mean intensities are spaced >= 0.15 apart so the label classes stay
// separable for the weakly supervised stage.
struct LabelTexture {
    std::array<float, 3> mean{1.f, 1.f, 1.f};
    float sigma = 0.02f;
    float speckle_density = 0.0f;  // per-pixel probability of a dark fleck
};

std::array<LabelTexture, kLabelMax + 1> default_textures();

// Layout of one synthetic tissue sample: 1-3 nested grade regions drawn from
// grade_pool, surrounded by an optional benign ring, on a white background.
struct LayoutSpec {
    std::uint64_t seed = 0;
    int n_grade_regions = 2;           // 1..3 distinct grades
    std::vector<int> grade_pool{3, 4, 5};
    int benign_ring_width = 2;         // 0 disables the benign ring
    int image_size = 64;
    float area_scale = 1.0f;           // scales target region areas; large values cannot fit
    std::array<LabelTexture, kLabelMax + 1> textures = default_textures();

    void validate() const;
};

struct TissueSample {
    ImagePatch image;
    LabelMask mask;
    GleasonScore score{3, 3};
};

// Deterministic sample synthesis. Grade regions are nested: each higher
// grade sits inside the next lower one, which makes the inter-label
// geometry a learnable target (any grade-5 pixel has a grade-3/4 pixel
// within 8 px whenever a lower grade is present).
TissueSample generate_tissue_sample(const LayoutSpec& spec);

// Bag label from the mask: grades ranked by pixel area; a single grade is
// counted twice.
GleasonScore derive_bag_label(const LabelMask& mask);

enum class Split { Train, Val, Test };
std::string split_name(Split s);

struct CorpusEntry {
    std::string image_path;  // relative to the corpus directory
    std::string mask_path;
    GleasonScore score{3, 3};
    std::uint64_t seed = 0;
    Split split = Split::Train;
};

struct CorpusManifest {
    std::uint64_t seed = 0;
    int image_size = 64;
    std::vector<CorpusEntry> entries;
    std::string dir;  // set on load/build, not serialized

    std::vector<int> split_indices(Split s) const;
    std::string to_json() const;
    static CorpusManifest from_json(const std::string& text);
};

struct CorpusParams {
    std::uint64_t seed = 7;
    int n_train = 20, n_val = 5, n_test = 5;
    int image_size = 64;
    int benign_ring_width = 2;
    std::vector<int> grade_pool{3, 4, 5};
};

// Generates the corpus under dir (images/, masks/, manifest.json) with
// per-sample seeds derived from the global seed. Every manifest entry is
// self-checked: derive_bag_label(mask) must equal the stored score.
CorpusManifest build_corpus(const CorpusParams& params, const std::string& dir);

CorpusManifest load_manifest(const std::string& dir);

// Loaded sample pair.
struct LoadedSample {
    ImagePatch image;
    LabelMask mask;
    GleasonScore score{3, 3};
};
LoadedSample load_sample(const CorpusManifest& m, int index);

}  // namespace geo
