#include "geo/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "geo/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace geo {

std::array<LabelTexture, kLabelMax + 1> default_textures() {
    std::array<LabelTexture, kLabelMax + 1> t{};
    t[1] = {{0.97f, 0.96f, 0.97f}, 0.010f, 0.000f};  // background: near-white
    t[2] = {{0.86f, 0.64f, 0.78f}, 0.025f, 0.015f};  // benign: light pink
    t[3] = {{0.64f, 0.46f, 0.70f}, 0.030f, 0.030f};  // grade 3
    t[4] = {{0.46f, 0.30f, 0.54f}, 0.030f, 0.045f};  // grade 4
    t[5] = {{0.28f, 0.17f, 0.38f}, 0.030f, 0.060f};  // grade 5
    return t;
}

void LayoutSpec::validate() const {
    if (n_grade_regions < 1 || n_grade_regions > 3)
        throw ValidationError("LayoutSpec: n_grade_regions must be 1..3");
    if (grade_pool.empty()) throw ValidationError("LayoutSpec: empty grade pool");
    for (int g : grade_pool)
        if (!is_grade(g)) throw ValidationError("LayoutSpec: grade pool outside {3,4,5}");
    if (static_cast<int>(grade_pool.size()) < n_grade_regions)
        throw LayoutError("LayoutSpec: fewer grades in pool than regions requested");
    if (image_size < 32 || (image_size & (image_size - 1)) != 0)
        throw ValidationError("LayoutSpec: image size must be a power of two >= 32");
    if (benign_ring_width < 0 || benign_ring_width > 4)
        throw ValidationError("LayoutSpec: benign ring width must be 0..4");
}

namespace {

struct Blob {
    double cx, cy, r0;
    std::array<double, 3> amp;    // harmonics 2..4
    std::array<double, 3> phase;

    double radius_at(double theta) const {
        double r = 1.0;
        for (int k = 0; k < 3; ++k) r += amp[static_cast<std::size_t>(k)] * std::cos((k + 2) * theta + phase[static_cast<std::size_t>(k)]);
        return r0 * r;
    }
    double max_radius() const {
        double a = 0.0;
        for (double v : amp) a += std::abs(v);
        return r0 * (1.0 + a);
    }
    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < 1e-9) return true;
        return d <= radius_at(std::atan2(dy, dx));
    }
};

Blob draw_blob(Rng& rng, double cx, double cy, double r0, double wobble) {
    Blob b;
    b.cx = cx;
    b.cy = cy;
    b.r0 = r0;
    for (int k = 0; k < 3; ++k) {
        b.amp[static_cast<std::size_t>(k)] = rng.uniform(-wobble, wobble);
        b.phase[static_cast<std::size_t>(k)] = rng.uniform(0.0, 2.0 * M_PI);
    }
    return b;
}

}  // namespace

TissueSample generate_tissue_sample(const LayoutSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int sz = spec.image_size;
    const double area = static_cast<double>(sz) * sz;

    // Pick distinct grades, ascending; the lowest grade forms the outer
    // region and each higher grade nests inside the previous one.
    std::vector<int> pool = spec.grade_pool;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    std::vector<int> grades;
    {
        std::vector<int> candidates = pool;
        for (int i = 0; i < spec.n_grade_regions; ++i) {
            const std::size_t j = static_cast<std::size_t>(rng.uniform_int(candidates.size()));
            grades.push_back(candidates[j]);
            candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(j));
        }
        std::sort(grades.begin(), grades.end());
    }

    // Target area fractions per nesting depth, ~2x apart so pixel areas stay
    // pairwise distinct by well over 5% of the image area.
    static const double kAreaTargets[3][3] = {
        {0.26, 0, 0}, {0.30, 0.13, 0}, {0.32, 0.155, 0.045}};
    const double* targets = kAreaTargets[spec.n_grade_regions - 1];

    for (int attempt = 0; attempt < 32; ++attempt) {
        std::vector<Blob> blobs;
        bool fits = true;
        for (int i = 0; i < spec.n_grade_regions && fits; ++i) {
            const double target_px = targets[i] * area * spec.area_scale;
            double r0 = std::sqrt(target_px / M_PI) * rng.uniform(0.95, 1.05);
            // Keep the innermost region compact when it is grade 5 so the
            // nesting radius bound holds.
            const bool innermost = i == spec.n_grade_regions - 1;
            double wobble = 0.12;
            if (innermost && grades[static_cast<std::size_t>(i)] == 5 && spec.n_grade_regions > 1) {
                r0 = std::min(r0, 6.2);
                wobble = 0.10;
            }
            double cx, cy;
            if (i == 0) {
                cx = sz / 2.0 + rng.uniform(-sz * 0.06, sz * 0.06);
                cy = sz / 2.0 + rng.uniform(-sz * 0.06, sz * 0.06);
            } else {
                const Blob& outer = blobs.back();
                const double off = outer.r0 * 0.30;
                cx = outer.cx + rng.uniform(-off, off);
                cy = outer.cy + rng.uniform(-off, off);
            }
            Blob b = draw_blob(rng, cx, cy, r0, wobble);
            const double margin = 2.0 + spec.benign_ring_width;
            if (b.cx - b.max_radius() < margin || b.cx + b.max_radius() > sz - 1 - margin ||
                b.cy - b.max_radius() < margin || b.cy + b.max_radius() > sz - 1 - margin)
                fits = false;
            blobs.push_back(b);
        }
        if (!fits) continue;

        LabelMask mask(sz, sz, kLabelBackground);
        for (int i = 0; i < spec.n_grade_regions; ++i)
            for (int y = 0; y < sz; ++y)
                for (int x = 0; x < sz; ++x)
                    if (blobs[static_cast<std::size_t>(i)].contains(x, y))
                        mask.at(y, x) = static_cast<std::uint8_t>(grades[static_cast<std::size_t>(i)]);

        if (spec.benign_ring_width > 0) {
            const int rw = spec.benign_ring_width;
            LabelMask ringed = mask;
            for (int y = 0; y < sz; ++y)
                for (int x = 0; x < sz; ++x) {
                    if (mask.at(y, x) != kLabelBackground) continue;
                    bool near = false;
                    for (int dy = -rw; dy <= rw && !near; ++dy)
                        for (int dx = -rw; dx <= rw && !near; ++dx) {
                            const int yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= sz || xx < 0 || xx >= sz) continue;
                            if (dx * dx + dy * dy > rw * rw) continue;
                            if (is_grade(mask.at(yy, xx))) near = true;
                        }
                    if (near) ringed.at(y, x) = kLabelBenign;
                }
            mask = ringed;
        }

        // Area ranking must be unique with >= 5% of image slack, and every
        // requested grade must have survived the nesting overwrite.
        auto hist = label_histogram(mask);
        std::vector<std::int64_t> grade_areas;
        bool ok = true;
        for (int g : grades) {
            if (hist[static_cast<std::size_t>(g)] == 0) ok = false;
            grade_areas.push_back(hist[static_cast<std::size_t>(g)]);
        }
        if (ok)
            for (std::size_t i = 0; i < grade_areas.size() && ok; ++i)
                for (std::size_t j = i + 1; j < grade_areas.size(); ++j)
                    if (std::abs(grade_areas[i] - grade_areas[j]) < 0.05 * area) {
                        ok = false;
                        break;
                    }
        if (!ok) continue;

        // Texture: Gaussian color per label plus dark speckle, row-major so
        // the result is bit-reproducible for a given seed.
        ImagePatch img(sz, sz, 3);
        for (int y = 0; y < sz; ++y)
            for (int x = 0; x < sz; ++x) {
                const auto& tx = spec.textures[mask.at(y, x)];
                for (int ch = 0; ch < 3; ++ch) {
                    float v = tx.mean[static_cast<std::size_t>(ch)] +
                              static_cast<float>(rng.normal(0.0, tx.sigma));
                    img.at(y, x, ch) = std::clamp(v, 0.0f, 1.0f);
                }
                if (tx.speckle_density > 0 && rng.uniform() < tx.speckle_density)
                    for (int ch = 0; ch < 3; ++ch)
                        img.at(y, x, ch) = std::max(0.0f, img.at(y, x, ch) - 0.30f);
            }

        TissueSample s;
        s.image = std::move(img);
        s.mask = std::move(mask);
        s.score = derive_bag_label(s.mask);
        return s;
    }
    throw LayoutError("generate_tissue_sample: regions cannot fit the requested layout");
}

GleasonScore derive_bag_label(const LabelMask& mask) {
    auto hist = label_histogram(mask);
    std::vector<std::pair<std::int64_t, int>> ranked;  // (area, grade)
    for (int g = 3; g <= kLabelMax; ++g)
        if (hist[static_cast<std::size_t>(g)] > 0) ranked.emplace_back(hist[static_cast<std::size_t>(g)], g);
    if (ranked.empty()) throw ValidationError("derive_bag_label: mask contains no grade labels");
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic on area ties
    });
    const int primary = ranked[0].second;
    const int secondary = ranked.size() > 1 ? ranked[1].second : primary;
    return GleasonScore(primary, secondary);
}

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        default: return "test";
    }
}

namespace {
Split split_from_name(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw ValidationError("unknown split tag: " + s);
}
}  // namespace

std::vector<int> CorpusManifest::split_indices(Split s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].split == s) out.push_back(static_cast<int>(i));
    return out;
}

std::string CorpusManifest::to_json() const {
    json j;
    j["seed"] = seed;
    j["image_size"] = image_size;
    j["entries"] = json::array();
    for (const auto& e : entries) {
        j["entries"].push_back({{"image", e.image_path},
                                {"mask", e.mask_path},
                                {"primary", e.score.primary},
                                {"secondary", e.score.secondary},
                                {"seed", e.seed},
                                {"split", split_name(e.split)}});
    }
    return j.dump(2) + "\n";
}

CorpusManifest CorpusManifest::from_json(const std::string& text) {
    json j = json::parse(text);
    CorpusManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.image_size = j.at("image_size").get<int>();
    for (const auto& je : j.at("entries")) {
        CorpusEntry e;
        e.image_path = je.at("image").get<std::string>();
        e.mask_path = je.at("mask").get<std::string>();
        e.score = GleasonScore(je.at("primary").get<int>(), je.at("secondary").get<int>());
        e.seed = je.at("seed").get<std::uint64_t>();
        e.split = split_from_name(je.at("split").get<std::string>());
        m.entries.push_back(e);
    }
    return m;
}

CorpusManifest build_corpus(const CorpusParams& params, const std::string& dir) {
    if (params.n_train < 1 || params.n_val < 1 || params.n_test < 1)
        throw ValidationError("build_corpus: split counts must be >= 1");
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "images", ec);
    fs::create_directories(fs::path(dir) / "masks", ec);
    if (ec) throw IoError("build_corpus: cannot create " + dir);

    CorpusManifest m;
    m.seed = params.seed;
    m.image_size = params.image_size;
    m.dir = dir;
    const int total = params.n_train + params.n_val + params.n_test;
    for (int i = 0; i < total; ++i) {
        const std::uint64_t sample_seed = derive_seed(params.seed, static_cast<std::uint64_t>(i));
        Rng pick(derive_seed(sample_seed, 0xa11ce));
        LayoutSpec spec;
        spec.seed = sample_seed;
        spec.image_size = params.image_size;
        spec.benign_ring_width = params.benign_ring_width;
        spec.grade_pool = params.grade_pool;
        const int max_regions = std::min<int>(3, static_cast<int>(spec.grade_pool.size()));
        // Favor two-region layouts; singles appear occasionally so the
        // counted-twice score path stays exercised.
        const double u = pick.uniform();
        spec.n_grade_regions = u < 0.15 ? 1 : (u < 0.70 ? 2 : 3);
        spec.n_grade_regions = std::min(spec.n_grade_regions, max_regions);

        TissueSample s = generate_tissue_sample(spec);
        char name[64];
        std::snprintf(name, sizeof(name), "sample_%04d.png", i);
        CorpusEntry e;
        e.image_path = std::string("images/") + name;
        e.mask_path = std::string("masks/") + name;
        e.score = s.score;
        e.seed = sample_seed;
        e.split = i < params.n_train ? Split::Train
                                     : (i < params.n_train + params.n_val ? Split::Val : Split::Test);
        write_image_png((fs::path(dir) / e.image_path).string(), s.image);
        write_mask_png((fs::path(dir) / e.mask_path).string(), s.mask);

        // Manifest self-check: the stored score must be re-derivable from
        // the persisted mask.
        LabelMask reread = read_mask_png((fs::path(dir) / e.mask_path).string());
        if (!(derive_bag_label(reread) == e.score))
            throw IoError("build_corpus: self-check failed for " + e.mask_path);
        m.entries.push_back(e);
    }
    std::ofstream f(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!f) throw IoError("build_corpus: cannot write manifest in " + dir);
    f << m.to_json();
    return m;
}

CorpusManifest load_manifest(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!f) throw IoError("load_manifest: missing manifest.json in " + dir);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CorpusManifest m = CorpusManifest::from_json(text);
    m.dir = dir;
    return m;
}

LoadedSample load_sample(const CorpusManifest& m, int index) {
    const auto& e = m.entries.at(static_cast<std::size_t>(index));
    LoadedSample s;
    s.image = read_image_png((fs::path(m.dir) / e.image_path).string());
    s.mask = read_mask_png((fs::path(m.dir) / e.mask_path).string());
    s.score = e.score;
    return s;
}

}  // namespace geo
