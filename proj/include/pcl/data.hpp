#pragma once

// Dataset ingestion and the training-sample protocol: manifest loading and
// directory discovery, DSSIM mask extraction for paired real/fake frames,
// per-epoch frame sampling, dynamic substitution of real samples by the
// inconsistency generator, and real/fake balancing.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pcl/consistency.hpp"
#include "pcl/core.hpp"
#include "pcl/geometry.hpp"
#include "pcl/i2g.hpp"
#include "pcl/image.hpp"
#include "pcl/image_io.hpp"
#include "pcl/nn/train.hpp"

namespace pcl {

enum class Provenance { real, dataset_fake, i2g_fake };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::real: return "real";
        case Provenance::dataset_fake: return "dataset_fake";
        default: return "i2g_fake";
    }
}

// One training triple (X, V, y) plus bookkeeping.
struct LabeledSample {
    Image image;
    std::vector<float> volume;  // flattened H'*W' x H'*W'
    int grid_h = 0, grid_w = 0;
    int label = 0;
    Provenance provenance = Provenance::real;
    std::string video;
};

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
    std::string image_path;
    std::string landmarks_path;
    std::string identity;
    std::string video;
    int frame_index = 0;
    enum class Role { real, fake } role = Role::real;
    std::string paired_real;  // required for DSSIM-supervised fakes
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;

    std::vector<std::size_t> real_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].role == ManifestEntry::Role::real) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> fake_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].role == ManifestEntry::Role::fake) out.push_back(i);
        return out;
    }

    void validate() const {
        if (entries.empty()) throw DataError("manifest: no entries");
        for (const auto& e : entries) {
            if (e.image_path.empty() || e.video.empty()) throw DataError("manifest: entry missing image/video");
        }
    }

    static CorpusManifest load_jsonl(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest: " + path);
        CorpusManifest m;
        const auto base = std::filesystem::path(path).parent_path();
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            ManifestEntry e;
            auto resolve = [&](const std::string& p) {
                if (p.empty()) return p;
                std::filesystem::path fp(p);
                return fp.is_absolute() ? p : (base / fp).string();
            };
            e.image_path = resolve(j.at("image").get<std::string>());
            e.landmarks_path = resolve(j.value("landmarks", std::string()));
            e.identity = j.value("identity", std::string());
            e.video = j.at("video").get<std::string>();
            e.frame_index = j.value("frame_index", 0);
            const std::string role = j.value("role", std::string("real"));
            if (role == "real")
                e.role = ManifestEntry::Role::real;
            else if (role == "fake")
                e.role = ManifestEntry::Role::fake;
            else
                throw DataError("manifest: unknown role '" + role + "'");
            e.paired_real = resolve(j.value("paired_real", std::string()));
            m.entries.push_back(std::move(e));
        }
        m.validate();
        return m;
    }

    // Directory convention: real/ and optional fake/ hold images, and
    // landmarks/ holds "<image-stem>.txt" sidecars. Video and identity ids
    // come from the stem up to the last '_' (stem itself if none).
    static CorpusManifest discover(const std::string& root) {
        namespace fs = std::filesystem;
        CorpusManifest m;
        auto scan = [&](const fs::path& dir, ManifestEntry::Role role) {
            if (!fs::exists(dir)) return;
            std::vector<fs::path> files;
            for (const auto& p : fs::directory_iterator(dir)) {
                const auto ext = p.path().extension().string();
                if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(p.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                ManifestEntry e;
                e.image_path = f.string();
                const auto lm = fs::path(root) / "landmarks" / (f.stem().string() + ".txt");
                if (fs::exists(lm)) e.landmarks_path = lm.string();
                const std::string stem = f.stem().string();
                const auto us = stem.rfind('_');
                e.video = us == std::string::npos ? stem : stem.substr(0, us);
                e.identity = e.video;
                e.frame_index = us == std::string::npos ? 0 : std::atoi(stem.c_str() + us + 1);
                e.role = role;
                m.entries.push_back(std::move(e));
            }
        };
        scan(fs::path(root) / "real", ManifestEntry::Role::real);
        scan(fs::path(root) / "fake", ManifestEntry::Role::fake);
        m.validate();
        return m;
    }
};

// ---------------------------------------------------------------------------
// DSSIM mask extraction for paired real/fake frames: blur the DSSIM map,
// threshold it to a binary mask, then feather the edge with a small blur.

struct DssimMaskConfig {
    double blur_sigma = 3.0;
    double threshold = 0.1;
    double feather_sigma = 5.0 / 3.0;  // ~5 px support
    int window = 11;
};

inline GrayMap dssim_mask(const Image& real, const Image& fake, const DssimMaskConfig& cfg = {}) {
    if (!real.same_size(fake)) throw DimensionError("dssim_mask: image pair must share dimensions");
    GrayMap d = dssim(real, fake, cfg.window);
    if (cfg.blur_sigma > 0)
        d = gaussian_blur(d, cfg.blur_sigma, 2 * static_cast<int>(std::ceil(3.0 * cfg.blur_sigma)) + 1);
    for (auto& v : d.data) v = v > static_cast<float>(cfg.threshold) ? 1.0f : 0.0f;
    if (cfg.feather_sigma > 0)
        d = gaussian_blur(d, cfg.feather_sigma, 2 * static_cast<int>(std::ceil(3.0 * cfg.feather_sigma)) + 1);
    return d;
}

// ---------------------------------------------------------------------------
// Ground-truth construction (X, V, y). Real samples carry the all-ones
// volume; fakes derive V from the blend mask.

inline LabeledSample build_gt(Image image, const GrayMap* mask, int label, Provenance prov,
                              std::string video, int backbone_stride = 16) {
    LabeledSample s;
    s.grid_h = image.height / backbone_stride;
    s.grid_w = image.width / backbone_stride;
    if (s.grid_h <= 0 || s.grid_w <= 0) throw DimensionError("build_gt: image smaller than one patch");
    const std::size_t p = static_cast<std::size_t>(s.grid_h) * s.grid_w;

    if (label == 0) {
        s.volume.assign(p * p, 1.0f);
    } else {
        if (!mask) throw DataError("build_gt: fake sample requires a mask");
        const ConsistencyVolume v = gt_volume(downsample_mask(*mask, s.grid_h, s.grid_w));
        s.volume = v.data;
    }
    s.image = std::move(image);
    s.label = label;
    s.provenance = prov;
    s.video = std::move(video);
    if (s.label == 0 && s.provenance != Provenance::real)
        throw DataError("build_gt: label 0 must be provenance real");
    return s;
}

// ---------------------------------------------------------------------------
// Epoch planning

struct PlanItem {
    std::size_t entry = 0;       // manifest index
    std::uint64_t seed = 0;      // per-item random stream
    Provenance tag = Provenance::real;
};

// Draws frames_per_video frames from every video: without replacement when
// the video has enough frames, with replacement otherwise. The overall plan
// is shuffled. Plan length is frames_per_video * (number of videos).
inline std::vector<PlanItem> sample_epoch(const CorpusManifest& manifest, int frames_per_video, Rng& rng) {
    manifest.validate();
    if (frames_per_video <= 0) throw ParameterError("sample_epoch: frames_per_video must be positive");

    std::map<std::string, std::vector<std::size_t>> videos;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) videos[manifest.entries[i].video].push_back(i);

    std::vector<PlanItem> plan;
    for (auto& [video, frames] : videos) {
        if (static_cast<int>(frames.size()) >= frames_per_video) {
            // partial Fisher-Yates draw without replacement
            std::vector<std::size_t> poolcopy = frames;
            for (int k = 0; k < frames_per_video; ++k) {
                const std::size_t j = k + rng.uniform_int(poolcopy.size() - static_cast<std::size_t>(k));
                std::swap(poolcopy[static_cast<std::size_t>(k)], poolcopy[j]);
                plan.push_back({poolcopy[static_cast<std::size_t>(k)], 0, Provenance::real});
            }
        } else {
            for (int k = 0; k < frames_per_video; ++k)
                plan.push_back({frames[rng.uniform_int(frames.size())], 0, Provenance::real});
        }
    }
    // global shuffle
    for (std::size_t i = plan.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(plan[i - 1], plan[j]);
    }
    for (auto& item : plan) {
        item.seed = rng.next_u64();
        item.tag = manifest.entries[item.entry].role == ManifestEntry::Role::fake ? Provenance::dataset_fake
                                                                                  : Provenance::real;
    }
    return plan;
}

// The substitution coin for a planned real item. materialize() consumes the
// same stream, so the tag predicted here always matches the sample built
// later: the coin is the stream's first draw.
inline bool i2g_coin(const PlanItem& item, double p) {
    Rng rng(item.seed);
    return rng.bernoulli(p);
}

inline void tag_substitutions(std::vector<PlanItem>& plan, double i2g_prob) {
    for (auto& item : plan)
        if (item.tag == Provenance::real && i2g_coin(item, i2g_prob)) item.tag = Provenance::i2g_fake;
}

enum class BalanceMode { pass_through, downsample_majority };

// Rebalances the epoch plan so per-epoch real:fake counts stay within ~1:1
// by dropping a seeded random subset of the majority class. A missing class
// leaves the plan untouched (with a warning).
inline std::vector<PlanItem> balance_stream(const std::vector<PlanItem>& plan, BalanceMode mode, Rng& rng,
                                            std::ostream* log = nullptr) {
    if (mode == BalanceMode::pass_through) return plan;
    std::size_t n_real = 0, n_fake = 0;
    for (const auto& it : plan) (it.tag == Provenance::real ? n_real : n_fake) += 1;
    if (n_real == 0 || n_fake == 0) {
        if (log) *log << "balance_stream: one class absent (real=" << n_real << ", fake=" << n_fake
                      << "), passing through\n";
        return plan;
    }
    const std::size_t keep = std::min(n_real, n_fake);
    const bool drop_real = n_real > n_fake;
    const std::size_t majority = drop_real ? n_real : n_fake;

    // choose `keep` of `majority` by seeded partial shuffle of their slots
    std::vector<std::size_t> slots(majority);
    std::iota(slots.begin(), slots.end(), 0);
    for (std::size_t k = 0; k < keep; ++k) {
        const std::size_t j = k + rng.uniform_int(majority - k);
        std::swap(slots[k], slots[j]);
    }
    std::vector<char> selected(majority, 0);
    for (std::size_t k = 0; k < keep; ++k) selected[slots[k]] = 1;

    std::vector<PlanItem> out;
    out.reserve(keep * 2);
    std::size_t maj_seen = 0;
    for (const auto& it : plan) {
        const bool is_majority = drop_real ? (it.tag == Provenance::real) : (it.tag != Provenance::real);
        if (is_majority) {
            if (selected[maj_seen]) out.push_back(it);
            ++maj_seen;
        } else {
            out.push_back(it);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Materialization

struct DataPipelineConfig {
    int frames_per_video = 32;
    double i2g_prob = 0.5;
    BalanceMode balance = BalanceMode::downsample_majority;
    bool only_real = false;  // cross-dataset preset: consume real entries only
    I2GConfig i2g;
    DssimMaskConfig dssim;
    AugmentConfig frame_augment = AugmentConfig::disabled();  // applied to non-generated frames
    int backbone_stride = 16;
    std::uint64_t seed = 0;
};

// Shared decoded-image cache keyed by path.
class ImageCache {
  public:
    const Image& get(const std::string& path) {
        auto it = cache_.find(path);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(path, read_image(path)).first->second;
    }

  private:
    std::unordered_map<std::string, Image> cache_;
};

inline FaceRecord load_face_record(const ManifestEntry& e, ImageCache& cache) {
    FaceRecord r;
    r.image = cache.get(e.image_path);
    if (e.landmarks_path.empty()) throw DataError("entry has no landmarks: " + e.image_path);
    r.landmarks = load_landmarks(e.landmarks_path);
    if (r.landmarks.clamp_to(r.image.height, r.image.width))
        std::cerr << "warning: landmarks clamped to image bounds for " << e.image_path << "\n";
    r.identity = e.identity;
    r.video = e.video;
    r.frame_index = e.frame_index;
    return r;
}

// Dynamic substitution: with probability p the real sample is replaced by a
// generated fake whose volume comes from the generator's own mask; the
// fallback on a missing source is the real sample (logged).
inline LabeledSample maybe_i2g(const FaceRecord& target, const std::vector<FaceRecord>& pool, double p,
                               const I2GConfig& cfg, Rng& rng, int backbone_stride = 16,
                               std::ostream* log = nullptr) {
    const bool substitute = rng.bernoulli(p);  // first draw; keep in sync with i2g_coin
    if (substitute) {
        try {
            GeneratedPair pair = generate(target, pool, cfg, rng);
            return build_gt(std::move(pair.forged), &pair.mask, 1, Provenance::i2g_fake, target.video,
                            backbone_stride);
        } catch (const NoSourceError& e) {
            if (log) *log << "maybe_i2g: falling back to real sample: " << e.what() << "\n";
        }
    }
    return build_gt(target.image, nullptr, 0, Provenance::real, target.video, backbone_stride);
}

// ---------------------------------------------------------------------------
// Training source: plans an epoch, tags substitutions, balances, then
// materializes samples in plan order.

class TrainingSource final : public nn::SampleSource {
  public:
    TrainingSource(CorpusManifest manifest, DataPipelineConfig cfg, std::ostream* log = nullptr)
        : manifest_(std::move(manifest)), cfg_(std::move(cfg)), log_(log) {
        cfg_.i2g.validate();
        if (cfg_.only_real) {
            CorpusManifest reals;
            for (const auto& e : manifest_.entries)
                if (e.role == ManifestEntry::Role::real) reals.entries.push_back(e);
            manifest_ = std::move(reals);
        }
        manifest_.validate();
        for (const auto& e : manifest_.entries) {
            if (e.role == ManifestEntry::Role::fake && e.paired_real.empty())
                throw DataError("fake entry without paired_real: " + e.image_path);
        }
        build_pool();
    }

    void start_epoch(int epoch) override {
        Rng rng(Rng::derive_seed(cfg_.seed, 0x65706f6368ULL + static_cast<std::uint64_t>(epoch)));
        plan_ = sample_epoch(manifest_, cfg_.frames_per_video, rng);
        tag_substitutions(plan_, cfg_.i2g_prob);
        plan_ = balance_stream(plan_, cfg_.balance, rng, log_);
        cursor_ = 0;
    }

    bool next(nn::TrainSample& out) override {
        while (cursor_ < plan_.size()) {
            const PlanItem item = plan_[cursor_++];
            std::optional<LabeledSample> s = materialize(item);
            if (!s) continue;  // degenerate sample dropped
            out.x = normalize_for_network(s->image);
            out.volume = std::move(s->volume);
            out.label = static_cast<float>(s->label);
            return true;
        }
        return false;
    }

    std::int64_t epoch_size() const override {
        // Planned upper bound; balancing may trim the realized count.
        std::map<std::string, int> videos;
        for (const auto& e : manifest_.entries) videos[e.video] = 1;
        return static_cast<std::int64_t>(videos.size()) * cfg_.frames_per_video;
    }

    // nullopt = dropped: a dataset fake whose DSSIM mask thresholds to empty
    // would carry contradictory supervision (V of ones with label 1).
    std::optional<LabeledSample> materialize(const PlanItem& item) {
        const ManifestEntry& e = manifest_.entries[item.entry];
        Rng rng(item.seed);
        if (e.role == ManifestEntry::Role::fake) {
            Image fake = cache_.get(e.image_path);
            const Image& real = cache_.get(e.paired_real);
            GrayMap mask = dssim_mask(real, fake, cfg_.dssim);
            float peak = 0.0f;
            for (float v : mask.data) peak = std::max(peak, v);
            if (peak < 0.5f) {
                if (log_) *log_ << "dropping degenerate fake (empty DSSIM mask): " << e.image_path << "\n";
                return std::nullopt;
            }
            fake = augment(fake, cfg_.frame_augment, rng);
            return build_gt(std::move(fake), &mask, 1, Provenance::dataset_fake, e.video, cfg_.backbone_stride);
        }
        const FaceRecord target = load_face_record(e, cache_);
        LabeledSample s = maybe_i2g(target, pool_, cfg_.i2g_prob, cfg_.i2g, rng, cfg_.backbone_stride, log_);
        if (s.provenance == Provenance::real) {
            s.image = augment(s.image, cfg_.frame_augment, rng);
        }
        return s;
    }

    const std::vector<PlanItem>& current_plan() const { return plan_; }
    const CorpusManifest& manifest() const { return manifest_; }
    ImageCache& cache() { return cache_; }
    const std::vector<FaceRecord>& pool() const { return pool_; }

  private:
    void build_pool() {
        for (const auto& e : manifest_.entries) {
            if (e.role != ManifestEntry::Role::real || e.landmarks_path.empty()) continue;
            try {
                pool_.push_back(load_face_record(e, cache_));
            } catch (const Error& err) {
                if (log_) *log_ << "pool: skipping " << e.image_path << ": " << err.what() << "\n";
            }
        }
        if (pool_.empty()) throw DataError("no usable real faces with landmarks in manifest");
    }

    CorpusManifest manifest_;
    DataPipelineConfig cfg_;
    std::ostream* log_;
    ImageCache cache_;
    std::vector<FaceRecord> pool_;
    std::vector<PlanItem> plan_;
    std::size_t cursor_ = 0;
};

}  // namespace pcl
