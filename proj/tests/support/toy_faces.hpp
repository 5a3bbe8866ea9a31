#pragma once

// Synthetic textured "face" corpora for tests: procedural texture families
// (each video gets one family instance and palette, so a pristine frame is
// self-consistent end to end), a 68-point landmark template, and writers for
// the on-disk corpus layout (images + landmark sidecars + JSONL manifest).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcl/core.hpp"
#include "pcl/geometry.hpp"
#include "pcl/i2g.hpp"
#include "pcl/image.hpp"
#include "pcl/image_io.hpp"

namespace toy {

// ---------------------------------------------------------------------------
// Landmark template: jaw arc, brows, nose, eyes, mouth in a normalized face
// frame, scaled to the image. The hull covers roughly 15-20% of the frame.

inline pcl::Landmarks face_landmarks(double cx, double cy, double rx, double ry) {
    pcl::Landmarks lm;
    int i = 0;
    auto put = [&](double x, double y) { lm[i++] = {cx + x * rx, cy + y * ry}; };

    // jaw: 17 points, ear to ear through the chin
    for (int k = 0; k < 17; ++k) {
        const double t = -M_PI_2 + M_PI * k / 16.0;  // -90deg..+90deg
        put(std::sin(t), 0.15 + 0.85 * std::cos(t));
    }
    // brows: 5 + 5
    for (int k = 0; k < 5; ++k) put(-0.7 + 0.125 * k, -0.55 - 0.05 * std::sin(M_PI * k / 4.0));
    for (int k = 0; k < 5; ++k) put(0.2 + 0.125 * k, -0.55 - 0.05 * std::sin(M_PI * k / 4.0));
    // nose bridge: 4, nostrils: 5
    for (int k = 0; k < 4; ++k) put(0.0, -0.35 + 0.13 * k);
    for (int k = 0; k < 5; ++k) put(-0.16 + 0.08 * k, 0.12);
    // eyes: 6 + 6
    for (int k = 0; k < 6; ++k) {
        const double a = 2.0 * M_PI * k / 6.0;
        put(-0.42 + 0.15 * std::cos(a), -0.3 + 0.08 * std::sin(a));
    }
    for (int k = 0; k < 6; ++k) {
        const double a = 2.0 * M_PI * k / 6.0;
        put(0.42 + 0.15 * std::cos(a), -0.3 + 0.08 * std::sin(a));
    }
    // mouth: 12 outer + 8 inner
    for (int k = 0; k < 12; ++k) {
        const double a = 2.0 * M_PI * k / 12.0;
        put(0.28 * std::cos(a), 0.5 + 0.12 * std::sin(a));
    }
    for (int k = 0; k < 8; ++k) {
        const double a = 2.0 * M_PI * k / 8.0;
        put(0.17 * std::cos(a), 0.5 + 0.06 * std::sin(a));
    }
    return lm;
}

// ---------------------------------------------------------------------------
// Texture families. All patterns are stationary across the frame so a
// pristine image has one "source" everywhere.

constexpr int kNumFamilies = 10;

struct VideoStyle {
    int family = 0;
    float c0[3], c1[3];
    double f1 = 0.1, f2 = 0.13;   // frequencies / cell sizes
    double phase1 = 0, phase2 = 0;
    std::uint64_t lattice_seed = 0;
};

inline VideoStyle make_style(int family, std::uint64_t video_seed) {
    pcl::Rng rng(video_seed);
    VideoStyle s;
    s.family = family;
    for (int c = 0; c < 3; ++c) {
        s.c0[c] = static_cast<float>(rng.uniform(0.05, 0.5));
        s.c1[c] = static_cast<float>(rng.uniform(0.5, 0.95));
    }
    s.f1 = rng.uniform(0.06, 0.16);
    s.f2 = rng.uniform(0.06, 0.16);
    s.phase1 = rng.uniform(0, 2 * M_PI);
    s.phase2 = rng.uniform(0, 2 * M_PI);
    s.lattice_seed = rng.next_u64();
    return s;
}

// value-noise lattice lookup in [0,1], cell size in pixels
inline double lattice_noise(double x, double y, double cell, std::uint64_t seed) {
    const auto hash_cell = [seed](long long ix, long long iy) {
        std::uint64_t h = seed;
        h = pcl::fnv1a64(&ix, sizeof(ix), h);
        h = pcl::fnv1a64(&iy, sizeof(iy), h);
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    };
    const double gx = x / cell, gy = y / cell;
    const long long ix = static_cast<long long>(std::floor(gx));
    const long long iy = static_cast<long long>(std::floor(gy));
    const double tx = gx - ix, ty = gy - iy;
    const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
    const double v00 = hash_cell(ix, iy), v10 = hash_cell(ix + 1, iy);
    const double v01 = hash_cell(ix, iy + 1), v11 = hash_cell(ix + 1, iy + 1);
    return (v00 + (v10 - v00) * sx) + ((v01 + (v11 - v01) * sx) - (v00 + (v10 - v00) * sx)) * sy;
}

inline double pattern_value(const VideoStyle& s, double x, double y, double phase_jitter) {
    switch (s.family) {
        case 0:  // plaid
            return 0.5 + 0.25 * std::sin(2 * M_PI * s.f1 * x + s.phase1 + phase_jitter) +
                   0.25 * std::sin(2 * M_PI * s.f2 * y + s.phase2);
        case 1: {  // checker
            const double cell = 2.0 + 8.0 * s.f1 * 10.0;
            const long long q = static_cast<long long>(std::floor(x / cell)) +
                                static_cast<long long>(std::floor(y / cell));
            return (q & 1) ? 0.85 : 0.15;
        }
        case 2:  // diagonal stripes
            return 0.5 + 0.5 * std::sin(2 * M_PI * s.f1 * (x + y) * 0.7071 + s.phase1 + phase_jitter);
        case 3:  // smooth value noise
            return lattice_noise(x + phase_jitter, y, 4.0 + 40.0 * s.f1, s.lattice_seed);
        case 4: {  // rings
            const double dx = x - 100.0 * s.f2, dy = y - 100.0 * s.f1;
            return 0.5 + 0.5 * std::sin(2 * M_PI * s.f1 * std::sqrt(dx * dx + dy * dy) + s.phase1 + phase_jitter);
        }
        case 5: {  // thresholded blobs with soft edges
            const double v = lattice_noise(x, y + phase_jitter, 6.0 + 30.0 * s.f2, s.lattice_seed);
            return 1.0 / (1.0 + std::exp(-12.0 * (v - 0.5)));
        }
        case 6:  // horizontal bands with noise-wobbled phase
            return 0.5 + 0.5 * std::sin(2 * M_PI * s.f2 * y + s.phase2 + phase_jitter +
                                        2.0 * lattice_noise(x, y, 16.0, s.lattice_seed));
        case 7: {  // polka dots on a jittered grid
            const double cell = 5.0 + 30.0 * s.f1;
            const double gx = x / cell - std::floor(x / cell) - 0.5;
            const double gy = y / cell - std::floor(y / cell) - 0.5;
            const double r = std::sqrt(gx * gx + gy * gy);
            return 1.0 / (1.0 + std::exp(40.0 * (r - 0.3)));
        }
        case 8: {  // wood grain: stripes warped by smooth noise
            const double warp = 6.0 * lattice_noise(x, y, 10.0 + 20.0 * s.f2, s.lattice_seed);
            return 0.5 + 0.5 * std::sin(2 * M_PI * s.f1 * (x + warp) + s.phase1 + phase_jitter);
        }
        default: {  // soft square lattice (product of two waves)
            const double a = std::sin(2 * M_PI * s.f1 * x + s.phase1 + phase_jitter);
            const double b = std::sin(2 * M_PI * s.f2 * y + s.phase2);
            return 0.5 + 0.5 * a * b;
        }
    }
}

inline pcl::Image texture_image(int size, const VideoStyle& style, std::uint64_t frame_seed) {
    pcl::Rng rng(frame_seed);
    const double phase_jitter = rng.uniform(0, 0.8);
    const double noise_sigma = 0.02;
    pcl::Image img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double p = pattern_value(style, x, y, phase_jitter);
            for (int c = 0; c < 3; ++c) {
                const double v = style.c0[c] + p * (style.c1[c] - style.c0[c]) + rng.normal(0, noise_sigma);
                img.at(y, x, c) = pcl::clamp01(static_cast<float>(v));
            }
        }
    return img;
}

// ---------------------------------------------------------------------------
// In-memory pools (for generator tests) and on-disk corpora.

struct CorpusSpec {
    int image_size = 64;
    int n_videos = 10;
    int frames_per_video = 2;
    std::vector<int> families{0, 1, 2, 3};
    std::uint64_t seed = 1234;
};

inline pcl::FaceRecord make_face(const CorpusSpec& spec, int video, int frame) {
    const std::uint64_t vseed = pcl::Rng::derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(video));
    const int family = spec.families[static_cast<std::size_t>(video) % spec.families.size()];
    // per-frame style within the video's family: palettes and frequencies
    // never repeat, so nothing about a specific texture instance predicts
    // the label
    const VideoStyle style = make_style(family, pcl::Rng::derive_seed(vseed, 50 + static_cast<std::uint64_t>(frame)));

    pcl::Rng vrng(pcl::Rng::derive_seed(vseed, 7));
    const double cx = spec.image_size * (0.5 + vrng.uniform(-0.04, 0.04));
    const double cy = spec.image_size * (0.5 + vrng.uniform(-0.04, 0.04));
    const double rx = spec.image_size * (0.24 + vrng.uniform(-0.02, 0.02));
    const double ry = spec.image_size * (0.28 + vrng.uniform(-0.02, 0.02));

    pcl::FaceRecord rec;
    rec.image = texture_image(spec.image_size, style,
                              pcl::Rng::derive_seed(vseed, 100 + static_cast<std::uint64_t>(frame)));
    rec.landmarks = face_landmarks(cx, cy, rx, ry);
    rec.identity = "id" + std::to_string(video);
    rec.video = "fam" + std::to_string(family) + "_vid" + std::to_string(video);
    rec.frame_index = frame;
    return rec;
}

inline std::vector<pcl::FaceRecord> make_pool(const CorpusSpec& spec) {
    std::vector<pcl::FaceRecord> pool;
    for (int v = 0; v < spec.n_videos; ++v)
        for (int f = 0; f < spec.frames_per_video; ++f) pool.push_back(make_face(spec, v, f));
    return pool;
}

// Writes real frames (+ landmarks + manifest.jsonl) under dir. Returns the
// manifest path.
inline std::string write_corpus(const std::string& dir, const CorpusSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "real");
    fs::create_directories(fs::path(dir) / "landmarks");
    std::ofstream mf(fs::path(dir) / "manifest.jsonl");

    for (int v = 0; v < spec.n_videos; ++v)
        for (int f = 0; f < spec.frames_per_video; ++f) {
            const pcl::FaceRecord rec = make_face(spec, v, f);
            const std::string stem = rec.video + "_" + std::to_string(f);
            const std::string img_rel = "real/" + stem + ".png";
            const std::string lm_rel = "landmarks/" + stem + ".txt";
            pcl::write_png_rgb((fs::path(dir) / img_rel).string(), rec.image);
            pcl::save_landmarks((fs::path(dir) / lm_rel).string(), rec.landmarks);
            nlohmann::json j{{"image", img_rel},     {"landmarks", lm_rel},      {"identity", rec.identity},
                             {"video", rec.video},   {"frame_index", f},         {"role", "real"}};
            mf << j.dump() << "\n";
        }
    return (fs::path(dir) / "manifest.jsonl").string();
}

}  // namespace toy
