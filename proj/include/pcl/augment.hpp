#pragma once

// Photometric augmentations applied to generated composites and training
// frames: JPEG compression artifacts, Gaussian noise/blur, brightness and
// contrast, random erasing, and color jittering. Every augmentation is
// gated by its own probability and draws from the caller's RNG only, so a
// fixed (seed, config, input) triple replays bit-identically.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "pcl/core.hpp"
#include "pcl/image.hpp"

namespace pcl {

struct AugmentConfig {
    bool enable_jpeg = true;
    double prob_jpeg = 0.5;
    std::pair<int, int> jpeg_quality_range{30, 90};

    bool enable_noise = true;
    double prob_noise = 0.5;
    std::pair<double, double> noise_sigma_range{0.0, 0.05};

    bool enable_blur = true;
    double prob_blur = 0.3;
    std::pair<double, double> blur_sigma_range{0.5, 2.0};

    bool enable_brightness_contrast = true;
    double prob_brightness_contrast = 0.5;
    std::pair<double, double> brightness_range{-0.15, 0.15};
    std::pair<double, double> contrast_range{0.8, 1.25};

    bool enable_erase = true;
    double prob_erase = 0.3;
    std::pair<double, double> erase_area_fraction_range{0.01, 0.05};

    bool enable_jitter = true;
    double prob_jitter = 0.5;
    double jitter_strength = 0.1;

    void validate() const {
        auto ordered = [](auto r) { return r.first <= r.second; };
        if (!ordered(jpeg_quality_range) || jpeg_quality_range.first < 1 || jpeg_quality_range.second > 100)
            throw ParameterError("augment: jpeg_quality_range must be ordered within [1,100]");
        if (!ordered(noise_sigma_range) || noise_sigma_range.first < 0)
            throw ParameterError("augment: noise_sigma_range must be ordered and non-negative");
        if (!ordered(blur_sigma_range) || blur_sigma_range.first < 0)
            throw ParameterError("augment: blur_sigma_range must be ordered and non-negative");
        if (!ordered(brightness_range)) throw ParameterError("augment: brightness_range must be ordered");
        if (!ordered(contrast_range) || contrast_range.first <= 0)
            throw ParameterError("augment: contrast_range must be ordered and positive");
        if (!ordered(erase_area_fraction_range) || erase_area_fraction_range.first < 0 ||
            erase_area_fraction_range.second > 1)
            throw ParameterError("augment: erase_area_fraction_range must be ordered within [0,1]");
        if (jitter_strength < 0) throw ParameterError("augment: jitter_strength must be non-negative");
        for (double p : {prob_jpeg, prob_noise, prob_blur, prob_brightness_contrast, prob_erase, prob_jitter})
            if (p < 0 || p > 1) throw ParameterError("augment: probabilities must lie in [0,1]");
    }

    static AugmentConfig disabled() {
        AugmentConfig c;
        c.enable_jpeg = c.enable_noise = c.enable_blur = false;
        c.enable_brightness_contrast = c.enable_erase = c.enable_jitter = false;
        return c;
    }
};

namespace detail {

// 8x8 DCT-II basis, orthonormal.
inline const std::array<std::array<double, 8>, 8>& dct8_basis() {
    static const auto basis = []() {
        std::array<std::array<double, 8>, 8> b{};
        for (int k = 0; k < 8; ++k) {
            const double a = (k == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n)
                b[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
                    a * std::cos((2.0 * n + 1.0) * k * 3.14159265358979323846 / 16.0);
        }
        return b;
    }();
    return basis;
}

// Annex K reference quantization tables.
inline const int* jpeg_luma_table() {
    static const int t[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                              14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                              18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                              49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
    return t;
}

inline const int* jpeg_chroma_table() {
    static const int t[64] = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
                              99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                              99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};
    return t;
}

inline int scaled_quant(int base, int quality) {
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    int q = (base * scale + 50) / 100;
    return std::clamp(q, 1, 255);
}

// Quantize/dequantize one 8x8 tile in place (values centered around 0).
inline void dct_quant_roundtrip(double* tile, const int* table, int quality) {
    const auto& B = dct8_basis();
    double coef[8][8];
    // 2D DCT: rows then columns.
    double tmp[8][8];
    for (int y = 0; y < 8; ++y)
        for (int k = 0; k < 8; ++k) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) acc += B[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] * tile[y * 8 + x];
            tmp[y][k] = acc;
        }
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) acc += B[static_cast<std::size_t>(k)][static_cast<std::size_t>(y)] * tmp[y][j];
            coef[k][j] = acc;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            const double q = scaled_quant(table[u * 8 + v], quality);
            coef[u][v] = std::round(coef[u][v] / q) * q;
        }
    // Inverse transform.
    for (int y = 0; y < 8; ++y)
        for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += B[static_cast<std::size_t>(k)][static_cast<std::size_t>(y)] * coef[k][j];
            tmp[y][j] = acc;
        }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 8; ++k) acc += B[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] * tmp[y][k];
            tile[y * 8 + x] = acc;
        }
}

}  // namespace detail

// Block-DCT quantize/dequantize round trip in YCbCr, reproducing JPEG
// compression artifacts without touching the filesystem.
inline Image jpeg_roundtrip(const Image& img, int quality) {
    if (quality < 1 || quality > 100) throw ParameterError("jpeg_roundtrip: quality must be in [1,100]");
    const int h = img.height, w = img.width;
    const int bh = (h + 7) / 8, bw = (w + 7) / 8;

    // RGB -> YCbCr planes, centered at 0, edge-replicated to 8x8 tiles.
    std::vector<double> planes[3];
    for (auto& p : planes) p.assign(static_cast<std::size_t>(bh) * 8 * bw * 8, 0.0);
    for (int y = 0; y < bh * 8; ++y) {
        const int ys = std::min(y, h - 1);
        for (int x = 0; x < bw * 8; ++x) {
            const int xs = std::min(x, w - 1);
            const double r = img.at(ys, xs, 0), g = img.at(ys, xs, 1), b = img.at(ys, xs, 2);
            const std::size_t i = static_cast<std::size_t>(y) * bw * 8 + x;
            planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b - 0.5;
            planes[1][i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
            planes[2][i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
        }
    }

    double tile[64];
    for (int c = 0; c < 3; ++c) {
        const int* table = (c == 0) ? detail::jpeg_luma_table() : detail::jpeg_chroma_table();
        for (int by = 0; by < bh; ++by)
            for (int bx = 0; bx < bw; ++bx) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        tile[y * 8 + x] = planes[c][static_cast<std::size_t>(by * 8 + y) * bw * 8 + bx * 8 + x];
                detail::dct_quant_roundtrip(tile, table, quality);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        planes[c][static_cast<std::size_t>(by * 8 + y) * bw * 8 + bx * 8 + x] = tile[y * 8 + x];
            }
    }

    Image out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * bw * 8 + x;
            const double Y = planes[0][i] + 0.5, Cb = planes[1][i], Cr = planes[2][i];
            out.at(y, x, 0) = clamp01(static_cast<float>(Y + 1.402 * Cr));
            out.at(y, x, 1) = clamp01(static_cast<float>(Y - 0.344136 * Cb - 0.714136 * Cr));
            out.at(y, x, 2) = clamp01(static_cast<float>(Y + 1.772 * Cb));
        }
    return out;
}

// Applies each enabled augmentation independently with its probability, in a
// fixed order (jitter, brightness/contrast, blur, noise, erase, jpeg).
inline Image augment(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    Image out = img;

    if (cfg.enable_jitter && rng.bernoulli(cfg.prob_jitter)) {
        float gain[3];
        for (auto& g : gain) g = static_cast<float>(1.0 + rng.uniform(-cfg.jitter_strength, cfg.jitter_strength));
        for (std::size_t i = 0; i < out.data.size(); i += 3)
            for (int c = 0; c < 3; ++c) out.data[i + static_cast<std::size_t>(c)] = clamp01(out.data[i + static_cast<std::size_t>(c)] * gain[c]);
    }

    if (cfg.enable_brightness_contrast && rng.bernoulli(cfg.prob_brightness_contrast)) {
        const float bias = static_cast<float>(rng.uniform(cfg.brightness_range.first, cfg.brightness_range.second));
        const float gain = static_cast<float>(rng.uniform(cfg.contrast_range.first, cfg.contrast_range.second));
        for (auto& v : out.data) v = clamp01((v - 0.5f) * gain + 0.5f + bias);
    }

    if (cfg.enable_blur && rng.bernoulli(cfg.prob_blur)) {
        const double sigma = rng.uniform(cfg.blur_sigma_range.first, cfg.blur_sigma_range.second);
        if (sigma > 1e-6) {
            const int ksize = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
            out = gaussian_blur(out, sigma, ksize);
        }
    }

    if (cfg.enable_noise && rng.bernoulli(cfg.prob_noise)) {
        const double sigma = rng.uniform(cfg.noise_sigma_range.first, cfg.noise_sigma_range.second);
        if (sigma > 0.0)
            for (auto& v : out.data) v = clamp01(v + static_cast<float>(rng.normal(0.0, sigma)));
    }

    if (cfg.enable_erase && rng.bernoulli(cfg.prob_erase)) {
        const double frac = rng.uniform(cfg.erase_area_fraction_range.first, cfg.erase_area_fraction_range.second);
        const double area = frac * out.height * out.width;
        const double aspect = rng.uniform(0.5, 2.0);
        int eh = std::max(1, static_cast<int>(std::lround(std::sqrt(area * aspect))));
        int ew = std::max(1, static_cast<int>(std::lround(std::sqrt(area / aspect))));
        eh = std::min(eh, out.height);
        ew = std::min(ew, out.width);
        const int y0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(out.height - eh + 1)));
        const int x0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(out.width - ew + 1)));
        for (int y = y0; y < y0 + eh; ++y)
            for (int x = x0; x < x0 + ew; ++x)
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = static_cast<float>(rng.uniform());
    }

    if (cfg.enable_jpeg && rng.bernoulli(cfg.prob_jpeg)) {
        const int lo = cfg.jpeg_quality_range.first, hi = cfg.jpeg_quality_range.second;
        const int quality = lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
        out = jpeg_roundtrip(out, quality);
    }

    return out;
}

}  // namespace pcl
