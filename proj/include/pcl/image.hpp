#pragma once

// Image containers and low-level raster operations shared by the data
// generator, the training pipeline, and visualization. Pixels are float in
// [0,1] end to end; 8-bit happens only at file boundaries (see image_io.hpp).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcl/core.hpp"

namespace pcl {

// ---------------------------------------------------------------------------
// Containers

// H x W x 3 interleaved RGB raster, intensities in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    static constexpr int channels = 3;
    std::vector<float> data;  // HWC

    Image() = default;
    Image(int h, int w, float fill = 0.0f) : height(h), width(w) {
        if (h <= 0 || w <= 0) throw DimensionError("Image dimensions must be positive");
        data.assign(static_cast<std::size_t>(h) * w * channels, fill);
    }

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

    bool same_size(const Image& o) const { return height == o.height && width == o.width; }
};

// H x W scalar map in [0,1]; carries masks and heatmaps.
struct GrayMap {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    GrayMap() = default;
    GrayMap(int h, int w, float fill = 0.0f) : height(h), width(w) {
        if (h <= 0 || w <= 0) throw DimensionError("GrayMap dimensions must be positive");
        data.assign(static_cast<std::size_t>(h) * w, fill);
    }

    float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool same_size(const GrayMap& o) const { return height == o.height && width == o.width; }

    double mass() const {
        double s = 0.0;
        for (float v : data) s += v;
        return s;
    }
};

// CHW tensor produced by normalize_for_network; consumed by the net.
struct Chw {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;
};

namespace detail {

template <typename MapT>
constexpr int map_channels() {
    if constexpr (std::is_same_v<MapT, Image>)
        return 3;
    else
        return 1;
}

inline float* row_ptr(Image& m, int y) { return m.data.data() + static_cast<std::size_t>(y) * m.width * 3; }
inline const float* row_ptr(const Image& m, int y) { return m.data.data() + static_cast<std::size_t>(y) * m.width * 3; }
inline float* row_ptr(GrayMap& m, int y) { return m.data.data() + static_cast<std::size_t>(y) * m.width; }
inline const float* row_ptr(const GrayMap& m, int y) { return m.data.data() + static_cast<std::size_t>(y) * m.width; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Bilinear resize (half-pixel centers, edge clamp). Works for Image and
// GrayMap alike.

template <typename MapT>
MapT resize_bilinear(const MapT& src, int out_h, int out_w) {
    if (src.height <= 0 || src.width <= 0 || src.data.empty())
        throw DimensionError("resize_bilinear: empty input");
    if (out_h <= 0 || out_w <= 0) throw DimensionError("resize_bilinear: output dims must be positive");

    constexpr int C = detail::map_channels<MapT>();
    MapT dst(out_h, out_w);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;

    for (int oy = 0; oy < out_h; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const float wy = static_cast<float>(fy - y0);
        const float* r0 = detail::row_ptr(src, y0);
        const float* r1 = detail::row_ptr(src, y1);
        float* out = detail::row_ptr(dst, oy);
        for (int ox = 0; ox < out_w; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const float wx = static_cast<float>(fx - x0);
            for (int c = 0; c < C; ++c) {
                // lerp form keeps constants and exact grid hits bit-exact
                const float top = r0[x0 * C + c] + (r0[x1 * C + c] - r0[x0 * C + c]) * wx;
                const float bot = r1[x0 * C + c] + (r1[x1 * C + c] - r1[x0 * C + c]) * wx;
                out[ox * C + c] = clamp01(top + (bot - top) * wy);
            }
        }
    }
    return dst;
}

// ---------------------------------------------------------------------------
// Gaussian blur, separable, edge replication.

// Even kernel sizes are rounded up to the next odd size so the kernel stays
// symmetric; sigma <= 0 with a positive size falls back to size/6.
inline int adjust_kernel_size(int size) {
    if (size < 1) throw ParameterError("gaussian kernel size must be >= 1");
    return (size % 2 == 0) ? size + 1 : size;
}

inline double sigma_for_kernel_size(int size) { return adjust_kernel_size(size) / 6.0; }

inline std::vector<float> gaussian_kernel(double sigma, int size) {
    size = adjust_kernel_size(size);
    if (sigma <= 0.0) throw ParameterError("gaussian sigma must be positive");
    std::vector<float> k(static_cast<std::size_t>(size));
    const int r = size / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[static_cast<std::size_t>(i + r)] = static_cast<float>(w);
        sum += w;
    }
    for (auto& w : k) w = static_cast<float>(w / sum);
    return k;
}

template <typename MapT>
MapT gaussian_blur(const MapT& src, double sigma, int kernel_size) {
    if (sigma <= 0.0) throw ParameterError("gaussian_blur: sigma must be positive");
    const auto k = gaussian_kernel(sigma, kernel_size);
    const int r = static_cast<int>(k.size()) / 2;
    constexpr int C = detail::map_channels<MapT>();
    const int h = src.height, w = src.width;

    // Horizontal pass.
    MapT tmp(h, w);
    for (int y = 0; y < h; ++y) {
        const float* in = detail::row_ptr(src, y);
        float* out = detail::row_ptr(tmp, y);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int xs = std::clamp(x + t, 0, w - 1);
                    acc += static_cast<double>(k[static_cast<std::size_t>(t + r)]) * in[xs * C + c];
                }
                out[x * C + c] = static_cast<float>(acc);
            }
        }
    }
    // Vertical pass.
    MapT dst(h, w);
    for (int y = 0; y < h; ++y) {
        float* out = detail::row_ptr(dst, y);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int ys = std::clamp(y + t, 0, h - 1);
                    acc += static_cast<double>(k[static_cast<std::size_t>(t + r)]) * detail::row_ptr(tmp, ys)[x * C + c];
                }
                out[x * C + c] = clamp01(static_cast<float>(acc));
            }
        }
    }
    return dst;
}

// ---------------------------------------------------------------------------
// Network input normalization. Defaults are the ImageNet statistics.

inline constexpr std::array<float, 3> kImagenetMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImagenetStd{0.229f, 0.224f, 0.225f};

inline Chw normalize_for_network(const Image& img, std::array<float, 3> mean = kImagenetMean,
                                 std::array<float, 3> std = kImagenetStd) {
    for (float s : std)
        if (s <= 0.0f) throw ParameterError("normalize_for_network: std must be positive");
    Chw out;
    out.channels = 3;
    out.height = img.height;
    out.width = img.width;
    out.data.resize(img.data.size());
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    for (int c = 0; c < 3; ++c) {
        const float m = mean[static_cast<std::size_t>(c)];
        const float inv = 1.0f / std[static_cast<std::size_t>(c)];
        float* dst = out.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = (img.data[i * 3 + static_cast<std::size_t>(c)] - m) * inv;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Luma and DSSIM

inline GrayMap to_luma(const Image& img) {
    GrayMap g(img.height, img.width);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const float* px = img.data.data() + i * 3;
        g.data[i] = clamp01(0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2]);
    }
    return g;
}

// Per-pixel structural dissimilarity (1 - SSIM)/2 on luma. SSIM uses a
// Gaussian window with the usual K1=0.01, K2=0.03 constants at unit dynamic
// range; window statistics use edge replication.
inline GrayMap dssim(const Image& a, const Image& b, int window = 11) {
    if (!a.same_size(b)) throw DimensionError("dssim: images must share dimensions");
    const GrayMap la = to_luma(a);
    const GrayMap lb = to_luma(b);

    const int size = adjust_kernel_size(window);
    const auto k = gaussian_kernel(sigma_for_kernel_size(size), size);
    const int r = size / 2;
    const int h = a.height, w = a.width;

    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;

    GrayMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int ys = std::clamp(y + dy, 0, h - 1);
                const double wy = k[static_cast<std::size_t>(dy + r)];
                const float* ra = detail::row_ptr(la, ys);
                const float* rb = detail::row_ptr(lb, ys);
                for (int dx = -r; dx <= r; ++dx) {
                    const int xs = std::clamp(x + dx, 0, w - 1);
                    const double wgt = wy * k[static_cast<std::size_t>(dx + r)];
                    const double va = ra[xs];
                    const double vb = rb[xs];
                    mu_a += wgt * va;
                    mu_b += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            }
            const double var_a = std::max(0.0, aa - mu_a * mu_a);
            const double var_b = std::max(0.0, bb - mu_b * mu_b);
            const double cov = ab - mu_a * mu_b;
            const double ssim = ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) /
                                ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
            out.at(y, x) = static_cast<float>(clamp01((1.0 - ssim) * 0.5));
        }
    }
    return out;
}

}  // namespace pcl
