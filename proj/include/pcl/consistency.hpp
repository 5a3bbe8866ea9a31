#pragma once

// Network-independent consistency math: ground-truth 4D volume construction
// from a coarse mask, heatmap fusion, and heatmap up-sampling.

#include <cstdint>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/image.hpp"

namespace pcl {

// H' x W' coarse mask (the blend mask bilinearly downsampled to the patch
// grid).
struct CoarseMask {
    int h_p = 0;
    int w_p = 0;
    std::vector<float> data;

    CoarseMask() = default;
    CoarseMask(int hp, int wp, float fill = 0.0f) : h_p(hp), w_p(wp) {
        if (hp <= 0 || wp <= 0) throw DimensionError("CoarseMask dims must be positive");
        data.assign(static_cast<std::size_t>(hp) * wp, fill);
    }

    float at(int h, int w) const { return data[static_cast<std::size_t>(h) * w_p + w]; }
    float& at(int h, int w) { return data[static_cast<std::size_t>(h) * w_p + w]; }
};

// H' x W' x H' x W' pairwise consistency scores in [0,1]. Houses both the
// ground truth V and the prediction V-hat. Stored flat; entry (h,w,h2,w2)
// lives at ((h*W'+w)*H'+h2)*W'+w2, i.e. the volume is an (H'W') x (H'W')
// matrix of base-patch rows.
struct ConsistencyVolume {
    int h_p = 0;
    int w_p = 0;
    std::vector<float> data;

    ConsistencyVolume() = default;
    ConsistencyVolume(int hp, int wp, float fill = 0.0f) : h_p(hp), w_p(wp) {
        if (hp <= 0 || wp <= 0) throw DimensionError("ConsistencyVolume dims must be positive");
        data.assign(static_cast<std::size_t>(hp) * wp * hp * wp, fill);
    }

    std::size_t patches() const { return static_cast<std::size_t>(h_p) * w_p; }

    float at(int h, int w, int h2, int w2) const {
        return data[((static_cast<std::size_t>(h) * w_p + w) * h_p + h2) * w_p + w2];
    }
    float& at(int h, int w, int h2, int w2) {
        return data[((static_cast<std::size_t>(h) * w_p + w) * h_p + h2) * w_p + w2];
    }
};

// Coarse H'xW' consistency heatmap plus its full-resolution upsampling.
// Polarity: low values mark inconsistent (manipulated) regions.
struct Heatmap {
    GrayMap coarse;
    GrayMap full;
};

inline CoarseMask downsample_mask(const GrayMap& mask, int h_p, int w_p) {
    const GrayMap small = resize_bilinear(mask, h_p, w_p);
    CoarseMask out(h_p, w_p);
    out.data = small.data;
    return out;
}

// V[h,w,h',w'] = 1 - |M[h,w] - M[h',w']|. A pristine mask (all zeros) yields
// the all-ones volume.
inline ConsistencyVolume gt_volume(const CoarseMask& cm) {
    if (cm.data.empty()) throw DimensionError("gt_volume: empty coarse mask");
    ConsistencyVolume v(cm.h_p, cm.w_p);
    const std::size_t p = v.patches();
    for (std::size_t i = 0; i < p; ++i) {
        const float mi = cm.data[i];
        float* row = v.data.data() + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            const float d = mi - cm.data[j];
            row[j] = 1.0f - (d < 0 ? -d : d);
        }
    }
    return v;
}

// Fuses the 4D volume into a 2D map: entry (h',w') is the mean consistency
// of patch (h',w') against every base patch.
inline Heatmap fuse_heatmap(const ConsistencyVolume& v) {
    if (v.data.empty()) throw DimensionError("fuse_heatmap: empty volume");
    const std::size_t p = v.patches();
    std::vector<double> acc(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        const float* row = v.data.data() + i * p;
        for (std::size_t j = 0; j < p; ++j) acc[j] += row[j];
    }
    Heatmap hm;
    hm.coarse = GrayMap(v.h_p, v.w_p);
    for (std::size_t j = 0; j < p; ++j) hm.coarse.data[j] = clamp01(static_cast<float>(acc[j] / static_cast<double>(p)));
    return hm;
}

inline Heatmap upsample_heatmap(Heatmap hm, int h, int w) {
    if (hm.coarse.data.empty()) throw DimensionError("upsample_heatmap: coarse part missing");
    hm.full = resize_bilinear(hm.coarse, h, w);
    return hm;
}

// Display helper: overlays (1 - heat) as a red tint on the frame, optionally
// inverted so high values mark manipulated regions instead.
inline Image heatmap_overlay(const Image& frame, const GrayMap& heat_full, bool invert_polarity = false) {
    if (frame.height != heat_full.height || frame.width != heat_full.width)
        throw DimensionError("heatmap_overlay: dimensions must match");
    Image out = frame;
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            float a = heat_full.at(y, x);
            if (!invert_polarity) a = 1.0f - a;  // highlight low-consistency regions
            out.at(y, x, 0) = clamp01(frame.at(y, x, 0) * (1.0f - 0.6f * a) + 0.6f * a);
            out.at(y, x, 1) = clamp01(frame.at(y, x, 1) * (1.0f - 0.6f * a));
            out.at(y, x, 2) = clamp01(frame.at(y, x, 2) * (1.0f - 0.6f * a));
        }
    return out;
}

}  // namespace pcl
