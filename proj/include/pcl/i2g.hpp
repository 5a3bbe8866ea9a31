#pragma once

// Inconsistency image generator: picks a pose-compatible source face of a
// different identity, aligns and warps it onto the target, synthesizes a
// soft blend mask from the target's landmark hull (elastic deformation +
// Gaussian blur), blends, and augments the composite. Emits the forged
// frame together with the exact mask used for blending.

#include <chrono>
#include <string>
#include <vector>

#include "pcl/augment.hpp"
#include "pcl/core.hpp"
#include "pcl/geometry.hpp"
#include "pcl/image.hpp"

namespace pcl {

struct FaceRecord {
    Image image;
    Landmarks landmarks;
    std::string identity;
    std::string video;
    int frame_index = 0;
};

enum class BlendMethod { alpha, poisson_lite };

inline const char* blend_method_name(BlendMethod m) {
    return m == BlendMethod::alpha ? "alpha" : "poisson_lite";
}

struct I2GConfig {
    // Landmark-distance acceptance threshold, total L2 over the 68x2 matrix
    // measured after similarity alignment, at 256x256 scale.
    double epsilon = 45.0;
    std::vector<BlendMethod> blend_methods{BlendMethod::alpha, BlendMethod::poisson_lite};
    DeformConfig deform;
    int mask_blur_size = 17;
    AugmentConfig augment;
    std::uint64_t seed = 0;
    bool enable_mask_blur = true;

    void validate() const {
        if (epsilon <= 0) throw ParameterError("i2g: epsilon must be positive");
        if (blend_methods.empty()) throw ParameterError("i2g: at least one blend method required");
        deform.validate();
        if (mask_blur_size < 1) throw ParameterError("i2g: mask_blur_size must be >= 1");
        augment.validate();
    }
};

struct GeneratedPair {
    Image forged;      // X^g, post-augmentation
    GrayMap mask;      // the exact soft mask used for blending (pre-augmentation)
    std::string source_id;
    std::string target_id;
    BlendMethod blend_method = BlendMethod::alpha;
    std::uint64_t seed_used = 0;
    double generation_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Source selection: uniform among candidates with a different identity whose
// aligned landmarks fall within epsilon of the target's.

inline double aligned_landmark_distance(const FaceRecord& source, const FaceRecord& target) {
    const SimilarityTransform t = estimate_alignment(source.landmarks, target.landmarks);
    return landmark_distance(t.apply(source.landmarks), target.landmarks);
}

inline const FaceRecord& select_source(const FaceRecord& target, const std::vector<FaceRecord>& pool,
                                       const I2GConfig& cfg, Rng& rng) {
    if (pool.empty()) throw NoSourceError("select_source: empty pool");
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].identity == target.identity) continue;
        if (aligned_landmark_distance(pool[i], target) < cfg.epsilon) candidates.push_back(i);
    }
    if (candidates.empty())
        throw NoSourceError("select_source: no cross-identity candidate within epsilon for target " +
                            target.identity);
    return pool[candidates[rng.uniform_int(candidates.size())]];
}

// ---------------------------------------------------------------------------
// Mask synthesis: convex hull -> rasterize -> elastic deform -> blur.

inline GrayMap synthesize_mask(const Landmarks& lm, int h, int w, const I2GConfig& cfg, Rng& rng) {
    const Polygon hull = convex_hull(lm);
    GrayMap mask = rasterize(hull, h, w);
    mask = elastic_deform(mask, cfg.deform, rng);
    if (cfg.enable_mask_blur)
        mask = gaussian_blur(mask, sigma_for_kernel_size(cfg.mask_blur_size), cfg.mask_blur_size);
    return mask;
}

// ---------------------------------------------------------------------------
// Blending

inline Image blend_alpha(const Image& target, const Image& source, const GrayMap& mask) {
    Image out(target.height, target.width);
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        const float m = mask.data[i];
        for (int c = 0; c < 3; ++c) {
            const std::size_t k = i * 3 + static_cast<std::size_t>(c);
            out.data[k] = m * source.data[k] + (1.0f - m) * target.data[k];
        }
    }
    return out;
}

// Gradient-domain composite: solves the discrete Poisson equation with the
// source gradients as guidance on the mask support (mask > 0.5), target
// values as the Dirichlet boundary, by Jacobi iteration. The solution is
// then alpha-feathered by the soft mask, so pixels with mask == 0 stay
// bit-equal to the target.
inline Image blend_poisson_lite(const Image& target, const Image& source, const GrayMap& mask,
                                int max_iters = 500, float tol = 1e-4f) {
    const int h = target.height, w = target.width;
    std::vector<int> support;
    std::vector<char> in_support(static_cast<std::size_t>(h) * w, 0);
    for (int i = 0; i < h * w; ++i)
        if (mask.data[static_cast<std::size_t>(i)] > 0.5f) {
            support.push_back(i);
            in_support[static_cast<std::size_t>(i)] = 1;
        }

    Image solved = target;
    if (!support.empty()) {
        for (int c = 0; c < 3; ++c) {
            std::vector<float> u(support.size()), u_next(support.size());
            for (std::size_t k = 0; k < support.size(); ++k)
                u[k] = source.data[static_cast<std::size_t>(support[k]) * 3 + static_cast<std::size_t>(c)];

            std::vector<int> slot(static_cast<std::size_t>(h) * w, -1);
            for (std::size_t k = 0; k < support.size(); ++k) slot[static_cast<std::size_t>(support[k])] = static_cast<int>(k);

            const int dy[4] = {-1, 1, 0, 0};
            const int dx[4] = {0, 0, -1, 1};
            for (int it = 0; it < max_iters; ++it) {
                float max_delta = 0.0f;
                for (std::size_t k = 0; k < support.size(); ++k) {
                    const int idx = support[k];
                    const int y = idx / w, x = idx % w;
                    float acc = 0.0f;
                    int degree = 0;
                    for (int d = 0; d < 4; ++d) {
                        const int yn = y + dy[d], xn = x + dx[d];
                        if (yn < 0 || yn >= h || xn < 0 || xn >= w) continue;
                        const int nidx = yn * w + xn;
                        ++degree;
                        // guidance: source gradient along this edge
                        const float gs = source.data[static_cast<std::size_t>(idx) * 3 + static_cast<std::size_t>(c)] -
                                         source.data[static_cast<std::size_t>(nidx) * 3 + static_cast<std::size_t>(c)];
                        const float un = in_support[static_cast<std::size_t>(nidx)]
                                             ? u[static_cast<std::size_t>(slot[static_cast<std::size_t>(nidx)])]
                                             : target.data[static_cast<std::size_t>(nidx) * 3 + static_cast<std::size_t>(c)];
                        acc += un + gs;
                    }
                    const float next = degree > 0 ? acc / static_cast<float>(degree)
                                                  : u[k];
                    max_delta = std::max(max_delta, std::abs(next - u[k]));
                    u_next[k] = next;
                }
                u.swap(u_next);
                if (max_delta < tol) break;
            }
            for (std::size_t k = 0; k < support.size(); ++k)
                solved.data[static_cast<std::size_t>(support[k]) * 3 + static_cast<std::size_t>(c)] =
                    clamp01(u[k]);
        }
    }
    return blend_alpha(target, solved, mask);
}

inline Image blend(const Image& target, const Image& source, const GrayMap& mask, BlendMethod method) {
    if (!target.same_size(source) || target.height != mask.height || target.width != mask.width)
        throw DimensionError("blend: target, source and mask must share dimensions");
    return method == BlendMethod::alpha ? blend_alpha(target, source, mask)
                                        : blend_poisson_lite(target, source, mask);
}

// ---------------------------------------------------------------------------
// Full generation pipeline.

inline GeneratedPair generate(const FaceRecord& target, const std::vector<FaceRecord>& pool,
                              const I2GConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const FaceRecord& source = select_source(target, pool, cfg, rng);
    const SimilarityTransform align = estimate_alignment(source.landmarks, target.landmarks);
    const Image warped = warp(source.image, align, target.image.height, target.image.width);

    GrayMap mask = synthesize_mask(target.landmarks, target.image.height, target.image.width, cfg, rng);

    const BlendMethod method = cfg.blend_methods[rng.uniform_int(cfg.blend_methods.size())];
    Image composite = blend(target.image, warped, mask, method);
    composite = augment(composite, cfg.augment, rng);

    GeneratedPair out;
    out.forged = std::move(composite);
    out.mask = std::move(mask);
    out.source_id = source.identity;
    out.target_id = target.identity;
    out.blend_method = method;
    out.seed_used = cfg.seed;
    out.generation_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace pcl
