#pragma once

// Landmark containers, convex-hull rasterization, elastic mask deformation,
// and landmark-based similarity alignment.
//
// Coordinates are pixels with y growing downward. Polygon orientation is
// "counter-clockwise" in that frame, i.e. positive shoelace area.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/image.hpp"

namespace pcl {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// 68-point facial landmark set, ingested from sidecar files (never detected
// here; the detector is an external oracle).
struct Landmarks {
    static constexpr int kCount = 68;
    std::array<Vec2, kCount> points{};

    Vec2& operator[](int i) { return points[static_cast<std::size_t>(i)]; }
    Vec2 operator[](int i) const { return points[static_cast<std::size_t>(i)]; }

    void validate() const {
        for (const auto& p : points)
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("landmarks contain non-finite values");
    }

    Vec2 centroid() const {
        Vec2 c{0, 0};
        for (const auto& p : points) c = c + p;
        return {c.x / kCount, c.y / kCount};
    }

    // Clamp points into [0,w-1]x[0,h-1]; returns true when clamping moved any.
    bool clamp_to(int h, int w) {
        bool moved = false;
        for (auto& p : points) {
            const double cx = std::clamp(p.x, 0.0, static_cast<double>(w - 1));
            const double cy = std::clamp(p.y, 0.0, static_cast<double>(h - 1));
            moved = moved || cx != p.x || cy != p.y;
            p = {cx, cy};
        }
        return moved;
    }
};

// Sidecar format: 68 lines of "x y", or one JSON array of 68 [x,y] pairs.
inline Landmarks load_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open landmark file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();

    Landmarks lm;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        // JSON array of [x, y] pairs; pull out the 136 numbers in order.
        std::vector<double> nums;
        const char* p = text.c_str();
        const char* end = p + text.size();
        while (p < end) {
            if ((*p >= '0' && *p <= '9') || *p == '-' || *p == '+' || *p == '.') {
                char* next = nullptr;
                nums.push_back(std::strtod(p, &next));
                p = next;
            } else {
                ++p;
            }
        }
        if (nums.size() != Landmarks::kCount * 2)
            throw DataError("landmark JSON must contain exactly 68 [x,y] pairs: " + path);
        for (int i = 0; i < Landmarks::kCount; ++i)
            lm[i] = {nums[static_cast<std::size_t>(2 * i)], nums[static_cast<std::size_t>(2 * i + 1)]};
    } else {
        std::istringstream ss(text);
        for (int i = 0; i < Landmarks::kCount; ++i) {
            double x, y;
            if (!(ss >> x >> y)) throw DataError("landmark file must contain 68 'x y' lines: " + path);
            lm[i] = {x, y};
        }
    }
    lm.validate();
    return lm;
}

inline void save_landmarks(const std::string& path, const Landmarks& lm) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write landmark file: " + path);
    out.precision(12);
    for (const auto& p : lm.points) out << p.x << " " << p.y << "\n";
}

// Frobenius norm of the 68x2 difference, in pixels.
inline double landmark_distance(const Landmarks& a, const Landmarks& b) {
    double acc = 0.0;
    for (int i = 0; i < Landmarks::kCount; ++i) {
        const double dx = a[i].x - b[i].x;
        const double dy = a[i].y - b[i].y;
        acc += dx * dx + dy * dy;
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Convex hull (monotone chain). Returns vertices in CCW order (positive
// shoelace area with y down); collinear inputs are a degenerate-geometry
// error.

using Polygon = std::vector<Vec2>;

inline double polygon_area(const Polygon& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a += cross(p, q);
    }
    return 0.5 * a;
}

inline Polygon convex_hull(const Landmarks& lm) {
    lm.validate();
    std::vector<Vec2> pts(lm.points.begin(), lm.points.end());
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());

    const std::size_t n = pts.size();
    if (n < 3) throw GeometryError("convex_hull: need at least 3 distinct points");

    std::vector<Vec2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
        while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) throw GeometryError("convex_hull: points are collinear");
    return hull;
}

// ---------------------------------------------------------------------------
// Rasterization: pixel = 1 iff its center lies inside (or on) the polygon.

inline bool point_in_convex(const Polygon& poly, Vec2 p) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        if (cross(b - a, p - a) < 0) return false;
    }
    return true;
}

inline GrayMap rasterize(const Polygon& poly, int h, int w) {
    GrayMap mask(h, w, 0.0f);
    if (poly.size() < 3) return mask;

    double ymin = poly[0].y, ymax = poly[0].y;
    for (const auto& p : poly) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(ymax)));

    for (int y = y0; y <= y1; ++y) {
        const double cy = y + 0.5;
        // Intersect the scanline with every edge to get the convex span.
        double xlo = -1e300, xhi = 1e300;
        bool empty = false;
        for (std::size_t i = 0; i < poly.size() && !empty; ++i) {
            const Vec2& a = poly[i];
            const Vec2& b = poly[(i + 1) % poly.size()];
            // Inside means cross(b-a, p-a) >= 0:  (b.x-a.x)(cy-a.y) - (b.y-a.y)(x-a.x) >= 0.
            const double dx = b.x - a.x, dy = b.y - a.y;
            const double c0 = dx * (cy - a.y) + dy * a.x;  // constraint: dy * x <= c0
            if (dy > 0)
                xhi = std::min(xhi, c0 / dy);
            else if (dy < 0)
                xlo = std::max(xlo, c0 / dy);
            else if (dx * (cy - a.y) < 0)
                empty = true;  // horizontal edge, scanline strictly outside
        }
        if (empty || xlo > xhi) continue;
        const int xa = std::max(0, static_cast<int>(std::ceil(xlo - 0.5)));
        const int xb = std::min(w - 1, static_cast<int>(std::floor(xhi - 0.5)));
        for (int x = xa; x <= xb; ++x) mask.at(y, x) = 1.0f;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Elastic deformation

struct DeformConfig {
    int grid = 4;  // control points per axis
    std::pair<double, double> sigma_range{6.0, 12.0};
    bool enabled = true;

    void validate() const {
        if (grid < 2) throw ParameterError("deform: grid must be >= 2");
        if (sigma_range.first <= 0 || sigma_range.second > 32 || sigma_range.first > sigma_range.second)
            throw ParameterError("deform: sigma_range must be ordered within (0, 32]");
    }
};

// Dense per-pixel displacement field (backward convention: output(p) samples
// input(p + d(p))).
struct DisplacementField {
    int height = 0;
    int width = 0;
    std::vector<float> dx, dy;

    DisplacementField() = default;
    DisplacementField(int h, int w) : height(h), width(w) {
        dx.assign(static_cast<std::size_t>(h) * w, 0.0f);
        dy.assign(static_cast<std::size_t>(h) * w, 0.0f);
    }
};

namespace detail {

// Catmull-Rom interpolation of four samples at parameter t in [0,1].
inline double catmull_rom(double p0, double p1, double p2, double p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

struct Bbox {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
    bool empty() const { return x1 < x0 || y1 < y0; }
};

inline Bbox mask_bbox(const GrayMap& mask, float thresh = 0.0f) {
    Bbox b{mask.width, mask.height, -1, -1};
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x) > thresh) {
                b.x0 = std::min(b.x0, x);
                b.y0 = std::min(b.y0, y);
                b.x1 = std::max(b.x1, x);
                b.y1 = std::max(b.y1, y);
            }
    return b;
}

}  // namespace detail

// Samples one 2D displacement per control point from Normal(0, sigma) with
// sigma drawn once from sigma_range, then interpolates bi-cubically to a
// dense field over the mask's (padded) bounding box. Outside the padded box
// the field is zero.
inline DisplacementField sample_deform_field(const GrayMap& mask, const DeformConfig& cfg, Rng& rng) {
    cfg.validate();
    DisplacementField field(mask.height, mask.width);

    const auto box = detail::mask_bbox(mask);
    if (box.empty()) return field;

    const double sigma = rng.uniform(cfg.sigma_range.first, cfg.sigma_range.second);
    const int g = cfg.grid;
    std::vector<double> cdx(static_cast<std::size_t>(g) * g), cdy(static_cast<std::size_t>(g) * g);
    for (auto& v : cdx) v = rng.normal(0.0, sigma);
    for (auto& v : cdy) v = rng.normal(0.0, sigma);

    // Pad so the warp cannot pull the mask across a field discontinuity.
    const int pad = static_cast<int>(std::ceil(2.0 * sigma)) + 8;
    const int x0 = std::max(0, box.x0 - pad), x1 = std::min(mask.width - 1, box.x1 + pad);
    const int y0 = std::max(0, box.y0 - pad), y1 = std::min(mask.height - 1, box.y1 + pad);
    const double sx = (x1 > x0) ? static_cast<double>(g - 1) / (x1 - x0) : 0.0;
    const double sy = (y1 > y0) ? static_cast<double>(g - 1) / (y1 - y0) : 0.0;

    auto ctrl = [&](const std::vector<double>& c, int gy, int gx) {
        gy = std::clamp(gy, 0, g - 1);
        gx = std::clamp(gx, 0, g - 1);
        return c[static_cast<std::size_t>(gy) * g + gx];
    };
    auto bicubic = [&](const std::vector<double>& c, double gx, double gy) {
        const int ix = static_cast<int>(std::floor(gx));
        const int iy = static_cast<int>(std::floor(gy));
        const double tx = gx - ix, ty = gy - iy;
        double rows[4];
        for (int r = -1; r <= 2; ++r)
            rows[r + 1] = detail::catmull_rom(ctrl(c, iy + r, ix - 1), ctrl(c, iy + r, ix), ctrl(c, iy + r, ix + 1),
                                              ctrl(c, iy + r, ix + 2), tx);
        return detail::catmull_rom(rows[0], rows[1], rows[2], rows[3], ty);
    };

    for (int y = y0; y <= y1; ++y) {
        const double gy = (y - y0) * sy;
        for (int x = x0; x <= x1; ++x) {
            const double gx = (x - x0) * sx;
            const std::size_t i = static_cast<std::size_t>(y) * mask.width + x;
            field.dx[i] = static_cast<float>(bicubic(cdx, gx, gy));
            field.dy[i] = static_cast<float>(bicubic(cdy, gx, gy));
        }
    }
    return field;
}

// Backward warp of a map by a dense displacement field, bilinear lookup with
// edge replication. Exposed separately so tests can inject synthetic fields.
inline GrayMap warp_by_field(const GrayMap& src, const DisplacementField& field) {
    if (src.height != field.height || src.width != field.width)
        throw DimensionError("warp_by_field: field dims must match the map");
    GrayMap out(src.height, src.width);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * src.width + x;
            if (field.dx[i] == 0.0f && field.dy[i] == 0.0f) {
                out.data[i] = src.data[i];
                continue;
            }
            double fx = x + field.dx[i];
            double fy = y + field.dy[i];
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
            const int ix = static_cast<int>(fx);
            const int iy = static_cast<int>(fy);
            const int ix1 = std::min(ix + 1, src.width - 1);
            const int iy1 = std::min(iy + 1, src.height - 1);
            const float wx = static_cast<float>(fx - ix);
            const float wy = static_cast<float>(fy - iy);
            const float top = src.at(iy, ix) + (src.at(iy, ix1) - src.at(iy, ix)) * wx;
            const float bot = src.at(iy1, ix) + (src.at(iy1, ix1) - src.at(iy1, ix)) * wx;
            out.data[i] = clamp01(top + (bot - top) * wy);
        }
    return out;
}

inline GrayMap elastic_deform(const GrayMap& mask, const DeformConfig& cfg, Rng& rng) {
    if (!cfg.enabled) return mask;
    const DisplacementField field = sample_deform_field(mask, cfg, rng);
    return warp_by_field(mask, field);
}

// ---------------------------------------------------------------------------
// Similarity alignment (scale + rotation + translation), least squares over
// point correspondences. Solved in closed form by treating points as complex
// numbers; this is the global optimum of the similarity-constrained
// Procrustes problem and cannot produce a reflection.

struct SimilarityTransform {
    double scale = 1.0;
    double rotation = 0.0;  // radians
    Vec2 translation{0.0, 0.0};

    Vec2 apply(Vec2 p) const {
        const double c = std::cos(rotation), s = std::sin(rotation);
        return {scale * (c * p.x - s * p.y) + translation.x, scale * (s * p.x + c * p.y) + translation.y};
    }

    Vec2 apply_inverse(Vec2 p) const {
        const double c = std::cos(rotation), s = std::sin(rotation);
        const double ux = (p.x - translation.x) / scale;
        const double uy = (p.y - translation.y) / scale;
        return {c * ux + s * uy, -s * ux + c * uy};
    }

    Landmarks apply(const Landmarks& lm) const {
        Landmarks out;
        for (int i = 0; i < Landmarks::kCount; ++i) out[i] = apply(lm[i]);
        return out;
    }
};

inline SimilarityTransform estimate_alignment(const Landmarks& src, const Landmarks& dst) {
    src.validate();
    dst.validate();
    const Vec2 cs = src.centroid();
    const Vec2 cd = dst.centroid();

    double denom = 0.0, ax = 0.0, ay = 0.0;
    for (int i = 0; i < Landmarks::kCount; ++i) {
        const Vec2 z = src[i] - cs;
        const Vec2 w = dst[i] - cd;
        denom += z.x * z.x + z.y * z.y;
        ax += z.x * w.x + z.y * w.y;   // Re(conj(z) * w)
        ay += z.x * w.y - z.y * w.x;   // Im(conj(z) * w)
    }
    if (denom <= 1e-12) throw GeometryError("estimate_alignment: source points have no spread");

    SimilarityTransform t;
    t.scale = std::sqrt(ax * ax + ay * ay) / denom;
    if (t.scale <= 0.0) throw GeometryError("estimate_alignment: degenerate correspondence");
    t.rotation = std::atan2(ay, ax);
    const Vec2 rc = t.apply(Vec2{cs.x, cs.y});
    // apply() above already used the (still zero) translation; fix it so the
    // centroids match.
    t.translation = {cd.x - rc.x, cd.y - rc.y};
    return t;
}

inline double alignment_residual(const Landmarks& src, const Landmarks& dst, const SimilarityTransform& t) {
    double acc = 0.0;
    for (int i = 0; i < Landmarks::kCount; ++i) {
        const Vec2 p = t.apply(src[i]);
        const double dx = p.x - dst[i].x, dy = p.y - dst[i].y;
        acc += dx * dx + dy * dy;
    }
    return acc;
}

// Backward-mapped bilinear warp of an image under a similarity transform;
// out-of-range samples replicate edges.
inline Image warp(const Image& img, const SimilarityTransform& t, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw DimensionError("warp: output dims must be positive");
    Image out(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const Vec2 s = t.apply_inverse(Vec2{static_cast<double>(x), static_cast<double>(y)});
            const double fx = std::clamp(s.x, 0.0, static_cast<double>(img.width - 1));
            const double fy = std::clamp(s.y, 0.0, static_cast<double>(img.height - 1));
            const int ix = static_cast<int>(fx);
            const int iy = static_cast<int>(fy);
            const int ix1 = std::min(ix + 1, img.width - 1);
            const int iy1 = std::min(iy + 1, img.height - 1);
            const float wx = static_cast<float>(fx - ix);
            const float wy = static_cast<float>(fy - iy);
            for (int c = 0; c < 3; ++c) {
                const float top = img.at(iy, ix, c) + (img.at(iy, ix1, c) - img.at(iy, ix, c)) * wx;
                const float bot = img.at(iy1, ix, c) + (img.at(iy1, ix1, c) - img.at(iy1, ix, c)) * wx;
                out.at(y, x, c) = clamp01(top + (bot - top) * wy);
            }
        }
    return out;
}

}  // namespace pcl
