#pragma once

// Differentiable ops over the tape in tensor.hpp. Layout conventions:
// activations are [N,C,H,W] row-major, fully-connected inputs are [N,F],
// weights are [K,C,kh,kw] / [O,F]. Convolutions run as im2col + small
// hand-rolled matmuls; the batch loop is parallelized with per-chunk
// weight-gradient buffers reduced in chunk order, so results are
// deterministic for a fixed thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/nn/tensor.hpp"

namespace pcl::nn {

// ---------------------------------------------------------------------------
// Matmul kernels (row-major)

namespace kernels {

// C = A[M,K] * B[K,N]
template <typename T>
void mm(const T* A, const T* B, T* C, int M, int K, int N) {
    std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
    for (int i = 0; i < M; ++i) {
        T* c = C + static_cast<std::size_t>(i) * N;
        const T* a = A + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            const T* b = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C += A[M,K] * B[K,N]
template <typename T>
void mm_acc(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        T* c = C + static_cast<std::size_t>(i) * N;
        const T* a = A + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            const T* b = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C[M,N] += A[M,P] * B[N,P]^T  (dot products of contiguous rows)
template <typename T>
void mm_abt_acc(const T* A, const T* B, T* C, int M, int N, int P) {
    for (int i = 0; i < M; ++i) {
        const T* a = A + static_cast<std::size_t>(i) * P;
        T* c = C + static_cast<std::size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const T* b = B + static_cast<std::size_t>(j) * P;
            T acc = T(0);
            for (int p = 0; p < P; ++p) acc += a[p] * b[p];
            c[j] += acc;
        }
    }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <typename T>
void mm_atb_acc(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const T* a = A + static_cast<std::size_t>(m) * K;
        const T* b = B + static_cast<std::size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            T* c = C + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride, int pad, int OH, int OW, T* col) {
    const int P = OH * OW;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                T* dst = col + (static_cast<std::size_t>(c) * kh * kw + static_cast<std::size_t>(ky) * kw + kx) * P;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst, dst + OW, T(0));
                        dst += OW;
                        continue;
                    }
                    const T* src = x + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        *dst++ = (ix < 0 || ix >= W) ? T(0) : src[ix];
                    }
                }
            }
}

template <typename T>
void col2im_add(const T* col, int C, int H, int W, int kh, int kw, int stride, int pad, int OH, int OW, T* x) {
    const int P = OH * OW;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                const T* src = col + (static_cast<std::size_t>(c) * kh * kw + static_cast<std::size_t>(ky) * kw + kx) * P;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        src += OW;
                        continue;
                    }
                    T* dst = x + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) dst[ix] += src[ox];
                    }
                    src += OW;
                }
            }
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Convolution

template <typename T>
NodePtr<T> conv2d(const NodePtr<T>& x, const NodePtr<T>& w, const NodePtr<T>& b, int stride, int pad) {
    if (x->shape.size() != 4 || w->shape.size() != 4) throw DimensionError("conv2d: expects 4D tensors");
    const int N = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    const int K = w->dim(0), kh = w->dim(2), kw = w->dim(3);
    if (w->dim(1) != C) throw DimensionError("conv2d: channel mismatch");
    if (b && (b->shape.size() != 1 || b->dim(0) != K)) throw DimensionError("conv2d: bad bias shape");
    const int OH = (H + 2 * pad - kh) / stride + 1;
    const int OW = (W + 2 * pad - kw) / stride + 1;
    if (OH <= 0 || OW <= 0) throw DimensionError("conv2d: non-positive output dims");

    auto out = make_node<T>({N, K, OH, OW});
    const int CK2 = C * kh * kw;
    const int P = OH * OW;

    const std::size_t x_stride = static_cast<std::size_t>(C) * H * W;
    const std::size_t y_stride = static_cast<std::size_t>(K) * P;

    parallel_chunks(N, [&](std::int64_t n0, std::int64_t n1, int) {
        std::vector<T> col(static_cast<std::size_t>(CK2) * P);
        for (std::int64_t n = n0; n < n1; ++n) {
            kernels::im2col(x->value.data() + static_cast<std::size_t>(n) * x_stride, C, H, W, kh, kw, stride, pad,
                            OH, OW, col.data());
            T* y = out->value.data() + static_cast<std::size_t>(n) * y_stride;
            kernels::mm(w->value.data(), col.data(), y, K, CK2, P);
            if (b)
                for (int k = 0; k < K; ++k) {
                    const T bv = b->value[static_cast<std::size_t>(k)];
                    T* row = y + static_cast<std::size_t>(k) * P;
                    for (int p = 0; p < P; ++p) row[p] += bv;
                }
        }
    });

    out->parents = {x, w};
    if (b) out->parents.push_back(b);
    Node<T>* xp = x.get();
    Node<T>* wp = w.get();
    Node<T>* bp = b ? b.get() : nullptr;
    const bool need_dx = xp->requires_grad || !xp->parents.empty();

    out->backward_fn = [xp, wp, bp, need_dx, N, C, H, W, K, kh, kw, stride, pad, OH, OW, CK2, P, x_stride,
                        y_stride](Node<T>& self) {
        const int threads = std::max(1, worker_threads());
        std::vector<std::vector<T>> dw_parts(static_cast<std::size_t>(threads));
        std::vector<std::vector<T>> db_parts(static_cast<std::size_t>(threads));

        parallel_chunks(N, [&](std::int64_t n0, std::int64_t n1, int chunk) {
            auto& dw = dw_parts[static_cast<std::size_t>(chunk)];
            auto& db = db_parts[static_cast<std::size_t>(chunk)];
            dw.assign(static_cast<std::size_t>(K) * CK2, T(0));
            if (bp) db.assign(static_cast<std::size_t>(K), T(0));
            std::vector<T> col(static_cast<std::size_t>(CK2) * P);
            std::vector<T> dcol(static_cast<std::size_t>(CK2) * P);
            for (std::int64_t n = n0; n < n1; ++n) {
                const T* dy = self.grad.data() + static_cast<std::size_t>(n) * y_stride;
                kernels::im2col(xp->value.data() + static_cast<std::size_t>(n) * x_stride, C, H, W, kh, kw, stride,
                                pad, OH, OW, col.data());
                kernels::mm_abt_acc(dy, col.data(), dw.data(), K, CK2, P);
                if (bp)
                    for (int k = 0; k < K; ++k) {
                        const T* row = dy + static_cast<std::size_t>(k) * P;
                        T acc = T(0);
                        for (int p = 0; p < P; ++p) acc += row[p];
                        db[static_cast<std::size_t>(k)] += acc;
                    }
                if (need_dx) {
                    std::fill(dcol.begin(), dcol.end(), T(0));
                    kernels::mm_atb_acc(wp->value.data(), dy, dcol.data(), K, CK2, P);
                    kernels::col2im_add(dcol.data(), C, H, W, kh, kw, stride, pad, OH, OW,
                                        xp->grad.data() + static_cast<std::size_t>(n) * x_stride);
                }
            }
        });

        for (const auto& dw : dw_parts)
            for (std::size_t i = 0; i < dw.size(); ++i) wp->grad[i] += dw[i];
        if (bp)
            for (const auto& db : db_parts)
                for (std::size_t i = 0; i < db.size(); ++i) bp->grad[i] += db[i];
    };
    return out;
}

// ---------------------------------------------------------------------------
// Pointwise and pooling ops

template <typename T>
NodePtr<T> relu(const NodePtr<T>& x) {
    auto out = make_node<T>(x->shape);
    for (std::size_t i = 0; i < x->value.size(); ++i) out->value[i] = x->value[i] > T(0) ? x->value[i] : T(0);
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp](Node<T>& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (xp->value[i] > T(0)) xp->grad[i] += self.grad[i];
    };
    return out;
}

template <typename T>
NodePtr<T> sigmoid(const NodePtr<T>& x) {
    auto out = make_node<T>(x->shape);
    for (std::size_t i = 0; i < x->value.size(); ++i) out->value[i] = T(1) / (T(1) + std::exp(-x->value[i]));
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp](Node<T>& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T y = self.value[i];
            xp->grad[i] += self.grad[i] * y * (T(1) - y);
        }
    };
    return out;
}

template <typename T>
NodePtr<T> add(const NodePtr<T>& a, const NodePtr<T>& b) {
    if (a->shape != b->shape) throw DimensionError("add: shape mismatch");
    auto out = make_node<T>(a->shape);
    for (std::size_t i = 0; i < a->value.size(); ++i) out->value[i] = a->value[i] + b->value[i];
    out->parents = {a, b};
    Node<T>* ap = a.get();
    Node<T>* bp = b.get();
    out->backward_fn = [ap, bp](Node<T>& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            ap->grad[i] += self.grad[i];
            bp->grad[i] += self.grad[i];
        }
    };
    return out;
}

template <typename T>
NodePtr<T> scale(const NodePtr<T>& x, double s) {
    auto out = make_node<T>(x->shape);
    for (std::size_t i = 0; i < x->value.size(); ++i) out->value[i] = static_cast<T>(s) * x->value[i];
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp, s](Node<T>& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) xp->grad[i] += static_cast<T>(s) * self.grad[i];
    };
    return out;
}

template <typename T>
NodePtr<T> max_pool2d(const NodePtr<T>& x, int k, int stride) {
    if (x->shape.size() != 4) throw DimensionError("max_pool2d: expects 4D tensor");
    const int N = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    const int OH = (H - k) / stride + 1;
    const int OW = (W - k) / stride + 1;
    if (OH <= 0 || OW <= 0) throw DimensionError("max_pool2d: non-positive output dims");

    auto out = make_node<T>({N, C, OH, OW});
    auto argmax = std::make_shared<std::vector<std::int32_t>>(out->value.size());
    std::size_t o = 0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* plane = x->value.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
            const std::int32_t base = static_cast<std::int32_t>((static_cast<std::size_t>(n) * C + c) * H * W);
            for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox, ++o) {
                    T best = plane[(oy * stride) * W + ox * stride];
                    std::int32_t best_i = base + (oy * stride) * W + ox * stride;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride + ky, ix = ox * stride + kx;
                            const T v = plane[iy * W + ix];
                            if (v > best) {
                                best = v;
                                best_i = base + iy * W + ix;
                            }
                        }
                    out->value[o] = best;
                    (*argmax)[o] = best_i;
                }
        }
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp, argmax](Node<T>& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            xp->grad[static_cast<std::size_t>((*argmax)[i])] += self.grad[i];
    };
    return out;
}

template <typename T>
NodePtr<T> global_avg_pool(const NodePtr<T>& x) {
    if (x->shape.size() != 4) throw DimensionError("global_avg_pool: expects 4D tensor");
    const int N = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    auto out = make_node<T>({N, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* p = x->value.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            out->value[static_cast<std::size_t>(n) * C + c] = acc / static_cast<T>(plane);
        }
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp, N, C, plane](Node<T>& self) {
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const T g = self.grad[static_cast<std::size_t>(n) * C + c] / static_cast<T>(plane);
                T* p = xp->grad.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) p[i] += g;
            }
    };
    return out;
}

// ---------------------------------------------------------------------------
// Fully connected, softmax, column selection

template <typename T>
NodePtr<T> linear(const NodePtr<T>& x, const NodePtr<T>& w, const NodePtr<T>& b) {
    if (x->shape.size() != 2 || w->shape.size() != 2) throw DimensionError("linear: expects 2D tensors");
    const int N = x->dim(0), F = x->dim(1), O = w->dim(0);
    if (w->dim(1) != F) throw DimensionError("linear: feature mismatch");
    if (b && (b->shape.size() != 1 || b->dim(0) != O)) throw DimensionError("linear: bad bias shape");

    auto out = make_node<T>({N, O});
    kernels::mm_abt_acc(x->value.data(), w->value.data(), out->value.data(), N, O, F);
    if (b)
        for (int n = 0; n < N; ++n)
            for (int o = 0; o < O; ++o) out->value[static_cast<std::size_t>(n) * O + o] += b->value[static_cast<std::size_t>(o)];

    out->parents = {x, w};
    if (b) out->parents.push_back(b);
    Node<T>* xp = x.get();
    Node<T>* wp = w.get();
    Node<T>* bp = b ? b.get() : nullptr;
    out->backward_fn = [xp, wp, bp, N, F, O](Node<T>& self) {
        kernels::mm_acc(self.grad.data(), wp->value.data(), xp->grad.data(), N, O, F);
        kernels::mm_atb_acc(self.grad.data(), xp->value.data(), wp->grad.data(), N, O, F);
        if (bp)
            for (int n = 0; n < N; ++n)
                for (int o = 0; o < O; ++o) bp->grad[static_cast<std::size_t>(o)] += self.grad[static_cast<std::size_t>(n) * O + o];
    };
    return out;
}

template <typename T>
NodePtr<T> softmax_rows(const NodePtr<T>& x) {
    if (x->shape.size() != 2) throw DimensionError("softmax_rows: expects 2D tensor");
    const int N = x->dim(0), O = x->dim(1);
    auto out = make_node<T>(x->shape);
    for (int n = 0; n < N; ++n) {
        const T* in = x->value.data() + static_cast<std::size_t>(n) * O;
        T* y = out->value.data() + static_cast<std::size_t>(n) * O;
        T mx = in[0];
        for (int o = 1; o < O; ++o) mx = std::max(mx, in[o]);
        T sum = T(0);
        for (int o = 0; o < O; ++o) {
            y[o] = std::exp(in[o] - mx);
            sum += y[o];
        }
        for (int o = 0; o < O; ++o) y[o] /= sum;
    }
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp, N, O](Node<T>& self) {
        for (int n = 0; n < N; ++n) {
            const T* y = self.value.data() + static_cast<std::size_t>(n) * O;
            const T* dy = self.grad.data() + static_cast<std::size_t>(n) * O;
            T dot = T(0);
            for (int o = 0; o < O; ++o) dot += dy[o] * y[o];
            T* dx = xp->grad.data() + static_cast<std::size_t>(n) * O;
            for (int o = 0; o < O; ++o) dx[o] += y[o] * (dy[o] - dot);
        }
    };
    return out;
}

template <typename T>
NodePtr<T> select_column(const NodePtr<T>& x, int col) {
    if (x->shape.size() != 2) throw DimensionError("select_column: expects 2D tensor");
    const int N = x->dim(0), O = x->dim(1);
    if (col < 0 || col >= O) throw DimensionError("select_column: column out of range");
    auto out = make_node<T>({N});
    for (int n = 0; n < N; ++n) out->value[static_cast<std::size_t>(n)] = x->value[static_cast<std::size_t>(n) * O + col];
    out->parents = {x};
    Node<T>* xp = x.get();
    out->backward_fn = [xp, O, col](Node<T>& self) {
        for (std::size_t n = 0; n < self.grad.size(); ++n) xp->grad[n * static_cast<std::size_t>(O) + static_cast<std::size_t>(col)] += self.grad[n];
    };
    return out;
}

// ---------------------------------------------------------------------------
// Batched pairwise similarity: a, b are [N, C, P] (or [N, C, H, W] with the
// spatial axes flattened); output [N, P, P] with out[n,i,j] = sum_c
// a[n,c,i] * b[n,c,j].

template <typename T>
NodePtr<T> bmm_tn(const NodePtr<T>& a, const NodePtr<T>& b) {
    if (a->shape.size() < 3 || b->shape.size() != a->shape.size()) throw DimensionError("bmm_tn: bad ranks");
    const int N = a->dim(0), C = a->dim(1);
    int P = 1;
    for (std::size_t d = 2; d < a->shape.size(); ++d) P *= a->shape[d];
    if (b->dim(0) != N || b->dim(1) != C || b->numel() != a->numel()) throw DimensionError("bmm_tn: shape mismatch");

    auto out = make_node<T>({N, P, P});
    const std::size_t in_stride = static_cast<std::size_t>(C) * P;
    const std::size_t out_stride = static_cast<std::size_t>(P) * P;
    parallel_chunks(N, [&](std::int64_t n0, std::int64_t n1, int) {
        for (std::int64_t n = n0; n < n1; ++n)
            kernels::mm_atb_acc(a->value.data() + static_cast<std::size_t>(n) * in_stride,
                                b->value.data() + static_cast<std::size_t>(n) * in_stride,
                                out->value.data() + static_cast<std::size_t>(n) * out_stride, C, P, P);
    });

    out->parents = {a, b};
    Node<T>* ap = a.get();
    Node<T>* bp = b.get();
    out->backward_fn = [ap, bp, N, C, P, in_stride, out_stride](Node<T>& self) {
        parallel_chunks(N, [&](std::int64_t n0, std::int64_t n1, int) {
            for (std::int64_t n = n0; n < n1; ++n) {
                const T* dO = self.grad.data() + static_cast<std::size_t>(n) * out_stride;
                const T* av = ap->value.data() + static_cast<std::size_t>(n) * in_stride;
                const T* bv = bp->value.data() + static_cast<std::size_t>(n) * in_stride;
                // da[c,i] += sum_j b[c,j] * dO[i,j];  db[c,j] += sum_i a[c,i] * dO[i,j]
                kernels::mm_abt_acc(bv, dO, ap->grad.data() + static_cast<std::size_t>(n) * in_stride, C, P, P);
                kernels::mm_acc(av, dO, bp->grad.data() + static_cast<std::size_t>(n) * in_stride, C, P, P);
            }
        });
    };
    return out;
}

// ---------------------------------------------------------------------------
// Losses

inline constexpr double kProbClamp = 1e-7;

// Mean binary cross-entropy of predictions against fixed targets.
// Predictions are clamped to [1e-7, 1-1e-7]; outside that range the true
// subgradient is zero (the clamp is flat), which keeps losses finite at
// saturation.
template <typename T>
NodePtr<T> bce_mean(const NodePtr<T>& pred, std::shared_ptr<std::vector<T>> targets) {
    if (!targets || targets->size() != pred->value.size())
        throw DimensionError("bce_mean: target size mismatch");
    const std::size_t M = pred->value.size();
    const T lo = static_cast<T>(kProbClamp);
    const T hi = T(1) - static_cast<T>(kProbClamp);

    auto out = make_node<T>({1});
    double acc = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        const T p = std::clamp(pred->value[i], lo, hi);
        const double t = static_cast<double>((*targets)[i]);
        acc += -(t * std::log(static_cast<double>(p)) + (1.0 - t) * std::log(1.0 - static_cast<double>(p)));
    }
    out->value[0] = static_cast<T>(acc / static_cast<double>(M));

    out->parents = {pred};
    Node<T>* pp = pred.get();
    out->backward_fn = [pp, targets, M, lo, hi](Node<T>& self) {
        const T g = self.grad[0] / static_cast<T>(M);
        for (std::size_t i = 0; i < M; ++i) {
            const T p = pp->value[i];
            if (p < lo || p > hi) continue;
            const T t = (*targets)[i];
            pp->grad[i] += g * (p - t) / (p * (T(1) - p));
        }
    };
    return out;
}

// Scalar closed forms used by both the graph ops above and the evaluation
// paths; clamping matches bce_mean.
inline double bce_scalar(double target, double p) {
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

inline double cls_loss(int label, double fake_probability) {
    return bce_scalar(label ? 1.0 : 0.0, fake_probability);
}

inline double total_loss(double l_pcl, double l_cls, double lambda) {
    if (lambda < 0) throw ParameterError("total_loss: lambda must be non-negative");
    return lambda * l_pcl + l_cls;
}

}  // namespace pcl::nn
