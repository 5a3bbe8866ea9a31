#pragma once

// The detection network: a small normalization-free backbone with total
// stride 16, a pairwise-consistency head (1x1 embeddings, scaled
// dot-product, sigmoid), and a binary classification branch (conv -> global
// average pool -> fc -> softmax).

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/nn/ops.hpp"
#include "pcl/nn/tensor.hpp"

namespace pcl::nn {

struct ModelConfig {
    int in_channels = 3;
    std::array<int, 4> stage_widths{16, 32, 64, 64};
    int embed_dim = 32;  // C' of the similarity head; default C/2

    int feature_channels() const { return stage_widths[3]; }
    static constexpr int stride = 16;

    std::string canonical() const {
        std::ostringstream ss;
        ss << "in=" << in_channels << ";widths=" << stage_widths[0] << "," << stage_widths[1] << ","
           << stage_widths[2] << "," << stage_widths[3] << ";embed=" << embed_dim;
        return ss.str();
    }
    std::uint64_t hash() const { return fnv1a64(canonical()); }

    void validate() const {
        for (int w : stage_widths)
            if (w <= 0) throw ConfigError("model: stage widths must be positive");
        if (embed_dim <= 0) throw ConfigError("model: embed_dim must be positive");
        if (in_channels <= 0) throw ConfigError("model: in_channels must be positive");
    }
};

template <typename T>
class PclModel {
  public:
    PclModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(Rng::derive_seed(seed, 0x6d6f64656cULL));

        int c_in = cfg_.in_channels;
        for (int s = 0; s < 4; ++s) {
            const int c_out = cfg_.stage_widths[static_cast<std::size_t>(s)];
            const std::string prefix = "backbone.s" + std::to_string(s + 1);
            stages_[static_cast<std::size_t>(s)].down = add_conv(prefix + ".down", c_out, c_in, 3, rng, true);
            stages_[static_cast<std::size_t>(s)].r1 = add_conv(prefix + ".r1", c_out, c_out, 3, rng, true);
            stages_[static_cast<std::size_t>(s)].r2 = add_conv(prefix + ".r2", c_out, c_out, 3, rng, true);
            c_in = c_out;
        }
        const int C = cfg_.feature_channels();
        cls_conv_ = add_conv("cls.conv", C, C, 3, rng, true);
        // small fc init: the classifier starts at the prior instead of a
        // saturated softmax
        fc_w_ = register_param("cls.fc.w", make_param<T>({2, C}, rng, 0.1 * std::sqrt(1.0 / C)));
        fc_b_ = register_param("cls.fc.b", make_param<T>({2}, rng, 0.0));
        theta_w_ = register_param("head.theta.w", make_param<T>({cfg_.embed_dim, C, 1, 1}, rng, std::sqrt(1.0 / C)));
        phi_w_ = register_param("head.phi.w", make_param<T>({cfg_.embed_dim, C, 1, 1}, rng, std::sqrt(1.0 / C)));
    }

    const ModelConfig& config() const { return cfg_; }

    // Backbone: four stride-2 stages, each a downsampling conv followed by a
    // residual pair of 3x3 convs. The residual branch is scaled down so the
    // activation variance stays roughly constant with depth without any
    // normalization layers. Output is [N, C, H/16, W/16].
    static constexpr double kResidualScale = 0.25;

    NodePtr<T> features(const NodePtr<T>& x) const {
        if (x->shape.size() != 4) throw DimensionError("features: expects [N,C,H,W]");
        if (x->dim(2) % ModelConfig::stride != 0 || x->dim(3) % ModelConfig::stride != 0)
            throw DimensionError("features: input spatial dims must be divisible by 16");
        NodePtr<T> h = x;
        for (const auto& st : stages_) {
            h = relu(conv2d(h, st.down.w, st.down.b, 2, 1));
            auto r = conv2d(relu(conv2d(h, st.r1.w, st.r1.b, 1, 1)), st.r2.w, st.r2.b, 1, 1);
            h = relu(add(h, scale(r, kResidualScale)));
        }
        return h;
    }

    // Predicted consistency volume: sigmoid(theta(f_i) . phi(f_j) / sqrt(C'))
    // over all patch pairs, shape [N, P, P] with P = H'*W'.
    NodePtr<T> consistency(const NodePtr<T>& f) const {
        if (f->dim(1) != cfg_.feature_channels()) throw DimensionError("consistency: channel mismatch");
        auto theta = conv2d(f, theta_w_, NodePtr<T>(), 1, 0);
        auto phi = conv2d(f, phi_w_, NodePtr<T>(), 1, 0);
        auto sim = bmm_tn(theta, phi);
        return sigmoid(scale(sim, 1.0 / std::sqrt(static_cast<double>(cfg_.embed_dim))));
    }

    // Classification branch: conv -> relu -> GAP -> fc -> softmax; returns
    // the fake-class probability, shape [N].
    NodePtr<T> fake_probability(const NodePtr<T>& f) const {
        auto h = relu(conv2d(f, cls_conv_.w, cls_conv_.b, 1, 1));
        auto pooled = global_avg_pool(h);
        auto logits = linear(pooled, fc_w_, fc_b_);
        return select_column(softmax_rows(logits), 1);
    }

    std::vector<std::pair<std::string, NodePtr<T>>>& parameters() { return params_; }
    const std::vector<std::pair<std::string, NodePtr<T>>>& parameters() const { return params_; }

    NodePtr<T> theta_weights() const { return theta_w_; }
    NodePtr<T> phi_weights() const { return phi_w_; }

  private:
    struct Conv {
        NodePtr<T> w, b;
    };
    struct Stage {
        Conv down, r1, r2;
    };

    Conv add_conv(const std::string& name, int k, int c, int ksize, Rng& rng, bool bias) {
        Conv conv;
        const double std = std::sqrt(2.0 / (c * ksize * ksize));
        conv.w = register_param(name + ".w", make_param<T>({k, c, ksize, ksize}, rng, std));
        if (bias) conv.b = register_param(name + ".b", make_param<T>({k}, rng, 0.0));
        return conv;
    }

    NodePtr<T> register_param(const std::string& name, NodePtr<T> p) {
        params_.emplace_back(name, p);
        return p;
    }

    ModelConfig cfg_;
    std::array<Stage, 4> stages_;
    Conv cls_conv_;
    NodePtr<T> fc_w_, fc_b_, theta_w_, phi_w_;
    std::vector<std::pair<std::string, NodePtr<T>>> params_;
};

// Convenience wrapper matching the backbone contract by name.
template <typename T>
NodePtr<T> forward_backbone(const PclModel<T>& model, const NodePtr<T>& x) {
    return model.features(x);
}

}  // namespace pcl::nn
