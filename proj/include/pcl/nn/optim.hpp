#pragma once

// Adam with bias correction and the warmup/plateau/decay learning-rate
// schedule: linear 0 -> peak over the first quarter of the iterations,
// constant over the middle half, linear peak -> 0 over the last quarter.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/nn/tensor.hpp"

namespace pcl::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
class Adam {
  public:
    Adam(std::vector<std::pair<std::string, NodePtr<T>>> params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].second->value.size(), T(0));
            v_[i].assign(params_[i].second->value.size(), T(0));
        }
    }

    void zero_grad() {
        for (auto& [name, p] : params_) {
            p->ensure_grad();
            p->zero_grad();
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = params_[i].second;
            T* val = p->value.data();
            const T* g = p->grad.data();
            T* m = m_[i].data();
            T* v = v_[i].data();
            for (std::size_t j = 0; j < p->value.size(); ++j) {
                const double gj = static_cast<double>(g[j]);
                const double mj = cfg_.beta1 * static_cast<double>(m[j]) + (1.0 - cfg_.beta1) * gj;
                const double vj = cfg_.beta2 * static_cast<double>(v[j]) + (1.0 - cfg_.beta2) * gj * gj;
                m[j] = static_cast<T>(mj);
                v[j] = static_cast<T>(vj);
                const double mhat = mj / bc1;
                const double vhat = vj / bc2;
                val[j] = static_cast<T>(static_cast<double>(val[j]) - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // Checkpoint access.
    std::vector<std::vector<T>>& moment1() { return m_; }
    std::vector<std::vector<T>>& moment2() { return v_; }
    void set_steps(std::int64_t t) { t_ = t; }

  private:
    std::vector<std::pair<std::string, NodePtr<T>>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<T>> m_, v_;
    std::int64_t t_ = 0;
};

inline double lr_schedule(std::int64_t iter, std::int64_t total_iters, double lr_peak) {
    if (total_iters <= 0) throw ParameterError("lr_schedule: total_iters must be positive");
    if (iter < 0 || iter >= total_iters) throw ParameterError("lr_schedule: iter out of range");
    const double warm = total_iters / 4.0;
    const double decay_start = 3.0 * total_iters / 4.0;
    const double it = static_cast<double>(iter);
    if (it < warm) return lr_peak * (warm > 0 ? it / warm : 1.0);
    if (it < decay_start) return lr_peak;
    return lr_peak * (static_cast<double>(total_iters) - it) / (static_cast<double>(total_iters) - decay_start);
}

}  // namespace pcl::nn
