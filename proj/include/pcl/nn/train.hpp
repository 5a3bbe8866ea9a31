#pragma once

// Seeded single-threaded training loop over (X, V, y) samples. Heavy kernels
// parallelize internally; the optimizer state and parameters are only ever
// touched from this loop.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/image.hpp"
#include "pcl/nn/checkpoint.hpp"
#include "pcl/nn/model.hpp"
#include "pcl/nn/ops.hpp"
#include "pcl/nn/optim.hpp"

namespace pcl::nn {

struct TrainConfig {
    double lambda = 10.0;  // weight of the consistency loss in the joint objective
    int batch_size = 16;
    int epochs = 30;
    double lr_peak = 5e-5;
    AdamConfig adam;  // betas 0.9 / 0.999, eps 1e-8
    std::uint64_t seed = 0;

    void validate() const {
        if (lambda < 0) throw ConfigError("train: lambda must be non-negative");
        if (batch_size <= 0 || epochs <= 0) throw ConfigError("train: batch_size and epochs must be positive");
        if (lr_peak <= 0) throw ConfigError("train: lr_peak must be positive");
    }
};

// One training sample: normalized input, flattened ground-truth consistency
// volume (P*P entries for a P-patch grid), and the binary label.
struct TrainSample {
    Chw x;
    std::vector<float> volume;
    float label = 0.0f;
};

class SampleSource {
  public:
    virtual ~SampleSource() = default;
    virtual void start_epoch(int epoch) = 0;
    virtual bool next(TrainSample& out) = 0;
    virtual std::int64_t epoch_size() const = 0;
};

struct StepRecord {
    std::int64_t step = 0;
    double lr = 0.0;
    double l_pcl = 0.0;
    double l_cls = 0.0;
    double total = 0.0;
};

struct TrainResult {
    std::vector<StepRecord> log;
    std::int64_t steps = 0;
};

namespace detail {

template <typename T>
struct Batch {
    NodePtr<T> x;
    std::shared_ptr<std::vector<T>> volumes;
    std::shared_ptr<std::vector<T>> labels;
    int count = 0;
};

template <typename T>
std::optional<Batch<T>> assemble_batch(SampleSource& src, int batch_size) {
    std::vector<TrainSample> samples;
    samples.reserve(static_cast<std::size_t>(batch_size));
    TrainSample s;
    while (static_cast<int>(samples.size()) < batch_size && src.next(s)) samples.push_back(std::move(s));
    if (samples.empty()) return std::nullopt;

    const int C = samples[0].x.channels, H = samples[0].x.height, W = samples[0].x.width;
    const std::size_t vol = samples[0].volume.size();
    const int B = static_cast<int>(samples.size());

    Batch<T> batch;
    batch.count = B;
    batch.x = make_node<T>({B, C, H, W});
    batch.volumes = std::make_shared<std::vector<T>>();
    batch.volumes->reserve(static_cast<std::size_t>(B) * vol);
    batch.labels = std::make_shared<std::vector<T>>();
    batch.labels->reserve(static_cast<std::size_t>(B));

    for (int b = 0; b < B; ++b) {
        const auto& sm = samples[static_cast<std::size_t>(b)];
        if (sm.x.channels != C || sm.x.height != H || sm.x.width != W)
            throw DimensionError("train: inconsistent sample dimensions within a batch");
        if (sm.volume.size() != vol) throw DimensionError("train: inconsistent volume sizes within a batch");
        const std::size_t off = static_cast<std::size_t>(b) * sm.x.data.size();
        for (std::size_t i = 0; i < sm.x.data.size(); ++i) batch.x->value[off + i] = static_cast<T>(sm.x.data[i]);
        for (float v : sm.volume) batch.volumes->push_back(static_cast<T>(v));
        batch.labels->push_back(static_cast<T>(sm.label));
    }
    return batch;
}

}  // namespace detail

template <typename T>
TrainResult train(PclModel<T>& model, SampleSource& source, const TrainConfig& cfg,
                  const std::string& checkpoint_dir = {}, std::ostream* csv = nullptr) {
    cfg.validate();
    Adam<T> opt(model.parameters(), cfg.adam);

    const std::int64_t per_epoch = (source.epoch_size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::int64_t total_iters = per_epoch * cfg.epochs;
    if (total_iters <= 0) throw DataError("train: empty sample source");

    if (csv) *csv << "step,lr,l_pcl,l_cls,total\n";

    TrainResult result;
    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        source.start_epoch(epoch);
        while (auto batch = detail::assemble_batch<T>(source, cfg.batch_size)) {
            const double lr = lr_schedule(std::min(step, total_iters - 1), total_iters, cfg.lr_peak);

            opt.zero_grad();
            auto f = model.features(batch->x);
            auto p_fake = model.fake_probability(f);
            auto l_cls = bce_mean(p_fake, batch->labels);

            NodePtr<T> loss;
            double l_pcl_val = 0.0;
            if (cfg.lambda > 0) {
                auto v_hat = model.consistency(f);
                if (v_hat->value.size() != batch->volumes->size())
                    throw DimensionError("train: ground-truth volume size does not match the patch grid");
                auto l_pcl = bce_mean(v_hat, batch->volumes);
                l_pcl_val = static_cast<double>(l_pcl->value[0]);
                loss = add(scale(l_pcl, cfg.lambda), l_cls);
            } else {
                loss = l_cls;
            }

            const double total = static_cast<double>(loss->value[0]);
            if (!std::isfinite(total)) throw NumericError("train: non-finite loss at step " + std::to_string(step));

            backward(loss);
            opt.step(lr);
            ++step;

            StepRecord rec{step, lr, l_pcl_val, static_cast<double>(l_cls->value[0]), total};
            result.log.push_back(rec);
            if (csv)
                *csv << rec.step << "," << rec.lr << "," << rec.l_pcl << "," << rec.l_cls << "," << rec.total
                     << "\n";
        }

        if (!checkpoint_dir.empty()) {
            CheckpointMeta meta{model.config().hash(), step, epoch};
            const auto dir = std::filesystem::path(checkpoint_dir);
            save_checkpoint(
                (dir / ("ckpt_epoch_" + std::to_string(epoch) + ".bin")).string(), model, &opt, meta);
            save_checkpoint((dir / "ckpt_last.bin").string(), model, &opt, meta);
        }
    }
    result.steps = step;
    return result;
}

}  // namespace pcl::nn
