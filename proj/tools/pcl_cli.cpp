// Operator CLI: generate (batch inconsistency-image synthesis), train, eval,
// and heatmap export. Exit codes: 0 success, 1 config/data error, 2 numeric
// failure, 3 partial batch failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcl/pcl.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key=value config file");
    cmd->add_option("--seed", flags.seed, "master seed override");
    cmd->add_option("--jobs", flags.jobs, "worker thread cap");
    cmd->add_option("--out", flags.out, "output directory override");
}

pcl::RunConfig load_config(const CommonFlags& flags) {
    pcl::RunConfig cfg = pcl::RunConfig::load(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.jobs) cfg.jobs = *flags.jobs;
    if (flags.out) cfg.out_dir = *flags.out;
    if (cfg.jobs > 0) pcl::worker_threads() = cfg.jobs;
    cfg.data.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    return cfg;
}

pcl::Image load_resized(const std::string& path, int size) {
    pcl::Image img = pcl::read_image(path);
    if (img.height != size || img.width != size) img = pcl::resize_bilinear(img, size, size);
    return img;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const CommonFlags& flags, int count) {
    pcl::RunConfig cfg = load_config(flags);
    cfg.validate();
    pcl::CorpusManifest manifest = cfg.load_manifest();

    // Pool of real faces with landmarks; entries without landmarks are
    // per-item skips, not fatal.
    pcl::ImageCache cache;
    std::vector<pcl::FaceRecord> pool;
    int skipped_entries = 0;
    for (const auto& e : manifest.entries) {
        if (e.role != pcl::ManifestEntry::Role::real) continue;
        if (e.landmarks_path.empty()) {
            ++skipped_entries;
            std::cerr << "skip (no landmarks): " << e.image_path << "\n";
            continue;
        }
        pool.push_back(pcl::load_face_record(e, cache));
    }
    if (pool.empty()) {
        std::cerr << "error: no usable real faces with landmarks\n";
        return 1;
    }

    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);
    const fs::path manifest_path = out_dir / "generated.jsonl";

    // Resumable: an item whose outputs already exist is not regenerated, and
    // its manifest line is rewritten from the per-item seed.
    std::ofstream mf(manifest_path);
    if (!mf) {
        std::cerr << "error: cannot write " << manifest_path << "\n";
        return 1;
    }

    int failures = 0;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t item_seed = pcl::Rng::derive_seed(cfg.seed, 0x67656eULL + static_cast<std::uint64_t>(i));
        pcl::Rng rng(item_seed);
        const auto& target = pool[rng.uniform_int(pool.size())];

        char name[32];
        std::snprintf(name, sizeof(name), "pair_%05d", i);
        const fs::path forged_path = out_dir / (std::string(name) + ".png");
        const fs::path mask_path = out_dir / (std::string(name) + "_mask.png");

        try {
            pcl::I2GConfig icfg = cfg.data.i2g;
            icfg.seed = item_seed;
            pcl::GeneratedPair pair = pcl::generate(target, pool, icfg, rng);
            if (!fs::exists(forged_path) || !fs::exists(mask_path)) {
                pcl::write_png_rgb(forged_path.string(), pair.forged);
                pcl::write_png_gray(mask_path.string(), pair.mask);
            }
            nlohmann::json j{{"image", forged_path.filename().string()},
                             {"mask", mask_path.filename().string()},
                             {"target", pair.target_id},
                             {"source", pair.source_id},
                             {"blend_method", pcl::blend_method_name(pair.blend_method)},
                             {"seed", item_seed},
                             {"epsilon", icfg.epsilon}};
            mf << j.dump() << "\n";
        } catch (const pcl::NoSourceError& e) {
            ++failures;
            std::cerr << "skip " << name << ": " << e.what() << "\n";
        }
    }

    std::cout << "generated " << (count - failures) << "/" << count << " pairs";
    if (skipped_entries) std::cout << " (" << skipped_entries << " manifest entries without landmarks)";
    std::cout << "\n";
    return (failures > 0 || skipped_entries > 0) ? 3 : 0;
}

// ---------------------------------------------------------------------------
// train

class ResizingSource final : public pcl::nn::SampleSource {
  public:
    ResizingSource(pcl::TrainingSource& inner, int size) : inner_(inner), size_(size) {}
    void start_epoch(int epoch) override { inner_.start_epoch(epoch); }
    std::int64_t epoch_size() const override { return inner_.epoch_size(); }
    bool next(pcl::nn::TrainSample& out) override { return inner_.next(out); }

  private:
    pcl::TrainingSource& inner_;
    int size_;
};

int cmd_train(const CommonFlags& flags, std::optional<double> lambda, std::optional<std::string> preset) {
    pcl::RunConfig cfg = load_config(flags);
    if (lambda) cfg.train.lambda = *lambda;
    if (preset) {
        if (*preset == "in_dataset")
            cfg.data.only_real = false;
        else if (*preset == "cross_dataset")
            cfg.data.only_real = true;
        else {
            std::cerr << "error: --preset must be in_dataset or cross_dataset\n";
            return 1;
        }
    }
    cfg.validate();

    pcl::CorpusManifest manifest = cfg.load_manifest();
    pcl::TrainingSource source(std::move(manifest), cfg.data, &std::cerr);

    fs::create_directories(cfg.out_dir);
    std::ofstream csv((fs::path(cfg.out_dir) / "train_log.csv").string());

    pcl::nn::PclModel<float> model(cfg.model, cfg.seed);
    try {
        pcl::nn::TrainResult result = pcl::nn::train(model, source, cfg.train, cfg.out_dir, &csv);
        std::cout << "trained " << result.steps << " steps; checkpoints in " << cfg.out_dir << "\n";
    } catch (const pcl::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << " (last checkpoint retained)\n";
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint, const std::string& manifest_arg) {
    pcl::RunConfig cfg = load_config(flags);
    if (!manifest_arg.empty()) {
        if (fs::is_directory(manifest_arg)) {
            cfg.data_root = manifest_arg;
            cfg.data_manifest.clear();
        } else {
            cfg.data_manifest = manifest_arg;
            cfg.data_root.clear();
        }
    }
    cfg.validate();

    pcl::nn::PclModel<float> model(cfg.model, cfg.seed);
    pcl::nn::load_checkpoint(checkpoint, model, static_cast<pcl::nn::Adam<float>*>(nullptr));

    pcl::CorpusManifest manifest = cfg.load_manifest();
    fs::create_directories(cfg.out_dir);

    pcl::ScoredSet frames;
    std::ofstream scores_csv((fs::path(cfg.out_dir) / "scores.csv").string());
    scores_csv << "id,video,label,score\n";
    for (const auto& e : manifest.entries) {
        const pcl::Image img = load_resized(e.image_path, cfg.input_size);
        const pcl::Chw x = pcl::normalize_for_network(img);
        auto node = pcl::nn::make_input<float>({1, x.channels, x.height, x.width}, x.data);
        auto prob = model.fake_probability(model.features(node));
        const double score = static_cast<double>(prob->value[0]);
        const int label = e.role == pcl::ManifestEntry::Role::fake ? 1 : 0;
        frames.items.push_back({score, label, e.video});
        scores_csv << e.image_path << "," << e.video << "," << label << "," << score << "\n";
    }

    try {
        const pcl::ScoredSet videos = pcl::video_level(frames);
        nlohmann::json j{{"auc", pcl::auc(videos)},
                         {"ap", pcl::average_precision(videos)},
                         {"eer", pcl::eer(videos)},
                         {"n_videos", videos.items.size()},
                         {"n_frames", frames.items.size()}};
        std::ofstream mj((fs::path(cfg.out_dir) / "metrics.json").string());
        mj << j.dump(2) << "\n";
        std::cout << j.dump(2) << "\n";
    } catch (const pcl::MetricError& e) {
        std::cerr << "warning: metrics omitted (" << e.what() << "); scores written\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// heatmap

int cmd_heatmap(const CommonFlags& flags, const std::string& checkpoint, const std::string& image_path,
                const std::string& landmarks_path) {
    pcl::RunConfig cfg = load_config(flags);
    cfg.model.validate();
    if (cfg.jobs > 0) pcl::worker_threads() = cfg.jobs;

    pcl::nn::PclModel<float> model(cfg.model, cfg.seed);
    pcl::nn::load_checkpoint(checkpoint, model, static_cast<pcl::nn::Adam<float>*>(nullptr));

    pcl::Image img = pcl::read_image(image_path);
    if (img.height % 16 != 0 || img.width % 16 != 0) {
        std::cerr << "warning: image dims not divisible by 16; resizing to " << cfg.input_size << "x"
                  << cfg.input_size << "\n";
        img = pcl::resize_bilinear(img, cfg.input_size, cfg.input_size);
    }
    if (!landmarks_path.empty()) pcl::load_landmarks(landmarks_path);  // validated, not needed for inference

    const pcl::Chw x = pcl::normalize_for_network(img);
    auto node = pcl::nn::make_input<float>({1, x.channels, x.height, x.width}, x.data);
    auto f = model.features(node);
    auto v_hat = model.consistency(f);

    pcl::ConsistencyVolume vol(f->dim(2), f->dim(3));
    vol.data = v_hat->value;
    pcl::Heatmap hm = pcl::fuse_heatmap(vol);
    hm = pcl::upsample_heatmap(std::move(hm), img.height, img.width);

    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);
    const std::string stem = fs::path(image_path).stem().string();
    pcl::write_png_gray((out_dir / (stem + "_heatmap_coarse.png")).string(), hm.coarse);
    pcl::write_png_gray((out_dir / (stem + "_heatmap_full.png")).string(), hm.full);
    pcl::write_png_rgb((out_dir / (stem + "_heatmap_overlay.png")).string(), pcl::heatmap_overlay(img, hm.full));
    std::cout << "heatmaps written to " << cfg.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patch-consistency forgery detection toolkit"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, eval_flags, heat_flags;
    int gen_count = 0;
    std::optional<double> lambda;
    std::optional<std::string> preset;
    std::string checkpoint, eval_manifest, heat_image, heat_landmarks;

    CLI::App* gen = app.add_subcommand("generate", "write a batch of generated pairs + manifest");
    add_common(gen, gen_flags);
    gen->add_option("--count", gen_count, "number of pairs")->required();

    CLI::App* train = app.add_subcommand("train", "train the detector");
    add_common(train, train_flags);
    train->add_option("--lambda", lambda, "consistency loss weight override");
    train->add_option("--preset", preset, "in_dataset | cross_dataset");

    CLI::App* eval = app.add_subcommand("eval", "score a manifest and emit video-level metrics");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval->add_option("--manifest", eval_manifest, "manifest file or corpus directory");

    CLI::App* heat = app.add_subcommand("heatmap", "export consistency heatmaps for one image");
    add_common(heat, heat_flags);
    heat->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    heat->add_option("--image", heat_image, "input image")->required();
    heat->add_option("--landmarks", heat_landmarks, "optional landmark sidecar");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(gen_flags, gen_count);
        if (train->parsed()) return cmd_train(train_flags, lambda, preset);
        if (eval->parsed()) return cmd_eval(eval_flags, checkpoint, eval_manifest);
        if (heat->parsed()) return cmd_heatmap(heat_flags, checkpoint, heat_image, heat_landmarks);
    } catch (const pcl::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const pcl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
