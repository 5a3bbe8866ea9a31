// Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
// Criteria 6 and 7 share one end-to-end toy experiment (trained once,
// lazily) whose derived quantities are pinned below.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numeric>

#include "pcl/pcl.hpp"
#include "support/grad_check.hpp"
#include "support/toy_faces.hpp"

using namespace pcl;

namespace {

struct CriterionBanner {
    int id;
    const char* name;
    ~CriterionBanner() {
        std::cout << "[CRITERION " << id << "] " << name << ": "
                  << (::testing::Test::HasFailure() ? "FAIL" : "PASS") << std::endl;
    }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ===========================================================================
// Criterion 1: ground-truth volume equals a quadruple-loop brute force
// exactly on 200 random coarse masks; pristine masks give the all-ones
// volume. Runtime < 5 s.

TEST(Acceptance, C1_GroundTruthVolumeOracle) {
    CriterionBanner banner{1, "gt_volume quadruple-loop oracle"};
    const auto t0 = std::chrono::steady_clock::now();

    Rng rng(101);
    auto run_size = [&](int hp, int wp, int count) {
        for (int trial = 0; trial < count; ++trial) {
            CoarseMask cm(hp, wp);
            for (auto& v : cm.data) v = static_cast<float>(rng.uniform());
            const ConsistencyVolume got = gt_volume(cm);
            for (int h = 0; h < hp; ++h)
                for (int w = 0; w < wp; ++w)
                    for (int h2 = 0; h2 < hp; ++h2)
                        for (int w2 = 0; w2 < wp; ++w2) {
                            const float want = 1.0f - std::abs(cm.at(h, w) - cm.at(h2, w2));
                            if (got.at(h, w, h2, w2) != want) {
                                ADD_FAILURE() << "mismatch at " << h << "," << w << "," << h2 << "," << w2;
                                return;
                            }
                        }
        }
    };
    run_size(4, 4, 100);
    run_size(16, 16, 100);

    const ConsistencyVolume pristine = gt_volume(CoarseMask(16, 16, 0.0f));
    for (float v : pristine.data)
        if (v != 1.0f) {
            ADD_FAILURE() << "pristine volume is not all ones";
            break;
        }

    EXPECT_LT(seconds_since(t0), 5.0);
}

// ===========================================================================
// Criterion 2: the consistency head equals a nested-loop sigmoid-dot-product
// oracle to 1e-6 on random 4x4x8 feature grids, including the sqrt(C')
// scaling. Runtime < 5 s.

TEST(Acceptance, C2_ConsistencyHeadOracle) {
    CriterionBanner banner{2, "consistency head nested-loop oracle"};
    const auto t0 = std::chrono::steady_clock::now();

    const nn::ModelConfig cfg{3, {8, 8, 8, 8}, 4};  // C = 8, C' = 4
    Rng rng(102);
    for (int trial = 0; trial < 25; ++trial) {
        nn::PclModel<float> model(cfg, 500 + static_cast<std::uint64_t>(trial));
        auto f = nn::make_node<float>({1, 8, 4, 4});
        for (auto& v : f->value) v = static_cast<float>(rng.uniform(-1, 1));
        auto v_hat = model.consistency(f);
        ASSERT_EQ(v_hat->shape, (std::vector<int>{1, 16, 16}));

        const auto& tw = model.theta_weights()->value;  // [4, 8, 1, 1]
        const auto& pw = model.phi_weights()->value;
        double worst = 0.0;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                double dot = 0.0;
                for (int e = 0; e < 4; ++e) {
                    double ti = 0.0, pj = 0.0;
                    for (int c = 0; c < 8; ++c) {
                        ti += static_cast<double>(tw[static_cast<std::size_t>(e * 8 + c)]) *
                              f->value[static_cast<std::size_t>(c * 16 + i)];
                        pj += static_cast<double>(pw[static_cast<std::size_t>(e * 8 + c)]) *
                              f->value[static_cast<std::size_t>(c * 16 + j)];
                    }
                    dot += ti * pj;
                }
                const double want = 1.0 / (1.0 + std::exp(-dot / std::sqrt(4.0)));
                worst = std::max(worst,
                                 std::abs(want - v_hat->value[static_cast<std::size_t>(i * 16 + j)]));
            }
        EXPECT_LT(worst, 1e-6);
    }
    EXPECT_LT(seconds_since(t0), 5.0);
}

// ===========================================================================
// Criterion 3: loss closed forms; lambda linearity is exact; default lambda
// is 10.

TEST(Acceptance, C3_LossClosedForms) {
    CriterionBanner banner{3, "loss closed forms and lambda linearity"};

    // L(V=1, Vhat=0.5) = ln 2 within 1e-9, on the double path
    auto pred = nn::make_node<double>({4, 4, 4, 4});
    std::fill(pred->value.begin(), pred->value.end(), 0.5);
    auto targets = std::make_shared<std::vector<double>>(pred->value.size(), 1.0);
    EXPECT_NEAR(nn::bce_mean(pred, targets)->value[0], std::log(2.0), 1e-9);

    // perfect prediction limit: clamped floor-scale loss
    auto exact = nn::make_node<double>({2, 2});
    std::fill(exact->value.begin(), exact->value.end(), 1.0);
    auto ones = std::make_shared<std::vector<double>>(exact->value.size(), 1.0);
    EXPECT_LE(nn::bce_mean(exact, ones)->value[0], 1.1e-7);

    // lambda linearity: doubling lambda doubles the consistency term exactly
    Rng rng(103);
    for (int trial = 0; trial < 100; ++trial) {
        const double l_pcl = rng.uniform(0.0, 3.0);
        const double l_cls = rng.uniform(0.0, 3.0);
        const double lambda = rng.uniform(0.0, 50.0);
        const double term = lambda * l_pcl;
        EXPECT_EQ(nn::total_loss(l_pcl, l_cls, lambda), term + l_cls);
        EXPECT_EQ(nn::total_loss(l_pcl, l_cls, 2.0 * lambda), 2.0 * term + l_cls);
    }

    // shipped default
    EXPECT_DOUBLE_EQ(nn::TrainConfig{}.lambda, 10.0);
    EXPECT_DOUBLE_EQ(RunConfig{}.train.lambda, 10.0);
}

// ===========================================================================
// Criterion 4: every differentiable op and the full joint-loss composite
// pass central finite-difference checks (double precision, step 1e-4,
// relative error < 1e-4) on >= 20 random configurations. Runtime < 2 min.

namespace {

nn::NodePtr<double> rand_node(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    auto n = nn::make_node<double>(std::move(shape));
    for (auto& v : n->value) v = rng.uniform(lo, hi);
    return n;
}

std::shared_ptr<std::vector<double>> rand_targets(std::size_t n, Rng& rng) {
    auto t = std::make_shared<std::vector<double>>(n);
    for (auto& v : *t) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return t;
}

}  // namespace

TEST(Acceptance, C4_GradientSuite) {
    CriterionBanner banner{4, "finite-difference gradient suite"};
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(104);
    int total_failed = 0, total_checked = 0;

    auto accumulate = [&](const gradcheck::Report& rep) {
        total_failed += rep.failed;
        total_checked += rep.checked;
        if (rep.failed) ADD_FAILURE() << "gradient mismatch at " << rep.worst_at << " rel=" << rep.worst_rel;
    };

    for (int config = 0; config < 20; ++config) {
        const int N = 1 + static_cast<int>(rng.uniform_int(2));
        const int C = 1 + static_cast<int>(rng.uniform_int(3));
        const int K = 1 + static_cast<int>(rng.uniform_int(3));
        const int S = 4 + 2 * static_cast<int>(rng.uniform_int(3));  // 4, 6, 8

        {  // conv stride 1, with bias
            auto x = rand_node({N, C, S, S}, rng);
            auto w = rand_node({K, C, 3, 3}, rng);
            auto b = rand_node({K}, rng);
            auto t = rand_targets(static_cast<std::size_t>(N * K * S * S), rng);
            accumulate(gradcheck::check(
                [&] { return nn::bce_mean(nn::sigmoid(nn::conv2d(x, w, b, 1, 1)), t); },
                {{"conv1.x", x}, {"conv1.w", w}, {"conv1.b", b}}, 8, &rng));
        }
        {  // conv stride 2 into a 1x1 conv
            auto x = rand_node({N, C, 8, 8}, rng);
            auto w1 = rand_node({K, C, 3, 3}, rng);
            auto w2 = rand_node({2, K, 1, 1}, rng);
            auto t = rand_targets(static_cast<std::size_t>(N * 2 * 4 * 4), rng);
            accumulate(gradcheck::check(
                [&] {
                    auto h = nn::relu(nn::conv2d(x, w1, nn::NodePtr<double>(), 2, 1));
                    return nn::bce_mean(nn::sigmoid(nn::conv2d(h, w2, nn::NodePtr<double>(), 1, 0)), t);
                },
                {{"conv2.x", x}, {"conv2.w1", w1}, {"conv2.w2", w2}}, 8, &rng));
        }
        {  // linear -> softmax -> select, plus add/scale on the way
            auto x = rand_node({3, 6}, rng);
            auto y = rand_node({3, 6}, rng);
            auto w = rand_node({2, 6}, rng);
            auto b = rand_node({2}, rng);
            auto t = rand_targets(3, rng);
            accumulate(gradcheck::check(
                [&] {
                    auto h = nn::scale(nn::add(x, y), 0.7);
                    return nn::bce_mean(nn::select_column(nn::softmax_rows(nn::linear(h, w, b)), 1), t);
                },
                {{"lin.x", x}, {"lin.y", y}, {"lin.w", w}, {"lin.b", b}}, 8, &rng));
        }
        {  // max pool and global average pool
            auto x = rand_node({N, C, 6, 6}, rng);
            auto t = rand_targets(static_cast<std::size_t>(N * C), rng);
            accumulate(gradcheck::check(
                [&] { return nn::bce_mean(nn::sigmoid(nn::global_avg_pool(nn::max_pool2d(x, 3, 1))), t); },
                {{"pool.x", x}}, 8, &rng));
        }
        {  // batched pairwise similarity with sqrt scaling
            auto a = rand_node({N, 3, 4}, rng);
            auto b = rand_node({N, 3, 4}, rng);
            auto t = rand_targets(static_cast<std::size_t>(N * 16), rng);
            accumulate(gradcheck::check(
                [&] { return nn::bce_mean(nn::sigmoid(nn::scale(nn::bmm_tn(a, b), 1.0 / std::sqrt(3.0))), t); },
                {{"bmm.a", a}, {"bmm.b", b}}, 8, &rng));
        }
    }

    // full joint-loss composite through the real model
    const nn::ModelConfig mcfg{3, {6, 6, 12, 12}, 6};
    for (int config = 0; config < 20; ++config) {
        nn::PclModel<double> model(mcfg, 700 + static_cast<std::uint64_t>(config));
        auto x = rand_node({1, 3, 32, 32}, rng, -0.5, 0.5);
        auto volumes = std::make_shared<std::vector<double>>(16);
        for (auto& v : *volumes) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        auto labels = std::make_shared<std::vector<double>>(1, rng.bernoulli(0.5) ? 1.0 : 0.0);
        const double lambda = 10.0;

        auto build = [&]() -> nn::NodePtr<double> {
            auto f = model.features(x);
            auto l_pcl = nn::bce_mean(model.consistency(f), volumes);
            auto l_cls = nn::bce_mean(model.fake_probability(f), labels);
            return nn::add(nn::scale(l_pcl, lambda), l_cls);
        };
        std::vector<std::pair<std::string, nn::NodePtr<double>>> checked = model.parameters();
        checked.emplace_back("input", x);
        accumulate(gradcheck::check(build, checked, 2, &rng));
    }

    EXPECT_EQ(total_failed, 0);
    EXPECT_GT(total_checked, 2000);
    EXPECT_LT(seconds_since(t0), 120.0);
    std::cout << "  [c4] " << total_checked << " coordinates checked in " << seconds_since(t0) << " s\n";
}

// ===========================================================================
// Criterion 5: generator contract suite over 100 seeded generations on a
// 20-image toy face corpus at 256x256.

TEST(Acceptance, C5_GeneratorContractSuite) {
    CriterionBanner banner{5, "generator contract suite (100 seeded pairs)"};

    toy::CorpusSpec spec;
    spec.image_size = 256;
    spec.n_videos = 20;
    spec.frames_per_video = 1;
    spec.families = {0, 1, 2, 3, 4, 5};
    spec.seed = 9090;
    const auto pool = toy::make_pool(spec);
    ASSERT_EQ(pool.size(), 20u);

    I2GConfig cfg;
    cfg.blend_methods = {BlendMethod::alpha};
    cfg.augment = AugmentConfig::disabled();  // outside-mask equality is a pre-augmentation property

    double total_ms = 0.0, max_ms = 0.0;
    for (int i = 0; i < 100; ++i) {
        const FaceRecord& target = pool[static_cast<std::size_t>(i % 20)];
        const std::uint64_t seed = Rng::derive_seed(4242, static_cast<std::uint64_t>(i));

        Rng rng(seed);
        const GeneratedPair pair = generate(target, pool, cfg, rng);

        // identity constraint
        EXPECT_NE(pair.source_id, pair.target_id);

        // epsilon constraint, re-checked post hoc
        const FaceRecord* source = nullptr;
        for (const auto& rec : pool)
            if (rec.identity == pair.source_id) source = &rec;
        ASSERT_NE(source, nullptr);
        EXPECT_LT(aligned_landmark_distance(*source, target), cfg.epsilon);

        // outside-mask pixel equality for the alpha blend
        int checked = 0;
        for (int p = 0; p < 256 * 256; ++p)
            if (pair.mask.data[static_cast<std::size_t>(p)] == 0.0f) {
                ++checked;
                for (int c = 0; c < 3; ++c)
                    if (pair.forged.data[static_cast<std::size_t>(p) * 3 + static_cast<std::size_t>(c)] !=
                        target.image.data[static_cast<std::size_t>(p) * 3 + static_cast<std::size_t>(c)]) {
                        ADD_FAILURE() << "outside-mask pixel differs in pair " << i;
                        p = 256 * 256;
                        break;
                    }
            }
        EXPECT_GT(checked, 256 * 256 / 4);

        // deterministic replay
        Rng rng2(seed);
        const GeneratedPair replay = generate(target, pool, cfg, rng2);
        EXPECT_EQ(replay.forged.data, pair.forged.data);
        EXPECT_EQ(replay.mask.data, pair.mask.data);
        EXPECT_EQ(replay.source_id, pair.source_id);

        total_ms += pair.generation_ms;
        max_ms = std::max(max_ms, pair.generation_ms);
    }

    const double mean_ms = total_ms / 100.0;
    EXPECT_LT(mean_ms, 50.0);
    std::cout << "  [c5] generation mean " << mean_ms << " ms, max " << max_ms << " ms\n";
}

// ===========================================================================
// Criteria 6 & 7 share one end-to-end toy experiment.

namespace {

// Derived constants, measured on the first successful run of this suite and
// pinned here (seeds below are fixed, so reruns reproduce them; the +/-0.05
// band absorbs thread-count variation).
constexpr double kPinnedAucGap = -1.0;  // placeholder until first measurement
constexpr double kAucGapTolerance = 0.05;

struct ToyExperiment {
    double auc_lambda10 = 0.0;
    double auc_lambda0 = 0.0;
    double wall_seconds = 0.0;
    std::unique_ptr<nn::PclModel<float>> model10;
    nn::ModelConfig model_cfg;
    std::vector<std::pair<Image, GrayMap>> spliced;  // eval fakes with true masks

    static const ToyExperiment& get() {
        static ToyExperiment instance = run();
        return instance;
    }

  private:
    static AugmentConfig toy_augment() {
        AugmentConfig a;
        a.prob_jpeg = 0.5;
        a.jpeg_quality_range = {40, 90};
        a.prob_noise = 0.5;
        a.noise_sigma_range = {0.0, 0.04};
        a.prob_blur = 0.3;
        a.blur_sigma_range = {0.4, 1.2};
        a.prob_brightness_contrast = 0.5;
        a.prob_erase = 0.0;  // keep ground-truth regions intact on toys
        a.prob_jitter = 0.5;
        a.jitter_strength = 0.08;
        return a;
    }

    static I2GConfig toy_i2g() {
        I2GConfig cfg;
        cfg.deform.sigma_range = {3.0, 6.0};  // scaled to the 64 px frame
        cfg.mask_blur_size = 9;
        cfg.augment = toy_augment();
        return cfg;
    }

    static double score_auc(const nn::PclModel<float>& model, const std::vector<FaceRecord>& reals,
                            const std::vector<std::pair<FaceRecord, GeneratedPair>>& fakes,
                            const char* tag) {
        ScoredSet frames;
        auto score_one = [&](const Image& img, int label, const std::string& video) {
            const Chw x = normalize_for_network(img);
            auto node = nn::make_input<float>({1, x.channels, x.height, x.width}, x.data);
            auto p = model.fake_probability(model.features(node));
            frames.items.push_back({static_cast<double>(p->value[0]), label, video});
        };
        for (const auto& rec : reals) score_one(rec.image, 0, rec.video);
        for (const auto& [rec, pair] : fakes) score_one(pair.forged, 1, rec.video);

        double mean_real = 0, mean_fake = 0;
        for (const auto& it : frames.items) (it.label ? mean_fake : mean_real) += it.score / 50.0;
        std::cout << "  [c6] " << tag << ": frame auc " << auc(frames) << ", mean score real "
                  << mean_real << " fake " << mean_fake << "\n";
        return auc(video_level(frames));
    }

    static ToyExperiment run() {
        const auto t0 = std::chrono::steady_clock::now();
        ToyExperiment exp;

        // --- training corpus: 200 images, 40 videos, seen families -------
        namespace fs = std::filesystem;
        const std::string dir = (fs::temp_directory_path() / "pcl_acceptance_toy").string();
        fs::remove_all(dir);
        toy::CorpusSpec train_spec;
        train_spec.image_size = 64;
        train_spec.n_videos = 40;
        train_spec.frames_per_video = 5;
        train_spec.families = {0, 1, 2, 3};
        train_spec.seed = 20240;
        const std::string manifest_path = toy::write_corpus(dir, train_spec);

        DataPipelineConfig dcfg;
        dcfg.frames_per_video = 16;  // resampling with replacement: 640 draws/epoch over the 200 images
        dcfg.i2g_prob = 0.5;
        dcfg.only_real = true;  // cross-dataset preset
        dcfg.i2g = toy_i2g();
        dcfg.frame_augment = toy_augment();
        dcfg.seed = 31337;

        nn::TrainConfig tcfg;
        tcfg.batch_size = 16;
        tcfg.epochs = 30;
        tcfg.lr_peak = 1e-3;
        tcfg.seed = 31337;

        exp.model_cfg = nn::ModelConfig{};  // shipped widths 16/32/64/64, C' = 32

        auto train_one = [&](double lambda) {
            TrainingSource source(CorpusManifest::load_jsonl(manifest_path), dcfg);
            auto model = std::make_unique<nn::PclModel<float>>(exp.model_cfg, 777);
            nn::TrainConfig cfg = tcfg;
            cfg.lambda = lambda;
            nn::train(*model, source, cfg);
            return model;
        };
        exp.model10 = train_one(10.0);
        auto model0 = train_one(0.0);

        // --- held-out split: unseen texture families ---------------------
        toy::CorpusSpec eval_spec;
        eval_spec.image_size = 64;
        eval_spec.n_videos = 20;
        eval_spec.frames_per_video = 5;
        eval_spec.families = {4, 5};
        eval_spec.seed = 99120;
        const auto eval_pool = toy::make_pool(eval_spec);

        I2GConfig eval_i2g = toy_i2g();
        AugmentConfig eval_aug = toy_augment();

        // Fake/real assignment interleaves with the family assignment
        // (family = video % 2) so each class spans both unseen families.
        std::vector<FaceRecord> real_frames;
        std::vector<std::pair<FaceRecord, GeneratedPair>> fake_frames;
        for (std::size_t i = 0; i < eval_pool.size(); ++i) {
            const FaceRecord& rec = eval_pool[i];
            const int video_index = static_cast<int>(i) / eval_spec.frames_per_video;
            const std::uint64_t frame_seed = Rng::derive_seed(55500, i);
            if (video_index % 4 >= 2) {
                // real eval frame, symmetrically augmented
                FaceRecord aug = rec;
                Rng rng(frame_seed);
                aug.image = augment(rec.image, eval_aug, rng);
                real_frames.push_back(std::move(aug));
            } else {
                Rng rng(frame_seed);
                GeneratedPair pair = generate(rec, eval_pool, eval_i2g, rng);
                exp.spliced.emplace_back(pair.forged, pair.mask);
                fake_frames.emplace_back(rec, std::move(pair));
            }
        }

        exp.auc_lambda10 = score_auc(*exp.model10, real_frames, fake_frames, "lambda=10");
        exp.auc_lambda0 = score_auc(*model0, real_frames, fake_frames, "lambda=0");
        exp.wall_seconds = seconds_since(t0);

        std::cout << "  [c6] auc(lambda=10) = " << exp.auc_lambda10
                  << ", auc(lambda=0) = " << exp.auc_lambda0 << ", wall " << exp.wall_seconds << " s\n";
        return exp;
    }
};

}  // namespace

TEST(Acceptance, C6_EndToEndToyExperiment) {
    CriterionBanner banner{6, "end-to-end toy experiment (lambda ablation)"};
    const ToyExperiment& exp = ToyExperiment::get();

    EXPECT_GE(exp.auc_lambda10, 0.95);
    EXPECT_GT(exp.auc_lambda10, exp.auc_lambda0);
    if (kPinnedAucGap >= 0.0)
        EXPECT_NEAR(exp.auc_lambda10 - exp.auc_lambda0, kPinnedAucGap, kAucGapTolerance);
    else
        std::cout << "  [c6] UNPINNED gap measured: " << (exp.auc_lambda10 - exp.auc_lambda0) << "\n";
    EXPECT_LT(exp.wall_seconds, 1800.0);
}

// ===========================================================================
// Criterion 7: heatmap localization on 50 toy spliced images. The
// bottom-decile (lowest 10% of pixels by fused consistency) must overlap the
// true mask with IoU >= 0.3 on >= 80% of images.

TEST(Acceptance, C7_HeatmapLocalization) {
    CriterionBanner banner{7, "heatmap localization IoU"};
    const ToyExperiment& exp = ToyExperiment::get();
    ASSERT_EQ(exp.spliced.size(), 50u);

    int hits = 0;
    for (const auto& [forged, mask] : exp.spliced) {
        const Chw x = normalize_for_network(forged);
        auto node = nn::make_input<float>({1, x.channels, x.height, x.width}, x.data);
        auto f = exp.model10->features(node);
        auto v_hat = exp.model10->consistency(f);

        ConsistencyVolume vol(f->dim(2), f->dim(3));
        vol.data = v_hat->value;
        Heatmap hm = fuse_heatmap(vol);
        hm = upsample_heatmap(std::move(hm), forged.height, forged.width);

        // bottom decile by value
        const std::size_t n = hm.full.data.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return hm.full.data[a] < hm.full.data[b];
        });
        const std::size_t decile = n / 10;
        std::vector<char> low(n, 0);
        for (std::size_t i = 0; i < decile; ++i) low[order[i]] = 1;

        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_mask = mask.data[i] > 0.5f;
            const bool in_low = low[i] != 0;
            inter += (in_mask && in_low) ? 1 : 0;
            uni += (in_mask || in_low) ? 1 : 0;
        }
        const double iou = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
        if (iou >= 0.3) ++hits;
    }
    std::cout << "  [c7] IoU >= 0.3 on " << hits << "/50 spliced images\n";
    EXPECT_GE(hits, 40);
}

// ===========================================================================
// Criterion 8: metric implementations match brute-force definitions exactly
// on all labeled sets of size <= 12 and on 1,000 random sets of size 50.

namespace {

double c8_auc_pairwise(const ScoredSet& s) {
    double num = 0.0;
    long long pairs = 0;
    for (const auto& p : s.items) {
        if (!p.label) continue;
        for (const auto& n : s.items) {
            if (n.label) continue;
            ++pairs;
            num += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
        }
    }
    return num / static_cast<double>(pairs);
}

double c8_ap_sweep(const ScoredSet& s) {
    std::vector<double> taus;
    for (const auto& it : s.items) taus.push_back(it.score);
    std::sort(taus.begin(), taus.end(), std::greater<>());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    const int np = s.positives();
    double ap = 0.0, prev_recall = 0.0;
    for (double tau : taus) {
        int tp = 0, fp = 0;
        for (const auto& it : s.items)
            if (it.score >= tau) (it.label ? tp : fp) += 1;
        const double recall = static_cast<double>(tp) / np;
        ap += (recall - prev_recall) * (static_cast<double>(tp) / (tp + fp));
        prev_recall = recall;
    }
    return ap;
}

double c8_eer_dense(const ScoredSet& s) {
    std::vector<double> taus;
    for (const auto& it : s.items) taus.push_back(it.score);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    taus.push_back(taus.back() + 1.0);
    const int np = s.positives(), nn_ = s.negatives();
    double best_diff = 1e300, best_rate = 0.0;
    for (double tau : taus) {
        int tp = 0, fp = 0;
        for (const auto& it : s.items)
            if (it.score >= tau) (it.label ? tp : fp) += 1;
        const double fpr = static_cast<double>(fp) / nn_;
        const double fnr = 1.0 - static_cast<double>(tp) / np;
        const double diff = std::abs(fpr - fnr);
        const double rate = 0.5 * (fpr + fnr);
        if (diff < best_diff - 1e-15 || (std::abs(diff - best_diff) <= 1e-15 && rate < best_rate)) {
            best_diff = diff;
            best_rate = rate;
        }
    }
    return best_rate;
}

}  // namespace

TEST(Acceptance, C8_MetricsOracles) {
    CriterionBanner banner{8, "metrics brute-force oracles"};
    Rng rng(108);

    // exhaustive on sizes <= 12
    for (int n = 2; n <= 12; ++n) {
        std::vector<double> scores;
        for (int i = 0; i < n; ++i) scores.push_back(rng.uniform());
        for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
            ScoredSet s;
            for (int i = 0; i < n; ++i)
                s.items.push_back({scores[static_cast<std::size_t>(i)], (mask >> i) & 1 ? 1 : 0, ""});
            ASSERT_NEAR(auc(s), c8_auc_pairwise(s), 1e-12);
            ASSERT_NEAR(average_precision(s), c8_ap_sweep(s), 1e-12);
            ASSERT_NEAR(eer(s), c8_eer_dense(s), 1e-9);
        }
    }

    // 1,000 random sets of size 50, ties included
    for (int trial = 0; trial < 1000; ++trial) {
        ScoredSet s;
        for (int i = 0; i < 50; ++i) {
            double score = rng.uniform();
            if (rng.bernoulli(0.25)) score = std::round(score * 10.0) / 10.0;
            s.items.push_back({score, rng.bernoulli(0.5) ? 1 : 0, ""});
        }
        s.items[0].label = 1;
        s.items[49].label = 0;
        ASSERT_NEAR(auc(s), c8_auc_pairwise(s), 1e-9);
        ASSERT_NEAR(average_precision(s), c8_ap_sweep(s), 1e-9);
        ASSERT_NEAR(eer(s), c8_eer_dense(s), 1e-9);
    }
}
