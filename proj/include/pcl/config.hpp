#pragma once

// Run configuration: one key=value file (a '#' starts a comment), overridden
// by PCL_* environment variables (dots become underscores, upper-cased), then
// by command-line flags. Unknown keys are rejected outright, and validation
// runs before any output is produced.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcl/augment.hpp"
#include "pcl/core.hpp"
#include "pcl/data.hpp"
#include "pcl/i2g.hpp"
#include "pcl/nn/model.hpp"
#include "pcl/nn/train.hpp"

namespace pcl {

struct RunConfig {
    std::uint64_t seed = 0;
    int jobs = 0;  // 0 = library default
    std::string out_dir = "out";

    std::string data_manifest;  // JSON-lines manifest
    std::string data_root;      // or directory auto-discovery
    DataPipelineConfig data;

    nn::ModelConfig model;
    int input_size = 256;  // frames are resized to input_size x input_size

    nn::TrainConfig train;

    // ----- schema ------------------------------------------------------

    using Setter = std::function<void(RunConfig&, const std::string&)>;

    static long long to_int(const std::string& v) {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw ConfigError("expected integer, got '" + v + "'");
        return x;
    }
    static double to_double(const std::string& v) {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw ConfigError("expected number, got '" + v + "'");
        return x;
    }
    static bool to_bool(const std::string& v) {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("expected boolean, got '" + v + "'");
    }

    static const std::map<std::string, Setter>& schema() {
        static const std::map<std::string, Setter> s = [] {
            std::map<std::string, Setter> m;
            m["seed"] = [](RunConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_int(v)); };
            m["jobs"] = [](RunConfig& c, const std::string& v) { c.jobs = static_cast<int>(to_int(v)); };
            m["out_dir"] = [](RunConfig& c, const std::string& v) { c.out_dir = v; };

            m["data.manifest"] = [](RunConfig& c, const std::string& v) { c.data_manifest = v; };
            m["data.root"] = [](RunConfig& c, const std::string& v) { c.data_root = v; };
            m["data.frames_per_video"] = [](RunConfig& c, const std::string& v) {
                c.data.frames_per_video = static_cast<int>(to_int(v));
            };
            m["data.i2g_prob"] = [](RunConfig& c, const std::string& v) { c.data.i2g_prob = to_double(v); };
            m["data.preset"] = [](RunConfig& c, const std::string& v) {
                if (v == "in_dataset")
                    c.data.only_real = false;
                else if (v == "cross_dataset")
                    c.data.only_real = true;
                else
                    throw ConfigError("data.preset must be in_dataset or cross_dataset");
            };
            m["data.balance"] = [](RunConfig& c, const std::string& v) {
                if (v == "pass_through")
                    c.data.balance = BalanceMode::pass_through;
                else if (v == "downsample")
                    c.data.balance = BalanceMode::downsample_majority;
                else
                    throw ConfigError("data.balance must be pass_through or downsample");
            };
            m["data.dssim_threshold"] = [](RunConfig& c, const std::string& v) {
                c.data.dssim.threshold = to_double(v);
            };
            m["data.dssim_blur_sigma"] = [](RunConfig& c, const std::string& v) {
                c.data.dssim.blur_sigma = to_double(v);
            };
            m["data.dssim_feather_sigma"] = [](RunConfig& c, const std::string& v) {
                c.data.dssim.feather_sigma = to_double(v);
            };
            m["data.frame_augment"] = [](RunConfig& c, const std::string& v) {
                c.data.frame_augment = to_bool(v) ? AugmentConfig{} : AugmentConfig::disabled();
            };

            m["i2g.epsilon"] = [](RunConfig& c, const std::string& v) { c.data.i2g.epsilon = to_double(v); };
            m["i2g.mask_blur_size"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.mask_blur_size = static_cast<int>(to_int(v));
            };
            m["i2g.deform_sigma_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.deform.sigma_range.first = to_double(v);
            };
            m["i2g.deform_sigma_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.deform.sigma_range.second = to_double(v);
            };
            m["i2g.deform_grid"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.deform.grid = static_cast<int>(to_int(v));
            };
            m["i2g.blend_methods"] = [](RunConfig& c, const std::string& v) {
                std::vector<BlendMethod> methods;
                std::stringstream ss(v);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (tok == "alpha")
                        methods.push_back(BlendMethod::alpha);
                    else if (tok == "poisson_lite")
                        methods.push_back(BlendMethod::poisson_lite);
                    else
                        throw ConfigError("unknown blend method '" + tok + "'");
                }
                if (methods.empty()) throw ConfigError("i2g.blend_methods must name at least one method");
                c.data.i2g.blend_methods = std::move(methods);
            };

            m["augment.enabled"] = [](RunConfig& c, const std::string& v) {
                if (!to_bool(v)) c.data.i2g.augment = AugmentConfig::disabled();
            };
            m["augment.jpeg_prob"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.prob_jpeg = to_double(v);
            };
            m["augment.jpeg_quality_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.jpeg_quality_range.first = static_cast<int>(to_int(v));
            };
            m["augment.jpeg_quality_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.jpeg_quality_range.second = static_cast<int>(to_int(v));
            };
            m["augment.noise_prob"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.prob_noise = to_double(v);
            };
            m["augment.noise_sigma_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.noise_sigma_range.first = to_double(v);
            };
            m["augment.noise_sigma_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.noise_sigma_range.second = to_double(v);
            };
            m["augment.blur_prob"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.prob_blur = to_double(v);
            };
            m["augment.blur_sigma_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.blur_sigma_range.first = to_double(v);
            };
            m["augment.blur_sigma_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.blur_sigma_range.second = to_double(v);
            };
            m["augment.bc_prob"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.prob_brightness_contrast = to_double(v);
            };
            m["augment.brightness_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.brightness_range.first = to_double(v);
            };
            m["augment.brightness_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.brightness_range.second = to_double(v);
            };
            m["augment.contrast_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.contrast_range.first = to_double(v);
            };
            m["augment.contrast_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.contrast_range.second = to_double(v);
            };
            m["augment.erase_prob"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.prob_erase = to_double(v);
            };
            m["augment.erase_min"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.erase_area_fraction_range.first = to_double(v);
            };
            m["augment.erase_max"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.erase_area_fraction_range.second = to_double(v);
            };
            m["augment.jitter_prob"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.prob_jitter = to_double(v);
            };
            m["augment.jitter_strength"] = [](RunConfig& c, const std::string& v) {
                c.data.i2g.augment.jitter_strength = to_double(v);
            };

            m["model.widths"] = [](RunConfig& c, const std::string& v) {
                std::stringstream ss(v);
                std::string tok;
                std::vector<int> widths;
                while (std::getline(ss, tok, ',')) widths.push_back(static_cast<int>(to_int(tok)));
                if (widths.size() != 4) throw ConfigError("model.widths needs exactly 4 values");
                for (int i = 0; i < 4; ++i) c.model.stage_widths[static_cast<std::size_t>(i)] = widths[static_cast<std::size_t>(i)];
            };
            m["model.embed_dim"] = [](RunConfig& c, const std::string& v) {
                c.model.embed_dim = static_cast<int>(to_int(v));
            };
            m["model.input_size"] = [](RunConfig& c, const std::string& v) {
                c.input_size = static_cast<int>(to_int(v));
            };

            m["train.lambda"] = [](RunConfig& c, const std::string& v) { c.train.lambda = to_double(v); };
            m["train.batch_size"] = [](RunConfig& c, const std::string& v) {
                c.train.batch_size = static_cast<int>(to_int(v));
            };
            m["train.epochs"] = [](RunConfig& c, const std::string& v) {
                c.train.epochs = static_cast<int>(to_int(v));
            };
            m["train.lr_peak"] = [](RunConfig& c, const std::string& v) { c.train.lr_peak = to_double(v); };
            m["train.beta1"] = [](RunConfig& c, const std::string& v) { c.train.adam.beta1 = to_double(v); };
            m["train.beta2"] = [](RunConfig& c, const std::string& v) { c.train.adam.beta2 = to_double(v); };
            m["train.eps"] = [](RunConfig& c, const std::string& v) { c.train.adam.eps = to_double(v); };
            return m;
        }();
        return s;
    }

    static std::string env_name(const std::string& key) {
        std::string name = "PCL_";
        for (char ch : key) {
            if (ch == '.')
                name += '_';
            else
                name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        }
        return name;
    }

    void apply(const std::string& key, const std::string& value) {
        const auto& s = schema();
        auto it = s.find(key);
        if (it == s.end()) throw ConfigError("unknown config key '" + key + "'");
        try {
            it->second(*this, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("bad value for '" + key + "': " + e.what());
        }
    }

    void apply_env() {
        for (const auto& [key, setter] : schema()) {
            if (const char* v = std::getenv(env_name(key).c_str())) apply(key, v);
        }
    }

    static RunConfig load(const std::string& path, bool with_env = true) {
        RunConfig cfg;
        if (!path.empty()) {
            std::ifstream in(path);
            if (!in) throw ConfigError("cannot open config file: " + path);
            std::string line;
            int lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                const auto hash = line.find('#');
                if (hash != std::string::npos) line = line.substr(0, hash);
                auto trim = [](std::string s) {
                    const auto b = s.find_first_not_of(" \t\r");
                    if (b == std::string::npos) return std::string();
                    const auto e = s.find_last_not_of(" \t\r");
                    return s.substr(b, e - b + 1);
                };
                line = trim(line);
                if (line.empty()) continue;
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
                cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            }
        }
        if (with_env) cfg.apply_env();
        return cfg;
    }

    void validate() const {
        if (data_manifest.empty() == data_root.empty())
            throw ConfigError("exactly one of data.manifest or data.root must be set");
        if (input_size <= 0 || input_size % nn::ModelConfig::stride != 0)
            throw ConfigError("model.input_size must be a positive multiple of 16");
        if (data.frames_per_video <= 0) throw ConfigError("data.frames_per_video must be positive");
        if (data.i2g_prob < 0 || data.i2g_prob > 1) throw ConfigError("data.i2g_prob must lie in [0,1]");
        if (jobs < 0) throw ConfigError("jobs must be non-negative");
        data.i2g.validate();
        model.validate();
        train.validate();
    }

    CorpusManifest load_manifest() const {
        return data_manifest.empty() ? CorpusManifest::discover(data_root)
                                     : CorpusManifest::load_jsonl(data_manifest);
    }
};

}  // namespace pcl
