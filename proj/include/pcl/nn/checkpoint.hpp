#pragma once

// Versioned binary checkpoints: named parameter tensors (float32 on disk),
// optional Adam state, and the model-config hash.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pcl/core.hpp"
#include "pcl/nn/model.hpp"
#include "pcl/nn/optim.hpp"

namespace pcl::nn {

namespace detail {

inline constexpr char kCkptMagic[8] = {'P', 'C', 'L', 'C', 'K', 'P', 'T', '1'};

template <typename V>
void write_pod(std::ostream& out, const V& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& in) {
    V v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!in) throw IoError("checkpoint: truncated file");
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const auto len = read_pod<std::uint16_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw IoError("checkpoint: truncated string");
    return s;
}

template <typename T>
void write_f32_array(std::ostream& out, const std::vector<T>& v) {
    for (const T x : v) write_pod<float>(out, static_cast<float>(x));
}

template <typename T>
void read_f32_array(std::istream& in, std::vector<T>& v) {
    for (auto& x : v) x = static_cast<T>(read_pod<float>(in));
}

}  // namespace detail

struct CheckpointMeta {
    std::uint64_t config_hash = 0;
    std::int64_t step = 0;
    std::int32_t epoch = 0;
};

template <typename T>
void save_checkpoint(const std::string& path, const PclModel<T>& model, const Adam<T>* opt,
                     const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(detail::kCkptMagic, sizeof(detail::kCkptMagic));
    detail::write_pod<std::uint32_t>(out, 1);  // format version
    detail::write_pod<std::uint64_t>(out, meta.config_hash);
    detail::write_pod<std::int64_t>(out, meta.step);
    detail::write_pod<std::int32_t>(out, meta.epoch);

    const auto& params = model.parameters();
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, p] : params) {
        detail::write_string(out, name);
        detail::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(p->shape.size()));
        for (int d : p->shape) detail::write_pod<std::int32_t>(out, d);
        detail::write_f32_array(out, p->value);
    }

    detail::write_pod<std::uint8_t>(out, opt ? 1 : 0);
    if (opt) {
        auto* mut = const_cast<Adam<T>*>(opt);
        detail::write_pod<std::int64_t>(out, opt->steps());
        for (const auto& m : mut->moment1()) detail::write_f32_array(out, m);
        for (const auto& v : mut->moment2()) detail::write_f32_array(out, v);
    }
    if (!out) throw IoError("checkpoint write failed: " + path);
}

template <typename T>
CheckpointMeta load_checkpoint(const std::string& path, PclModel<T>& model, Adam<T>* opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kCkptMagic, 8) != 0)
        throw IoError("not a checkpoint file: " + path);
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != 1) throw IoError("unsupported checkpoint version");

    CheckpointMeta meta;
    meta.config_hash = detail::read_pod<std::uint64_t>(in);
    meta.step = detail::read_pod<std::int64_t>(in);
    meta.epoch = detail::read_pod<std::int32_t>(in);
    if (meta.config_hash != model.config().hash())
        throw ConfigError("checkpoint config hash does not match the model configuration");

    auto& params = model.parameters();
    const auto n = detail::read_pod<std::uint32_t>(in);
    if (n != params.size()) throw IoError("checkpoint parameter count mismatch");
    for (auto& [name, p] : params) {
        const std::string got = detail::read_string(in);
        if (got != name) throw IoError("checkpoint parameter order mismatch: " + got + " vs " + name);
        const auto ndim = detail::read_pod<std::uint8_t>(in);
        if (ndim != p->shape.size()) throw IoError("checkpoint rank mismatch for " + name);
        for (int d : p->shape)
            if (detail::read_pod<std::int32_t>(in) != d) throw IoError("checkpoint shape mismatch for " + name);
        detail::read_f32_array(in, p->value);
    }

    const auto has_opt = detail::read_pod<std::uint8_t>(in);
    if (has_opt && opt) {
        opt->set_steps(detail::read_pod<std::int64_t>(in));
        for (auto& m : opt->moment1()) detail::read_f32_array(in, m);
        for (auto& v : opt->moment2()) detail::read_f32_array(in, v);
    }
    return meta;
}

}  // namespace pcl::nn
