#pragma once

// PNG and JPEG file I/O. The only place 8-bit quantization happens:
// read maps byte b -> b/255, write maps v -> round(255*v).

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "pcl/image.hpp"

namespace pcl {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open file: " + path);
    return f;
}

inline unsigned char to_byte(float v) {
    const float s = clamp01(v) * 255.0f;
    int b = static_cast<int>(s + 0.5f);
    if (b > 255) b = 255;
    return static_cast<unsigned char>(b);
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    std::string tail = s.substr(s.size() - suf.size());
    for (auto& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PNG

inline void write_png_rgb(const std::string& path, const Image& img) {
    auto f = detail::open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    std::vector<unsigned char> bytes(static_cast<std::size_t>(img.height) * img.width * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = detail::to_byte(img.data[i]);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * img.width * 3;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline void write_png_gray(const std::string& path, const GrayMap& map) {
    auto f = detail::open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    std::vector<unsigned char> bytes(static_cast<std::size_t>(map.height) * map.width);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = detail::to_byte(map.data[i]);
    std::vector<png_bytep> rows(static_cast<std::size_t>(map.height));
    for (int y = 0; y < map.height; ++y) rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * map.width;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(map.width), static_cast<png_uint_32>(map.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline Image read_png_rgb(const std::string& path) {
    auto f = detail::open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw IoError("not a PNG file: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png read failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // Normalize anything to 8-bit RGB.
    png_set_strip_16(png);
    png_set_packing(png);
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(h, w);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

inline GrayMap read_png_gray(const std::string& path) {
    const Image rgb = read_png_rgb(path);
    GrayMap g(rgb.height, rgb.width);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        // Channels are equal for genuine grayscale files; average is a no-op there.
        g.data[i] = (rgb.data[i * 3] + rgb.data[i * 3 + 1] + rgb.data[i * 3 + 2]) / 3.0f;
    }
    return g;
}

// ---------------------------------------------------------------------------
// JPEG

inline void write_jpeg_rgb(const std::string& path, const Image& img, int quality = 90) {
    if (quality < 1 || quality > 100) throw ParameterError("jpeg quality must be in [1,100]");
    auto f = detail::open_file(path, "wb");
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f.get());
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);

    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
    while (cinfo.next_scanline < cinfo.image_height) {
        const float* src = img.data.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width * 3;
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = detail::to_byte(src[i]);
        JSAMPROW rp = row.data();
        jpeg_write_scanlines(&cinfo, &rp, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

inline Image read_jpeg_rgb(const std::string& path) {
    auto f = detail::open_file(path, "rb");
    jpeg_decompress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("not a JPEG file: " + path);
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int h = static_cast<int>(cinfo.output_height);
    const int w = static_cast<int>(cinfo.output_width);
    Image img(h, w);
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW rp = row.data();
        jpeg_read_scanlines(&cinfo, &rp, 1);
        float* dst = img.data.data() + (static_cast<std::size_t>(cinfo.output_scanline) - 1) * w * 3;
        for (std::size_t i = 0; i < row.size(); ++i) dst[i] = static_cast<float>(row[i]) / 255.0f;
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

// Dispatch on file extension (.png / .jpg / .jpeg).
inline Image read_image(const std::string& path) {
    if (detail::has_suffix(path, ".png")) return read_png_rgb(path);
    if (detail::has_suffix(path, ".jpg") || detail::has_suffix(path, ".jpeg")) return read_jpeg_rgb(path);
    throw IoError("unsupported image extension: " + path);
}

inline void write_image(const std::string& path, const Image& img) {
    if (detail::has_suffix(path, ".png")) {
        write_png_rgb(path, img);
        return;
    }
    if (detail::has_suffix(path, ".jpg") || detail::has_suffix(path, ".jpeg")) {
        write_jpeg_rgb(path, img);
        return;
    }
    throw IoError("unsupported image extension: " + path);
}

}  // namespace pcl
