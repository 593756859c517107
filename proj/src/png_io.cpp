#include "geo/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace geo {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png(const std::string& path, int h, int w, int color_type,
               const std::vector<png_bytep>& rows) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
    }
};

}  // namespace

void write_mask_png(const std::string& path, const LabelMask& mask) {
    std::vector<png_bytep> rows(static_cast<std::size_t>(mask.h));
    for (int y = 0; y < mask.h; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(mask.labels.data() + static_cast<std::size_t>(y) * mask.w);
    write_png(path, mask.h, mask.w, PNG_COLOR_TYPE_GRAY, rows);
}

LabelMask read_mask_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open for reading: " + path);
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png read failed: " + path);
    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);
    const int h = static_cast<int>(png_get_image_height(r.png, r.info));
    const int w = static_cast<int>(png_get_image_width(r.png, r.info));
    if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(r.png, r.info) != 8)
        throw IoError("mask png must be 8-bit grayscale: " + path);
    LabelMask mask(h, w);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = mask.labels.data() + static_cast<std::size_t>(y) * w;
    png_read_image(r.png, rows.data());
    mask.validate();
    return mask;
}

void write_image_png(const std::string& path, const ImagePatch& img) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.h) * img.w * 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                float v = img.at(y, x, ch);
                v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
                bytes[(static_cast<std::size_t>(y) * img.w + x) * 3 + ch] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * img.w * 3;
    write_png(path, img.h, img.w, PNG_COLOR_TYPE_RGB, rows);
}

ImagePatch read_image_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open for reading: " + path);
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png read failed: " + path);
    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);
    const int h = static_cast<int>(png_get_image_height(r.png, r.info));
    const int w = static_cast<int>(png_get_image_width(r.png, r.info));
    if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_RGB ||
        png_get_bit_depth(r.png, r.info) != 8)
        throw IoError("image png must be 8-bit RGB: " + path);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(r.png, rows.data());
    ImagePatch img(h, w, 3);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

}  // namespace geo
