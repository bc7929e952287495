#include "intra/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace intra {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("[image] " + what + ": " + path.string());
}

}  // namespace

ImageU8 ImageU8::filled(int h, int w, int c, uint8_t value) {
    ImageU8 img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.pixels.assign(static_cast<size_t>(h) * w * c, value);
    return img;
}

ImageU8 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "decode error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    ImageU8 img;
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    img.channels = channels;
    img.pixels.resize(static_cast<size_t>(h) * w * channels);

    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.pixels.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("[image] write_png expects 1 or 3 channels");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for write");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.pixels.data() + static_cast<size_t>(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<uint16_t> read_png16(const std::filesystem::path& path, int& height, int& width) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "decode error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "expected 16-bit grayscale");
    }
    png_set_swap(png);  // PNG is big-endian on disk
    png_read_update_info(png, info);

    height = static_cast<int>(png_get_image_height(png, info));
    width = static_cast<int>(png_get_image_width(png, info));
    std::vector<uint16_t> values(static_cast<size_t>(height) * width);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(values.data() + static_cast<size_t>(y) * width);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return values;
}

void write_png16(const std::filesystem::path& path, const std::vector<uint16_t>& values, int height, int width) {
    if (values.size() != static_cast<size_t>(height) * width) throw std::invalid_argument("[image] write_png16 size mismatch");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for write");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);

    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<uint16_t*>(values.data() + static_cast<size_t>(y) * width));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void bilinear_resize_plane(const double* src, int h_in, int w_in, double* dst, int h_out, int w_out) {
    if (h_in <= 0 || w_in <= 0 || h_out <= 0 || w_out <= 0) throw std::invalid_argument("[image] resize dims must be positive");
    const double sy = static_cast<double>(h_in) / h_out;
    const double sx = static_cast<double>(w_in) / w_out;
    for (int i = 0; i < h_out; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h_in - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h_in - 1);
        const double wy = fy - y0;
        for (int j = 0; j < w_out; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w_in - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w_in - 1);
            const double wx = fx - x0;
            const double top = src[y0 * w_in + x0] * (1.0 - wx) + src[y0 * w_in + x1] * wx;
            const double bot = src[y1 * w_in + x0] * (1.0 - wx) + src[y1 * w_in + x1] * wx;
            dst[i * w_out + j] = top * (1.0 - wy) + bot * wy;
        }
    }
}

std::vector<double> bilinear_resize(const std::vector<double>& src, int h_in, int w_in, int h_out, int w_out) {
    if (src.size() != static_cast<size_t>(h_in) * w_in) throw std::invalid_argument("[image] resize source size mismatch");
    std::vector<double> dst(static_cast<size_t>(h_out) * w_out);
    bilinear_resize_plane(src.data(), h_in, w_in, dst.data(), h_out, w_out);
    return dst;
}

ImageU8 bilinear_resize(const ImageU8& src, int h_out, int w_out) {
    ImageU8 dst;
    dst.height = h_out;
    dst.width = w_out;
    dst.channels = src.channels;
    dst.pixels.resize(static_cast<size_t>(h_out) * w_out * src.channels);
    std::vector<double> plane_in(static_cast<size_t>(src.height) * src.width);
    std::vector<double> plane_out(static_cast<size_t>(h_out) * w_out);
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) plane_in[y * src.width + x] = src.at(y, x, c);
        bilinear_resize_plane(plane_in.data(), src.height, src.width, plane_out.data(), h_out, w_out);
        for (int y = 0; y < h_out; ++y)
            for (int x = 0; x < w_out; ++x)
                dst.at(y, x, c) = static_cast<uint8_t>(std::clamp(plane_out[y * w_out + x] + 0.5, 0.0, 255.0));
    }
    return dst;
}

CropBox center_crop_box(int h_in, int w_in, int h_out, int w_out) {
    if (h_out > h_in || w_out > w_in) throw std::invalid_argument("[image] crop larger than source");
    return CropBox{(h_in - h_out) / 2, (w_in - w_out) / 2};
}

ImageU8 crop(const ImageU8& src, const CropBox& box, int h_out, int w_out) {
    if (box.y0 < 0 || box.x0 < 0 || box.y0 + h_out > src.height || box.x0 + w_out > src.width)
        throw std::invalid_argument("[image] crop box out of bounds");
    ImageU8 dst;
    dst.height = h_out;
    dst.width = w_out;
    dst.channels = src.channels;
    dst.pixels.resize(static_cast<size_t>(h_out) * w_out * src.channels);
    for (int y = 0; y < h_out; ++y) {
        const uint8_t* s = src.pixels.data() + ((static_cast<size_t>(box.y0) + y) * src.width + box.x0) * src.channels;
        std::memcpy(dst.pixels.data() + static_cast<size_t>(y) * w_out * src.channels, s,
                    static_cast<size_t>(w_out) * src.channels);
    }
    return dst;
}

}  // namespace intra
