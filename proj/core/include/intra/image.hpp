#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace intra {

/// Interleaved 8-bit image, row-major, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;  // height * width * channels

    uint8_t& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }
    uint8_t at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }

    static ImageU8 filled(int h, int w, int c, uint8_t value);
};

ImageU8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageU8& img);

/// 16-bit single-channel PNG, used for raw affordance-map sidecars.
std::vector<uint16_t> read_png16(const std::filesystem::path& path, int& height, int& width);
void write_png16(const std::filesystem::path& path, const std::vector<uint16_t>& values, int height, int width);

// ---------------------------------------------------------------------------
// Bilinear resize, align_corners = false.
//
// The source coordinate for destination pixel (i, j) is
//   sy = (i + 0.5) * h_in / h_out - 0.5,   sx = (j + 0.5) * w_in / w_out - 0.5,
// sampled from the four surrounding pixels with edge clamping. This is the
// single resize convention used everywhere in the repo (metric preprocessing,
// augmentation, overlay upsampling); golden tests freeze it.
// ---------------------------------------------------------------------------
void bilinear_resize_plane(const double* src, int h_in, int w_in, double* dst, int h_out, int w_out);

std::vector<double> bilinear_resize(const std::vector<double>& src, int h_in, int w_in, int h_out, int w_out);

ImageU8 bilinear_resize(const ImageU8& src, int h_out, int w_out);

/// Crop box (top-left corner) helpers shared by augmentation and tests.
struct CropBox {
    int y0 = 0;
    int x0 = 0;
};

CropBox center_crop_box(int h_in, int w_in, int h_out, int w_out);
ImageU8 crop(const ImageU8& src, const CropBox& box, int h_out, int w_out);

}  // namespace intra
