#pragma once

#include <filesystem>
#include <string>

#include "intra/image.hpp"
#include "intra/metrics.hpp"

namespace intra {

struct OverlaySpec {
    std::string colormap = "jet";  // jet | hot | gray
    double alpha = 0.5;
    std::filesystem::path output;

    void validate() const;
};

/// Maps a value in [0,1] to an RGB triple for the named colormap.
void colormap_rgb(const std::string& name, double value, uint8_t rgb[3]);

/// Upsamples the map to the image size (bilinear), blends the colormapped map
/// over the image with the given alpha, writes the result to spec.output and
/// the raw map as a 16-bit grayscale sidecar "<output>.map.png" at map
/// resolution.
void render_overlay(const ImageU8& image, const HeatMap& map, const OverlaySpec& spec);

/// Sidecar I/O: map values quantized to 16 bits.
void write_map_png16(const std::filesystem::path& path, const HeatMap& map);
HeatMap read_map_png16(const std::filesystem::path& path);

}  // namespace intra
