#include "intra/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace intra {

void OverlaySpec::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("[overlay] alpha outside [0,1]");
    if (output.empty()) throw std::invalid_argument("[overlay] output path not set");
    if (colormap != "jet" && colormap != "hot" && colormap != "gray")
        throw std::invalid_argument("[overlay] unknown colormap: " + colormap);
}

void colormap_rgb(const std::string& name, double value, uint8_t rgb[3]) {
    const double v = std::clamp(value, 0.0, 1.0);
    auto to_u8 = [](double x) { return static_cast<uint8_t>(std::clamp(x, 0.0, 1.0) * 255.0 + 0.5); };
    if (name == "gray") {
        rgb[0] = rgb[1] = rgb[2] = to_u8(v);
    } else if (name == "hot") {
        rgb[0] = to_u8(3.0 * v);
        rgb[1] = to_u8(3.0 * v - 1.0);
        rgb[2] = to_u8(3.0 * v - 2.0);
    } else {  // jet
        rgb[0] = to_u8(1.5 - std::abs(4.0 * v - 3.0));
        rgb[1] = to_u8(1.5 - std::abs(4.0 * v - 2.0));
        rgb[2] = to_u8(1.5 - std::abs(4.0 * v - 1.0));
    }
}

void render_overlay(const ImageU8& image, const HeatMap& map, const OverlaySpec& spec) {
    spec.validate();
    if (map.height <= 0 || map.width <= 0) throw std::invalid_argument("[overlay] empty map");

    const auto up = bilinear_resize(map.values, map.height, map.width, image.height, image.width);

    ImageU8 out = ImageU8::filled(image.height, image.width, 3, 0);
    uint8_t rgb[3];
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            colormap_rgb(spec.colormap, up[static_cast<size_t>(y) * image.width + x], rgb);
            for (int c = 0; c < 3; ++c) {
                const int src_c = image.channels == 1 ? 0 : c;
                const double blended = (1.0 - spec.alpha) * image.at(y, x, src_c) + spec.alpha * rgb[c];
                out.at(y, x, c) = static_cast<uint8_t>(std::clamp(blended + 0.5, 0.0, 255.0));
            }
        }
    }
    write_png(spec.output, out);
    write_map_png16(spec.output.string() + ".map.png", map);
}

void write_map_png16(const std::filesystem::path& path, const HeatMap& map) {
    std::vector<uint16_t> q(map.size());
    for (size_t i = 0; i < q.size(); ++i)
        q[i] = static_cast<uint16_t>(std::clamp(map.values[i], 0.0, 1.0) * 65535.0 + 0.5);
    write_png16(path, q, map.height, map.width);
}

HeatMap read_map_png16(const std::filesystem::path& path) {
    int h = 0, w = 0;
    const auto q = read_png16(path, h, w);
    HeatMap map = HeatMap::zeros(h, w);
    for (size_t i = 0; i < q.size(); ++i) map.values[i] = q[i] / 65535.0;
    return map;
}

}  // namespace intra
