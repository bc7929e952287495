#include "doctest_torch.hpp"

#include <filesystem>
#include <fstream>

#include "intra/config.hpp"
#include "intra/overlay.hpp"
#include "intra/rng.hpp"
#include "intra/trainer.hpp"

using namespace intra;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "intra_misc_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("overlay_config") {
    TEST_CASE("kv config parsing") {
        const std::string text = R"(
# top-level
data_root = "/tmp/data"
[train]
lr = 0.0002   # paper setting
steps = 500
resume = false
[loss]
temperature = 0.2
)";
        const auto cfg = KvConfig::parse_string(text);
        CHECK(cfg.get_string("data_root", "") == "/tmp/data");
        CHECK(cfg.get_double("train.lr", 0) == doctest::Approx(2e-4));
        CHECK(cfg.get_int("train.steps", 0) == 500);
        CHECK(cfg.get_bool("train.resume", true) == false);
        CHECK(cfg.get_double("loss.temperature", 0) == doctest::Approx(0.2));
        CHECK(cfg.get_int("train.missing", 42) == 42);
        CHECK_THROWS(cfg.get_int("data_root", 0));
        CHECK_THROWS(KvConfig::parse_string("novalue\n"));
        CHECK_THROWS(KvConfig::parse_string("[broken\nk = v\n"));
    }

    TEST_CASE("kv config text round trip keeps bare keys out of sections") {
        KvConfig cfg;
        cfg.set("data_root", "/d");
        cfg.set("augment.base_size", "96");
        cfg.set("train.lr", "0.001");
        const auto reparsed = KvConfig::parse_string(cfg.to_string());
        CHECK(reparsed.get_string("data_root", "") == "/d");
        CHECK(reparsed.get_int("augment.base_size", 0) == 96);
        CHECK(reparsed.get_double("train.lr", 0) == doctest::Approx(0.001));
    }

    TEST_CASE("train config defaults mirror the reference settings") {
        const TrainConfig config;
        CHECK(config.lr == doctest::Approx(2e-4));
        CHECK(config.views == 2);
        CHECK(config.loss.temperature == doctest::Approx(0.2));
        CHECK(config.loss.lambda_obj == doctest::Approx(4.0));
        CHECK(config.augment.base_size == 384);
        CHECK(config.augment.crop_size == 336);
        CHECK(config.encoder.patch == 14);
        CHECK(config.encoder.image_dim == 768);
        CHECK(config.head.fusion_layers == 4);
        CHECK(config.head.fusion_heads == 4);
        CHECK(config.projector_dim == 128);
    }

    TEST_CASE("train config file round trip") {
        TrainConfig config;
        config.data_root = "/data";
        config.relmap_path = "/maps/r.json";
        config.steps = 77;
        config.loss.lambda_obj = 2.5;
        config.encoder.image_dim = 64;
        config.head.activation = "relu";
        const auto kv = config.to_kv();
        const TrainConfig back = TrainConfig::from_kv(KvConfig::parse_string(kv.to_string()));
        CHECK(back.data_root == "/data");
        CHECK(back.relmap_path == "/maps/r.json");
        CHECK(back.steps == 77);
        CHECK(back.loss.lambda_obj == doctest::Approx(2.5));
        CHECK(back.encoder.image_dim == 64);
        CHECK(back.head.activation == "relu");
    }

    TEST_CASE("overlay spec validation and colormaps") {
        OverlaySpec spec;
        spec.output = "x.png";
        spec.alpha = 1.5;
        CHECK_THROWS(spec.validate());
        spec.alpha = 0.5;
        spec.colormap = "nope";
        CHECK_THROWS(spec.validate());

        uint8_t rgb[3];
        colormap_rgb("gray", 0.5, rgb);
        CHECK(rgb[0] == rgb[1]);
        CHECK(rgb[1] == rgb[2]);
        colormap_rgb("jet", 0.0, rgb);   // cold end is blue
        CHECK(rgb[2] > rgb[0]);
        colormap_rgb("jet", 1.0, rgb);   // hot end is red
        CHECK(rgb[0] > rgb[2]);
    }

    TEST_CASE("alpha 0 overlay reproduces the input image") {
        const auto dir = fresh_dir("alpha0");
        Rng rng(3);
        ImageU8 img = ImageU8::filled(20, 24, 3, 0);
        for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(256));
        HeatMap map = HeatMap::zeros(5, 6);
        for (auto& v : map.values) v = rng.uniform();

        OverlaySpec spec;
        spec.alpha = 0.0;
        spec.output = dir / "out.png";
        render_overlay(img, map, spec);
        const ImageU8 out = read_png(spec.output);
        CHECK(out.pixels == img.pixels);
        CHECK(out.height == img.height);
        CHECK(out.width == img.width);
    }

    TEST_CASE("alpha 1 on a constant map is the pure floor color") {
        const auto dir = fresh_dir("alpha1");
        const ImageU8 img = ImageU8::filled(16, 16, 3, 200);
        const HeatMap map = HeatMap::zeros(4, 4);  // constant zero

        OverlaySpec spec;
        spec.alpha = 1.0;
        spec.output = dir / "out.png";
        render_overlay(img, map, spec);
        const ImageU8 out = read_png(spec.output);
        uint8_t floor_rgb[3];
        colormap_rgb("jet", 0.0, floor_rgb);
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == floor_rgb[c]);
    }

    TEST_CASE("sidecar quantization round trip within 1/65535") {
        const auto dir = fresh_dir("sidecar");
        Rng rng(5);
        HeatMap map = HeatMap::zeros(7, 9);
        for (auto& v : map.values) v = rng.uniform();

        OverlaySpec spec;
        spec.alpha = 0.3;
        spec.output = dir / "o.png";
        render_overlay(ImageU8::filled(21, 27, 3, 40), map, spec);

        const auto side = read_map_png16(dir / "o.png.map.png");
        REQUIRE(side.height == 7);
        REQUIRE(side.width == 9);
        for (size_t i = 0; i < map.values.size(); ++i)
            CHECK(std::abs(side.values[i] - map.values[i]) <= 1.0 / 65535.0 + 1e-12);
    }
}
