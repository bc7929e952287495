#include "doctest_torch.hpp"

#include "intra/encoders.hpp"

using namespace intra;

TEST_SUITE("encoders") {
    TEST_CASE("grid shape follows patch division") {
        ToyImageEncoder enc(17, 14, 32);
        auto grid336 = enc.encode_batch(torch::rand({1, 3, 336, 336}));
        CHECK(grid336.size(1) == 24);
        CHECK(grid336.size(2) == 24);
        CHECK(grid336.size(3) == 32);
        auto grid84 = enc.encode_batch(torch::rand({2, 3, 84, 84}));
        CHECK(grid84.size(1) == 6);
        CHECK(grid84.size(2) == 6);
        CHECK_THROWS(enc.encode_batch(torch::rand({1, 3, 100, 100})));
    }

    TEST_CASE("identical patches give identical feature rows") {
        ToyImageEncoder enc(3, 4, 16);
        auto img = torch::zeros({1, 3, 8, 8});
        img.index_put_({0, 0}, 0.5);  // constant image: every patch equal
        const auto grid = enc.encode_batch(img);
        const auto row0 = grid.index({0, 0, 0});
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                CHECK(torch::allclose(grid.index({0, i, j}), row0));
    }

    TEST_CASE("seeded outputs are bitwise stable") {
        ToyImageEncoder a(123, 14, 24);
        ToyImageEncoder b(123, 14, 24);
        const auto img = torch::rand({1, 3, 28, 28});
        CHECK(torch::equal(a.encode_batch(img), b.encode_batch(img)));
        CHECK(a.checksum() == b.checksum());
        ToyImageEncoder c(124, 14, 24);
        CHECK(a.checksum() != c.checksum());
    }

    TEST_CASE("encode is pure and keeps checksum constant") {
        ToyImageEncoder enc(9, 7, 8);
        const auto before = enc.checksum();
        const auto img = torch::rand({1, 3, 14, 14});
        const auto g1 = enc.encode_batch(img);
        const auto g2 = enc.encode_batch(img);
        CHECK(torch::equal(g1, g2));
        CHECK(enc.checksum() == before);
    }

    TEST_CASE("text encoder determinism and injectivity") {
        ToyTextEncoder enc(5, 48);
        CHECK(torch::equal(enc.encode("hold"), enc.encode("hold")));
        CHECK_FALSE(torch::allclose(enc.encode("hold"), enc.encode("grasp")));
        CHECK_THROWS(enc.encode(""));
        CHECK_THROWS(enc.encode("   "));
        // multiword text is the token mean
        const auto ab = enc.encode("drink with");
        const auto expect = (enc.encode("drink") + enc.encode("with")) / 2.0;
        CHECK(torch::allclose(ab, expect));
    }

    TEST_CASE("registry resolves toy and rejects weightless backbones") {
        EncoderConfig cfg;
        cfg.image_dim = 16;
        cfg.text_dim = 12;
        cfg.patch = 7;
        const auto img_enc = make_image_encoder("toy", cfg);
        CHECK(img_enc->feature_dim() == 16);
        CHECK(img_enc->patch_size() == 7);
        const auto txt_enc = make_text_encoder("toy", cfg);
        CHECK(txt_enc->dim() == 12);
        CHECK_THROWS(make_image_encoder("dinov2-base", cfg));
        CHECK_THROWS(make_text_encoder("albef", cfg));
        CHECK_THROWS(make_image_encoder("nope", cfg));

        register_image_encoder("custom-test", [](const EncoderConfig& c) {
            return std::make_shared<ToyImageEncoder>(c.seed + 1, c.patch, c.image_dim);
        });
        CHECK(make_image_encoder("custom-test", cfg)->feature_dim() == 16);
    }

    TEST_CASE("encode_image single helper") {
        ToyImageEncoder enc(2, 4, 8);
        ImageU8 img = ImageU8::filled(8, 12, 3, 128);
        const FeatureGrid grid = enc.encode_image(img);
        CHECK(grid.height == 2);
        CHECK(grid.width == 3);
        CHECK(grid.dim == 8);
        CHECK(grid.values.sizes() == torch::IntArrayRef({2, 3, 8}));
    }
}
