#include "doctest_torch.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "intra/dataset.hpp"
#include "intra/encoders.hpp"
#include "intra/metrics.hpp"
#include "intra/rng.hpp"

using namespace intra;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "intra_dataset_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ToySpec small_spec(uint64_t seed = 7) {
    ToySpec spec;
    spec.interactions = {"grip", "tap"};
    spec.objects = {"stick"};
    spec.images_per_pair = 3;
    spec.image_size = 28;  // 2x2 patch cells at lattice 14
    spec.lattice = 14;
    spec.seed = seed;
    spec.ego_images_per_pair = 1;
    return spec;
}

std::map<std::string, std::vector<uint8_t>> read_tree(const fs::path& root) {
    std::map<std::string, std::vector<uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        files[fs::relative(e.path(), root).string()] = std::move(bytes);
    }
    return files;
}

void touch_png(const fs::path& path) {
    fs::create_directories(path.parent_path());
    write_png(path, ImageU8::filled(4, 4, 3, 100));
}

}  // namespace

TEST_SUITE("dataset") {
    TEST_CASE("toy spec validation") {
        ToySpec bad = small_spec();
        bad.interactions = {"grip"};
        CHECK_THROWS(bad.validate());
        bad = small_spec();
        bad.images_per_pair = 0;
        CHECK_THROWS(bad.validate());
        bad = small_spec();
        bad.image_size = 30;  // not a lattice multiple
        CHECK_THROWS(bad.validate());
        small_spec().validate();
    }

    TEST_CASE("toy generation is byte-identical across runs") {
        const auto a = fresh_dir("det_a");
        const auto b = fresh_dir("det_b");
        generate_toy_dataset(small_spec(), a);
        generate_toy_dataset(small_spec(), b);
        const auto ta = read_tree(a);
        const auto tb = read_tree(b);
        REQUIRE(ta.size() == tb.size());
        CHECK(ta == tb);
        const auto c = fresh_dir("det_c");
        generate_toy_dataset(small_spec(9), c);
        CHECK(read_tree(c) != ta);  // seed matters
    }

    TEST_CASE("manifest regions: in bounds and disjoint across interactions") {
        const auto root = fresh_dir("manifest");
        generate_toy_dataset(small_spec(), root);
        const auto rows = load_toy_manifest(root / "manifest.json");
        REQUIRE_FALSE(rows.empty());

        std::array<int, 4> grip_box{}, tap_box{};
        for (const auto& r : rows) {
            CHECK(r.region[0] >= 0);
            CHECK(r.region[1] >= 0);
            CHECK(r.region[2] <= 28);
            CHECK(r.region[3] <= 28);
            CHECK(r.region[0] < r.region[2]);
            CHECK(r.region[1] < r.region[3]);
            if (r.interaction == "grip") grip_box = r.region;
            if (r.interaction == "tap") tap_box = r.region;
        }
        // fixed per-interaction quadrants: regions for grip vs tap on the same
        // object never overlap
        const bool disjoint = grip_box[2] <= tap_box[0] || tap_box[2] <= grip_box[0] ||
                              grip_box[3] <= tap_box[1] || tap_box[3] <= grip_box[1];
        CHECK(disjoint);
    }

    TEST_CASE("planted GT mask scores perfectly against itself") {
        const auto root = fresh_dir("identity_metrics");
        generate_toy_dataset(small_spec(), root);
        const auto index = scan_dataset(root);
        REQUIRE_FALSE(index.gt_masks.empty());
        const auto mask = load_gt_mask(index.gt_masks.begin()->second);
        const auto pp = preprocess(mask).map;
        CHECK(std::abs(kld(pp, pp)) < 1e-9);
        CHECK(sim(pp, pp) == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("scan_dataset counts and vocabulary") {
        const auto root = fresh_dir("scan");
        // 2 interactions x 1 object x 3 images
        for (int i = 0; i < 3; ++i) {
            touch_png(root / "train" / "exocentric" / "hold" / "cup" / ("a" + std::to_string(i) + ".png"));
            touch_png(root / "train" / "exocentric" / "drink_with" / "cup" / ("b" + std::to_string(i) + ".png"));
        }
        const auto index = scan_dataset(root);
        CHECK(index.samples.size() == 6);
        const std::vector<std::string> expect_inter = {"drink with", "hold"};
        CHECK(index.interactions == expect_inter);  // sorted, '_' mapped
        CHECK(index.objects == std::vector<std::string>(1, "cup"));
        const auto again = scan_dataset(root);
        CHECK(again.samples.size() == index.samples.size());
        for (size_t i = 0; i < index.samples.size(); ++i)
            CHECK(again.samples[i].image_path == index.samples[i].image_path);  // idempotent
    }

    TEST_CASE("scan_dataset errors") {
        CHECK_THROWS_WITH_AS(scan_dataset("/nonexistent/intra/root"), doctest::Contains("does not exist"),
                             std::runtime_error);

        const auto root = fresh_dir("empty_obj");
        touch_png(root / "train" / "exocentric" / "grip" / "stick" / "x.png");
        fs::create_directories(root / "train" / "exocentric" / "hold" / "cup");  // empty
        try {
            scan_dataset(root);
            FAIL("expected error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("hold/cup") != std::string::npos);
        }

        const auto root2 = fresh_dir("no_train_exo");
        touch_png(root2 / "test" / "egocentric" / "grip" / "stick" / "x.png");
        CHECK_THROWS_WITH_AS(scan_dataset(root2), doctest::Contains("no exocentric image in the train split"),
                             std::runtime_error);
    }

    TEST_CASE("a 36-interaction seen-style layout yields 36 labels") {
        const auto root = fresh_dir("seen36");
        std::ifstream vocab(fs::path(INTRA_FIXTURE_DIR) / "agd20k_interactions.txt");
        REQUIRE(vocab.good());
        std::string label;
        std::vector<std::string> labels;
        while (std::getline(vocab, label))
            if (!label.empty()) labels.push_back(label);
        REQUIRE(labels.size() == 36);
        for (auto dir_label : labels) {
            std::replace(dir_label.begin(), dir_label.end(), ' ', '_');
            touch_png(root / "train" / "exocentric" / dir_label / "thing" / "img.png");
        }
        const auto index = scan_dataset(root);
        CHECK(index.interactions.size() == 36);
        const std::set<std::string> got(index.interactions.begin(), index.interactions.end());
        CHECK(got == std::set<std::string>(labels.begin(), labels.end()));
    }

    TEST_CASE("gt masks attach to egocentric samples and normalize") {
        const auto root = fresh_dir("gt");
        generate_toy_dataset(small_spec(), root);
        const auto index = scan_dataset(root);
        const auto egos = index.test_ego_indices();
        REQUIRE_FALSE(egos.empty());
        size_t with_gt = 0;
        for (size_t i : egos)
            if (index.gt_masks.count(i)) ++with_gt;
        CHECK(with_gt == egos.size());
        const auto mask = load_gt_mask(index.gt_masks.at(egos[0]));
        double mx = 0.0;
        for (double v : mask.values) {
            CHECK(v >= 0.0);
            mx = std::max(mx, v);
        }
        CHECK(mx == doctest::Approx(1.0));
    }

    TEST_CASE("planted part features separate from background features") {
        const auto root = fresh_dir("features");
        generate_toy_dataset(small_spec(), root);
        const auto rows = load_toy_manifest(root / "manifest.json");
        const auto& row = rows.front();
        const ImageU8 img = read_png(root / row.image);
        ToyImageEncoder enc(17, 14, 16);
        const FeatureGrid grid = enc.encode_image(img);

        // cells fully inside the planted region vs the rest
        const int lattice = 14;
        torch::Tensor inside_sum = torch::zeros({16}, grid.values.dtype());
        torch::Tensor outside_sum = torch::zeros({16}, grid.values.dtype());
        int inside = 0, outside = 0;
        for (int cy = 0; cy < grid.height; ++cy)
            for (int cx = 0; cx < grid.width; ++cx) {
                const int x0 = cx * lattice, y0 = cy * lattice;
                const bool in = x0 >= row.region[0] && y0 >= row.region[1] && x0 + lattice <= row.region[2] &&
                                y0 + lattice <= row.region[3];
                if (in) {
                    inside_sum += grid.values[cy][cx];
                    ++inside;
                } else {
                    outside_sum += grid.values[cy][cx];
                    ++outside;
                }
            }
        REQUIRE(inside > 0);
        REQUIRE(outside > 0);
        const double dist = (inside_sum / inside - outside_sum / outside).norm().item<double>();
        CHECK(dist > 0.1);
    }

    TEST_CASE("batch stream shapes, pairing and determinism") {
        const auto root = fresh_dir("batches");
        ToySpec spec = small_spec();
        spec.interactions = {"grip", "tap", "twist"};
        spec.objects = {"stick", "bowl"};
        spec.images_per_pair = 4;
        generate_toy_dataset(spec, root);
        const auto index = scan_dataset(root);

        AugmentPolicy augment;
        augment.base_size = 32;
        augment.crop_size = 28;

        BatchStream stream(index, 4, 2, augment, 7);
        const Batch batch = stream.next();
        CHECK(batch.images.sizes() == torch::IntArrayRef({8, 3, 28, 28}));
        CHECK(batch.interaction_ids.size() == 8);
        CHECK(batch.object_ids.size() == 8);
        for (size_t i = 0; i < 8; i += 2) {
            CHECK(batch.interaction_ids[i] == batch.interaction_ids[i + 1]);  // paired views
            CHECK(batch.object_ids[i] == batch.object_ids[i + 1]);
            CHECK(batch.sample_indices[i] == batch.sample_indices[i + 1]);
        }
        const std::set<int64_t> classes(batch.interaction_ids.begin(), batch.interaction_ids.end());
        CHECK(classes.size() >= 2);

        // same seed, same stream
        BatchStream s1(index, 4, 2, augment, 99);
        BatchStream s2(index, 4, 2, augment, 99);
        for (int i = 0; i < 3; ++i) {
            const Batch a = s1.next();
            const Batch b = s2.next();
            CHECK(torch::equal(a.images, b.images));
            CHECK(a.interaction_ids == b.interaction_ids);
        }

        CHECK_THROWS(BatchStream(index, 1000, 2, augment, 0));  // larger than dataset
        CHECK_THROWS(BatchStream(index, 1, 2, augment, 0));
        CHECK_THROWS(BatchStream(index, 4, 0, augment, 0));
    }

    TEST_CASE("random and center crop boxes") {
        Rng rng(5);
        for (int i = 0; i < 100; ++i) {
            const auto box = random_crop_box(rng, 96, 96, 84, 84);
            CHECK(box.y0 >= 0);
            CHECK(box.y0 <= 12);
            CHECK(box.x0 >= 0);
            CHECK(box.x0 <= 12);
        }
        // eval path is the analytic center box
        const auto center = center_crop_box(96, 96, 84, 84);
        CHECK(center.y0 == (96 - 84) / 2);
        CHECK(center.x0 == (96 - 84) / 2);
        ImageU8 img = ImageU8::filled(28, 28, 3, 10);
        AugmentPolicy policy;
        policy.base_size = 32;
        policy.crop_size = 28;
        Rng r2(1);
        const ImageU8 eval_img = augment_image(img, policy, /*train=*/false, r2);
        CHECK(eval_img.height == 28);
        CHECK(eval_img.width == 28);
    }

    TEST_CASE("trainable samples are train-split exocentric only") {
        const auto root = fresh_dir("train_only");
        generate_toy_dataset(small_spec(), root);
        const auto index = scan_dataset(root);
        for (size_t i : index.train_exo_indices()) {
            CHECK(index.samples[i].split == Split::train);
            CHECK(index.samples[i].view == View::exocentric);
        }
        AugmentPolicy augment;
        augment.base_size = 32;
        augment.crop_size = 28;
        BatchStream stream(index, 2, 2, augment, 3);
        const Batch batch = stream.next();
        for (size_t idx : batch.sample_indices) {
            CHECK(index.samples[idx].split == Split::train);
            CHECK(index.samples[idx].view == View::exocentric);
        }
    }
}
