#include "doctest_torch.hpp"

#include <cmath>
#include <vector>

#include "intra/losses.hpp"
#include "intra/rng.hpp"
#include "oracles.hpp"

using namespace intra;

namespace {

std::vector<std::vector<double>> to_rows(const torch::Tensor& z) {
    const auto c = z.contiguous().to(torch::kFloat64);
    std::vector<std::vector<double>> rows(static_cast<size_t>(c.size(0)), std::vector<double>(static_cast<size_t>(c.size(1))));
    for (int64_t i = 0; i < c.size(0); ++i)
        for (int64_t j = 0; j < c.size(1); ++j) rows[static_cast<size_t>(i)][static_cast<size_t>(j)] = c[i][j].item<double>();
    return rows;
}

/// Random unit-norm embeddings in double precision.
torch::Tensor random_unit(int64_t m, int64_t dim, uint64_t seed) {
    torch::manual_seed(seed);
    auto z = torch::randn({m, dim}, torch::kFloat64);
    return z / z.norm(2, 1, true);
}

/// Two-view batch labels: N samples, each duplicated.
std::vector<int64_t> two_view_labels(const std::vector<int64_t>& per_sample) {
    std::vector<int64_t> out;
    for (int64_t l : per_sample) {
        out.push_back(l);
        out.push_back(l);
    }
    return out;
}

std::vector<int> to_int(const std::vector<int64_t>& v) { return std::vector<int>(v.begin(), v.end()); }

}  // namespace

TEST_SUITE("losses") {
    TEST_CASE("pool_features against the double-loop sum") {
        torch::manual_seed(2);
        const auto grid = torch::rand({2, 3, 4, 5}, torch::kFloat64);
        const auto map = torch::rand({2, 3, 4}, torch::kFloat64);
        const auto pooled = pool_features(grid, map);

        for (int b = 0; b < 2; ++b)
            for (int d = 0; d < 5; ++d) {
                double acc = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 4; ++j) acc += grid[b][i][j][d].item<double>() * map[b][i][j].item<double>();
                acc /= 12.0;
                CHECK(pooled[b][d].item<double>() == doctest::Approx(acc).epsilon(1e-6));
            }

        SUBCASE("unit map is the plain mean") {
            const auto mean = pool_features(grid, torch::ones({2, 3, 4}, torch::kFloat64));
            CHECK(torch::allclose(mean, grid.mean({1, 2})));
        }
        SUBCASE("zero map is the zero vector") {
            const auto zero = pool_features(grid, torch::zeros({2, 3, 4}, torch::kFloat64));
            CHECK(zero.abs().max().item<double>() == 0.0);
        }
        SUBCASE("shape mismatch throws") {
            CHECK_THROWS(pool_features(grid, torch::rand({2, 4, 3}, torch::kFloat64)));
        }
    }

    TEST_CASE("projector contract and dense oracle") {
        torch::manual_seed(4);
        Projector proj(6, 5);
        proj->to(torch::kFloat64);

        const auto x = torch::rand({3, 6}, torch::kFloat64);
        const auto z = proj->forward(x);
        CHECK(z.sizes() == torch::IntArrayRef({3, 5}));
        for (int i = 0; i < 3; ++i)
            CHECK(z[i].norm().item<double>() == doctest::Approx(1.0).epsilon(1e-5));

        // dense oracle: three linears with exact gelu between, then L2 normalize
        auto params = proj->named_parameters();
        auto lin = [&](const torch::Tensor& in, const std::string& name) {
            const auto w = params[name + ".weight"].to(torch::kFloat64);
            const auto b = params[name + ".bias"].to(torch::kFloat64);
            torch::Tensor out = torch::zeros({in.size(0), w.size(0)}, torch::kFloat64);
            for (int64_t r = 0; r < in.size(0); ++r)
                for (int64_t o = 0; o < w.size(0); ++o) {
                    double acc = b[o].item<double>();
                    for (int64_t i = 0; i < in.size(1); ++i) acc += w[o][i].item<double>() * in[r][i].item<double>();
                    out[r][o] = acc;
                }
            return out;
        };
        auto gelu_exact = [](const torch::Tensor& t) {
            auto out = t.clone();
            auto flat = out.flatten();
            for (int64_t i = 0; i < flat.numel(); ++i) {
                const double x = flat[i].item<double>();
                flat[i] = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
            }
            return out;
        };
        auto y = lin(gelu_exact(lin(gelu_exact(lin(x, "l1")), "l2")), "l3");
        for (int64_t r = 0; r < 3; ++r) {
            double norm = 0.0;
            for (int64_t c = 0; c < 5; ++c) norm += y[r][c].item<double>() * y[r][c].item<double>();
            norm = std::sqrt(norm);
            for (int64_t c = 0; c < 5; ++c)
                CHECK(z[r][c].item<double>() == doctest::Approx(y[r][c].item<double>() / norm).epsilon(1e-6));
        }
    }

    TEST_CASE("l_inter: two views of one class vanish") {
        const auto z = random_unit(2, 8, 7);
        const auto map = RelationshipMap::identity({"a"});
        const auto loss = l_inter(z, std::vector<int64_t>{0, 0}, map, 0.2);
        CHECK(std::abs(loss.item<double>()) < 1e-9);
    }

    TEST_CASE("l_inter with per-class identity equals reference SupCon") {
        for (uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed + 100);
            const int n = 2 + static_cast<int>(rng.uniform_int(7));  // 2..8 samples
            std::vector<int64_t> per_sample;
            for (int i = 0; i < n; ++i) per_sample.push_back(static_cast<int64_t>(rng.uniform_int(3)));
            const auto labels = two_view_labels(per_sample);
            const auto z = random_unit(static_cast<int64_t>(labels.size()), 16, seed);

            const auto map = RelationshipMap::identity({"c0", "c1", "c2"});
            const double mine = l_inter(z, labels, map, 0.2).item<double>();
            const double ref = oracles::supcon_reference(to_rows(z), to_int(labels), 0.2);
            CHECK(mine == doctest::Approx(ref).epsilon(1e-6));
        }
    }

    TEST_CASE("l_inter with cross-class positives matches the loop oracle") {
        for (uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed + 500);
            const int n = 2 + static_cast<int>(rng.uniform_int(7));
            std::vector<int64_t> per_sample;
            for (int i = 0; i < n; ++i) per_sample.push_back(static_cast<int64_t>(rng.uniform_int(4)));
            const auto labels = two_view_labels(per_sample);
            const auto z = random_unit(static_cast<int64_t>(labels.size()), 12, seed + 50);

            auto map = RelationshipMap::identity({"c0", "c1", "c2", "c3"});
            map.set(0, 1, 1);
            map.set(1, 0, 1);
            map.set(2, 3, 1);
            map.set(3, 2, 1);

            const double mine = l_inter(z, labels, map, 0.2).item<double>();
            const double ref = oracles::contrastive_loss(
                to_rows(z), to_int(labels),
                [&](int a, int b) { return map.at(static_cast<size_t>(a), static_cast<size_t>(b)) == 1; }, 0.2);
            CHECK(mine == doctest::Approx(ref).epsilon(1e-9));
        }
    }

    TEST_CASE("l_inter permutation invariance") {
        const auto z = random_unit(8, 16, 3);
        const std::vector<int64_t> labels = {0, 0, 1, 1, 2, 2, 0, 0};
        auto map = RelationshipMap::identity({"c0", "c1", "c2"});
        map.set(1, 2, 1);
        map.set(2, 1, 1);
        const double base = l_inter(z, labels, map, 0.3).item<double>();

        torch::manual_seed(77);
        const auto perm = torch::randperm(8);
        std::vector<int64_t> plabels(8);
        for (int i = 0; i < 8; ++i) plabels[static_cast<size_t>(i)] = labels[static_cast<size_t>(perm[i].item<int64_t>())];
        const double permuted = l_inter(z.index_select(0, perm), plabels, map, 0.3).item<double>();
        CHECK(permuted == doctest::Approx(base).epsilon(1e-9));
    }

    TEST_CASE("l_inter label errors") {
        const auto z = random_unit(4, 8, 9);
        const auto map = RelationshipMap::identity({"a", "b"});
        CHECK_THROWS(l_inter(z, std::vector<std::string>{"a", "a", "b", "zz"}, map, 0.2));
        CHECK_THROWS(l_inter(z, std::vector<int64_t>{0, 0, 1, 5}, map, 0.2));
        CHECK_THROWS(l_inter(random_unit(1, 8, 1), std::vector<int64_t>{0}, map, 0.2));
    }

    TEST_CASE("l_obj: all-distinct objects vanish") {
        const auto z = random_unit(4, 8, 11);
        const auto loss = l_obj(z, {0, 1, 2, 3}, 0.2);
        CHECK(loss.item<double>() == 0.0);
    }

    TEST_CASE("l_obj equals l_inter with identity map when objects coincide with labels") {
        const auto z = random_unit(8, 8, 13);
        const std::vector<int64_t> ids = {0, 0, 1, 1, 2, 2, 1, 1};
        const auto map = RelationshipMap::identity({"c0", "c1", "c2"});
        CHECK(l_obj(z, ids, 0.2).item<double>() ==
              doctest::Approx(l_inter(z, ids, map, 0.2).item<double>()).epsilon(1e-12));
    }

    TEST_CASE("l_obj matches the loop oracle") {
        for (uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed + 900);
            const int n = 2 + static_cast<int>(rng.uniform_int(6));
            std::vector<int64_t> per_sample;
            for (int i = 0; i < n; ++i) per_sample.push_back(static_cast<int64_t>(rng.uniform_int(3)));
            const auto ids = two_view_labels(per_sample);
            const auto z = random_unit(static_cast<int64_t>(ids.size()), 12, seed + 200);
            const double mine = l_obj(z, ids, 0.25).item<double>();
            const double ref = oracles::contrastive_loss(to_rows(z), to_int(ids),
                                                         [](int a, int b) { return a == b; }, 0.25);
            CHECK(mine == doctest::Approx(ref).epsilon(1e-9));
        }
    }

    TEST_CASE("l_total composition and defaults") {
        const auto z = random_unit(8, 8, 17);
        const std::vector<int64_t> labels = {0, 0, 1, 1, 0, 0, 1, 1};
        const std::vector<int64_t> objects = {0, 0, 0, 0, 1, 1, 1, 1};
        const auto map = RelationshipMap::identity({"c0", "c1"});

        LossConfig defaults;
        CHECK(defaults.temperature == 0.2);
        CHECK(defaults.lambda_obj == 4.0);

        LossConfig cfg;
        cfg.lambda_obj = 0.0;
        const auto zero_lambda = l_total(z, labels, objects, map, cfg);
        CHECK(zero_lambda.total.item<double>() == doctest::Approx(zero_lambda.inter.item<double>()).epsilon(1e-12));

        cfg.lambda_obj = 4.0;
        const auto full = l_total(z, labels, objects, map, cfg);
        CHECK(full.total.item<double>() ==
              doctest::Approx(full.inter.item<double>() + 4.0 * full.obj.item<double>()).epsilon(1e-12));

        LossConfig bad;
        bad.temperature = 0.0;
        CHECK_THROWS(l_total(z, labels, objects, map, bad));
    }

    TEST_CASE("l_total gradient w.r.t. z matches finite differences") {
        auto z = random_unit(6, 8, 23).clone();
        z.set_requires_grad(true);
        const std::vector<int64_t> labels = {0, 0, 1, 1, 0, 0};
        const std::vector<int64_t> objects = {0, 0, 1, 1, 1, 1};
        auto map = RelationshipMap::identity({"c0", "c1"});
        LossConfig cfg;

        const auto loss = l_total(z, labels, objects, map, cfg);
        loss.total.backward();
        const auto grad = z.grad().clone();

        const double h = 1e-6;
        torch::NoGradGuard guard;
        for (int64_t i = 0; i < z.size(0); ++i) {
            for (int64_t j = 0; j < z.size(1); j += 3) {
                const double orig = z[i][j].item<double>();
                z[i][j] = orig + h;
                const double plus = l_total(z, labels, objects, map, cfg).total.item<double>();
                z[i][j] = orig - h;
                const double minus = l_total(z, labels, objects, map, cfg).total.item<double>();
                z[i][j] = orig;
                const double fd = (plus - minus) / (2 * h);
                const double an = grad[i][j].item<double>();
                CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-7}) <= 1e-4);
            }
        }
    }

    TEST_CASE("l_inter nonnegative with identity relation") {
        for (uint64_t seed = 0; seed < 10; ++seed) {
            const auto z = random_unit(8, 8, seed + 40);
            const std::vector<int64_t> labels = {0, 0, 1, 1, 2, 2, 0, 0};
            const auto map = RelationshipMap::identity({"c0", "c1", "c2"});
            CHECK(l_inter(z, labels, map, 0.2).item<double>() >= -1e-9);
        }
    }
}
