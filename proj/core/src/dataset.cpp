#include "intra/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "intra/encoders.hpp"

namespace intra {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 4> kImageExtensions = {".png", ".jpg", ".jpeg", ".bmp"};

bool is_image_file(const fs::path& p) {
    const std::string ext = p.extension().string();
    return std::any_of(kImageExtensions.begin(), kImageExtensions.end(),
                       [&](const char* e) { return ext == e; });
}

std::string dir_to_label(const std::string& dir_name) {
    std::string label = dir_name;
    std::replace(label.begin(), label.end(), '_', ' ');
    return label;
}

std::string label_to_dir(const std::string& label) {
    std::string dir = label;
    std::replace(dir.begin(), dir.end(), ' ', '_');
    return dir;
}

std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<fs::path> sorted_images(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

int64_t DatasetIndex::interaction_id(const std::string& label) const {
    const auto it = std::find(interactions.begin(), interactions.end(), label);
    if (it == interactions.end()) throw std::invalid_argument("[dataset] unknown interaction: " + label);
    return it - interactions.begin();
}

int64_t DatasetIndex::object_id(const std::string& label) const {
    const auto it = std::find(objects.begin(), objects.end(), label);
    if (it == objects.end()) throw std::invalid_argument("[dataset] unknown object: " + label);
    return it - objects.begin();
}

std::vector<size_t> DatasetIndex::train_exo_indices() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == Split::train && samples[i].view == View::exocentric) out.push_back(i);
    return out;
}

std::vector<size_t> DatasetIndex::test_ego_indices() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == Split::test && samples[i].view == View::egocentric) out.push_back(i);
    return out;
}

DatasetIndex scan_dataset(const fs::path& root) {
    if (!fs::exists(root)) throw std::runtime_error("[dataset] root does not exist: " + root.string());

    DatasetIndex index;
    index.root = root;
    std::set<std::string> interactions, objects;
    std::set<std::pair<std::string, std::string>> referenced_pairs, train_exo_pairs;

    const std::array<std::pair<const char*, Split>, 2> splits = {{{"train", Split::train}, {"test", Split::test}}};
    const std::array<std::pair<const char*, View>, 2> views = {{{"exocentric", View::exocentric},
                                                                {"egocentric", View::egocentric}}};

    for (const auto& [split_name, split] : splits) {
        for (const auto& [view_name, view] : views) {
            const fs::path base = root / split_name / view_name;
            if (!fs::exists(base)) continue;
            for (const auto& inter_dir : sorted_subdirs(base)) {
                const std::string interaction = dir_to_label(inter_dir.filename().string());
                const auto object_dirs = sorted_subdirs(inter_dir);
                if (object_dirs.empty())
                    throw std::runtime_error("[dataset] no object directories under " +
                                             (fs::path(split_name) / view_name / inter_dir.filename()).string());
                for (const auto& obj_dir : object_dirs) {
                    const std::string object = dir_to_label(obj_dir.filename().string());
                    const auto images = sorted_images(obj_dir);
                    if (images.empty())
                        throw std::runtime_error("[dataset] no images under " +
                                                 (inter_dir.filename() / obj_dir.filename()).string());
                    interactions.insert(interaction);
                    objects.insert(object);
                    referenced_pairs.insert({interaction, object});
                    if (split == Split::train && view == View::exocentric) train_exo_pairs.insert({interaction, object});
                    for (const auto& img : images)
                        index.samples.push_back(Sample{img, interaction, object, view, split});
                }
            }
        }
    }

    if (index.samples.empty()) throw std::runtime_error("[dataset] no samples found under " + root.string());

    for (const auto& pair : referenced_pairs) {
        if (!train_exo_pairs.count(pair))
            throw std::runtime_error("[dataset] pair (" + pair.first + ", " + pair.second +
                                     ") has no exocentric image in the train split");
    }

    index.interactions.assign(interactions.begin(), interactions.end());
    index.objects.assign(objects.begin(), objects.end());
    std::sort(index.samples.begin(), index.samples.end(), [](const Sample& a, const Sample& b) {
        return std::tie(a.split, a.view, a.interaction, a.object, a.image_path) <
               std::tie(b.split, b.view, b.interaction, b.object, b.image_path);
    });

    // Attach GT masks to egocentric samples by matching stem.
    for (size_t i = 0; i < index.samples.size(); ++i) {
        const Sample& s = index.samples[i];
        if (s.view != View::egocentric) continue;
        const char* split_name = s.split == Split::train ? "train" : "test";
        const fs::path mask = root / split_name / "GT" / label_to_dir(s.interaction) / label_to_dir(s.object) /
                              (s.image_path.stem().string() + ".png");
        if (fs::exists(mask)) index.gt_masks[i] = mask;
    }
    return index;
}

HeatMap load_gt_mask(const fs::path& mask_path) {
    const ImageU8 img = read_png(mask_path);
    HeatMap map = HeatMap::zeros(img.height, img.width);
    double mx = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double v = img.at(y, x, 0);
            map.at(y, x) = v;
            mx = std::max(mx, v);
        }
    if (mx > 0.0)
        for (double& v : map.values) v /= mx;
    return map;
}

// ---------------------------------------------------------------------------
// Toy generator
// ---------------------------------------------------------------------------

void ToySpec::validate() const {
    if (interactions.size() < 2) throw std::invalid_argument("[dataset] toy spec needs at least 2 interactions");
    if (objects.empty()) throw std::invalid_argument("[dataset] toy spec needs at least 1 object");
    if (images_per_pair <= 0) throw std::invalid_argument("[dataset] toy spec has zero images per pair");
    if (ego_images_per_pair <= 0) throw std::invalid_argument("[dataset] toy spec has zero egocentric images");
    if (lattice <= 0 || image_size % lattice != 0)
        throw std::invalid_argument("[dataset] image_size must be a positive multiple of the lattice");
    if ((image_size / lattice) % 2 != 0)
        throw std::invalid_argument("[dataset] image_size/lattice must be even (quadrant layout)");
    std::set<std::string> uniq(interactions.begin(), interactions.end());
    if (uniq.size() != interactions.size()) throw std::invalid_argument("[dataset] duplicate interaction labels");
}

namespace {

struct Rgb {
    double r, g, b;
};

// Golden-angle hue walk; saturated, well separated colors.
Rgb palette_color(int k, double s = 0.85, double v = 0.9) {
    const double hue = std::fmod(k * 137.50776405003785, 360.0) / 60.0;
    const int i = static_cast<int>(hue) % 6;
    const double f = hue - static_cast<int>(hue);
    const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
    double r = 0, g = 0, b = 0;
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
    return Rgb{r * 255, g * 255, b * 255};
}

uint8_t clamp_u8(double v) { return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0)); }

void fill_noisy(ImageU8& img, int y0, int x0, int y1, int x1, const Rgb& color, Rng& rng, double noise) {
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            img.at(y, x, 0) = clamp_u8(color.r + (rng.uniform() - 0.5) * 2 * noise);
            img.at(y, x, 1) = clamp_u8(color.g + (rng.uniform() - 0.5) * 2 * noise);
            img.at(y, x, 2) = clamp_u8(color.b + (rng.uniform() - 0.5) * 2 * noise);
        }
}

/// Pixel box of the quadrant owned by interaction k; [x0,y0,x1,y1] exclusive.
std::array<int, 4> quadrant_box(int interaction_idx, int image_size) {
    const int half = image_size / 2;
    const int q = interaction_idx % 4;
    const int qy = q >> 1, qx = q & 1;
    return {qx * half, qy * half, qx * half + half, qy * half + half};
}

Rgb part_color(int interaction_idx, int object_idx) {
    const Rgb pi = palette_color(interaction_idx);
    const Rgb po = palette_color(100 + object_idx, 0.5, 0.6);
    return Rgb{0.8 * pi.r + 0.2 * po.r, 0.8 * pi.g + 0.2 * po.g, 0.8 * pi.b + 0.2 * po.b};
}

}  // namespace

fs::path generate_toy_dataset(const ToySpec& spec, const fs::path& root) {
    spec.validate();
    fs::create_directories(root);

    nlohmann::json manifest = nlohmann::json::array();
    auto add_row = [&manifest](const std::string& inter, const std::string& obj, const std::string& rel,
                               const std::array<int, 4>& box) {
        manifest.push_back({{"interaction", inter}, {"object", obj}, {"image", rel}, {"region", box}});
    };

    auto render = [&](int oi, const std::vector<int>& planted, uint64_t image_seed) {
        Rng rng(image_seed);
        ImageU8 img = ImageU8::filled(spec.image_size, spec.image_size, 3, 0);
        fill_noisy(img, 0, 0, spec.image_size, spec.image_size, palette_color(100 + oi, 0.5, 0.6), rng, 12.0);
        for (int k : planted) {
            const auto box = quadrant_box(k, spec.image_size);
            fill_noisy(img, box[1], box[0], box[3], box[2], part_color(k, oi), rng, 12.0);
        }
        return img;
    };

    for (size_t oi = 0; oi < spec.objects.size(); ++oi) {
        const std::string& object = spec.objects[oi];
        for (size_t ii = 0; ii < spec.interactions.size(); ++ii) {
            const std::string& interaction = spec.interactions[ii];
            const fs::path exo_dir = root / "train" / "exocentric" / label_to_dir(interaction) / label_to_dir(object);
            const fs::path ego_dir = root / "test" / "egocentric" / label_to_dir(interaction) / label_to_dir(object);
            const fs::path gt_dir = root / "test" / "GT" / label_to_dir(interaction) / label_to_dir(object);
            fs::create_directories(exo_dir);
            fs::create_directories(ego_dir);
            fs::create_directories(gt_dir);

            // Exocentric train images: labeled part + 1-2 distractors from other quadrants.
            for (int n = 0; n < spec.images_per_pair; ++n) {
                const uint64_t image_seed =
                    splitmix64(spec.seed ^ fnv1a("exo/" + interaction + "/" + object + "/" + std::to_string(n)));
                Rng pick(image_seed ^ 0x51ull);
                std::vector<int> others;
                for (size_t k = 0; k < spec.interactions.size(); ++k)
                    if (k != ii && quadrant_box(static_cast<int>(k), spec.image_size) !=
                                       quadrant_box(static_cast<int>(ii), spec.image_size))
                        others.push_back(static_cast<int>(k));
                std::vector<int> planted = {static_cast<int>(ii)};
                const int distractors = others.empty() ? 0 : 1 + static_cast<int>(pick.uniform_int(std::min<size_t>(2, others.size())));
                for (int d = 0; d < distractors && !others.empty(); ++d) {
                    const size_t pos = pick.uniform_int(others.size());
                    planted.push_back(others[pos]);
                    others.erase(others.begin() + static_cast<long>(pos));
                }

                char name[32];
                std::snprintf(name, sizeof(name), "exo_%04d.png", n);
                const ImageU8 img = render(static_cast<int>(oi), planted, image_seed);
                write_png(exo_dir / name, img);
                const std::string rel = (fs::path("train") / "exocentric" / label_to_dir(interaction) /
                                         label_to_dir(object) / name).string();
                for (int k : planted)
                    add_row(spec.interactions[static_cast<size_t>(k)], object, rel,
                            quadrant_box(k, spec.image_size));
            }

            // Egocentric test images: every part planted, GT mask for this
            // directory's interaction.
            for (int n = 0; n < spec.ego_images_per_pair; ++n) {
                const uint64_t image_seed =
                    splitmix64(spec.seed ^ fnv1a("ego/" + interaction + "/" + object + "/" + std::to_string(n)));
                std::vector<int> planted(spec.interactions.size());
                for (size_t k = 0; k < planted.size(); ++k) planted[k] = static_cast<int>(k);

                char name[32];
                std::snprintf(name, sizeof(name), "ego_%04d.png", n);
                const ImageU8 img = render(static_cast<int>(oi), planted, image_seed);
                write_png(ego_dir / name, img);
                const std::string rel = (fs::path("test") / "egocentric" / label_to_dir(interaction) /
                                         label_to_dir(object) / name).string();
                for (int k : planted)
                    add_row(spec.interactions[static_cast<size_t>(k)], object, rel,
                            quadrant_box(k, spec.image_size));

                const auto box = quadrant_box(static_cast<int>(ii), spec.image_size);
                ImageU8 mask = ImageU8::filled(spec.image_size, spec.image_size, 1, 0);
                for (int y = box[1]; y < box[3]; ++y)
                    for (int x = box[0]; x < box[2]; ++x) mask.at(y, x, 0) = 255;
                write_png(gt_dir / name, mask);
            }
        }
    }

    std::ofstream os(root / "manifest.json");
    if (!os) throw std::runtime_error("[dataset] cannot write manifest under " + root.string());
    os << manifest.dump(2) << '\n';
    return root;
}

std::vector<ManifestRow> load_toy_manifest(const fs::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("[dataset] cannot open manifest " + manifest_path.string());
    nlohmann::json j = nlohmann::json::parse(is);
    std::vector<ManifestRow> rows;
    rows.reserve(j.size());
    for (const auto& r : j) {
        ManifestRow row;
        row.interaction = r.at("interaction").get<std::string>();
        row.object = r.at("object").get<std::string>();
        row.image = r.at("image").get<std::string>();
        const auto& reg = r.at("region");
        for (int i = 0; i < 4; ++i) row.region[static_cast<size_t>(i)] = reg.at(i).get<int>();
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

void AugmentPolicy::validate() const {
    if (base_size <= 0 || crop_size <= 0) throw std::invalid_argument("[dataset] augment sizes must be positive");
    if (crop_size > base_size) throw std::invalid_argument("[dataset] crop_size larger than base_size");
}

CropBox random_crop_box(Rng& rng, int h_in, int w_in, int h_out, int w_out) {
    if (h_out > h_in || w_out > w_in) throw std::invalid_argument("[dataset] crop larger than source");
    return CropBox{static_cast<int>(rng.uniform_int(static_cast<uint64_t>(h_in - h_out) + 1)),
                   static_cast<int>(rng.uniform_int(static_cast<uint64_t>(w_in - w_out) + 1))};
}

ImageU8 augment_image(const ImageU8& image, const AugmentPolicy& policy, bool train, Rng& rng) {
    policy.validate();
    ImageU8 resized = (image.height == policy.base_size && image.width == policy.base_size)
                          ? image
                          : bilinear_resize(image, policy.base_size, policy.base_size);
    const CropBox box = train ? random_crop_box(rng, policy.base_size, policy.base_size, policy.crop_size, policy.crop_size)
                              : center_crop_box(policy.base_size, policy.base_size, policy.crop_size, policy.crop_size);
    return crop(resized, box, policy.crop_size, policy.crop_size);
}

BatchStream::BatchStream(const DatasetIndex& index, int batch_size_samples, int views, AugmentPolicy augment,
                         uint64_t seed)
    : index_(index),
      batch_size_(batch_size_samples),
      views_(views),
      augment_(augment),
      rng_(splitmix64(seed ^ fnv1a("batch-stream"))) {
    if (batch_size_samples < 2) throw std::invalid_argument("[dataset] batch_size_samples must be >= 2");
    if (views < 1) throw std::invalid_argument("[dataset] views must be >= 1");
    augment_.validate();

    std::map<std::pair<std::string, std::string>, std::vector<size_t>> pairs;
    for (size_t i : index.train_exo_indices()) pairs[{index.samples[i].interaction, index.samples[i].object}].push_back(i);
    if (pairs.empty()) throw std::invalid_argument("[dataset] no train-split exocentric samples");

    size_t total = 0;
    for (auto& [key, list] : pairs) {
        pair_samples_.push_back(list);
        pair_interaction_.push_back(key.first);
        pair_queues_.emplace_back();
        total += list.size();
    }
    if (static_cast<size_t>(batch_size_samples) > total)
        throw std::invalid_argument("[dataset] batch_size_samples exceeds dataset size");
}

size_t BatchStream::draw_sample_from_pair(size_t pair_idx) {
    auto& queue = pair_queues_[pair_idx];
    if (queue.empty()) {
        // Refresh this pair's pass with a fresh seeded permutation.
        queue.resize(pair_samples_[pair_idx].size());
        for (size_t i = 0; i < queue.size(); ++i) queue[i] = i;
        for (size_t i = queue.size(); i > 1; --i) std::swap(queue[i - 1], queue[rng_.uniform_int(i)]);
    }
    const size_t pos = queue.back();
    queue.pop_back();
    return pair_samples_[pair_idx][pos];
}

Batch BatchStream::next() {
    std::vector<size_t> chosen;
    std::vector<size_t> chosen_pairs;
    chosen.reserve(static_cast<size_t>(batch_size_));
    for (int n = 0; n < batch_size_; ++n) {
        const size_t pair_idx = rng_.uniform_int(pair_samples_.size());
        chosen_pairs.push_back(pair_idx);
        chosen.push_back(draw_sample_from_pair(pair_idx));
    }

    // Contrastive batches need >= 2 interaction classes when the vocabulary has them.
    std::set<std::string> batch_interactions;
    for (size_t p : chosen_pairs) batch_interactions.insert(pair_interaction_[p]);
    if (batch_interactions.size() < 2 && index_.interactions.size() > 1) {
        std::vector<size_t> other_pairs;
        for (size_t p = 0; p < pair_interaction_.size(); ++p)
            if (pair_interaction_[p] != *batch_interactions.begin()) other_pairs.push_back(p);
        const size_t pair_idx = other_pairs[rng_.uniform_int(other_pairs.size())];
        chosen.back() = draw_sample_from_pair(pair_idx);
        chosen_pairs.back() = pair_idx;
    }

    Batch batch;
    batch.views = views_;
    std::vector<torch::Tensor> tensors;
    tensors.reserve(chosen.size() * static_cast<size_t>(views_));
    for (size_t idx : chosen) {
        const Sample& s = index_.samples[idx];
        const ImageU8 image = read_png(s.image_path);
        for (int v = 0; v < views_; ++v) {
            tensors.push_back(image_to_tensor(augment_image(image, augment_, /*train=*/true, rng_)));
            batch.interaction_ids.push_back(index_.interaction_id(s.interaction));
            batch.object_ids.push_back(index_.object_id(s.object));
            batch.sample_indices.push_back(idx);
        }
    }
    batch.images = torch::stack(tensors);
    return batch;
}

torch::Tensor eval_image_tensor(const Sample& sample, const AugmentPolicy& policy) {
    Rng unused(0);
    const ImageU8 image = read_png(sample.image_path);
    return image_to_tensor(augment_image(image, policy, /*train=*/false, unused));
}

}  // namespace intra
