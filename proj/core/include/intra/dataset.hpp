#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "intra/image.hpp"
#include "intra/metrics.hpp"
#include "intra/rng.hpp"

namespace intra {

enum class View { exocentric, egocentric };
enum class Split { train, test };

struct Sample {
    std::filesystem::path image_path;
    std::string interaction;
    std::string object;
    View view = View::exocentric;
    Split split = Split::train;
};

/// Deterministic inventory of an AGD20K-style tree:
///   <split>/exocentric/<interaction>/<object>/*.png
///   <split>/egocentric/<interaction>/<object>/*.png   (optional)
///   <split>/GT/<interaction>/<object>/*.png           (optional dense masks)
/// Directory names map '_' -> ' ' to form labels.
struct DatasetIndex {
    std::filesystem::path root;
    std::vector<std::string> interactions;  // sorted, duplicate-free
    std::vector<std::string> objects;       // sorted, duplicate-free
    std::vector<Sample> samples;
    std::map<size_t, std::filesystem::path> gt_masks;  // egocentric sample index -> mask

    int64_t interaction_id(const std::string& label) const;
    int64_t object_id(const std::string& label) const;

    /// Indices of train-split exocentric samples (the only trainable ones).
    std::vector<size_t> train_exo_indices() const;
    std::vector<size_t> test_ego_indices() const;
};

DatasetIndex scan_dataset(const std::filesystem::path& root);

/// Dense GT mask as a heat map, normalized to max 1 when positive.
HeatMap load_gt_mask(const std::filesystem::path& mask_path);

// ---------------------------------------------------------------------------
// Synthetic toy dataset
//
// Images live on a `lattice`-pixel cell grid. Each interaction owns a fixed
// quadrant (interaction index mod 4) filled with its own color tinted by the
// object color over a noisy object-colored canvas. Exocentric train images
// plant the labeled part plus 1-2 distractor parts; egocentric test images
// plant every part. manifest.json records one row per planted region.
// ---------------------------------------------------------------------------

struct ToySpec {
    std::vector<std::string> interactions;
    std::vector<std::string> objects;
    int images_per_pair = 8;
    int image_size = 84;
    uint64_t seed = 0;
    int ego_images_per_pair = 2;
    int lattice = 14;

    void validate() const;
};

struct ManifestRow {
    std::string interaction;
    std::string object;
    std::string image;              // path relative to the dataset root
    std::array<int, 4> region{};    // [x0, y0, x1, y1], exclusive max
};

std::filesystem::path generate_toy_dataset(const ToySpec& spec, const std::filesystem::path& root);

std::vector<ManifestRow> load_toy_manifest(const std::filesystem::path& manifest_path);

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

struct AugmentPolicy {
    int base_size = 384;  // resize target
    int crop_size = 336;  // random crop at train time, center crop at eval

    void validate() const;
};

struct Batch {
    torch::Tensor images;  // [N*views, 3, crop, crop] float32, view-major per sample
    std::vector<int64_t> interaction_ids;  // per view
    std::vector<int64_t> object_ids;       // per view
    std::vector<size_t> sample_indices;    // per view
    int views = 2;
};

CropBox random_crop_box(Rng& rng, int h_in, int w_in, int h_out, int w_out);

/// Resize to base_size then crop to crop_size; train mode uses seeded random
/// offsets, eval mode the analytic center box.
ImageU8 augment_image(const ImageU8& image, const AugmentPolicy& policy, bool train, Rng& rng);

/// Seeded stream of training batches over train-split exocentric samples.
/// Pair choice is uniform over (interaction, object) pairs; each pair's image
/// queue is a seeded permutation refreshed per pass; every batch contains at
/// least two interaction classes whenever the vocabulary allows.
class BatchStream {
  public:
    BatchStream(const DatasetIndex& index, int batch_size_samples, int views, AugmentPolicy augment, uint64_t seed);

    Batch next();

    std::string serialize_rng() const { return rng_.serialize(); }
    void restore_rng(const std::string& text) { rng_ = Rng::deserialize(text); }

  private:
    size_t draw_sample_from_pair(size_t pair_idx);

    const DatasetIndex& index_;
    int batch_size_;
    int views_;
    AugmentPolicy augment_;
    Rng rng_;
    std::vector<std::vector<size_t>> pair_samples_;   // per pair: sample indices
    std::vector<std::string> pair_interaction_;       // per pair
    std::vector<std::vector<size_t>> pair_queues_;    // shuffled positions, consumed per pass
};

/// Deterministic eval-time tensor for one sample (center crop, single view).
torch::Tensor eval_image_tensor(const Sample& sample, const AugmentPolicy& policy);

}  // namespace intra
