#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "intra/config.hpp"
#include "intra/dataset.hpp"
#include "intra/encoders.hpp"
#include "intra/head.hpp"
#include "intra/losses.hpp"
#include "intra/metrics.hpp"
#include "intra/relmap.hpp"
#include "intra/synonyms.hpp"

namespace intra {

struct TrainConfig {
    // paths
    std::string data_root;
    std::string relmap_path;
    std::string synonyms_path;  // empty -> no synonym substitution
    std::string out_dir = "out";
    std::string resume_from;

    // optimization
    double lr = 2e-4;
    int batch_size_samples = 16;  // reference setting uses 256
    int views = 2;
    int steps = 500;
    uint64_t seed = 0;
    double grad_clip = 0.0;       // 0 = off
    bool loss_scale_mean = false; // optional 1/(2N) rescale, off to match the equations
    int checkpoint_every = 0;     // 0 = final only
    int threads = 0;              // 0 = torch default

    LossConfig loss;
    AugmentPolicy augment;

    // encoders
    std::string image_encoder = "toy";
    std::string text_encoder = "toy";
    EncoderConfig encoder;

    // head + projector
    HeadConfig head;
    int projector_dim = 128;

    void validate() const;

    static TrainConfig from_kv(const KvConfig& kv);
    static TrainConfig from_file(const std::filesystem::path& path);
    KvConfig to_kv() const;
};

struct TrainResult {
    std::filesystem::path checkpoint_path;
    std::filesystem::path loss_curve_path;
    std::vector<double> total_losses;  // per step
    std::vector<double> inter_losses;
    std::vector<double> obj_losses;
};

TrainResult train(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints: a single archive of named parameter tensors plus the config
// text that built them; the version field is mandatory.
// ---------------------------------------------------------------------------

inline constexpr int64_t kCheckpointVersion = 1;

struct Checkpoint {
    int64_t version = kCheckpointVersion;
    int64_t step = 0;
    TrainConfig config;
    AffordanceHead head{nullptr};
    Projector projector{nullptr};
    std::string batch_rng;    // serialized stream states for resume
    std::string synonym_rng;
};

/// Optimizer state, when given, is written to "<path>.opt" so the checkpoint
/// itself stays a plain parameter archive.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     torch::optim::Adam* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);
bool load_optimizer_state(const std::filesystem::path& checkpoint_path, torch::optim::Adam& optimizer);

/// Builds an untrained head + projector pair from a config (shared by train,
/// resume and checkpoint loading).
std::pair<AffordanceHead, Projector> build_model(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

struct GroundResult {
    HeatMap map;          // grid-resolution affordance map in [0,1]
    bool degenerate = false;
};

/// Single forward pass for one image conditioned on free text (novel
/// interactions permitted).
GroundResult ground(const std::filesystem::path& checkpoint_path, const std::filesystem::path& image_path,
                    const std::string& interaction_text);

struct EmbeddingRow {
    std::string image;
    std::string split;
    std::string view;
    std::string interaction;
    std::string object;
    std::vector<float> z;
};

/// Projected embedding of every indexed sample (eval transform, original
/// label text as condition) written as CSV; returns the rows.
std::vector<EmbeddingRow> export_embeddings(const std::filesystem::path& checkpoint_path,
                                            const std::filesystem::path& data_root,
                                            const std::filesystem::path& out_csv);

}  // namespace intra
