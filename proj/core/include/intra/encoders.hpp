#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <torch/torch.h>

#include "intra/image.hpp"

namespace intra {

/// h x w grid of d-dimensional image features.
struct FeatureGrid {
    int height = 0;
    int width = 0;
    int dim = 0;
    torch::Tensor values;  // [h, w, d]
};

struct TextEmbedding {
    torch::Tensor class_token;  // [d_t]
    std::string label_source;
};

// Encoders are frozen by contract: outputs are pure functions of (weights,
// input) and no gradient ever reaches their parameters.
class ImageEncoder {
  public:
    virtual ~ImageEncoder() = default;
    virtual int patch_size() const = 0;
    virtual int feature_dim() const = 0;

    /// [B, 3, H, W] float in [0,1] -> [B, H/patch, W/patch, d], same dtype.
    /// H and W must be divisible by the patch size.
    virtual torch::Tensor encode_batch(const torch::Tensor& images) const = 0;

    FeatureGrid encode_image(const ImageU8& image) const;

    /// Fingerprint of the frozen weights; constant across the encoder's lifetime.
    virtual uint64_t checksum() const = 0;
};

class TextEncoder {
  public:
    virtual ~TextEncoder() = default;
    virtual int dim() const = 0;

    /// Class-token embedding [d_t] (float64); empty text is an error.
    virtual torch::Tensor encode(const std::string& text) const = 0;

    TextEmbedding embed(const std::string& text) const { return TextEmbedding{encode(text), text}; }

    virtual uint64_t checksum() const = 0;
};

// ---------------------------------------------------------------------------
// Toy encoders: desk-scale stand-ins that keep every downstream module
// testable without pretrained weights.
// ---------------------------------------------------------------------------

/// Non-overlapping patch mean-pool (per channel) followed by a fixed seeded
/// random linear map 3 -> d. Patch (i,j) lands in grid cell (i,j), so planted
/// regions stay geometrically checkable.
class ToyImageEncoder : public ImageEncoder {
  public:
    ToyImageEncoder(uint64_t seed, int patch, int dim);

    int patch_size() const override { return patch_; }
    int feature_dim() const override { return dim_; }
    torch::Tensor encode_batch(const torch::Tensor& images) const override;
    uint64_t checksum() const override;

  private:
    int patch_;
    int dim_;
    torch::Tensor weight_;  // [d, 3] float64
    torch::Tensor bias_;    // [d]
};

/// Seeded embedding table keyed by token hash; the class token is the mean of
/// whitespace-token embeddings. Deterministic across processes.
class ToyTextEncoder : public TextEncoder {
  public:
    ToyTextEncoder(uint64_t seed, int dim) : seed_(seed), dim_(dim) {}

    int dim() const override { return dim_; }
    torch::Tensor encode(const std::string& text) const override;
    uint64_t checksum() const override { return seed_ ^ (static_cast<uint64_t>(dim_) << 32); }

  private:
    uint64_t seed_;
    int dim_;
};

// ---------------------------------------------------------------------------
// Plugin registry. Real backbones (dinov2-base, albef) attach behind the same
// interface by registering a factory; the bundled factories for those names
// report that external weights are required.
// ---------------------------------------------------------------------------

struct EncoderConfig {
    uint64_t seed = 17;
    int patch = 14;
    int image_dim = 768;
    int text_dim = 768;
};

using ImageEncoderFactory = std::function<std::shared_ptr<ImageEncoder>(const EncoderConfig&)>;
using TextEncoderFactory = std::function<std::shared_ptr<TextEncoder>(const EncoderConfig&)>;

void register_image_encoder(const std::string& name, ImageEncoderFactory factory);
void register_text_encoder(const std::string& name, TextEncoderFactory factory);

std::shared_ptr<ImageEncoder> make_image_encoder(const std::string& name, const EncoderConfig& cfg);
std::shared_ptr<TextEncoder> make_text_encoder(const std::string& name, const EncoderConfig& cfg);

/// FNV fingerprint of a tensor's raw bytes.
uint64_t tensor_checksum(const torch::Tensor& t);

/// Converts an interleaved 8-bit image to [3, H, W] float32 in [0,1]
/// (grayscale replicates to 3 channels).
torch::Tensor image_to_tensor(const ImageU8& image);

}  // namespace intra
