#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

namespace intra {

struct HeadConfig {
    int image_dim = 768;
    int text_dim = 768;
    int fusion_layers = 4;
    int fusion_heads = 4;
    int ffn_mult = 4;
    int conv_hidden = 0;  // 0 -> image_dim / 2
    int max_grid_h = 24;
    int max_grid_w = 24;
    bool use_positional = true;
    std::string activation = "gelu";  // or "relu"
    double minmax_eps = 1e-8;

    void validate() const;
};

/// Per-image min-max normalized maps plus the degeneracy mask (constant raw
/// map -> all zeros with the flag set).
struct AffordanceMapBatch {
    torch::Tensor values;      // [B, h, w] in [0, 1]
    torch::Tensor degenerate;  // [B] bool
};

/// (x - min) / (max - min) per image; a raw map whose spread is below eps
/// becomes all zeros with its flag set.
AffordanceMapBatch minmax_norm(const torch::Tensor& raw, double eps = 1e-8);

// ---------------------------------------------------------------------------
// Affordance map generation: align the text class token into the image space,
// fuse [text ; image tokens] through a transformer encoder, project the image
// part to one channel with two 3x3 convolutions, min-max normalize.
// ---------------------------------------------------------------------------

class FusionLayerImpl : public torch::nn::Module {
  public:
    FusionLayerImpl(int dim, int heads, int ffn_mult, bool gelu);

    torch::Tensor forward(const torch::Tensor& x);  // [B, S, d] -> [B, S, d]

  private:
    torch::Tensor attend(const torch::Tensor& x);

    int heads_;
    bool gelu_;
    torch::nn::LayerNorm ln_attn_{nullptr}, ln_ffn_{nullptr};
    torch::nn::Linear q_{nullptr}, k_{nullptr}, v_{nullptr}, out_{nullptr};
    torch::nn::Linear ffn_in_{nullptr}, ffn_out_{nullptr};
};
TORCH_MODULE(FusionLayer);

class AffordanceHeadImpl : public torch::nn::Module {
  public:
    explicit AffordanceHeadImpl(HeadConfig cfg);

    /// Single linear map d_t -> d; [B, d_t] -> [B, d].
    torch::Tensor align_text(const torch::Tensor& class_tokens);

    /// [B, h, w, d] grid + [B, d] aligned text -> fused [B, h, w, d]
    /// (image-token part of the transformer output).
    torch::Tensor fuse(const torch::Tensor& grid, const torch::Tensor& text);

    /// Two-stage 3x3 convolution to a single channel; [B, h, w, d] -> [B, h, w].
    torch::Tensor project_map(const torch::Tensor& fused);

    /// minmax_norm(project_map(fuse(grid, align_text(tokens)))).
    AffordanceMapBatch forward(const torch::Tensor& grid, const torch::Tensor& class_tokens);

    const HeadConfig& config() const { return cfg_; }

  private:
    HeadConfig cfg_;
    torch::nn::Linear text_align_{nullptr};
    std::vector<FusionLayer> layers_;
    torch::nn::LayerNorm final_ln_{nullptr};
    torch::nn::Conv2d conv_in_{nullptr}, conv_out_{nullptr};
    torch::Tensor row_pos_, col_pos_, text_pos_;  // learned positional embeddings
};
TORCH_MODULE(AffordanceHead);

}  // namespace intra
