#include "intra/head.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace intra {

void HeadConfig::validate() const {
    if (image_dim <= 0 || text_dim <= 0) throw std::invalid_argument("[head] dims must be positive");
    if (fusion_layers <= 0 || fusion_heads <= 0) throw std::invalid_argument("[head] fusion sizes must be positive");
    if (image_dim % fusion_heads != 0) throw std::invalid_argument("[head] image_dim must divide by head count");
    if (activation != "gelu" && activation != "relu") throw std::invalid_argument("[head] unknown activation: " + activation);
    if (max_grid_h <= 0 || max_grid_w <= 0) throw std::invalid_argument("[head] max grid must be positive");
}

AffordanceMapBatch minmax_norm(const torch::Tensor& raw, double eps) {
    if (raw.dim() != 3) throw std::invalid_argument("[head] minmax_norm expects [B,h,w]");
    if (!torch::isfinite(raw).all().item<bool>()) throw std::runtime_error("[head] minmax_norm: non-finite input");

    const auto flat = raw.flatten(1);
    const auto mn = std::get<0>(flat.min(1)).view({-1, 1, 1});
    const auto mx = std::get<0>(flat.max(1)).view({-1, 1, 1});
    const auto range = mx - mn;
    const auto degenerate = (range < eps).view({-1});

    // Keep the degenerate branch out of the gradient path: a guarded denominator
    // avoids NaN grads from the unselected side of where().
    const auto safe_range = torch::where(range < eps, torch::ones_like(range), range);
    const auto normalized = (raw - mn) / safe_range;
    const auto zeros = torch::zeros_like(raw);
    const auto values = torch::where(degenerate.view({-1, 1, 1}), zeros, normalized);
    return AffordanceMapBatch{values, degenerate};
}

// ---------------------------------------------------------------------------
// FusionLayer (pre-LN): x += MHA(LN(x)); x += FFN(LN(x))
// ---------------------------------------------------------------------------

FusionLayerImpl::FusionLayerImpl(int dim, int heads, int ffn_mult, bool gelu) : heads_(heads), gelu_(gelu) {
    ln_attn_ = register_module("ln_attn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    ln_ffn_ = register_module("ln_ffn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    q_ = register_module("q", torch::nn::Linear(dim, dim));
    k_ = register_module("k", torch::nn::Linear(dim, dim));
    v_ = register_module("v", torch::nn::Linear(dim, dim));
    out_ = register_module("out", torch::nn::Linear(dim, dim));
    ffn_in_ = register_module("ffn_in", torch::nn::Linear(dim, dim * ffn_mult));
    ffn_out_ = register_module("ffn_out", torch::nn::Linear(dim * ffn_mult, dim));
}

torch::Tensor FusionLayerImpl::attend(const torch::Tensor& x) {
    const int64_t b = x.size(0), s = x.size(1), d = x.size(2);
    const int64_t dh = d / heads_;
    auto split = [&](const torch::Tensor& t) { return t.view({b, s, heads_, dh}).transpose(1, 2); };  // [B,H,S,dh]

    const auto qh = split(q_(x));
    const auto kh = split(k_(x));
    const auto vh = split(v_(x));
    auto scores = torch::matmul(qh, kh.transpose(-2, -1)) / std::sqrt(static_cast<double>(dh));
    auto ctx = torch::matmul(torch::softmax(scores, -1), vh);             // [B,H,S,dh]
    ctx = ctx.transpose(1, 2).contiguous().view({b, s, d});
    return out_(ctx);
}

torch::Tensor FusionLayerImpl::forward(const torch::Tensor& x) {
    auto y = x + attend(ln_attn_(x));
    auto h = ffn_in_(ln_ffn_(y));
    h = gelu_ ? torch::gelu(h) : torch::relu(h);
    return y + ffn_out_(h);
}

// ---------------------------------------------------------------------------
// AffordanceHead
// ---------------------------------------------------------------------------

AffordanceHeadImpl::AffordanceHeadImpl(HeadConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.image_dim;
    const int hidden = cfg_.conv_hidden > 0 ? cfg_.conv_hidden : std::max(1, d / 2);

    text_align_ = register_module("text_align", torch::nn::Linear(cfg_.text_dim, d));
    for (int i = 0; i < cfg_.fusion_layers; ++i) {
        layers_.push_back(FusionLayer(d, cfg_.fusion_heads, cfg_.ffn_mult, cfg_.activation == "gelu"));
        register_module("fusion_" + std::to_string(i), layers_.back());
    }
    final_ln_ = register_module("final_ln", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
    conv_in_ = register_module("conv_in", torch::nn::Conv2d(torch::nn::Conv2dOptions(d, hidden, 3).padding(1)));
    conv_out_ = register_module("conv_out", torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, 1, 3).padding(1)));

    if (cfg_.use_positional) {
        row_pos_ = register_parameter("row_pos", torch::randn({cfg_.max_grid_h, d}) * 0.02);
        col_pos_ = register_parameter("col_pos", torch::randn({cfg_.max_grid_w, d}) * 0.02);
        text_pos_ = register_parameter("text_pos", torch::randn({d}) * 0.02);
    }
}

torch::Tensor AffordanceHeadImpl::align_text(const torch::Tensor& class_tokens) {
    if (class_tokens.dim() != 2 || class_tokens.size(1) != cfg_.text_dim)
        throw std::invalid_argument("[head] align_text expects [B, text_dim]");
    return text_align_(class_tokens);
}

torch::Tensor AffordanceHeadImpl::fuse(const torch::Tensor& grid, const torch::Tensor& text) {
    if (grid.dim() != 4 || grid.size(3) != cfg_.image_dim) throw std::invalid_argument("[head] fuse expects [B,h,w,d]");
    if (text.dim() != 2 || text.size(1) != cfg_.image_dim || text.size(0) != grid.size(0))
        throw std::invalid_argument("[head] fuse: text shape mismatch");

    const int64_t b = grid.size(0), h = grid.size(1), w = grid.size(2), d = grid.size(3);
    if (h > cfg_.max_grid_h || w > cfg_.max_grid_w)
        throw std::invalid_argument("[head] grid exceeds configured max positional extent");

    auto image_tokens = grid.reshape({b, h * w, d});
    auto text_token = text.unsqueeze(1);  // [B,1,d]
    if (cfg_.use_positional) {
        const auto pos = (row_pos_.slice(0, 0, h).unsqueeze(1) + col_pos_.slice(0, 0, w).unsqueeze(0)).reshape({1, h * w, d});
        image_tokens = image_tokens + pos;
        text_token = text_token + text_pos_.view({1, 1, d});
    }
    auto x = torch::cat({text_token, image_tokens}, 1);  // [B, 1+hw, d]

    for (size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i]->forward(x);
        if (!torch::isfinite(x).all().item<bool>()) {
            std::ostringstream os;
            os << "[head] non-finite activations after fusion layer " << i;
            throw std::runtime_error(os.str());
        }
    }
    x = final_ln_(x);
    return x.slice(1, 1).reshape({b, h, w, d});  // image-token part only
}

torch::Tensor AffordanceHeadImpl::project_map(const torch::Tensor& fused) {
    if (fused.dim() != 4 || fused.size(3) != cfg_.image_dim)
        throw std::invalid_argument("[head] project_map expects [B,h,w,d]");
    auto x = fused.permute({0, 3, 1, 2});  // [B,d,h,w]
    x = conv_in_(x);
    x = cfg_.activation == "gelu" ? torch::gelu(x) : torch::relu(x);
    x = conv_out_(x);
    return x.squeeze(1);  // [B,h,w]
}

AffordanceMapBatch AffordanceHeadImpl::forward(const torch::Tensor& grid, const torch::Tensor& class_tokens) {
    const auto text = align_text(class_tokens);
    const auto fused = fuse(grid, text);
    const auto raw = project_map(fused);
    return minmax_norm(raw, cfg_.minmax_eps);
}

}  // namespace intra
