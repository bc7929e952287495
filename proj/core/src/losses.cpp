#include "intra/losses.hpp"

#include <functional>
#include <limits>
#include <stdexcept>

namespace intra {

void LossConfig::validate() const {
    if (!(temperature > 0.0)) throw std::invalid_argument("[losses] temperature must be positive");
    if (lambda_obj < 0.0) throw std::invalid_argument("[losses] lambda_obj must be nonnegative");
}

torch::Tensor pool_features(const torch::Tensor& grid, const torch::Tensor& map) {
    if (grid.dim() != 4 || map.dim() != 3) throw std::invalid_argument("[losses] pool_features expects [B,h,w,d], [B,h,w]");
    if (grid.size(0) != map.size(0) || grid.size(1) != map.size(1) || grid.size(2) != map.size(2))
        throw std::invalid_argument("[losses] pool_features shape mismatch");
    return (grid * map.unsqueeze(-1)).mean({1, 2});
}

ProjectorImpl::ProjectorImpl(int in_dim, int out_dim, bool gelu) : gelu_(gelu) {
    l1_ = register_module("l1", torch::nn::Linear(in_dim, in_dim));
    l2_ = register_module("l2", torch::nn::Linear(in_dim, in_dim));
    l3_ = register_module("l3", torch::nn::Linear(in_dim, out_dim));
}

torch::Tensor ProjectorImpl::forward(const torch::Tensor& features) {
    auto act = [this](const torch::Tensor& t) { return gelu_ ? torch::gelu(t) : torch::relu(t); };
    auto y = l3_(act(l2_(act(l1_(features)))));
    const auto norms = y.norm(2, 1, true);
    if ((norms.detach() < 1e-12).any().item<bool>())
        throw std::runtime_error("[losses] projector output has (near) zero norm");
    return y / norms;
}

namespace {

// Shared skeleton of both contrastive losses: positives are given by pos(i,j),
// normalizers by the anchor's same-label view count.
torch::Tensor contrastive_sum(const torch::Tensor& z, const std::vector<int64_t>& group_ids,
                              const std::function<bool(int64_t, int64_t)>& positive, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("[losses] temperature must be positive");
    if (z.dim() != 2) throw std::invalid_argument("[losses] z must be [M, dim]");
    const int64_t m = z.size(0);
    if (m < 2) throw std::invalid_argument("[losses] need at least 2 views");
    if (static_cast<int64_t>(group_ids.size()) != m) throw std::invalid_argument("[losses] label count mismatch");

    const auto opts = z.options();
    std::vector<double> pos_buf(static_cast<size_t>(m) * m, 0.0);
    std::vector<double> coef_buf(static_cast<size_t>(m), 0.0);
    for (int64_t i = 0; i < m; ++i) {
        int64_t same = 0;
        for (int64_t j = 0; j < m; ++j) {
            if (group_ids[j] == group_ids[i]) ++same;
            if (j != i && positive(group_ids[i], group_ids[j])) pos_buf[i * m + j] = 1.0;
        }
        coef_buf[i] = same > 1 ? 1.0 / static_cast<double>(same - 1) : 0.0;  // empty-positive / 2N_y-1=0 guard
    }
    const auto pos_mask = torch::from_blob(pos_buf.data(), {m, m}, torch::kFloat64).clone().to(opts);
    const auto coef = torch::from_blob(coef_buf.data(), {m}, torch::kFloat64).clone().to(opts);

    auto sims = torch::matmul(z, z.t()) / temperature;
    const auto neg_inf = torch::full({m, m}, -std::numeric_limits<double>::infinity(), opts);
    auto masked = torch::where(torch::eye(m, opts.dtype(torch::kBool)), neg_inf, sims);
    const auto lse = torch::logsumexp(masked, 1, true);  // denominator over k != i
    const auto log_prob = sims - lse;

    const auto per_anchor = (pos_mask * log_prob).sum(1) * coef;
    return -per_anchor.sum();
}

}  // namespace

torch::Tensor l_inter(const torch::Tensor& z, const std::vector<int64_t>& relmap_indices,
                      const RelationshipMap& map, double temperature) {
    const auto n = static_cast<int64_t>(map.size());
    for (int64_t idx : relmap_indices)
        if (idx < 0 || idx >= n) throw std::invalid_argument("[losses] relmap index out of range");
    return contrastive_sum(z, relmap_indices,
                           [&map](int64_t a, int64_t b) { return map.at(static_cast<size_t>(a), static_cast<size_t>(b)) == 1; },
                           temperature);
}

torch::Tensor l_inter(const torch::Tensor& z, const std::vector<std::string>& labels,
                      const RelationshipMap& map, double temperature) {
    std::vector<int64_t> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(static_cast<int64_t>(map.index_of(l)));
    return l_inter(z, idx, map, temperature);
}

torch::Tensor l_obj(const torch::Tensor& z, const std::vector<int64_t>& object_ids, double temperature) {
    return contrastive_sum(z, object_ids, [](int64_t a, int64_t b) { return a == b; }, temperature);
}

TotalLoss l_total(const torch::Tensor& z, const std::vector<int64_t>& relmap_indices,
                  const std::vector<int64_t>& object_ids, const RelationshipMap& map, const LossConfig& cfg) {
    cfg.validate();
    TotalLoss out;
    out.inter = l_inter(z, relmap_indices, map, cfg.temperature);
    out.obj = l_obj(z, object_ids, cfg.temperature);
    out.total = out.inter + cfg.lambda_obj * out.obj;
    return out;
}

}  // namespace intra
