#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "intra/relmap.hpp"

namespace intra {

struct LossConfig {
    double temperature = 0.2;
    double lambda_obj = 4.0;

    void validate() const;
};

/// Affordance-weighted feature pooling:
///   f = (1/(h*w)) * sum_ij F(i,j) * M(i,j)
/// dividing by h*w, not by the map mass. [B,h,w,d] x [B,h,w] -> [B,d].
torch::Tensor pool_features(const torch::Tensor& grid, const torch::Tensor& map);

/// 3-layer MLP (d -> d -> d -> out_dim) followed by L2 normalization; output
/// rows are unit vectors. A zero-norm pre-normalization vector is a numeric error.
class ProjectorImpl : public torch::nn::Module {
  public:
    ProjectorImpl(int in_dim, int out_dim = 128, bool gelu = true);

    torch::Tensor forward(const torch::Tensor& features);  // [B, in] -> [B, out], unit rows

  private:
    bool gelu_;
    torch::nn::Linear l1_{nullptr}, l2_{nullptr}, l3_{nullptr};
};
TORCH_MODULE(Projector);

// ---------------------------------------------------------------------------
// Contrastive losses over a batch of 2N projected embeddings.
//
// For anchor i, positives are {j != i : R(y_i, y_j) = 1} and each anchor term
// is normalized by 1/(2N_{y_i} - 1), realized as (views sharing the anchor's
// label) - 1 (identical under the two-view convention). Anchors with an empty
// positive set, or whose label has no second view, contribute 0. The
// denominator runs over all k != i. Batch sum, not mean.
// ---------------------------------------------------------------------------

/// Relationship-guided contrastive loss. `relmap_indices[i]` is the row of
/// batch view i's interaction label inside `map`.
torch::Tensor l_inter(const torch::Tensor& z, const std::vector<int64_t>& relmap_indices,
                      const RelationshipMap& map, double temperature);

/// Convenience overload resolving label strings through the map (throws for a
/// label absent from R).
torch::Tensor l_inter(const torch::Tensor& z, const std::vector<std::string>& labels,
                      const RelationshipMap& map, double temperature);

/// Object-variance mitigation loss: identical structure with the indicator
/// 1[o_i == o_j] in place of R and 2N_{o_i}-1 normalization.
torch::Tensor l_obj(const torch::Tensor& z, const std::vector<int64_t>& object_ids, double temperature);

struct TotalLoss {
    torch::Tensor total;
    torch::Tensor inter;
    torch::Tensor obj;
};

/// L_total = L_inter + lambda_obj * L_obj.
TotalLoss l_total(const torch::Tensor& z, const std::vector<int64_t>& relmap_indices,
                  const std::vector<int64_t>& object_ids, const RelationshipMap& map, const LossConfig& cfg);

}  // namespace intra
