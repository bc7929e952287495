#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace intra {

/// Row-major h x w map of doubles; the currency of the evaluation pipeline.
struct HeatMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }

    static HeatMap zeros(int h, int w) { return HeatMap{h, w, std::vector<double>(static_cast<size_t>(h) * w, 0.0)}; }
};

struct PreprocessResult {
    HeatMap map;            // eval_size x eval_size, min-max normalized
    bool degenerate = false;  // constant input; map is uniform so sum-normalization stays defined
};

inline constexpr int kEvalSize = 224;
inline constexpr double kKldEps = 1e-12;
inline constexpr double kSigmaFloor = 1e-8;
inline constexpr double kNssGtThreshold = 0.1;

/// Bilinear resize to eval_size x eval_size (align_corners=false, see image.hpp),
/// then min-max normalize. A constant map resolves to all-ones with the
/// degenerate flag set.
PreprocessResult preprocess(const HeatMap& map, int eval_size = kEvalSize);

/// KL divergence between sum-normalized maps: sum gt * log(gt / max(pred, eps))
/// with 0 * log 0 := 0; the eps guard engages only where the prediction mass
/// is below eps, so KLD(P, P) == 0 exactly. Inputs are preprocessed maps
/// (nonnegative, same shape).
double kld(const HeatMap& gt, const HeatMap& pred);

/// Histogram intersection of the sum-normalized maps; in [0, 1].
double sim(const HeatMap& gt, const HeatMap& pred);

struct NssResult {
    double value = 0.0;
    bool degenerate = false;  // constant prediction (sigma under floor)
};

/// Binarize GT at 0.1, z-score the prediction (population sigma), average the
/// z-scored prediction over GT-positive cells. Inputs are preprocessed maps.
/// Throws if no GT cell survives the threshold.
NssResult nss(const HeatMap& gt, const HeatMap& pred);

// ---------------------------------------------------------------------------
// Dataset-level evaluation
// ---------------------------------------------------------------------------

struct EvalPair {
    std::string id;           // free-form key carried into the report
    std::string interaction;  // optional grouping keys
    std::string object;
    HeatMap prediction;   // raw model output, any size
    HeatMap ground_truth;  // raw GT, any size, at least one positive value
};

struct PairMetrics {
    std::string id;
    std::string interaction;
    std::string object;
    double kld = 0.0;
    double sim = 0.0;
    double nss = 0.0;
};

struct EvalSummary {
    size_t pairs = 0;
    double mean_kld = 0.0;
    double mean_sim = 0.0;
    double mean_nss = 0.0;
    std::vector<PairMetrics> rows;
};

/// Runs the full pipeline (preprocess both maps, then the three metrics) per
/// pair and aggregates unweighted means. Pairs are processed in parallel with
/// deterministic, input-ordered aggregation.
EvalSummary evaluate_dataset(const std::vector<EvalPair>& pairs);

void write_report_csv(const std::filesystem::path& path, const EvalSummary& summary);
void write_report_json(const std::filesystem::path& path, const EvalSummary& summary);

}  // namespace intra
