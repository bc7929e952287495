#include "intra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "intra/image.hpp"

namespace intra {

namespace {

void require_same_shape(const HeatMap& a, const HeatMap& b, const char* op) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument(std::string("[metrics] ") + op + ": shape mismatch");
}

std::vector<double> sum_normalize(const HeatMap& m, const char* op) {
    const double total = std::accumulate(m.values.begin(), m.values.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument(std::string("[metrics] ") + op + ": map sums to zero");
    std::vector<double> out(m.values.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = m.values[i] / total;
    return out;
}

}  // namespace

PreprocessResult preprocess(const HeatMap& map, int eval_size) {
    if (map.height <= 0 || map.width <= 0) throw std::invalid_argument("[metrics] preprocess: empty map");
    for (double v : map.values)
        if (!std::isfinite(v)) throw std::invalid_argument("[metrics] preprocess: non-finite value");

    PreprocessResult out;
    out.map.height = eval_size;
    out.map.width = eval_size;
    if (map.height == eval_size && map.width == eval_size) {
        out.map.values = map.values;  // resize is identity
    } else {
        out.map.values = bilinear_resize(map.values, map.height, map.width, eval_size, eval_size);
    }

    const auto [mn_it, mx_it] = std::minmax_element(out.map.values.begin(), out.map.values.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx - mn < 1e-12) {
        std::fill(out.map.values.begin(), out.map.values.end(), 1.0);
        out.degenerate = true;
        return out;
    }
    const double inv = 1.0 / (mx - mn);
    for (double& v : out.map.values) v = (v - mn) * inv;
    return out;
}

double kld(const HeatMap& gt, const HeatMap& pred) {
    require_same_shape(gt, pred, "kld");
    const auto p = sum_normalize(gt, "kld(gt)");
    const auto q = sum_normalize(pred, "kld(pred)");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        // max() rather than additive smoothing: the guard only engages where the
        // prediction mass is below eps, so KLD(P, P) stays exactly zero.
        if (p[i] > 0.0) acc += p[i] * std::log(p[i] / std::max(q[i], kKldEps));
    }
    return acc;
}

double sim(const HeatMap& gt, const HeatMap& pred) {
    require_same_shape(gt, pred, "sim");
    const auto p = sum_normalize(gt, "sim(gt)");
    const auto q = sum_normalize(pred, "sim(pred)");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) acc += std::min(p[i], q[i]);
    return acc;
}

NssResult nss(const HeatMap& gt, const HeatMap& pred) {
    require_same_shape(gt, pred, "nss");
    const size_t n = pred.size();

    double mean = std::accumulate(pred.values.begin(), pred.values.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : pred.values) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / static_cast<double>(n));  // population sigma

    size_t positives = 0;
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (gt.values[i] > kNssGtThreshold) {
            ++positives;
            acc += pred.values[i];
        }
    }
    if (positives == 0) throw std::invalid_argument("[metrics] nss: GT mask empty after threshold");
    if (sigma < kSigmaFloor) return NssResult{0.0, true};

    const double z_sum = (acc - static_cast<double>(positives) * mean) / sigma;
    return NssResult{z_sum / static_cast<double>(positives), false};
}

EvalSummary evaluate_dataset(const std::vector<EvalPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("[metrics] evaluate_dataset: zero pairs");

    auto eval_one = [](const EvalPair& p) {
        const auto gt = preprocess(p.ground_truth);
        const auto pr = preprocess(p.prediction);
        PairMetrics row;
        row.id = p.id;
        row.interaction = p.interaction;
        row.object = p.object;
        row.kld = kld(gt.map, pr.map);
        row.sim = sim(gt.map, pr.map);
        row.nss = nss(gt.map, pr.map).value;
        return row;
    };

    std::vector<std::future<PairMetrics>> futs;
    futs.reserve(pairs.size());
    for (const auto& p : pairs) futs.push_back(std::async(std::launch::async | std::launch::deferred, eval_one, std::cref(p)));

    EvalSummary out;
    out.pairs = pairs.size();
    out.rows.reserve(pairs.size());
    for (auto& f : futs) out.rows.push_back(f.get());
    for (const auto& r : out.rows) {
        out.mean_kld += r.kld;
        out.mean_sim += r.sim;
        out.mean_nss += r.nss;
    }
    out.mean_kld /= static_cast<double>(out.pairs);
    out.mean_sim /= static_cast<double>(out.pairs);
    out.mean_nss /= static_cast<double>(out.pairs);
    return out;
}

void write_report_csv(const std::filesystem::path& path, const EvalSummary& summary) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("[metrics] cannot write " + path.string());
    os << "id,interaction,object,kld,sim,nss\n";
    os.precision(10);
    for (const auto& r : summary.rows)
        os << r.id << ',' << r.interaction << ',' << r.object << ',' << r.kld << ',' << r.sim << ',' << r.nss << '\n';
}

void write_report_json(const std::filesystem::path& path, const EvalSummary& summary) {
    nlohmann::json j;
    j["pairs"] = summary.pairs;
    j["mKLD"] = summary.mean_kld;
    j["mSIM"] = summary.mean_sim;
    j["mNSS"] = summary.mean_nss;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("[metrics] cannot write " + path.string());
    os << j.dump(2) << '\n';
}

}  // namespace intra
