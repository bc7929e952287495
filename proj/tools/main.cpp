// intra — operator surface for the affordance-grounding pipeline:
// toy-data | build-relmap | gen-synonyms | train | eval | ground | export-embeddings

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "intra/dataset.hpp"
#include "intra/llm_client.hpp"
#include "intra/metrics.hpp"
#include "intra/overlay.hpp"
#include "intra/relmap.hpp"
#include "intra/synonyms.hpp"
#include "intra/trainer.hpp"

namespace fs = std::filesystem;
using namespace intra;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("[cli] cannot open " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("[cli] cannot open " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

// --------------------------------------------------------------------------
// toy-data
// --------------------------------------------------------------------------

struct ToyDataArgs {
    std::vector<std::string> interactions = {"grip", "tap", "twist", "wipe"};
    std::vector<std::string> objects = {"stick", "bowl", "lever"};
    int images_per_pair = 16;
    int ego_images_per_pair = 2;
    int image_size = 84;
    int lattice = 14;
    uint64_t seed = 7;
    std::string out;
};

int cmd_toy_data(const ToyDataArgs& args) {
    ToySpec spec;
    spec.interactions = args.interactions;
    spec.objects = args.objects;
    spec.images_per_pair = args.images_per_pair;
    spec.ego_images_per_pair = args.ego_images_per_pair;
    spec.image_size = args.image_size;
    spec.lattice = args.lattice;
    spec.seed = args.seed;
    const auto root = generate_toy_dataset(spec, args.out);
    const auto index = scan_dataset(root);
    std::cout << "toy dataset at " << root.string() << ": " << index.samples.size() << " images, "
              << index.interactions.size() << " interactions, " << index.objects.size() << " objects\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// build-relmap
// --------------------------------------------------------------------------

struct BuildRelmapArgs {
    std::string mode = "llm";
    std::string fixtures;
    std::string labels_file;
    std::string data_root;
    std::string out = "relmap.json";
    double threshold = 0.5;
};

int cmd_build_relmap(const BuildRelmapArgs& args) {
    std::vector<std::string> labels;
    if (!args.labels_file.empty()) {
        labels = read_lines(args.labels_file);
    } else if (!args.data_root.empty()) {
        labels = scan_dataset(args.data_root).interactions;
    } else {
        throw std::invalid_argument("[cli] build-relmap needs --labels-file or --data-root");
    }

    RelationshipMap map;
    if (args.mode == "llm") {
        if (args.fixtures.empty()) throw std::invalid_argument("[cli] --fixtures (transcript cache dir) is required");
        TranscriptCache cache(args.fixtures);
        PairOracle oracle;  // cache-only unless a live endpoint is configured
        if (HttpLlmClient::env_configured()) oracle = HttpLlmClient::from_env().as_oracle();
        LlmBuildStats stats;
        map = build_map_llm(labels, oracle, cache, &stats);
        std::cout << "llm relmap: " << stats.pair_lookups << " pair lookups, " << stats.live_calls
                  << " live calls, " << stats.defaulted_negative << " defaulted negative\n";
    } else if (args.mode == "wordnet" || args.mode == "word2vec" || args.mode == "cooccurrence") {
        if (args.fixtures.empty()) throw std::invalid_argument("[cli] --fixtures (score table dir) is required");
        const auto table = load_score_table(fs::path(args.fixtures) / (args.mode + "_scores.json"));
        map = build_map_similarity(labels, table.as_fn(), args.threshold, relmap_provenance_from_string(args.mode));
        std::cout << args.mode << " relmap thresholded at " << args.threshold << "\n";
    } else {
        throw std::invalid_argument("[cli] unknown mode: " + args.mode);
    }

    save_map(args.out, map);
    size_t positives = 0;
    for (size_t i = 0; i < map.size(); ++i)
        for (size_t j = i + 1; j < map.size(); ++j) positives += map.at(i, j);
    std::cout << "wrote " << args.out << " (" << map.size() << " labels, " << positives
              << " positive off-diagonal pairs)\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// gen-synonyms
// --------------------------------------------------------------------------

struct GenSynonymsArgs {
    std::string data_root;
    std::string labels_file;
    std::string response_file;
    std::string out = "synonyms.json";
    double p = 0.2;
    int k_s = 3;
};

int cmd_gen_synonyms(const GenSynonymsArgs& args) {
    std::vector<std::string> labels;
    std::map<std::string, std::string> contexts;
    if (!args.data_root.empty()) {
        const auto index = scan_dataset(args.data_root);
        labels = index.interactions;
        for (const auto& label : labels) {
            for (const auto& s : index.samples) {
                if (s.interaction == label) {
                    contexts[label] = s.object;
                    break;
                }
            }
        }
    } else if (!args.labels_file.empty()) {
        labels = read_lines(args.labels_file);
        for (const auto& label : labels) contexts[label] = "object";
    } else {
        throw std::invalid_argument("[cli] gen-synonyms needs --data-root or --labels-file");
    }

    const std::string prompt = build_synonym_prompt(labels, contexts);
    std::string response;
    if (!args.response_file.empty()) {
        response = read_file(args.response_file);
    } else if (HttpLlmClient::env_configured()) {
        response = HttpLlmClient::from_env().complete(prompt);
    } else {
        throw std::invalid_argument("[cli] gen-synonyms needs --response <file> or INTRA_LLM_ENDPOINT");
    }

    SynonymTable table;
    table.k_s = args.k_s;
    table.substitute_prob = args.p;
    table.entries = parse_and_dedupe(response, labels, labels);
    table.validate_against(labels);
    save_synonyms(args.out, table);

    size_t total = 0;
    for (const auto& [label, syns] : table.entries) total += syns.size();
    std::cout << "wrote " << args.out << " (" << table.entries.size() << " labels, " << total << " synonyms, p="
              << table.substitute_prob << ")\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

struct TrainArgs {
    std::string config;
    std::string data_root;
    std::string relmap;
    std::string synonyms;
    std::string out_dir;
    std::string resume;
    int steps = -1;
    int64_t seed = -1;
};

int cmd_train(const TrainArgs& args) {
    TrainConfig config = args.config.empty() ? TrainConfig() : TrainConfig::from_file(args.config);
    if (!args.data_root.empty()) config.data_root = args.data_root;
    if (!args.relmap.empty()) config.relmap_path = args.relmap;
    if (!args.synonyms.empty()) config.synonyms_path = args.synonyms;
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    if (!args.resume.empty()) config.resume_from = args.resume;
    if (args.steps > 0) config.steps = args.steps;
    if (args.seed >= 0) config.seed = static_cast<uint64_t>(args.seed);

    const TrainResult result = train(config);
    std::cout << "trained " << result.total_losses.size() << " steps; final loss "
              << (result.total_losses.empty() ? 0.0 : result.total_losses.back()) << "\n"
              << "checkpoint: " << result.checkpoint_path.string() << "\n"
              << "loss curve: " << result.loss_curve_path.string() << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// eval
// --------------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string data_root;
    std::string pred_dir;
    std::string gt_dir;
    std::string out_csv = "eval_pairs.csv";
    std::string out_json = "eval_summary.json";
};

int cmd_eval(const EvalArgs& args) {
    std::vector<EvalPair> pairs;

    if (!args.checkpoint.empty()) {
        if (args.data_root.empty()) throw std::invalid_argument("[cli] eval with --checkpoint needs --data-root");
        const auto index = scan_dataset(args.data_root);
        for (size_t i : index.test_ego_indices()) {
            const auto it = index.gt_masks.find(i);
            if (it == index.gt_masks.end()) continue;
            const Sample& s = index.samples[i];
            EvalPair pair;
            pair.id = s.image_path.string();
            pair.interaction = s.interaction;
            pair.object = s.object;
            pair.prediction = ground(args.checkpoint, s.image_path, s.interaction).map;
            pair.ground_truth = load_gt_mask(it->second);
            pairs.push_back(std::move(pair));
        }
        if (pairs.empty()) throw std::runtime_error("[cli] no egocentric samples with GT masks found");
    } else if (!args.pred_dir.empty() && !args.gt_dir.empty()) {
        // directory mode: PNG maps matched by filename stem
        for (const auto& e : fs::directory_iterator(args.pred_dir)) {
            if (!e.is_regular_file() || e.path().extension() != ".png") continue;
            const fs::path gt = fs::path(args.gt_dir) / e.path().filename();
            if (!fs::exists(gt)) continue;
            EvalPair pair;
            pair.id = e.path().stem().string();
            pair.prediction = load_gt_mask(e.path());
            pair.ground_truth = load_gt_mask(gt);
            pairs.push_back(std::move(pair));
        }
        if (pairs.empty()) throw std::invalid_argument("[cli] no matching prediction/GT pairs found");
    } else {
        throw std::invalid_argument("[cli] eval needs --checkpoint + --data-root, or --pred-dir + --gt-dir");
    }

    const EvalSummary summary = evaluate_dataset(pairs);
    write_report_csv(args.out_csv, summary);
    write_report_json(args.out_json, summary);
    std::cout << "pairs: " << summary.pairs << "\nmKLD: " << summary.mean_kld << "\nmSIM: " << summary.mean_sim
              << "\nmNSS: " << summary.mean_nss << "\nwrote " << args.out_csv << " and " << args.out_json << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// ground
// --------------------------------------------------------------------------

struct GroundArgs {
    std::string checkpoint;
    std::string image;
    std::string text;
    std::string overlay = "overlay.png";
    std::string colormap = "jet";
    double alpha = 0.5;
};

int cmd_ground(const GroundArgs& args) {
    const GroundResult result = ground(args.checkpoint, args.image, args.text);
    const ImageU8 image = read_png(args.image);

    OverlaySpec spec;
    spec.colormap = args.colormap;
    spec.alpha = args.alpha;
    spec.output = args.overlay;
    render_overlay(image, result.map, spec);

    std::cout << "map " << result.map.height << "x" << result.map.width
              << (result.degenerate ? " (degenerate)" : "") << "\noverlay: " << args.overlay
              << "\nraw map: " << args.overlay << ".map.png\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// export-embeddings
// --------------------------------------------------------------------------

struct ExportArgs {
    std::string checkpoint;
    std::string data_root;
    std::string out = "embeddings.csv";
};

int cmd_export_embeddings(const ExportArgs& args) {
    const auto rows = export_embeddings(args.checkpoint, args.data_root, args.out);
    std::cout << "wrote " << rows.size() << " embeddings to " << args.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"INTRA-style text-conditioned affordance grounding pipeline"};
    app.require_subcommand(1);

    ToyDataArgs toy;
    auto* toy_cmd = app.add_subcommand("toy-data", "Generate the synthetic toy dataset");
    toy_cmd->add_option("--out", toy.out, "Output dataset root")->required();
    toy_cmd->add_option("--interactions", toy.interactions, "Interaction labels");
    toy_cmd->add_option("--objects", toy.objects, "Object labels");
    toy_cmd->add_option("--images-per-pair", toy.images_per_pair, "Exocentric train images per pair");
    toy_cmd->add_option("--ego-images-per-pair", toy.ego_images_per_pair, "Egocentric test images per pair");
    toy_cmd->add_option("--image-size", toy.image_size, "Square image size in pixels");
    toy_cmd->add_option("--lattice", toy.lattice, "Cell lattice in pixels");
    toy_cmd->add_option("--seed", toy.seed, "Generator seed");

    BuildRelmapArgs relmap;
    auto* relmap_cmd = app.add_subcommand("build-relmap", "Build the interaction-relationship map");
    relmap_cmd->add_option("--mode", relmap.mode, "llm | wordnet | word2vec | cooccurrence")->required();
    relmap_cmd->add_option("--fixtures", relmap.fixtures, "Transcript cache dir (llm) or score-table dir");
    relmap_cmd->add_option("--labels-file", relmap.labels_file, "Vocabulary file, one label per line");
    relmap_cmd->add_option("--data-root", relmap.data_root, "Dataset root to take the vocabulary from");
    relmap_cmd->add_option("--out", relmap.out, "Output map path");
    relmap_cmd->add_option("--threshold", relmap.threshold, "Similarity threshold (baselines)");

    GenSynonymsArgs synonyms;
    auto* syn_cmd = app.add_subcommand("gen-synonyms", "Build the synonym table");
    syn_cmd->add_option("--data-root", synonyms.data_root, "Dataset root for vocabulary and contexts");
    syn_cmd->add_option("--labels-file", synonyms.labels_file, "Vocabulary file, one label per line");
    syn_cmd->add_option("--response", synonyms.response_file, "Recorded completion to parse offline");
    syn_cmd->add_option("--out", synonyms.out, "Output table path");
    syn_cmd->add_option("--p", synonyms.p, "Substitution probability");
    syn_cmd->add_option("--k", synonyms.k_s, "Synonyms per label");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Run exocentric-only contrastive training");
    train_cmd->add_option("--config", train_args.config, "TOML-style config file");
    train_cmd->add_option("--data-root", train_args.data_root, "Override dataset root");
    train_cmd->add_option("--relmap", train_args.relmap, "Override relationship map path");
    train_cmd->add_option("--synonyms", train_args.synonyms, "Override synonym table path");
    train_cmd->add_option("--out-dir", train_args.out_dir, "Override output directory");
    train_cmd->add_option("--resume", train_args.resume, "Resume from checkpoint");
    train_cmd->add_option("--steps", train_args.steps, "Override step count");
    train_cmd->add_option("--seed", train_args.seed, "Override seed");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "KLD/SIM/NSS evaluation");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint to ground with");
    eval_cmd->add_option("--data-root", eval_args.data_root, "Dataset root (checkpoint mode)");
    eval_cmd->add_option("--pred-dir", eval_args.pred_dir, "Directory of prediction maps (PNG)");
    eval_cmd->add_option("--gt-dir", eval_args.gt_dir, "Directory of GT maps (PNG)");
    eval_cmd->add_option("--out-csv", eval_args.out_csv, "Per-pair CSV report");
    eval_cmd->add_option("--out-json", eval_args.out_json, "JSON summary");

    GroundArgs ground_args;
    auto* ground_cmd = app.add_subcommand("ground", "Ground one image for a free-text interaction");
    ground_cmd->add_option("--checkpoint", ground_args.checkpoint, "Checkpoint path")->required();
    ground_cmd->add_option("--image", ground_args.image, "Input image")->required();
    ground_cmd->add_option("--text", ground_args.text, "Interaction text")->required();
    ground_cmd->add_option("--overlay", ground_args.overlay, "Overlay PNG output");
    ground_cmd->add_option("--colormap", ground_args.colormap, "jet | hot | gray");
    ground_cmd->add_option("--alpha", ground_args.alpha, "Blend weight in [0,1]");

    ExportArgs export_args;
    auto* export_cmd = app.add_subcommand("export-embeddings", "Dump projected embeddings as CSV");
    export_cmd->add_option("--checkpoint", export_args.checkpoint, "Checkpoint path")->required();
    export_cmd->add_option("--data-root", export_args.data_root, "Dataset root")->required();
    export_cmd->add_option("--out", export_args.out, "Output CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (toy_cmd->parsed()) return cmd_toy_data(toy);
        if (relmap_cmd->parsed()) return cmd_build_relmap(relmap);
        if (syn_cmd->parsed()) return cmd_gen_synonyms(synonyms);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (ground_cmd->parsed()) return cmd_ground(ground_args);
        if (export_cmd->parsed()) return cmd_export_embeddings(export_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
