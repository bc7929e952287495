#include "intra/trainer.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace intra {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (data_root.empty()) throw std::invalid_argument("[trainer] data_root not set");
    if (relmap_path.empty()) throw std::invalid_argument("[trainer] relmap_path not set");
    if (!(lr > 0.0)) throw std::invalid_argument("[trainer] lr must be positive");
    if (batch_size_samples < 2) throw std::invalid_argument("[trainer] batch_size_samples must be >= 2");
    if (views < 1) throw std::invalid_argument("[trainer] views must be >= 1");
    if (steps < 1) throw std::invalid_argument("[trainer] steps must be >= 1");
    if (augment.crop_size % encoder.patch != 0)
        throw std::invalid_argument("[trainer] crop_size must be divisible by the encoder patch size");
    loss.validate();
    augment.validate();
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
    TrainConfig c;
    c.data_root = kv.get_string("data_root", c.data_root);
    c.relmap_path = kv.get_string("relmap", c.relmap_path);
    c.synonyms_path = kv.get_string("synonyms", c.synonyms_path);
    c.out_dir = kv.get_string("out_dir", c.out_dir);
    c.resume_from = kv.get_string("resume_from", c.resume_from);

    c.lr = kv.get_double("train.lr", c.lr);
    c.batch_size_samples = static_cast<int>(kv.get_int("train.batch_size_samples", c.batch_size_samples));
    c.views = static_cast<int>(kv.get_int("train.views", c.views));
    c.steps = static_cast<int>(kv.get_int("train.steps", c.steps));
    c.seed = static_cast<uint64_t>(kv.get_int("train.seed", static_cast<int64_t>(c.seed)));
    c.grad_clip = kv.get_double("train.grad_clip", c.grad_clip);
    c.loss_scale_mean = kv.get_bool("train.loss_scale_mean", c.loss_scale_mean);
    c.checkpoint_every = static_cast<int>(kv.get_int("train.checkpoint_every", c.checkpoint_every));
    c.threads = static_cast<int>(kv.get_int("train.threads", c.threads));

    c.loss.temperature = kv.get_double("loss.temperature", c.loss.temperature);
    c.loss.lambda_obj = kv.get_double("loss.lambda_obj", c.loss.lambda_obj);

    c.augment.base_size = static_cast<int>(kv.get_int("augment.base_size", c.augment.base_size));
    c.augment.crop_size = static_cast<int>(kv.get_int("augment.crop_size", c.augment.crop_size));

    c.image_encoder = kv.get_string("encoder.image", c.image_encoder);
    c.text_encoder = kv.get_string("encoder.text", c.text_encoder);
    c.encoder.seed = static_cast<uint64_t>(kv.get_int("encoder.seed", static_cast<int64_t>(c.encoder.seed)));
    c.encoder.patch = static_cast<int>(kv.get_int("encoder.patch", c.encoder.patch));
    c.encoder.image_dim = static_cast<int>(kv.get_int("encoder.image_dim", c.encoder.image_dim));
    c.encoder.text_dim = static_cast<int>(kv.get_int("encoder.text_dim", c.encoder.text_dim));

    c.head.fusion_layers = static_cast<int>(kv.get_int("head.layers", c.head.fusion_layers));
    c.head.fusion_heads = static_cast<int>(kv.get_int("head.heads", c.head.fusion_heads));
    c.head.ffn_mult = static_cast<int>(kv.get_int("head.ffn_mult", c.head.ffn_mult));
    c.head.conv_hidden = static_cast<int>(kv.get_int("head.conv_hidden", c.head.conv_hidden));
    c.head.use_positional = kv.get_bool("head.use_positional", c.head.use_positional);
    c.head.activation = kv.get_string("head.activation", c.head.activation);

    c.projector_dim = static_cast<int>(kv.get_int("projector.dim", c.projector_dim));
    return c;
}

TrainConfig TrainConfig::from_file(const fs::path& path) { return from_kv(KvConfig::parse_file(path)); }

KvConfig TrainConfig::to_kv() const {
    KvConfig kv;
    kv.set("data_root", data_root);
    kv.set("relmap", relmap_path);
    kv.set("synonyms", synonyms_path);
    kv.set("out_dir", out_dir);

    kv.set("train.lr", std::to_string(lr));
    kv.set("train.batch_size_samples", std::to_string(batch_size_samples));
    kv.set("train.views", std::to_string(views));
    kv.set("train.steps", std::to_string(steps));
    kv.set("train.seed", std::to_string(seed));
    kv.set("train.grad_clip", std::to_string(grad_clip));
    kv.set("train.loss_scale_mean", loss_scale_mean ? "true" : "false");
    kv.set("train.checkpoint_every", std::to_string(checkpoint_every));
    kv.set("train.threads", std::to_string(threads));

    kv.set("loss.temperature", std::to_string(loss.temperature));
    kv.set("loss.lambda_obj", std::to_string(loss.lambda_obj));

    kv.set("augment.base_size", std::to_string(augment.base_size));
    kv.set("augment.crop_size", std::to_string(augment.crop_size));

    kv.set("encoder.image", image_encoder);
    kv.set("encoder.text", text_encoder);
    kv.set("encoder.seed", std::to_string(encoder.seed));
    kv.set("encoder.patch", std::to_string(encoder.patch));
    kv.set("encoder.image_dim", std::to_string(encoder.image_dim));
    kv.set("encoder.text_dim", std::to_string(encoder.text_dim));

    kv.set("head.layers", std::to_string(head.fusion_layers));
    kv.set("head.heads", std::to_string(head.fusion_heads));
    kv.set("head.ffn_mult", std::to_string(head.ffn_mult));
    kv.set("head.conv_hidden", std::to_string(head.conv_hidden));
    kv.set("head.use_positional", head.use_positional ? "true" : "false");
    kv.set("head.activation", head.activation);

    kv.set("projector.dim", std::to_string(projector_dim));
    return kv;
}

std::pair<AffordanceHead, Projector> build_model(const TrainConfig& config) {
    HeadConfig hc = config.head;
    hc.image_dim = config.encoder.image_dim;
    hc.text_dim = config.encoder.text_dim;
    hc.max_grid_h = config.augment.crop_size / config.encoder.patch;
    hc.max_grid_w = hc.max_grid_h;
    AffordanceHead head(hc);
    Projector projector(hc.image_dim, config.projector_dim, hc.activation == "gelu");
    return {head, projector};
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

torch::Tensor string_to_tensor(const std::string& s) {
    torch::Tensor t = torch::empty({static_cast<int64_t>(s.size())}, torch::kUInt8);
    if (!s.empty()) std::memcpy(t.data_ptr<uint8_t>(), s.data(), s.size());
    return t;
}

std::string tensor_to_string(const torch::Tensor& t) {
    auto c = t.contiguous();
    return std::string(reinterpret_cast<const char*>(c.data_ptr<uint8_t>()), static_cast<size_t>(c.numel()));
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt, torch::optim::Adam* optimizer) {
    torch::serialize::OutputArchive ar;
    ar.write("version", torch::tensor(ckpt.version));
    ar.write("step", torch::tensor(ckpt.step));
    ar.write("config", string_to_tensor(ckpt.config.to_kv().to_string()));
    ar.write("batch_rng", string_to_tensor(ckpt.batch_rng));
    ar.write("synonym_rng", string_to_tensor(ckpt.synonym_rng));
    for (const auto& p : ckpt.head->named_parameters()) ar.write("head/" + p.key(), p.value().detach().cpu());
    for (const auto& p : ckpt.projector->named_parameters()) ar.write("proj/" + p.key(), p.value().detach().cpu());
    ar.save_to(path.string());

    if (optimizer) {
        torch::serialize::OutputArchive opt_ar;
        optimizer->save(opt_ar);
        opt_ar.save_to(path.string() + ".opt");
    }
}

Checkpoint load_checkpoint(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("[trainer] checkpoint not found: " + path.string());
    torch::serialize::InputArchive ar;
    try {
        ar.load_from(path.string());
    } catch (const std::exception& e) {
        throw std::runtime_error("[trainer] cannot read checkpoint " + path.string() + ": " + e.what());
    }

    Checkpoint ckpt;
    auto read_tensor = [&ar](const std::string& key) {
        torch::Tensor t;  // fresh target per key; archive storages are not resizable
        if (!ar.try_read(key, t)) throw std::runtime_error("[trainer] checkpoint missing field " + key);
        return t;
    };
    ckpt.version = read_tensor("version").item<int64_t>();
    if (ckpt.version != kCheckpointVersion)
        throw std::runtime_error("[trainer] unsupported checkpoint version " + std::to_string(ckpt.version));
    ckpt.step = read_tensor("step").item<int64_t>();
    ckpt.config = TrainConfig::from_kv(KvConfig::parse_string(tensor_to_string(read_tensor("config"))));
    ckpt.batch_rng = tensor_to_string(read_tensor("batch_rng"));
    ckpt.synonym_rng = tensor_to_string(read_tensor("synonym_rng"));

    auto [head, projector] = build_model(ckpt.config);
    torch::NoGradGuard guard;
    for (auto& p : head->named_parameters()) {
        torch::Tensor loaded;
        if (!ar.try_read("head/" + p.key(), loaded))
            throw std::runtime_error("[trainer] checkpoint missing parameter head/" + p.key());
        p.value().copy_(loaded);
    }
    for (auto& p : projector->named_parameters()) {
        torch::Tensor loaded;
        if (!ar.try_read("proj/" + p.key(), loaded))
            throw std::runtime_error("[trainer] checkpoint missing parameter proj/" + p.key());
        p.value().copy_(loaded);
    }
    ckpt.head = head;
    ckpt.projector = projector;
    return ckpt;
}

bool load_optimizer_state(const fs::path& checkpoint_path, torch::optim::Adam& optimizer) {
    const fs::path opt_path = checkpoint_path.string() + ".opt";
    if (!fs::exists(opt_path)) return false;
    torch::serialize::InputArchive ar;
    ar.load_from(opt_path.string());
    optimizer.load(ar);
    return true;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

struct Pipeline {
    DatasetIndex index;
    RelationshipMap relmap;
    std::optional<SynonymTable> synonyms;
    std::shared_ptr<ImageEncoder> image_encoder;
    std::shared_ptr<TextEncoder> text_encoder;
    std::vector<int64_t> relmap_index_by_interaction;  // dataset interaction id -> relmap row
};

Pipeline load_pipeline(const TrainConfig& config) {
    Pipeline p;
    p.index = scan_dataset(config.data_root);
    p.relmap = load_map(config.relmap_path);
    for (const auto& label : p.index.interactions) {
        if (!p.relmap.contains(label))
            throw std::runtime_error("[trainer] relationship map is missing dataset label '" + label + "'");
        p.relmap_index_by_interaction.push_back(static_cast<int64_t>(p.relmap.index_of(label)));
    }
    if (!config.synonyms_path.empty()) p.synonyms = load_synonyms(config.synonyms_path);
    p.image_encoder = make_image_encoder(config.image_encoder, config.encoder);
    p.text_encoder = make_text_encoder(config.text_encoder, config.encoder);
    if (p.image_encoder->feature_dim() != config.encoder.image_dim || p.text_encoder->dim() != config.encoder.text_dim)
        throw std::runtime_error("[trainer] encoder dims do not match config");
    return p;
}

torch::Tensor encode_condition_texts(const Pipeline& p, const Batch& batch, const std::optional<SynonymTable>& table,
                                     Rng& rng, torch::ScalarType dtype) {
    std::vector<torch::Tensor> tokens;
    tokens.reserve(batch.interaction_ids.size());
    for (int64_t id : batch.interaction_ids) {
        const std::string& label = p.index.interactions[static_cast<size_t>(id)];
        const std::string text = table ? sample_condition_text(label, *table, rng) : label;
        tokens.push_back(p.text_encoder->encode(text).to(dtype));
    }
    return torch::stack(tokens);
}

}  // namespace

TrainResult train(const TrainConfig& config) {
    config.validate();
    if (config.threads > 0) at::set_num_threads(config.threads);
    torch::manual_seed(static_cast<uint64_t>(config.seed));

    Pipeline p = load_pipeline(config);

    AffordanceHead head{nullptr};
    Projector projector{nullptr};
    BatchStream batches(p.index, config.batch_size_samples, config.views, config.augment, config.seed);
    Rng synonym_rng(splitmix64(config.seed ^ fnv1a("synonym-stream")));
    int64_t start_step = 0;

    if (!config.resume_from.empty()) {
        Checkpoint ckpt = load_checkpoint(config.resume_from);
        head = ckpt.head;
        projector = ckpt.projector;
        batches.restore_rng(ckpt.batch_rng);
        synonym_rng = Rng::deserialize(ckpt.synonym_rng);
        start_step = ckpt.step;
    } else {
        std::tie(head, projector) = build_model(config);
    }
    head->train();
    projector->train();

    std::vector<torch::Tensor> params;
    for (auto& t : head->parameters()) params.push_back(t);
    for (auto& t : projector->parameters()) params.push_back(t);
    torch::optim::Adam optimizer(params, torch::optim::AdamOptions(config.lr));
    if (!config.resume_from.empty()) load_optimizer_state(config.resume_from, optimizer);

    fs::create_directories(config.out_dir);
    const fs::path curve_path = fs::path(config.out_dir) / "loss_curve.csv";
    std::ofstream curve(curve_path, start_step == 0 ? std::ios::trunc : std::ios::app);
    if (!curve) throw std::runtime_error("[trainer] cannot write " + curve_path.string());
    if (start_step == 0) curve << "step,total,inter,obj\n";
    curve.precision(10);

    const fs::path ckpt_path = fs::path(config.out_dir) / "checkpoint.pt";
    TrainResult result;
    result.checkpoint_path = ckpt_path;
    result.loss_curve_path = curve_path;

    auto save_now = [&](int64_t step) {
        Checkpoint ckpt;
        ckpt.step = step;
        ckpt.config = config;
        ckpt.head = head;
        ckpt.projector = projector;
        ckpt.batch_rng = batches.serialize_rng();
        ckpt.synonym_rng = synonym_rng.serialize();
        save_checkpoint(ckpt_path, ckpt, &optimizer);
    };

    for (int64_t step = start_step; step < config.steps; ++step) {
        Batch batch = batches.next();
        const auto texts = encode_condition_texts(p, batch, p.synonyms, synonym_rng, torch::kFloat32);
        const auto grids = p.image_encoder->encode_batch(batch.images);

        auto maps = head->forward(grids, texts);
        auto pooled = pool_features(grids, maps.values);
        auto z = projector->forward(pooled);

        std::vector<int64_t> relmap_indices;
        relmap_indices.reserve(batch.interaction_ids.size());
        for (int64_t id : batch.interaction_ids)
            relmap_indices.push_back(p.relmap_index_by_interaction[static_cast<size_t>(id)]);

        const TotalLoss losses = l_total(z, relmap_indices, batch.object_ids, p.relmap, config.loss);
        auto objective = config.loss_scale_mean ? losses.total / static_cast<double>(z.size(0)) : losses.total;

        const double total_v = losses.total.item<double>();
        if (!std::isfinite(total_v))
            throw std::runtime_error("[trainer] non-finite loss at step " + std::to_string(step));

        optimizer.zero_grad();
        objective.backward();
        if (config.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(params, config.grad_clip);
        optimizer.step();

        result.total_losses.push_back(total_v);
        result.inter_losses.push_back(losses.inter.item<double>());
        result.obj_losses.push_back(losses.obj.item<double>());
        curve << step << ',' << result.total_losses.back() << ',' << result.inter_losses.back() << ','
              << result.obj_losses.back() << '\n';

        if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0 && step + 1 < config.steps)
            save_now(step + 1);
    }

    save_now(config.steps);
    curve.flush();
    return result;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

GroundResult ground(const fs::path& checkpoint_path, const fs::path& image_path, const std::string& interaction_text) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const TrainConfig& config = ckpt.config;
    auto image_encoder = make_image_encoder(config.image_encoder, config.encoder);
    auto text_encoder = make_text_encoder(config.text_encoder, config.encoder);

    ckpt.head->eval();
    torch::NoGradGuard guard;

    Rng unused(0);
    const ImageU8 image = read_png(image_path);
    const auto tensor = image_to_tensor(augment_image(image, config.augment, /*train=*/false, unused)).unsqueeze(0);
    const auto grid = image_encoder->encode_batch(tensor);
    const auto text = text_encoder->encode(interaction_text).to(torch::kFloat32).unsqueeze(0);
    const auto out = ckpt.head->forward(grid, text);

    GroundResult result;
    result.degenerate = out.degenerate[0].item<bool>();
    const auto values = out.values.squeeze(0).to(torch::kFloat64).contiguous();
    result.map.height = static_cast<int>(values.size(0));
    result.map.width = static_cast<int>(values.size(1));
    result.map.values.assign(values.data_ptr<double>(), values.data_ptr<double>() + values.numel());
    return result;
}

std::vector<EmbeddingRow> export_embeddings(const fs::path& checkpoint_path, const fs::path& data_root,
                                            const fs::path& out_csv) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const TrainConfig& config = ckpt.config;
    auto image_encoder = make_image_encoder(config.image_encoder, config.encoder);
    auto text_encoder = make_text_encoder(config.text_encoder, config.encoder);
    const DatasetIndex index = scan_dataset(data_root);

    ckpt.head->eval();
    ckpt.projector->eval();
    torch::NoGradGuard guard;

    std::vector<EmbeddingRow> rows;
    rows.reserve(index.samples.size());
    for (const Sample& s : index.samples) {
        const auto tensor = eval_image_tensor(s, config.augment).unsqueeze(0);
        const auto grid = image_encoder->encode_batch(tensor);
        const auto text = text_encoder->encode(s.interaction).to(torch::kFloat32).unsqueeze(0);
        const auto maps = ckpt.head->forward(grid, text);
        const auto z = ckpt.projector->forward(pool_features(grid, maps.values)).squeeze(0).contiguous();

        EmbeddingRow row;
        row.image = s.image_path.string();
        row.split = s.split == Split::train ? "train" : "test";
        row.view = s.view == View::exocentric ? "exocentric" : "egocentric";
        row.interaction = s.interaction;
        row.object = s.object;
        row.z.assign(z.data_ptr<float>(), z.data_ptr<float>() + z.numel());
        rows.push_back(std::move(row));
    }

    std::ofstream os(out_csv);
    if (!os) throw std::runtime_error("[trainer] cannot write " + out_csv.string());
    os << "image,split,view,interaction,object";
    for (int i = 0; i < config.projector_dim; ++i) os << ",z" << i;
    os << '\n';
    os.precision(8);
    for (const auto& r : rows) {
        os << r.image << ',' << r.split << ',' << r.view << ',' << r.interaction << ',' << r.object;
        for (float v : r.z) os << ',' << v;
        os << '\n';
    }
    return rows;
}

}  // namespace intra
