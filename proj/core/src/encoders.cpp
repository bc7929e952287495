#include "intra/encoders.hpp"

#include <mutex>
#include <sstream>
#include <stdexcept>

#include "intra/rng.hpp"

namespace intra {

namespace {

torch::Tensor normal_tensor(Rng& rng, std::vector<int64_t> shape) {
    int64_t n = 1;
    for (auto s : shape) n *= s;
    std::vector<double> buf(static_cast<size_t>(n));
    for (auto& v : buf) v = rng.normal();
    return torch::from_blob(buf.data(), shape, torch::kFloat64).clone();
}

}  // namespace

uint64_t tensor_checksum(const torch::Tensor& t) {
    auto c = t.contiguous().to(torch::kFloat64);
    const auto* data = reinterpret_cast<const char*>(c.data_ptr<double>());
    return fnv1a(std::string_view(data, c.numel() * sizeof(double)));
}

torch::Tensor image_to_tensor(const ImageU8& image) {
    torch::Tensor t = torch::empty({3, image.height, image.width}, torch::kFloat32);
    auto acc = t.accessor<float, 3>();
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int src_c = image.channels == 1 ? 0 : c;
                acc[c][y][x] = image.at(y, x, src_c) / 255.0f;
            }
    return t;
}

FeatureGrid ImageEncoder::encode_image(const ImageU8& image) const {
    torch::NoGradGuard guard;
    auto batch = encode_batch(image_to_tensor(image).unsqueeze(0));
    FeatureGrid grid;
    grid.height = static_cast<int>(batch.size(1));
    grid.width = static_cast<int>(batch.size(2));
    grid.dim = static_cast<int>(batch.size(3));
    grid.values = batch.squeeze(0);
    return grid;
}

// ---------------------------------------------------------------------------
// ToyImageEncoder
// ---------------------------------------------------------------------------

ToyImageEncoder::ToyImageEncoder(uint64_t seed, int patch, int dim) : patch_(patch), dim_(dim) {
    if (patch <= 0 || dim <= 0) throw std::invalid_argument("[encoders] patch and dim must be positive");
    Rng rng(splitmix64(seed ^ fnv1a("toy-image-encoder")));
    // 1/sqrt(3) keeps feature magnitudes O(1) for inputs in [0,1]^3.
    weight_ = normal_tensor(rng, {dim, 3}) / std::sqrt(3.0);
    bias_ = normal_tensor(rng, {dim}) * 0.1;
    weight_.set_requires_grad(false);
    bias_.set_requires_grad(false);
}

torch::Tensor ToyImageEncoder::encode_batch(const torch::Tensor& images) const {
    if (images.dim() != 4 || images.size(1) != 3)
        throw std::invalid_argument("[encoders] encode_batch expects [B,3,H,W]");
    const int64_t h = images.size(2), w = images.size(3);
    if (h % patch_ != 0 || w % patch_ != 0) {
        std::ostringstream os;
        os << "[encoders] image " << h << "x" << w << " not divisible by patch " << patch_;
        throw std::invalid_argument(os.str());
    }
    torch::NoGradGuard guard;
    const auto dtype = images.scalar_type();
    auto pooled = torch::avg_pool2d(images, {patch_, patch_});        // [B,3,h,w]
    pooled = pooled.permute({0, 2, 3, 1});                            // [B,h,w,3]
    return torch::matmul(pooled, weight_.t().to(dtype)) + bias_.to(dtype);
}

uint64_t ToyImageEncoder::checksum() const {
    return splitmix64(tensor_checksum(weight_) ^ tensor_checksum(bias_));
}

// ---------------------------------------------------------------------------
// ToyTextEncoder
// ---------------------------------------------------------------------------

torch::Tensor ToyTextEncoder::encode(const std::string& text) const {
    std::vector<std::string> tokens;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) tokens.push_back(tok);
    if (tokens.empty()) throw std::invalid_argument("[encoders] empty text");

    torch::NoGradGuard guard;
    torch::Tensor acc = torch::zeros({dim_}, torch::kFloat64);
    for (const auto& t : tokens) {
        Rng rng(splitmix64(seed_ ^ fnv1a(t)));
        acc += normal_tensor(rng, {dim_});
    }
    return acc / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

std::mutex g_registry_mu;

std::map<std::string, ImageEncoderFactory>& image_registry() {
    static std::map<std::string, ImageEncoderFactory> reg = {
        {"toy", [](const EncoderConfig& c) { return std::make_shared<ToyImageEncoder>(c.seed, c.patch, c.image_dim); }},
        {"dinov2-base", [](const EncoderConfig&) -> std::shared_ptr<ImageEncoder> {
             throw std::runtime_error(
                 "[encoders] 'dinov2-base' needs externally supplied weights; register a plugin factory to use it");
         }},
    };
    return reg;
}

std::map<std::string, TextEncoderFactory>& text_registry() {
    static std::map<std::string, TextEncoderFactory> reg = {
        {"toy", [](const EncoderConfig& c) { return std::make_shared<ToyTextEncoder>(c.seed, c.text_dim); }},
        {"albef", [](const EncoderConfig&) -> std::shared_ptr<TextEncoder> {
             throw std::runtime_error(
                 "[encoders] 'albef' needs externally supplied weights; register a plugin factory to use it");
         }},
    };
    return reg;
}

}  // namespace

void register_image_encoder(const std::string& name, ImageEncoderFactory factory) {
    std::lock_guard lock(g_registry_mu);
    image_registry()[name] = std::move(factory);
}

void register_text_encoder(const std::string& name, TextEncoderFactory factory) {
    std::lock_guard lock(g_registry_mu);
    text_registry()[name] = std::move(factory);
}

std::shared_ptr<ImageEncoder> make_image_encoder(const std::string& name, const EncoderConfig& cfg) {
    std::lock_guard lock(g_registry_mu);
    auto& reg = image_registry();
    const auto it = reg.find(name);
    if (it == reg.end()) throw std::invalid_argument("[encoders] unknown image encoder: " + name);
    return it->second(cfg);
}

std::shared_ptr<TextEncoder> make_text_encoder(const std::string& name, const EncoderConfig& cfg) {
    std::lock_guard lock(g_registry_mu);
    auto& reg = text_registry();
    const auto it = reg.find(name);
    if (it == reg.end()) throw std::invalid_argument("[encoders] unknown text encoder: " + name);
    return it->second(cfg);
}

}  // namespace intra
