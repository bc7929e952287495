#include "intra/llm_client.hpp"

#include <cstdlib>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace intra {

HttpLlmClient::HttpLlmClient(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {
    if (endpoint_.empty()) throw std::invalid_argument("[llm] empty endpoint");
}

bool HttpLlmClient::env_configured() {
    const char* ep = std::getenv("INTRA_LLM_ENDPOINT");
    return ep != nullptr && *ep != '\0';
}

HttpLlmClient HttpLlmClient::from_env() {
    const char* ep = std::getenv("INTRA_LLM_ENDPOINT");
    if (!ep || !*ep) throw std::runtime_error("[llm] INTRA_LLM_ENDPOINT is not set");
    const char* key = std::getenv("INTRA_LLM_KEY");
    return HttpLlmClient(ep, key ? key : "");
}

std::string HttpLlmClient::complete(const std::string& prompt) const {
    // Split endpoint into host part and path.
    std::string host = endpoint_;
    std::string path = "/";
    const size_t scheme = host.find("://");
    const size_t slash = host.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
        path = host.substr(slash);
        host = host.substr(0, slash);
    }

    httplib::Client client(host);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    nlohmann::json body;
    body["prompt"] = prompt;
    const auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw std::runtime_error("[llm] transport failure contacting " + endpoint_);
    if (res->status != 200)
        throw std::runtime_error("[llm] endpoint returned status " + std::to_string(res->status));

    const auto parsed = nlohmann::json::parse(res->body);
    if (!parsed.contains("text")) throw std::runtime_error("[llm] response body has no 'text' field");
    return parsed["text"].get<std::string>();
}

PairOracle HttpLlmClient::as_oracle() const {
    return [client = *this](const std::string& prompt) { return client.complete(prompt); };
}

}  // namespace intra
