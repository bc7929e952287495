#pragma once

#include <string>

#include "intra/relmap.hpp"

namespace intra {

/// Provider-agnostic chat-completion client: POSTs {"prompt": ...} and expects
/// {"text": ...} back. Endpoint and key come from INTRA_LLM_ENDPOINT /
/// INTRA_LLM_KEY unless given explicitly.
class HttpLlmClient {
  public:
    HttpLlmClient(std::string endpoint, std::string api_key);

    /// Builds from environment variables; throws if INTRA_LLM_ENDPOINT is unset.
    static HttpLlmClient from_env();

    /// True when INTRA_LLM_ENDPOINT is configured.
    static bool env_configured();

    std::string complete(const std::string& prompt) const;

    /// Adapter for build_map_llm.
    PairOracle as_oracle() const;

  private:
    std::string endpoint_;
    std::string api_key_;
};

}  // namespace intra
