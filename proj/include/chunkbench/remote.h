#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "chunkbench/error.h"
#include "chunkbench/providers.h"

namespace chunkbench {

/// Failure of one remote round trip (network error, non-2xx status,
/// unexpected response shape). Retried by the services.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Embeddings over HTTP: POST {"model", "input": [...]} to the endpoint,
/// bearer token from the configured environment variable.
class RemoteEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit RemoteEmbeddingBackend(ProviderConfig config);

  std::string model_name() const override { return config_.model_name; }
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

 private:
  ProviderConfig config_;
};

/// Generation over HTTP: POST {"model", "prompt"}; the answer text is read
/// from `adapter.text_pointer`.
class RemoteGenerationBackend : public GenerationBackend {
 public:
  RemoteGenerationBackend(ProviderConfig config, PromptTemplates prompts);

  std::string model_name() const override { return config_.model_name; }
  std::string propositions(std::string_view unit_text,
                           const SectionContext& context) override;
  std::string context_prefix(std::string_view unit_text,
                             const SectionContext& context) override;
  std::string lumber_boundary(std::span<const LumberUnit> group,
                              std::size_t budget_tokens) override;
  std::string summary(std::span<const std::string> texts) override;

  std::string complete(const std::string& prompt);

 private:
  ProviderConfig config_;
  PromptTemplates prompts_;
};

/// POSTs a JSON body to `endpoint` and returns the parsed JSON response.
/// Throws TransportError on any failure.
nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body,
                         const std::string& bearer_token, int timeout_seconds);

/// Replaces every "{name}" in `tmpl` with the given value.
std::string fill_template(std::string tmpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>>
                              values);

}  // namespace chunkbench
