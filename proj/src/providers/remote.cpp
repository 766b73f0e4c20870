#include "chunkbench/remote.h"

#include <cstdlib>

#include <httplib.h>

#include "chunkbench/text.h"

namespace chunkbench {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint \"" + endpoint + "\" has no scheme");
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return Url{endpoint, "/"};
  return Url{endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string api_key(const ProviderConfig& config, const char* fallback_env) {
  const std::string& name = config.api_key_env.empty() ? std::string(fallback_env)
                                                       : config.api_key_env;
  const char* value = std::getenv(name.c_str());
  return value ? std::string(value) : std::string();
}

const nlohmann::json& at_pointer(const nlohmann::json& doc, const std::string& pointer) {
  try {
    return doc.at(nlohmann::json::json_pointer(pointer));
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("response has no " + pointer + ": " + e.what());
  }
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body,
                         const std::string& bearer_token, int timeout_seconds) {
  auto url = split_url(endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("POST " + endpoint + " returned HTTP " +
                         std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("POST " + endpoint + " returned invalid JSON: " + e.what());
  }
}

std::string fill_template(
    std::string tmpl,
    std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  for (const auto& [name, value] : values) {
    const std::string needle = "{" + std::string(name) + "}";
    std::size_t at = 0;
    while ((at = tmpl.find(needle, at)) != std::string::npos) {
      tmpl.replace(at, needle.size(), value);
      at += value.size();
    }
  }
  return tmpl;
}

// ---------------------------------------------------------------------------

RemoteEmbeddingBackend::RemoteEmbeddingBackend(ProviderConfig config)
    : config_(std::move(config)) {
  config_.validate();
}

std::vector<std::vector<float>> RemoteEmbeddingBackend::embed(
    std::span<const std::string> texts) {
  nlohmann::json body{{"model", config_.model_name},
                      {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  auto doc = post_json(*config_.endpoint, body, api_key(config_, "EMBED_API_KEY"),
                       config_.timeout_seconds);
  const auto& items = at_pointer(doc, config_.adapter.embeddings_pointer);
  if (!items.is_array()) throw TransportError("embeddings payload is not an array");
  std::vector<std::vector<float>> out;
  out.reserve(items.size());
  try {
    for (const auto& item : items) {
      const auto& vec =
          config_.adapter.embedding_field.empty() ? item : item.at(config_.adapter.embedding_field);
      out.push_back(vec.get<std::vector<float>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed embedding in response: ") + e.what());
  }
  return out;
}

RemoteGenerationBackend::RemoteGenerationBackend(ProviderConfig config,
                                                 PromptTemplates prompts)
    : config_(std::move(config)), prompts_(std::move(prompts)) {
  config_.validate();
}

std::string RemoteGenerationBackend::complete(const std::string& prompt) {
  nlohmann::json body{{"model", config_.model_name}, {"prompt", prompt}};
  auto doc = post_json(*config_.endpoint, body, api_key(config_, "LLM_API_KEY"),
                       config_.timeout_seconds);
  const auto& answer = at_pointer(doc, config_.adapter.text_pointer);
  if (!answer.is_string()) throw TransportError("generation payload is not a string");
  return answer.get<std::string>();
}

std::string RemoteGenerationBackend::propositions(std::string_view unit_text,
                                                  const SectionContext& context) {
  return complete(fill_template(prompts_.propositions,
                                {{"unit", unit_text}, {"context", context.render()}}));
}

std::string RemoteGenerationBackend::context_prefix(std::string_view unit_text,
                                                    const SectionContext& context) {
  return complete(fill_template(prompts_.context_prefix,
                                {{"unit", unit_text}, {"context", context.render()}}));
}

std::string RemoteGenerationBackend::lumber_boundary(std::span<const LumberUnit> group,
                                                     std::size_t budget_tokens) {
  std::string units;
  for (std::size_t i = 0; i < group.size(); ++i) {
    units += "[" + std::to_string(i + 1) + "] (section " + group[i].parent_section_id + ") " +
             group[i].text + "\n";
  }
  return complete(fill_template(prompts_.lumber_boundary,
                                {{"units", units}, {"budget", std::to_string(budget_tokens)}}));
}

std::string RemoteGenerationBackend::summary(std::span<const std::string> texts) {
  auto joined = text::join(std::vector<std::string>(texts.begin(), texts.end()), "\n\n");
  return complete(fill_template(prompts_.summary, {{"texts", joined}}));
}

}  // namespace chunkbench
