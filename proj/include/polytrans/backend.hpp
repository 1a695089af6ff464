#pragma once

#include "polytrans/language.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace polytrans {

struct DecodingParams {
    double temperature = 0.7;
    double top_p = 0.95;
    int top_k = 10;
    std::optional<std::int64_t> seed;
    int max_tokens = 2048;

    void validate() const;

    /// Stable hash of every field except the seed (the seed is its own
    /// component of an edge key).
    std::string fingerprint() const;
};

nlohmann::json to_json(const DecodingParams& p);
DecodingParams decoding_params_from_json(const nlohmann::json& j);

/// Prompt body with `{source_lang_name}`, `{target_lang_name}` and
/// `{source_code}` placeholders, each required exactly once. `{{` and `}}`
/// produce literal braces.
class PromptTemplate {
public:
    /// Throws ValidationError on an unknown, missing, or repeated placeholder.
    PromptTemplate(std::string template_id, std::string body, std::string system = {});

    static PromptTemplate default_template();

    const std::string& id() const noexcept { return id_; }
    const std::string& body() const noexcept { return body_; }
    /// Optional system-role preamble; empty means user-role only.
    const std::string& system() const noexcept { return system_; }

    std::string render(const Language& source, const Language& target, std::string_view code) const;

private:
    struct Piece {
        enum class Kind { literal, source_lang, target_lang, source_code } kind;
        std::string text;
    };

    std::string id_;
    std::string body_;
    std::string system_;
    std::vector<Piece> pieces_;
};

std::string render_prompt(const PromptTemplate& t, const Language& source, const Language& target,
                          std::string_view code);

struct InferenceRequest {
    std::string prompt;
    std::string system;
    DecodingParams params;
    std::string model_id;
    int n_samples = 1;

    // Edge identity, used by the scripted backend for lookup.
    std::string source_lang;
    std::string target_lang;
    std::string input_code;
};

struct InferenceResult {
    std::vector<std::string> completions;
    std::chrono::milliseconds latency{0};
    std::string endpoint_id;
};

class Backend {
public:
    virtual ~Backend() = default;

    /// Throws BackendError on transport failure, ScenarioGapError on an
    /// unscripted mock request.
    virtual InferenceResult complete(const InferenceRequest& req) = 0;

    virtual std::string model_id() const = 0;
};

struct Endpoint {
    std::string id;
    std::string base_url;
};

/// Round-robin selection: pool[counter mod |pool|].
const Endpoint& next_endpoint(std::span<const Endpoint> pool, std::uint64_t counter);

class EndpointPool {
public:
    explicit EndpointPool(std::vector<Endpoint> endpoints);

    const Endpoint& next();

    const std::vector<Endpoint>& endpoints() const noexcept { return endpoints_; }

private:
    std::vector<Endpoint> endpoints_;
    std::atomic<std::uint64_t> counter_{0};
};

/// Deterministic scripted backend. Lookup order for a request
/// (source_lang, target_lang, input_code):
///   1. exact entry keyed by the FNV-1a hash of input_code
///   2. pair-wide entry (no input given)
///   3. the default completion
/// An entry may instead be marked as a transport failure.
class MockBackend : public Backend {
public:
    struct Entry {
        std::vector<std::string> completions;
        bool fail = false;
    };

    explicit MockBackend(std::string model_id = "mock");

    void script(const std::string& source_lang, const std::string& target_lang,
                std::string_view input_code, std::string completion);
    void script_pair(const std::string& source_lang, const std::string& target_lang,
                     std::string completion);
    void script_entry(const std::string& source_lang, const std::string& target_lang,
                      std::optional<std::string> input_hash, Entry entry);
    void set_default(std::string completion);

    /// JSON scenario: {"model_id"?, "default"?, "entries": [{"source_lang",
    /// "target_lang", "input_code" | "input_hash" (optional), "completion" |
    /// "completions", "fail"?}]}
    static std::unique_ptr<MockBackend> from_json(const nlohmann::json& scenario);
    static std::unique_ptr<MockBackend> load(const std::filesystem::path& path);

    InferenceResult complete(const InferenceRequest& req) override;
    std::string model_id() const override { return model_id_; }

    std::uint64_t calls() const noexcept { return calls_.load(); }
    void reset_calls() noexcept { calls_ = 0; }

private:
    using Key = std::tuple<std::string, std::string, std::string>;

    std::string model_id_;
    std::map<Key, Entry> exact_;
    std::map<std::pair<std::string, std::string>, Entry> pairs_;
    std::optional<std::string> default_;
    std::atomic<std::uint64_t> calls_{0};
};

struct RetryPolicy {
    int retries = 2;
    std::chrono::milliseconds initial_backoff{500};
};

/// OpenAI-compatible `/v1/chat/completions` client with round-robin
/// dispatch across endpoints.
class OpenAIBackend : public Backend {
public:
    OpenAIBackend(std::vector<Endpoint> endpoints, std::string model_id, std::string api_key,
                  RetryPolicy retry = {}, std::chrono::seconds timeout = std::chrono::seconds{600});

    InferenceResult complete(const InferenceRequest& req) override;
    std::string model_id() const override { return model_id_; }

    static nlohmann::json request_body(const InferenceRequest& req, const std::string& model_id);
    static std::vector<std::string> parse_completions(const nlohmann::json& response);

private:
    EndpointPool pool_;
    std::string model_id_;
    std::string api_key_;
    RetryPolicy retry_;
    std::chrono::seconds timeout_;
};

/// Merged backend configuration file:
///   {"kind": "openai" | "mock", "model_id", "endpoints": [{"id","url"}],
///    "api_key_env", "params": {...}, "scenario": "<mock scenario path>",
///    "retries", "templates": {"<dataset>|default": {"id", "body" | "body_file", "system"?}}}
/// Relative paths resolve against the file's directory.
struct BackendConfig {
    std::string kind = "mock";
    std::string model_id = "mock";
    std::vector<Endpoint> endpoints;
    std::string api_key_env = "OPENAI_API_KEY";
    DecodingParams params;
    RetryPolicy retry;
    std::filesystem::path scenario;
    std::map<std::string, PromptTemplate> templates;

    static BackendConfig load(const std::filesystem::path& path);
    static BackendConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

    /// Template for a dataset, falling back to "default" and then to the
    /// built-in template.
    PromptTemplate template_for(const std::string& dataset) const;

    std::unique_ptr<Backend> make_backend() const;
};

}  // namespace polytrans
