#include "polytrans/backend.hpp"

#include "polytrans/error.hpp"
#include "polytrans/hash.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace polytrans {

using nlohmann::json;

// ---------------------------------------------------------------------------
// DecodingParams

void DecodingParams::validate() const {
    if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must be in (0, 1]");
    if (top_k < 1) throw ValidationError("top_k must be >= 1");
    if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
}

std::string DecodingParams::fingerprint() const {
    json j = to_json(*this);
    j.erase("seed");
    return content_hash(j.dump());
}

json to_json(const DecodingParams& p) {
    json j{{"temperature", p.temperature},
           {"top_p", p.top_p},
           {"top_k", p.top_k},
           {"max_tokens", p.max_tokens}};
    j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
    return j;
}

DecodingParams decoding_params_from_json(const json& j) {
    DecodingParams p;
    p.temperature = j.value("temperature", p.temperature);
    p.top_p = j.value("top_p", p.top_p);
    p.top_k = j.value("top_k", p.top_k);
    p.max_tokens = j.value("max_tokens", p.max_tokens);
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) p.seed = it->get<std::int64_t>();
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// PromptTemplate

PromptTemplate::PromptTemplate(std::string template_id, std::string body, std::string system)
    : id_(std::move(template_id)), body_(std::move(body)), system_(std::move(system)) {
    if (id_.empty()) throw ValidationError("prompt template id must be nonempty");

    int seen_src = 0, seen_tgt = 0, seen_code = 0;
    std::string literal;
    auto flush = [&] {
        if (!literal.empty()) pieces_.push_back({Piece::Kind::literal, std::move(literal)});
        literal.clear();
    };

    for (std::size_t i = 0; i < body_.size(); ++i) {
        const char c = body_[i];
        if (c == '{' && i + 1 < body_.size() && body_[i + 1] == '{') {
            literal += '{';
            ++i;
        } else if (c == '}' && i + 1 < body_.size() && body_[i + 1] == '}') {
            literal += '}';
            ++i;
        } else if (c == '{') {
            const auto close = body_.find('}', i);
            if (close == std::string::npos)
                throw ValidationError("template '" + id_ + "': unterminated placeholder");
            const auto name = body_.substr(i + 1, close - i - 1);
            flush();
            if (name == "source_lang_name") {
                pieces_.push_back({Piece::Kind::source_lang, {}});
                ++seen_src;
            } else if (name == "target_lang_name") {
                pieces_.push_back({Piece::Kind::target_lang, {}});
                ++seen_tgt;
            } else if (name == "source_code") {
                pieces_.push_back({Piece::Kind::source_code, {}});
                ++seen_code;
            } else {
                throw ValidationError("template '" + id_ + "': unresolved placeholder {" + name + "}");
            }
            i = close;
        } else if (c == '}') {
            throw ValidationError("template '" + id_ + "': unmatched '}' (use '}}' for a literal brace)");
        } else {
            literal += c;
        }
    }
    flush();

    auto require_once = [&](int count, const char* name) {
        if (count != 1)
            throw ValidationError("template '" + id_ + "': placeholder {" + name + "} must appear exactly once, found " +
                                  std::to_string(count));
    };
    require_once(seen_src, "source_lang_name");
    require_once(seen_tgt, "target_lang_name");
    require_once(seen_code, "source_code");
}

PromptTemplate PromptTemplate::default_template() {
    return PromptTemplate(
        "default-v1",
        "Translate the following {source_lang_name} program to {target_lang_name}. "
        "Keep the program's behavior identical, including its input and output format. "
        "Reply with the complete translated program in a single fenced code block.\n\n"
        "```\n{source_code}\n```\n");
}

std::string PromptTemplate::render(const Language& source, const Language& target,
                                   std::string_view code) const {
    std::string out;
    for (const auto& piece : pieces_) {
        switch (piece.kind) {
            case Piece::Kind::literal: out += piece.text; break;
            case Piece::Kind::source_lang: out += source.display_name; break;
            case Piece::Kind::target_lang: out += target.display_name; break;
            case Piece::Kind::source_code: out += code; break;
        }
    }
    return out;
}

std::string render_prompt(const PromptTemplate& t, const Language& source, const Language& target,
                          std::string_view code) {
    return t.render(source, target, code);
}

// ---------------------------------------------------------------------------
// Round-robin

const Endpoint& next_endpoint(std::span<const Endpoint> pool, std::uint64_t counter) {
    if (pool.empty()) throw ConfigError("endpoint pool is empty");
    return pool[counter % pool.size()];
}

EndpointPool::EndpointPool(std::vector<Endpoint> endpoints) : endpoints_(std::move(endpoints)) {
    if (endpoints_.empty()) throw ConfigError("endpoint pool is empty");
}

const Endpoint& EndpointPool::next() {
    return next_endpoint(endpoints_, counter_.fetch_add(1, std::memory_order_relaxed));
}

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(std::string model_id) : model_id_(std::move(model_id)) {}

void MockBackend::script(const std::string& source_lang, const std::string& target_lang,
                         std::string_view input_code, std::string completion) {
    script_entry(source_lang, target_lang, content_hash(input_code), Entry{{std::move(completion)}, false});
}

void MockBackend::script_pair(const std::string& source_lang, const std::string& target_lang,
                              std::string completion) {
    script_entry(source_lang, target_lang, std::nullopt, Entry{{std::move(completion)}, false});
}

void MockBackend::script_entry(const std::string& source_lang, const std::string& target_lang,
                               std::optional<std::string> input_hash, Entry entry) {
    if (!entry.fail && entry.completions.empty())
        throw ConfigError("scripted entry " + source_lang + "->" + target_lang + " has no completions");
    if (input_hash)
        exact_[{source_lang, target_lang, *input_hash}] = std::move(entry);
    else
        pairs_[{source_lang, target_lang}] = std::move(entry);
}

void MockBackend::set_default(std::string completion) { default_ = std::move(completion); }

std::unique_ptr<MockBackend> MockBackend::from_json(const json& scenario) {
    auto mock = std::make_unique<MockBackend>(scenario.value("model_id", "mock"));
    if (auto it = scenario.find("default"); it != scenario.end() && !it->is_null())
        mock->set_default(it->get<std::string>());
    for (const auto& e : scenario.value("entries", json::array())) {
        Entry entry;
        entry.fail = e.value("fail", false);
        if (e.contains("completion")) entry.completions.push_back(e.at("completion").get<std::string>());
        if (e.contains("completions"))
            for (const auto& c : e.at("completions")) entry.completions.push_back(c.get<std::string>());
        std::optional<std::string> hash;
        if (e.contains("input_code")) hash = content_hash(e.at("input_code").get<std::string>());
        if (e.contains("input_hash")) hash = e.at("input_hash").get<std::string>();
        mock->script_entry(e.at("source_lang").get<std::string>(), e.at("target_lang").get<std::string>(),
                           std::move(hash), std::move(entry));
    }
    return mock;
}

std::unique_ptr<MockBackend> MockBackend::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock scenario " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

InferenceResult MockBackend::complete(const InferenceRequest& req) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    if (req.n_samples < 1) throw ConfigError("n_samples must be >= 1");

    const Entry* entry = nullptr;
    if (auto it = exact_.find({req.source_lang, req.target_lang, content_hash(req.input_code)});
        it != exact_.end())
        entry = &it->second;
    else if (auto pit = pairs_.find({req.source_lang, req.target_lang}); pit != pairs_.end())
        entry = &pit->second;

    InferenceResult result;
    result.endpoint_id = "mock";
    if (entry == nullptr) {
        if (!default_)
            throw ScenarioGapError("no scripted completion for " + req.source_lang + "->" + req.target_lang +
                                   " input " + content_hash(req.input_code));
        result.completions.assign(static_cast<std::size_t>(req.n_samples), *default_);
        return result;
    }
    if (entry->fail)
        throw BackendError("scripted transport failure for " + req.source_lang + "->" + req.target_lang);
    for (int i = 0; i < req.n_samples; ++i)
        result.completions.push_back(entry->completions[static_cast<std::size_t>(i) % entry->completions.size()]);
    return result;
}

// ---------------------------------------------------------------------------
// OpenAIBackend

namespace {

struct SplitUrl {
    std::string scheme_host_port;
    std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto slash = url.find('/', host_start);
    SplitUrl out;
    out.scheme_host_port = url.substr(0, slash);
    if (slash != std::string::npos) out.path_prefix = url.substr(slash);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    if (out.path_prefix.empty()) out.path_prefix = "/v1";
    return out;
}

}  // namespace

OpenAIBackend::OpenAIBackend(std::vector<Endpoint> endpoints, std::string model_id, std::string api_key,
                             RetryPolicy retry, std::chrono::seconds timeout)
    : pool_(std::move(endpoints)),
      model_id_(std::move(model_id)),
      api_key_(std::move(api_key)),
      retry_(retry),
      timeout_(timeout) {}

json OpenAIBackend::request_body(const InferenceRequest& req, const std::string& model_id) {
    json messages = json::array();
    if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
    messages.push_back({{"role", "user"}, {"content", req.prompt}});
    json body{{"model", model_id},
              {"messages", std::move(messages)},
              {"temperature", req.params.temperature},
              {"top_p", req.params.top_p},
              {"top_k", req.params.top_k},
              {"max_tokens", req.params.max_tokens},
              {"n", req.n_samples}};
    if (req.params.seed) body["seed"] = *req.params.seed;
    return body;
}

std::vector<std::string> OpenAIBackend::parse_completions(const json& response) {
    std::vector<std::string> out;
    const auto& choices = response.at("choices");
    std::vector<std::pair<int, std::string>> indexed;
    for (const auto& choice : choices) {
        const int index = choice.value("index", static_cast<int>(indexed.size()));
        const auto& content = choice.at("message").at("content");
        indexed.emplace_back(index, content.is_null() ? std::string{} : content.get<std::string>());
    }
    std::stable_sort(indexed.begin(), indexed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, text] : indexed) out.push_back(std::move(text));
    return out;
}

InferenceResult OpenAIBackend::complete(const InferenceRequest& req) {
    req.params.validate();
    const auto body = request_body(req, model_id_).dump();
    std::string last_error;
    auto backoff = retry_.initial_backoff;

    for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        const Endpoint& ep = pool_.next();
        const auto url = split_url(ep.base_url);
        httplib::Client client(url.scheme_host_port);
        client.set_connection_timeout(std::chrono::seconds{10});
        client.set_read_timeout(timeout_);
        client.set_write_timeout(std::chrono::seconds{60});
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(url.path_prefix + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = ep.id + ": " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = ep.id + ": HTTP " + std::to_string(res->status);
            if (res->status >= 400 && res->status < 500 && res->status != 429) break;
            continue;
        }
        InferenceResult result;
        try {
            result.completions = parse_completions(json::parse(res->body));
        } catch (const json::exception& e) {
            last_error = ep.id + ": malformed response: " + e.what();
            continue;
        }
        if (static_cast<int>(result.completions.size()) != req.n_samples) {
            last_error = ep.id + ": expected " + std::to_string(req.n_samples) + " completions, got " +
                         std::to_string(result.completions.size());
            continue;
        }
        result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        result.endpoint_id = ep.id;
        return result;
    }
    throw BackendError("inference failed: " + last_error);
}

// ---------------------------------------------------------------------------
// BackendConfig

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

BackendConfig BackendConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    return from_json(j, path.parent_path());
}

BackendConfig BackendConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    BackendConfig cfg;
    try {
        cfg.kind = j.value("kind", cfg.kind);
        if (cfg.kind != "mock" && cfg.kind != "openai")
            throw ConfigError("backend kind must be 'mock' or 'openai', got '" + cfg.kind + "'");
        cfg.model_id = j.value("model_id", cfg.kind == "mock" ? std::string("mock") : std::string{});
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        if (j.contains("params")) cfg.params = decoding_params_from_json(j.at("params"));
        cfg.retry.retries = j.value("retries", cfg.retry.retries);
        if (j.contains("backoff_ms")) cfg.retry.initial_backoff = std::chrono::milliseconds{j.at("backoff_ms").get<int>()};
        for (const auto& e : j.value("endpoints", json::array()))
            cfg.endpoints.push_back({e.value("id", e.at("url").get<std::string>()), e.at("url").get<std::string>()});
        if (j.contains("scenario")) cfg.scenario = resolve(base_dir, j.at("scenario").get<std::string>());
        const json templates = j.value("templates", json::object());
        for (const auto& [name, t] : templates.items()) {
            std::string body = t.contains("body_file")
                                   ? read_file(resolve(base_dir, t.at("body_file").get<std::string>()))
                                   : t.at("body").get<std::string>();
            cfg.templates.emplace(name, PromptTemplate(t.value("id", name), std::move(body), t.value("system", "")));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend config: ") + e.what());
    }
    if (cfg.kind == "openai") {
        if (cfg.endpoints.empty()) throw ConfigError("backend config: openai backend needs at least one endpoint");
        if (cfg.model_id.empty()) throw ConfigError("backend config: model_id is required");
    }
    if (cfg.kind == "mock" && cfg.scenario.empty())
        throw ConfigError("backend config: mock backend needs a scenario file");
    return cfg;
}

PromptTemplate BackendConfig::template_for(const std::string& dataset) const {
    if (auto it = templates.find(dataset); it != templates.end()) return it->second;
    if (auto it = templates.find("default"); it != templates.end()) return it->second;
    return PromptTemplate::default_template();
}

std::unique_ptr<Backend> BackendConfig::make_backend() const {
    if (kind == "mock") {
        auto mock = MockBackend::load(scenario);
        return mock;
    }
    const char* key = std::getenv(api_key_env.c_str());
    return std::make_unique<OpenAIBackend>(endpoints, model_id, key ? key : "", retry);
}

}  // namespace polytrans
