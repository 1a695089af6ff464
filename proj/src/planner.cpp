#include "polytrans/planner.hpp"

#include "polytrans/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace polytrans {

void PlanConfig::validate() const {
    if (max_depth < 1)
        throw ValidationError("max_depth must be >= 1, got " + std::to_string(max_depth));
    if (source.id == target.id)
        throw ValidationError("source and target are both '" + source.id + "'");

    std::set<std::string> seen;
    bool has_source = false;
    for (const auto& lang : intermediates) {
        if (!seen.insert(lang.id).second)
            throw ValidationError("intermediate language '" + lang.id + "' listed twice");
        if (lang.id == target.id)
            throw ValidationError("intermediates must exclude the target language '" +
                                  target.id + "'");
        has_source = has_source || lang.id == source.id;
    }
    if (!has_source)
        throw ValidationError("intermediates must include the source language '" + source.id +
                              "'");
}

PlanConfig PlanConfig::for_pair(const Language& source, const Language& target,
                                const std::vector<Language>& pool, int max_depth) {
    PlanConfig cfg{source, target, {}, max_depth};
    const bool pool_has_source =
        std::any_of(pool.begin(), pool.end(), [&](const Language& l) { return l.id == source.id; });
    if (!pool_has_source) cfg.intermediates.push_back(source);
    for (const auto& lang : pool)
        if (lang.id != target.id) cfg.intermediates.push_back(lang);
    return cfg;
}

std::string TranslationPath::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < langs.size(); ++i) {
        if (i != 0) out += " -> ";
        out += langs[i];
    }
    return out;
}

PathSet generate_paths(const PlanConfig& config) {
    config.validate();

    std::vector<std::string> children;
    children.reserve(config.intermediates.size() + 1);
    children.push_back(config.target.id);
    for (const auto& lang : config.intermediates) children.push_back(lang.id);

    PathSet result;
    std::deque<std::pair<std::vector<std::string>, int>> queue;
    queue.emplace_back(std::vector<std::string>{config.source.id}, 0);

    while (!queue.empty()) {
        auto [current, depth] = std::move(queue.front());
        queue.pop_front();
        const std::string& last = current.back();
        if (last == config.target.id) {
            result.paths.push_back(TranslationPath{std::move(current)});
        } else if (depth < config.max_depth) {
            for (const auto& lang : children) {
                if (lang == last) continue;
                auto next = current;
                next.push_back(lang);
                queue.emplace_back(std::move(next), depth + 1);
            }
        }
    }

    // BFS already yields non-decreasing lengths; the stable sort keeps that
    // order explicit for callers that build PathSets by hand.
    std::stable_sort(result.paths.begin(), result.paths.end(),
                     [](const TranslationPath& a, const TranslationPath& b) {
                         return a.edges() < b.edges();
                     });
    return result;
}

std::uint64_t count_paths(std::uint64_t n_intermediates, std::uint64_t max_depth) {
    if (n_intermediates < 1) throw ValidationError("n_intermediates must be >= 1");
    if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
    const std::uint64_t branching = n_intermediates - 1;
    std::uint64_t total = 0;
    std::uint64_t term = 1;
    for (std::uint64_t k = 1; k <= max_depth; ++k) {
        total += term;
        term *= branching;
    }
    return total;
}

std::uint64_t unique_edges(const PlanConfig& config) {
    config.validate();
    const auto n = static_cast<std::uint64_t>(config.intermediates.size());
    const auto depth = static_cast<std::uint64_t>(config.max_depth);
    // Prefixes ending at an interior language with k edges: (n-1)^k, for
    // k < depth (each must still reach the target). Target-terminated
    // prefixes are exactly the paths.
    std::uint64_t interior = 0;
    std::uint64_t term = 1;
    for (std::uint64_t k = 1; k < depth; ++k) {
        term *= n - 1;
        interior += term;
    }
    return interior + count_paths(n, depth);
}

PlanFormat parse_plan_format(const std::string& name) {
    if (name == "text") return PlanFormat::text;
    if (name == "json") return PlanFormat::json;
    if (name == "dot") return PlanFormat::dot;
    throw ConfigError("unknown plan format '" + name + "' (expected text, json, or dot)");
}

namespace {

std::string format_dot(const PathSet& paths) {
    std::ostringstream out;
    out << "digraph toct {\n  node [shape=box];\n";
    if (paths.empty()) {
        out << "}\n";
        return out.str();
    }
    std::map<std::vector<std::string>, std::size_t> ids;
    auto node_for = [&](const std::vector<std::string>& prefix) {
        auto [it, inserted] = ids.emplace(prefix, ids.size());
        if (inserted) {
            out << "  n" << it->second << " [label=\"" << prefix.back() << "\"";
            if (prefix.back() == paths[0].target()) out << ", peripheries=2";
            out << "];\n";
        }
        return it->second;
    };
    for (const auto& path : paths) {
        std::vector<std::string> prefix{path.langs.front()};
        auto parent = node_for(prefix);
        for (std::size_t i = 1; i < path.langs.size(); ++i) {
            prefix.push_back(path.langs[i]);
            const bool fresh = !ids.contains(prefix);
            auto child = node_for(prefix);
            if (fresh) out << "  n" << parent << " -> n" << child << ";\n";
            parent = child;
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace

std::string format_paths(const PathSet& paths, PlanFormat format) {
    switch (format) {
        case PlanFormat::text: {
            std::string out;
            for (const auto& p : paths) out += p.to_string() + "\n";
            return out;
        }
        case PlanFormat::json: {
            nlohmann::json doc;
            doc["count"] = paths.size();
            if (!paths.empty()) {
                doc["source"] = paths[0].source();
                doc["target"] = paths[0].target();
            }
            doc["paths"] = nlohmann::json::array();
            for (const auto& p : paths) doc["paths"].push_back(p.langs);
            return doc.dump(2) + "\n";
        }
        case PlanFormat::dot:
            return format_dot(paths);
    }
    return {};
}

}  // namespace polytrans
