#pragma once

// Translation-path planning: enumerate every language sequence from a source
// to a target through a set of intermediate languages, bounded by depth.

#include "polytrans/language.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace polytrans {

/// Shape of one translation tree.
///
/// `intermediates` must contain `source`, must not contain `target`, and
/// must be duplicate-free. Its order decides tie-breaking among paths of
/// equal length.
struct PlanConfig {
    Language source;
    Language target;
    std::vector<Language> intermediates;
    int max_depth = 4;

    /// Throws ValidationError describing the first violated invariant.
    void validate() const;

    /// Intermediates for a pair drawn from a general pool: the pool minus the
    /// target, with the source prepended when the pool lacks it.
    static PlanConfig for_pair(const Language& source, const Language& target,
                               const std::vector<Language>& pool, int max_depth);
};

/// One root-to-leaf path of the translation tree, as language ids.
struct TranslationPath {
    std::vector<std::string> langs;

    std::size_t edges() const noexcept { return langs.empty() ? 0 : langs.size() - 1; }
    const std::string& source() const { return langs.front(); }
    const std::string& target() const { return langs.back(); }

    /// "python -> cpp -> java"
    std::string to_string() const;

    friend bool operator==(const TranslationPath&, const TranslationPath&) = default;
    friend auto operator<=>(const TranslationPath&, const TranslationPath&) = default;
};

/// Paths ordered shortest-first; the direct path is always first.
struct PathSet {
    std::vector<TranslationPath> paths;

    std::size_t size() const noexcept { return paths.size(); }
    bool empty() const noexcept { return paths.empty(); }
    const TranslationPath& operator[](std::size_t i) const { return paths[i]; }
    auto begin() const { return paths.begin(); }
    auto end() const { return paths.end(); }
};

/// Breadth-first enumeration. Children are expanded target-first, then
/// intermediates in config order, skipping the current language.
PathSet generate_paths(const PlanConfig& config);

/// Closed form of |generate_paths|: sum over k=1..max_depth of (n-1)^(k-1),
/// where n counts the intermediates including the source.
std::uint64_t count_paths(std::uint64_t n_intermediates, std::uint64_t max_depth);

/// Number of distinct language prefixes (of at least one edge) over all
/// paths, i.e. the LLM-call budget of one exhaustive memoized run.
std::uint64_t unique_edges(const PlanConfig& config);

enum class PlanFormat { text, json, dot };

PlanFormat parse_plan_format(const std::string& name);

std::string format_paths(const PathSet& paths, PlanFormat format);

}  // namespace polytrans
