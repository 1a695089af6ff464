#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace polytrans {

/// A programming language the engine can translate from, to, or through.
///
/// The planner never inspects language semantics; `id` is the only field that
/// participates in path identity. `aliases` are alternative tags an LLM might
/// put on a fenced code block (e.g. "c++" for cpp).
struct Language {
    std::string id;
    std::string display_name;
    std::string file_extension;
    std::vector<std::string> aliases;

    bool matches_tag(std::string_view tag) const;

    friend bool operator==(const Language& a, const Language& b) { return a.id == b.id; }
};

bool is_valid_language_id(std::string_view id);

/// Ordered, open set of known languages. Registration order is the
/// iteration order used for planner tie-breaking.
class LanguageRegistry {
public:
    /// Python, Rust, JavaScript, C++, Go, Java.
    static LanguageRegistry builtin();

    void add(Language lang);

    /// Registers every entry of a JSON array of
    /// `{"id","display_name","file_extension","aliases"}` objects.
    void load_file(const std::filesystem::path& path);

    const Language& get(std::string_view id) const;
    const Language* find(std::string_view id) const;

    /// Resolves an id or alias, case-insensitively.
    const Language* resolve_tag(std::string_view tag) const;

    /// resolve_tag over each entry; throws UnknownLanguageError.
    std::vector<Language> resolve_list(const std::vector<std::string>& ids) const;

    const std::vector<Language>& all() const noexcept { return langs_; }
    std::size_t size() const noexcept { return langs_.size(); }

private:
    std::vector<Language> langs_;
};

}  // namespace polytrans
