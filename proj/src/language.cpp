#include "polytrans/language.hpp"

#include "polytrans/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>

namespace polytrans {

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

bool Language::matches_tag(std::string_view tag) const {
    const auto t = lowercase(tag);
    if (t == id) return true;
    return std::any_of(aliases.begin(), aliases.end(),
                       [&](const std::string& a) { return lowercase(a) == t; });
}

bool is_valid_language_id(std::string_view id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

LanguageRegistry LanguageRegistry::builtin() {
    LanguageRegistry reg;
    reg.add({"python", "Python", "py", {"py", "python3", "py3"}});
    reg.add({"rust", "Rust", "rs", {"rs"}});
    reg.add({"javascript", "JavaScript", "js", {"js", "node", "nodejs", "jsx"}});
    reg.add({"cpp", "C++", "cpp", {"c++", "cxx", "cc", "hpp"}});
    reg.add({"go", "Go", "go", {"golang"}});
    reg.add({"java", "Java", "java", {}});
    return reg;
}

void LanguageRegistry::add(Language lang) {
    if (!is_valid_language_id(lang.id))
        throw ValidationError("invalid language id '" + lang.id + "': must be nonempty [a-z0-9_]");
    if (find(lang.id) != nullptr)
        throw ValidationError("duplicate language id '" + lang.id + "'");
    if (lang.display_name.empty()) lang.display_name = lang.id;
    if (lang.file_extension.empty()) lang.file_extension = lang.id;
    langs_.push_back(std::move(lang));
}

void LanguageRegistry::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open language file " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    if (!doc.is_array()) throw ParseError(path.string() + ": expected a JSON array", 0);
    for (const auto& item : doc) {
        Language lang;
        lang.id = item.value("id", "");
        lang.display_name = item.value("display_name", "");
        lang.file_extension = item.value("file_extension", "");
        lang.aliases = item.value("aliases", std::vector<std::string>{});
        add(std::move(lang));
    }
}

const Language* LanguageRegistry::find(std::string_view id) const {
    auto it = std::find_if(langs_.begin(), langs_.end(),
                           [&](const Language& l) { return l.id == id; });
    return it == langs_.end() ? nullptr : &*it;
}

const Language& LanguageRegistry::get(std::string_view id) const {
    if (const auto* lang = find(id)) return *lang;
    throw UnknownLanguageError(std::string(id));
}

const Language* LanguageRegistry::resolve_tag(std::string_view tag) const {
    for (const auto& l : langs_)
        if (l.matches_tag(tag)) return &l;
    return nullptr;
}

std::vector<Language> LanguageRegistry::resolve_list(const std::vector<std::string>& ids) const {
    std::vector<Language> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto* lang = resolve_tag(id);
        if (!lang) throw UnknownLanguageError(id);
        out.push_back(*lang);
    }
    return out;
}

}  // namespace polytrans
