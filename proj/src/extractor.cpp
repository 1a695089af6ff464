#include "polytrans/extractor.hpp"

#include "polytrans/error.hpp"

#include <optional>
#include <vector>

namespace polytrans {

std::string to_string(ExtractionStrategy s) {
    switch (s) {
        case ExtractionStrategy::tagged_fence: return "tagged_fence";
        case ExtractionStrategy::any_fence: return "any_fence";
        case ExtractionStrategy::none: break;
    }
    return "none";
}

namespace {

struct Block {
    std::string tag;
    std::string_view body;
};

bool is_fence(std::string_view line) { return line.starts_with("```"); }

std::string info_tag(std::string_view fence_line) {
    auto rest = fence_line.substr(3);
    while (!rest.empty() && rest.front() == '`') rest.remove_prefix(1);
    const auto start = rest.find_first_not_of(" \t");
    if (start == std::string_view::npos) return {};
    rest.remove_prefix(start);
    const auto end = rest.find_first_of(" \t\r\n{,");
    return std::string(rest.substr(0, end));
}

std::string_view strip_one_terminator(std::string_view s) {
    if (s.ends_with("\r\n")) s.remove_suffix(2);
    else if (s.ends_with('\n')) s.remove_suffix(1);
    return s;
}

std::vector<Block> scan_blocks(std::string_view text) {
    std::vector<Block> blocks;
    std::optional<Block> open;
    std::size_t body_start = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        const auto line_end = nl == std::string_view::npos ? text.size() : nl + 1;
        const auto line = text.substr(pos, line_end - pos);
        if (is_fence(line)) {
            if (open) {
                open->body = strip_one_terminator(text.substr(body_start, pos - body_start));
                blocks.push_back(*open);
                open.reset();
            } else {
                open = Block{info_tag(line), {}};
                body_start = line_end;
            }
        }
        pos = line_end;
    }
    if (open && body_start <= text.size()) {
        open->body = strip_one_terminator(text.substr(body_start));
        blocks.push_back(*open);
    }
    return blocks;
}

}  // namespace

ExtractionResult extract_code(std::string_view completion, const Language& expected) {
    const auto blocks = scan_blocks(completion);
    for (const auto& b : blocks) {
        if (!b.body.empty() && !b.tag.empty() && expected.matches_tag(b.tag))
            return {ExtractionStatus::ok, std::string(b.body), ExtractionStrategy::tagged_fence};
    }
    for (const auto& b : blocks) {
        if (!b.body.empty()) return {ExtractionStatus::ok, std::string(b.body), ExtractionStrategy::any_fence};
    }
    return {};
}

double msr(std::span<const ExtractionResult> results) {
    if (results.empty()) throw ValidationError("msr of an empty result set");
    std::size_t ok = 0;
    for (const auto& r : results) ok += r.ok() ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(results.size());
}

}  // namespace polytrans
