#pragma once

#include "polytrans/language.hpp"

#include <span>
#include <string>
#include <string_view>

namespace polytrans {

enum class ExtractionStatus { ok, failed };
enum class ExtractionStrategy { none, tagged_fence, any_fence };

std::string to_string(ExtractionStrategy s);

struct ExtractionResult {
    ExtractionStatus status = ExtractionStatus::failed;
    std::string code;
    ExtractionStrategy strategy = ExtractionStrategy::none;

    bool ok() const noexcept { return status == ExtractionStatus::ok; }
};

/// Pulls source code out of a raw completion.
///
/// Fences are lines starting with three backticks. The first nonempty block
/// whose info string names `expected` (id or alias) wins; failing that, the
/// first nonempty block of any tag. A fence left open at the end of the text
/// runs to the end. Block bytes are returned verbatim minus one trailing
/// line terminator. Unfenced prose never counts as code.
ExtractionResult extract_code(std::string_view completion, const Language& expected);

/// Fraction of successful extractions. Throws ValidationError on empty input.
double msr(std::span<const ExtractionResult> results);

}  // namespace polytrans
