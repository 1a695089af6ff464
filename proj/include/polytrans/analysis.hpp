#pragma once

// Read-side statistics over run logs: computational accuracy, post-hoc depth
// and intermediate-language ablations, attempt statistics, report tables.

#include "polytrans/engine.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polytrans {

using LanguagePair = std::pair<std::string, std::string>;

struct PairStats {
    std::size_t total = 0;
    std::size_t successes = 0;

    double ca() const noexcept { return total == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(total); }

    friend bool operator==(const PairStats&, const PairStats&) = default;
};

struct CAReport {
    std::string dataset_name;
    std::map<LanguagePair, PairStats> per_pair;

    std::size_t total() const;
    std::size_t successes() const;
    /// Total successes over total problems (not a mean of per-pair ratios).
    double aggregate() const;
};

/// Groups success flags by language pair. Rejects empty or mixed-mode input.
CAReport compute_ca(std::span<const RunRecord> records);

/// CA if the plan had been cut at `depth` edges: a problem succeeds iff some
/// verified_pass path has at most `depth` edges. Exhaustive records only.
CAReport restrict_depth(std::span<const RunRecord> records, int depth);

/// Languages barred from interior path positions. The direct path always
/// survives; the source stays allowed as the origin.
struct AblationSpec {
    std::set<std::string> removed_langs;

    std::string label() const;
};

CAReport ablate_languages(std::span<const RunRecord> records, const AblationSpec& spec);

/// Every nonempty subset of `intermediates`, by size then by position.
std::vector<AblationSpec> enumerate_ablation_specs(const std::vector<std::string>& intermediates);

struct AttemptStats {
    std::size_t count = 0;
    double mean = 0.0;
    std::map<int, int> percentiles;  // nearest-rank, keyed by percent
    std::map<int, std::size_t> histogram;
};

/// Nearest-rank percentile of an ascending sequence.
int nearest_rank(std::span<const int> sorted, int percent);

/// Attempts needed per successful record. For exhaustive records this is the
/// attempt index of the first passing candidate, i.e. what early stopping
/// would have used. nullopt when no record succeeded.
std::optional<AttemptStats> attempts_stats(std::span<const RunRecord> records);

enum class ReportFormat { text_table, csv, json };

ReportFormat parse_report_format(const std::string& name);

/// Percent with one decimal, rounded half-up: 0.60762 -> "60.8".
std::string format_percent(double ratio);

struct NamedReport {
    std::string label;
    CAReport report;
};

/// Per-pair and aggregate rows. With a baseline, adds absolute and relative
/// differences (relative = abs / baseline CA); a zero or missing baseline
/// prints "n/a". Differences are taken from unrounded ratios.
std::string emit_report(const std::vector<NamedReport>& reports, const CAReport* baseline, ReportFormat format);

/// One cell of the pair x removed-language decrease map.
struct HeatmapCell {
    LanguagePair pair;
    std::string removed_lang;
    double full_ca = 0.0;
    double ablated_ca = 0.0;
    std::size_t problems = 0;
    std::size_t lost = 0;

    double decrease() const noexcept { return full_ca - ablated_ca; }
};

struct HeatmapSummary {
    std::string removed_lang;
    double mean_over_cells = 0.0;     // mean of per-pair decreases
    double mean_over_problems = 0.0;  // pooled: lost successes / problems
};

struct Heatmap {
    std::vector<HeatmapCell> cells;
    std::vector<HeatmapSummary> summary;
};

/// Single-language removals for every intermediate recorded in the runs.
Heatmap ablation_heatmap(std::span<const RunRecord> records);

std::string emit_heatmap(const Heatmap& heatmap, ReportFormat format);

/// Success/failure counts per condition, for external significance tests.
struct ContingencyRow {
    std::string condition;
    std::size_t successes = 0;
    std::size_t failures = 0;
};

std::vector<ContingencyRow> depth_contingency(std::span<const RunRecord> records);
std::vector<ContingencyRow> ablation_contingency(std::span<const RunRecord> records,
                                                 const std::vector<AblationSpec>& specs);

std::string emit_contingency(const std::vector<ContingencyRow>& rows, ReportFormat format);

}  // namespace polytrans
