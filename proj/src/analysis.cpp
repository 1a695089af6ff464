#include "polytrans/analysis.hpp"

#include "polytrans/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace polytrans {

using nlohmann::json;

std::size_t CAReport::total() const {
    std::size_t n = 0;
    for (const auto& [_, s] : per_pair) n += s.total;
    return n;
}

std::size_t CAReport::successes() const {
    std::size_t n = 0;
    for (const auto& [_, s] : per_pair) n += s.successes;
    return n;
}

double CAReport::aggregate() const {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(successes()) / static_cast<double>(n);
}

namespace {

void require_nonempty(std::span<const RunRecord> records) {
    if (records.empty()) throw ValidationError("no run records");
}

void require_exhaustive(std::span<const RunRecord> records, const char* op) {
    require_nonempty(records);
    for (const auto& r : records)
        if (r.mode != RunMode::exhaustive)
            throw ValidationError(std::string(op) + " needs exhaustive run records; problem '" + r.problem_id +
                                  "' was run in " + to_string(r.mode) + " mode");
}

template <typename Pred>
CAReport tally(std::span<const RunRecord> records, Pred&& success) {
    CAReport report;
    report.dataset_name = records.front().dataset;
    for (const auto& r : records) {
        if (r.dataset != report.dataset_name) report.dataset_name = "mixed";
        auto& s = report.per_pair[{r.source_lang, r.target_lang}];
        ++s.total;
        if (success(r)) ++s.successes;
    }
    return report;
}

bool survives(const TranslationPath& path, const std::set<std::string>& removed) {
    for (std::size_t i = 1; i + 1 < path.langs.size(); ++i)
        if (removed.contains(path.langs[i])) return false;
    return true;
}

std::vector<std::string> record_intermediates(const RunRecord& r) {
    if (r.config.contains("intermediates")) return r.config.at("intermediates").get<std::vector<std::string>>();
    std::vector<std::string> out;
    for (const auto& o : r.outcomes)
        for (std::size_t i = 1; i + 1 < o.path.langs.size(); ++i)
            if (std::find(out.begin(), out.end(), o.path.langs[i]) == out.end()) out.push_back(o.path.langs[i]);
    return out;
}

// --- table rendering -------------------------------------------------------

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render_table(const Table& t, ReportFormat format) {
    std::string out;
    if (format == ReportFormat::csv) {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
            out += '\n';
        };
        line(t.header);
        for (const auto& r : t.rows) line(r);
        return out;
    }
    if (format == ReportFormat::json) {
        json arr = json::array();
        for (const auto& r : t.rows) {
            json obj = json::object();
            for (std::size_t i = 0; i < t.header.size(); ++i) obj[t.header[i]] = r[i];
            arr.push_back(std::move(obj));
        }
        return arr.dump(2) + "\n";
    }
    std::vector<std::size_t> width(t.header.size());
    for (std::size_t i = 0; i < t.header.size(); ++i) width[i] = t.header[i].size();
    for (const auto& r : t.rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    auto line = [&](const std::vector<std::string>& cells) {
        std::string l;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) l += "  ";
            l += cells[i];
            if (i + 1 < cells.size()) l.append(width[i] - cells[i].size(), ' ');
        }
        out += l + '\n';
    };
    line(t.header);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule);
    for (const auto& r : t.rows) line(r);
    return out;
}

std::string format_one_decimal(double value) {
    double rounded = std::floor(value * 10.0 + 0.5 + 1e-9) / 10.0;
    if (rounded == 0.0) rounded = 0.0;  // no "-0.0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", rounded);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

CAReport compute_ca(std::span<const RunRecord> records) {
    require_nonempty(records);
    for (const auto& r : records)
        if (r.mode != records.front().mode)
            throw ValidationError("cannot compute CA over mixed modes (" + to_string(records.front().mode) + " and " +
                                  to_string(r.mode) + ")");
    return tally(records, [](const RunRecord& r) { return r.success; });
}

CAReport restrict_depth(std::span<const RunRecord> records, int depth) {
    require_exhaustive(records, "restrict_depth");
    if (depth < 1) throw ValidationError("depth must be >= 1");
    int available = records.front().recorded_max_depth();
    for (const auto& r : records) available = std::min(available, r.recorded_max_depth());
    if (depth > available)
        throw ValidationError("depth " + std::to_string(depth) + " exceeds the recorded maximum depth " +
                              std::to_string(available));
    return tally(records, [depth](const RunRecord& r) {
        return std::any_of(r.outcomes.begin(), r.outcomes.end(), [depth](const PathOutcome& o) {
            return o.status == PathStatus::verified_pass && o.path.edges() <= static_cast<std::size_t>(depth);
        });
    });
}

std::string AblationSpec::label() const {
    std::string out;
    for (const auto& l : removed_langs) out += (out.empty() ? "" : "+") + l;
    return out.empty() ? "none" : out;
}

CAReport ablate_languages(std::span<const RunRecord> records, const AblationSpec& spec) {
    require_exhaustive(records, "ablate_languages");
    if (spec.removed_langs.empty()) throw ValidationError("ablation must remove at least one language");
    for (const auto& r : records)
        if (spec.removed_langs.contains(r.target_lang))
            throw ValidationError("ablation removes '" + r.target_lang + "', the target language of problem '" +
                                  r.problem_id + "'");
    return tally(records, [&](const RunRecord& r) {
        return std::any_of(r.outcomes.begin(), r.outcomes.end(), [&](const PathOutcome& o) {
            return o.status == PathStatus::verified_pass && survives(o.path, spec.removed_langs);
        });
    });
}

std::vector<AblationSpec> enumerate_ablation_specs(const std::vector<std::string>& intermediates) {
    const std::size_t n = intermediates.size();
    if (n >= 20) throw ValidationError("too many intermediates to enumerate ablations");
    std::vector<std::uint32_t> masks;
    for (std::uint32_t m = 1; m < (1u << n); ++m) masks.push_back(m);
    // By subset size, then by the positions of the chosen languages.
    std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        if (pa != pb) return pa < pb;
        for (std::uint32_t bit = 1; bit; bit <<= 1) {
            if ((a & bit) != (b & bit)) return (a & bit) != 0;
        }
        return false;
    });
    std::vector<AblationSpec> out;
    for (auto m : masks) {
        AblationSpec spec;
        for (std::size_t i = 0; i < n; ++i)
            if (m & (1u << i)) spec.removed_langs.insert(intermediates[i]);
        out.push_back(std::move(spec));
    }
    return out;
}

int nearest_rank(std::span<const int> sorted, int percent) {
    if (sorted.empty()) throw ValidationError("percentile of an empty sequence");
    if (percent <= 0) return sorted.front();
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(percent) / 100.0 * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

std::optional<AttemptStats> attempts_stats(std::span<const RunRecord> records) {
    require_nonempty(records);
    std::vector<int> attempts;
    for (const auto& r : records) {
        if (!r.success) continue;
        if (r.mode == RunMode::exhaustive) {
            for (const auto& o : r.outcomes) {
                if (o.status == PathStatus::verified_pass && o.attempt_index) {
                    attempts.push_back(*o.attempt_index);
                    break;
                }
            }
        } else {
            attempts.push_back(r.attempts_used);
        }
    }
    if (attempts.empty()) return std::nullopt;
    std::sort(attempts.begin(), attempts.end());
    AttemptStats s;
    s.count = attempts.size();
    s.mean = std::accumulate(attempts.begin(), attempts.end(), 0.0) / static_cast<double>(attempts.size());
    for (int p : {25, 50, 75, 90, 100}) s.percentiles[p] = nearest_rank(attempts, p);
    for (int a : attempts) ++s.histogram[a];
    return s;
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "text" || name == "text_table" || name == "table") return ReportFormat::text_table;
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + name + "' (expected text, csv, or json)");
}

std::string format_percent(double ratio) { return format_one_decimal(ratio * 100.0); }

std::string emit_report(const std::vector<NamedReport>& reports, const CAReport* baseline, ReportFormat format) {
    if (reports.empty()) throw ValidationError("emit_report needs at least one report");
    Table t;
    t.header = {"report", "source", "target", "total", "successes", "ca"};
    if (baseline) t.header.insert(t.header.end(), {"baseline_ca", "abs_diff", "rel_diff"});

    auto row = [&](const std::string& label, const std::string& src, const std::string& tgt, std::size_t total,
                   std::size_t successes, double ca, std::optional<double> base) {
        std::vector<std::string> r{label, src, tgt, std::to_string(total), std::to_string(successes), format_percent(ca)};
        if (baseline) {
            if (base) {
                r.push_back(format_percent(*base));
                r.push_back(format_percent(ca - *base));
                r.push_back(*base > 0.0 ? format_percent((ca - *base) / *base) : "n/a");
            } else {
                r.insert(r.end(), {"n/a", "n/a", "n/a"});
            }
        }
        t.rows.push_back(std::move(r));
    };

    for (const auto& nr : reports) {
        for (const auto& [pair, s] : nr.report.per_pair) {
            std::optional<double> base;
            if (baseline)
                if (auto it = baseline->per_pair.find(pair); it != baseline->per_pair.end()) base = it->second.ca();
            row(nr.label, pair.first, pair.second, s.total, s.successes, s.ca(), base);
        }
        std::optional<double> base;
        if (baseline) base = baseline->aggregate();
        row(nr.label, "*", "*", nr.report.total(), nr.report.successes(), nr.report.aggregate(), base);
    }
    return render_table(t, format);
}

Heatmap ablation_heatmap(std::span<const RunRecord> records) {
    require_exhaustive(records, "ablation_heatmap");
    std::map<LanguagePair, std::vector<RunRecord>> by_pair;
    std::vector<std::string> langs;
    for (const auto& r : records) {
        by_pair[{r.source_lang, r.target_lang}].push_back(r);
        for (const auto& l : record_intermediates(r))
            if (std::find(langs.begin(), langs.end(), l) == langs.end()) langs.push_back(l);
    }

    Heatmap h;
    for (const auto& lang : langs) {
        HeatmapSummary sum{lang};
        std::size_t cells = 0, problems = 0, lost = 0;
        for (const auto& [pair, recs] : by_pair) {
            if (pair.second == lang) continue;
            const auto full = compute_ca(recs).per_pair.at(pair);
            const auto ablated = ablate_languages(recs, AblationSpec{{lang}}).per_pair.at(pair);
            HeatmapCell cell{pair, lang, full.ca(), ablated.ca(), full.total, full.successes - ablated.successes};
            sum.mean_over_cells += cell.decrease();
            ++cells;
            problems += cell.problems;
            lost += cell.lost;
            h.cells.push_back(cell);
        }
        if (cells) sum.mean_over_cells /= static_cast<double>(cells);
        if (problems) sum.mean_over_problems = static_cast<double>(lost) / static_cast<double>(problems);
        h.summary.push_back(sum);
    }
    return h;
}

std::string emit_heatmap(const Heatmap& heatmap, ReportFormat format) {
    Table cells;
    cells.header = {"source", "target", "removed", "problems", "full_ca", "ablated_ca", "decrease"};
    for (const auto& c : heatmap.cells)
        cells.rows.push_back({c.pair.first, c.pair.second, c.removed_lang, std::to_string(c.problems),
                              format_percent(c.full_ca), format_percent(c.ablated_ca), format_percent(c.decrease())});
    Table summary;
    summary.header = {"removed", "mean_decrease_over_cells", "mean_decrease_over_problems"};
    for (const auto& s : heatmap.summary)
        summary.rows.push_back({s.removed_lang, format_percent(s.mean_over_cells), format_percent(s.mean_over_problems)});

    if (format == ReportFormat::json) {
        json doc{{"cells", json::parse(render_table(cells, format))},
                 {"summary", json::parse(render_table(summary, format))}};
        return doc.dump(2) + "\n";
    }
    return render_table(cells, format) + "\n" + render_table(summary, format);
}

std::vector<ContingencyRow> depth_contingency(std::span<const RunRecord> records) {
    require_exhaustive(records, "depth_contingency");
    int available = records.front().recorded_max_depth();
    for (const auto& r : records) available = std::min(available, r.recorded_max_depth());
    std::vector<ContingencyRow> rows;
    for (int d = 1; d <= available; ++d) {
        const auto rep = restrict_depth(records, d);
        rows.push_back({"depth=" + std::to_string(d), rep.successes(), rep.total() - rep.successes()});
    }
    return rows;
}

std::vector<ContingencyRow> ablation_contingency(std::span<const RunRecord> records,
                                                 const std::vector<AblationSpec>& specs) {
    std::vector<ContingencyRow> rows;
    const auto full = compute_ca(records);
    rows.push_back({"none", full.successes(), full.total() - full.successes()});
    for (const auto& spec : specs) {
        const auto rep = ablate_languages(records, spec);
        rows.push_back({"-" + spec.label(), rep.successes(), rep.total() - rep.successes()});
    }
    return rows;
}

std::string emit_contingency(const std::vector<ContingencyRow>& rows, ReportFormat format) {
    Table t;
    t.header = {"condition", "successes", "failures"};
    for (const auto& r : rows) t.rows.push_back({r.condition, std::to_string(r.successes), std::to_string(r.failures)});
    return render_table(t, format);
}

}  // namespace polytrans
