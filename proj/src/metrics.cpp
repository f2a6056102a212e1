#include "cqasum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cqasum {

RougeScore RougeScore::from_counts(double overlap, double candidate_total, double reference_total) {
    RougeScore s;
    s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
    s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
    const NgramCounts c = ngrams(candidate, n);
    const NgramCounts r = ngrams(reference, n);
    std::size_t overlap = 0;
    for (const auto& [g, count] : c) {
        auto it = r.find(g);
        if (it != r.end()) overlap += std::min(count, it->second);
    }
    const auto total = [n](const Tokens& t) { return t.size() >= n ? t.size() - n + 1 : 0; };
    return RougeScore::from_counts(static_cast<double>(overlap), static_cast<double>(total(candidate)),
                                   static_cast<double>(total(reference)));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const Tokens& candidate, const Tokens& reference) {
    return RougeScore::from_counts(static_cast<double>(lcs_length(candidate, reference)),
                                   static_cast<double>(candidate.size()),
                                   static_cast<double>(reference.size()));
}

// ---------------------------------------------------------------------------

void MetricRegistry::add(std::string name, TextMetric fn) { metrics_[std::move(name)] = std::move(fn); }

double MetricRegistry::score(const std::string& name, std::string_view candidate,
                             std::string_view reference) const {
    auto it = metrics_.find(name);
    if (it == metrics_.end()) throw UnknownMetric(name);
    return it->second(candidate, reference);
}

std::vector<std::string> MetricRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : metrics_) out.push_back(name);
    return out;
}

double external_metric(const MetricRegistry& registry, const std::string& name,
                       std::string_view candidate, std::string_view reference) {
    return registry.score(name, candidate, reference);
}

double percent2(double fraction) { return std::round(fraction * 100.0 * 100.0) / 100.0; }

EvaluationTable evaluate_corpus(const SystemOutputs& systems, const References& references,
                                const MetricRegistry* registry, const std::vector<std::string>& external) {
    for (const auto& name : external)
        if (!registry || !registry->contains(name)) throw UnknownMetric(name);

    EvaluationTable table;
    table.columns = kRougeColumns;
    table.columns.insert(table.columns.end(), external.begin(), external.end());

    for (const auto& [system, outputs] : systems) {
        std::vector<double> sums(table.columns.size(), 0.0);
        for (const auto& [entity, reference] : references) {
            auto it = outputs.find(entity);
            if (it == outputs.end()) throw MissingSummary(system, entity);
            const Tokens cand = tokenize(it->second);
            const Tokens ref = tokenize(reference);
            const RougeScore scores[] = {rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
            for (std::size_t k = 0; k < 3; ++k) {
                sums[3 * k] += scores[k].precision;
                sums[3 * k + 1] += scores[k].recall;
                sums[3 * k + 2] += scores[k].f1;
            }
            for (std::size_t e = 0; e < external.size(); ++e)
                sums[kRougeColumns.size() + e] += registry->score(external[e], it->second, reference);
        }
        const double n = references.empty() ? 1.0 : static_cast<double>(references.size());
        auto& row = table.rows[system];
        for (std::size_t c = 0; c < table.columns.size(); ++c) row[table.columns[c]] = percent2(sums[c] / n);
    }
    return table;
}

Json evaluation_to_json(const EvaluationTable& table) {
    Json j = Json::object();
    for (const auto& [system, row] : table.rows) {
        Json r;
        for (const auto& col : table.columns) r[col] = row.at(col);
        j[system] = r;
    }
    return j;
}

std::string evaluation_to_markdown(const EvaluationTable& table) {
    std::string md = "| System |";
    std::string rule = "|---|";
    for (const auto& c : table.columns) {
        md += " " + c + " |";
        rule += "---:|";
    }
    md += "\n" + rule + "\n";
    for (const auto& [system, row] : table.rows) {
        md += "| " + system + " |";
        for (const auto& c : table.columns) md += " " + format_fixed2(row.at(c)) + " |";
        md += "\n";
    }
    return md;
}

// ---------------------------------------------------------------------------
// Best-Worst Scaling

std::string_view to_string(Criterion c) {
    switch (c) {
    case Criterion::Informativeness: return "informativeness";
    case Criterion::Coherence: return "coherence";
    case Criterion::Conciseness: return "conciseness";
    }
    return "";
}

Criterion criterion_from_string(std::string_view s) {
    if (s == "informativeness") return Criterion::Informativeness;
    if (s == "coherence") return Criterion::Coherence;
    if (s == "conciseness") return Criterion::Conciseness;
    throw DataError("unknown criterion \"" + std::string(s) + "\"");
}

std::vector<std::string> BwsReport::systems() const {
    std::set<std::string> all;
    for (const auto& [c, row] : cells)
        for (const auto& [system, cell] : row) all.insert(system);
    return {all.begin(), all.end()};
}

BwsReport bws_scores(const std::vector<Judgment>& judgments) {
    if (judgments.empty()) throw DataError("bws: no judgments");
    BwsReport report;
    for (const auto& j : judgments) {
        if (j.best_system == j.worst_system)
            throw DataError("judgment for \"" + j.entity_id + "\" picks \"" + j.best_system +
                            "\" as both best and worst");
        report.judgment_count[j.criterion] += 1;
        report.cells[j.criterion][j.best_system].best += 1;
        report.cells[j.criterion][j.worst_system].worst += 1;
    }
    for (auto& [criterion, row] : report.cells) {
        const double n = static_cast<double>(report.judgment_count[criterion]);
        for (auto& [system, cell] : row)
            cell.score = 100.0 * (static_cast<double>(cell.best) - static_cast<double>(cell.worst)) / n;
    }
    return report;
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
    std::vector<Judgment> out;
    read_jsonl(path, [&](const Json& j, std::size_t line) {
        Judgment x;
        x.entity_id = j.at("entity_id").get<std::string>();
        try {
            x.criterion = criterion_from_string(j.at("criterion").get<std::string>());
        } catch (const DataError& e) {
            throw ParseError(path.string(), line, e.what());
        }
        x.best_system = j.at("best_system").get<std::string>();
        x.worst_system = j.at("worst_system").get<std::string>();
        x.annotator_id = j.value("annotator_id", std::string());
        if (x.best_system == x.worst_system)
            throw ParseError(path.string(), line, "best_system equals worst_system");
        out.push_back(std::move(x));
    });
    return out;
}

Json bws_to_json(const BwsReport& report) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["normalization"] = "100 * (best - worst) / judgments per criterion";
    Json scores = Json::object();
    for (const auto& system : report.systems()) {
        Json row;
        for (const auto& [criterion, cells] : report.cells) {
            auto it = cells.find(system);
            const BwsCell cell = it == cells.end() ? BwsCell{} : it->second;
            row[std::string(to_string(criterion))] = {{"best", cell.best}, {"worst", cell.worst}, {"score", cell.score}};
        }
        scores[system] = row;
    }
    j["scores"] = scores;
    Json counts;
    for (const auto& [criterion, n] : report.judgment_count) counts[std::string(to_string(criterion))] = n;
    j["judgment_count"] = counts;
    return j;
}

std::string bws_to_markdown(const BwsReport& report) {
    std::string md = "| System |";
    std::string rule = "|---|";
    for (const auto& [criterion, row] : report.cells) {
        md += " " + std::string(to_string(criterion)) + " |";
        rule += "---:|";
    }
    md += "\n" + rule + "\n";
    for (const auto& system : report.systems()) {
        md += "| " + system + " |";
        for (const auto& [criterion, cells] : report.cells) {
            auto it = cells.find(system);
            const double score = it == cells.end() ? 0.0 : it->second.score;
            md += " " + std::string(score > 0 ? "+" : "") + format_fixed2(score) + " |";
        }
        md += "\n";
    }
    md += "\nScores are 100 x (best - worst) / judgments per criterion.\n";
    return md;
}

} // namespace cqasum
