#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cqasum/error.hpp"
#include "cqasum/io.hpp"
#include "cqasum/text.hpp"

namespace cqasum {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    /// Builds a score from an overlap count and the two denominators, with 0
    /// for any component whose denominator is 0.
    static RougeScore from_counts(double overlap, double candidate_total, double reference_total);
};

RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n);
std::size_t lcs_length(const Tokens& a, const Tokens& b);
RougeScore rouge_l(const Tokens& candidate, const Tokens& reference);

// ---------------------------------------------------------------------------
// Pluggable metrics

class UnknownMetric : public UsageError {
public:
    explicit UnknownMetric(const std::string& name) : UsageError("unknown metric \"" + name + "\"") {}
};

/// Scorer over raw texts returning a value in [0, 1].
using TextMetric = std::function<double(std::string_view candidate, std::string_view reference)>;

class MetricRegistry {
public:
    void add(std::string name, TextMetric fn);
    bool contains(const std::string& name) const { return metrics_.count(name) > 0; }
    double score(const std::string& name, std::string_view candidate, std::string_view reference) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, TextMetric> metrics_;
};

double external_metric(const MetricRegistry& registry, const std::string& name,
                       std::string_view candidate, std::string_view reference);

// ---------------------------------------------------------------------------
// Corpus evaluation

class MissingSummary : public DataError {
public:
    MissingSummary(std::string system, std::string entity_id)
        : DataError("system \"" + system + "\" has no summary for entity \"" + entity_id + "\""),
          system_(std::move(system)), entity_id_(std::move(entity_id)) {}

    const std::string& system() const noexcept { return system_; }
    const std::string& entity_id() const noexcept { return entity_id_; }

private:
    std::string system_;
    std::string entity_id_;
};

using SystemOutputs = std::map<std::string, std::map<std::string, std::string>>;
using References = std::map<std::string, std::string>;

/// Column order of every evaluation table.
inline const std::vector<std::string> kRougeColumns = {
    "R1-P", "R1-R", "R1-F", "R2-P", "R2-R", "R2-F", "RL-P", "RL-R", "RL-F"};

struct EvaluationTable {
    std::vector<std::string> columns;
    /// system -> column -> macro average x100, rounded to 2 decimals.
    std::map<std::string, std::map<std::string, double>> rows;
};

/// Macro-averages ROUGE-1/2/L precision, recall and F1 over every reference
/// entity, plus one column per named external metric.
EvaluationTable evaluate_corpus(const SystemOutputs& systems, const References& references,
                                const MetricRegistry* registry = nullptr,
                                const std::vector<std::string>& external = {});

Json evaluation_to_json(const EvaluationTable& table);
std::string evaluation_to_markdown(const EvaluationTable& table);

/// Rounds x*100 to two decimals, half away from zero.
double percent2(double fraction);

// ---------------------------------------------------------------------------
// Best-Worst Scaling

enum class Criterion { Informativeness, Coherence, Conciseness };

std::string_view to_string(Criterion c);
Criterion criterion_from_string(std::string_view s);

struct Judgment {
    std::string entity_id;
    Criterion criterion = Criterion::Informativeness;
    std::string best_system;
    std::string worst_system;
    std::string annotator_id;
};

struct BwsCell {
    std::size_t best = 0;
    std::size_t worst = 0;
    double score = 0.0; ///< 100 * (best - worst) / judgments for the criterion
};

struct BwsReport {
    std::map<Criterion, std::size_t> judgment_count;
    std::map<Criterion, std::map<std::string, BwsCell>> cells;

    const BwsCell& at(const std::string& system, Criterion c) const { return cells.at(c).at(system); }
    std::vector<std::string> systems() const;
};

BwsReport bws_scores(const std::vector<Judgment>& judgments);

std::vector<Judgment> load_judgments(const std::filesystem::path& path);
Json bws_to_json(const BwsReport& report);
std::string bws_to_markdown(const BwsReport& report);

} // namespace cqasum
