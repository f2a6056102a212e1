#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cqasum/corpus.hpp"
#include "cqasum/extract.hpp"
#include "cqasum/metrics.hpp"
#include "cqasum/neural.hpp"

namespace cqasum {

/// Systems the harness knows how to build.
inline const std::vector<std::string> kKnownSystems = {"seedqas", "lexrank", "dedupled-toy"};

struct ExperimentConfig {
    std::filesystem::path corpus_dir;
    SplitRatios ratios;
    std::uint64_t seed = 0;
    std::vector<std::string> systems = {"seedqas", "lexrank"};
    /// "rouge" for ROUGE-1/2/L, or names registered in a MetricRegistry.
    std::vector<std::string> metrics = {"rouge"};
    neural::ModelConfig model;
    neural::OptimizerSettings optimizer;
    std::size_t vocab_min_freq = 1;
    UnitGranularity granularity = UnitGranularity::QaPair;
    std::size_t lexrank_budget = 0; ///< 0 = average training reference length
    std::filesystem::path output_dir;

    void validate() const;
};

/// Relative paths in the file are resolved against `base`.
ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base = {});
Json experiment_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct Provenance {
    std::string format_version{kFormatVersion};
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string started_at;  ///< kept out of report.json
    std::string finished_at; ///< kept out of report.json

    bool operator==(const Provenance&) const = default;
};

struct ReportTable {
    std::vector<std::string> systems;
    std::vector<std::string> columns;
    std::map<std::string, std::map<std::string, double>> cells; ///< x100, 2 decimals
    Provenance provenance;
    std::vector<std::string> notes;

    bool operator==(const ReportTable&) const = default;
};

/// Footer attached to every harness report.
extern const char* const kReproducibilityNote;

/// A fitted summarizer: maps one entity's QA pairs to summary text.
class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual std::string summarize(const std::vector<QAPair>& qas) const = 0;
};

/// Fits `system` on the training entities (validation entities are used by
/// the neural model for epoch selection).
std::unique_ptr<Summarizer> fit_system(const std::string& system, const Corpus& corpus,
                                       const std::vector<std::string>& train_ids,
                                       const std::vector<std::string>& val_ids, const ExperimentConfig& cfg);

/// Encoded (input, reference) examples for the given entities; entities
/// without a reference or whose first QA pair does not fit are skipped.
std::vector<neural::TokenizedExample> training_examples(const Corpus& corpus, const std::vector<std::string>& ids,
                                                        const neural::Vocab& vocab, const neural::ModelConfig& mc);

/// Rounded mean reference length (tokens) over the given entities.
std::size_t average_reference_words(const Corpus& corpus, const std::vector<std::string>& ids);

struct ExperimentRun {
    ReportTable table;
    CorpusSplit split;
    SystemOutputs outputs; ///< system -> test entity -> summary
};

/// Fits every configured system on split.train and scores it on split.test.
ExperimentRun run_on_split(const Corpus& corpus, const CorpusSplit& split, const ExperimentConfig& cfg,
                           const MetricRegistry* registry = nullptr);

ExperimentRun run_experiment(const Corpus& corpus, const ExperimentConfig& cfg,
                             const MetricRegistry* registry = nullptr);
ExperimentRun run_experiment(const ExperimentConfig& cfg, const MetricRegistry* registry = nullptr);

struct LearningCurvePoint {
    double fraction = 0.0;
    std::vector<std::string> train_ids;
    ReportTable table;
};

/// Nested training subsets: one shuffle of the training split, prefixes of
/// floor(f * n) ids (at least one). Validation and test stay fixed.
std::vector<LearningCurvePoint> learning_curve(const Corpus& corpus, const ExperimentConfig& cfg,
                                               const std::vector<double>& fractions = {0.2, 0.4, 0.6, 0.8, 1.0},
                                               const MetricRegistry* registry = nullptr);

class TooFewEntities : public DataError {
public:
    TooFewEntities(const std::string& category, std::size_t count)
        : DataError("category \"" + category + "\" has " + std::to_string(count) +
                    " entities; at least 10 are required") {}
};

struct CrossCategoryResult {
    std::vector<std::string> categories;
    std::vector<std::vector<double>> r1_f1; ///< [train][test], x100, 2 decimals
    std::vector<double> row_average;        ///< arithmetic mean of each row
    std::map<std::string, CorpusSplit> splits;
    std::string system;
    Provenance provenance;
};

/// Per-category 0.8/0.1/0.1 splits seeded from derive_seed(seed,
/// "cross-category/<category>"); the first configured system is trained on
/// each category and scored (ROUGE-1 F1) on every category's test split.
CrossCategoryResult cross_category(const Corpus& corpus, const ExperimentConfig& cfg,
                                   const std::vector<std::string>& categories);

// ---------------------------------------------------------------------------
// Reports

Json report_to_json(const ReportTable& t);
ReportTable report_from_json(const Json& j);
std::string report_to_markdown(const ReportTable& t);

/// Writes report.json, report.md and timestamps.json atomically.
void emit_report(const ReportTable& t, const std::filesystem::path& dir);
ReportTable read_report(const std::filesystem::path& dir);

void emit_split_manifest(const CorpusSplit& split, const std::filesystem::path& path);
void emit_learning_curve(const std::vector<LearningCurvePoint>& points, const std::filesystem::path& dir);
Json cross_category_to_json(const CrossCategoryResult& r);
std::string cross_category_to_markdown(const CrossCategoryResult& r);
void emit_cross_category(const CrossCategoryResult& r, const std::filesystem::path& dir);

std::string utc_timestamp();

} // namespace cqasum
