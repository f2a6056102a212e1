#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqasum/io.hpp"
#include "cqasum/text.hpp"

namespace cqasum {

struct Entity {
    std::string id;
    std::string name;
    std::string category;

    bool operator==(const Entity&) const = default;
};

struct QAPair {
    std::string id;
    std::string entity_id;
    std::string question_id; ///< groups several answers to one question
    std::string question;
    std::string answer;
    std::optional<bool> is_seed;

    /// Question tokens followed by answer tokens.
    Tokens tokens() const;

    bool operator==(const QAPair&) const = default;
};

struct SummaryRecord {
    std::string entity_id;
    std::optional<std::string> raw_summary;
    std::string reference_summary;

    bool operator==(const SummaryRecord&) const = default;
};

/// Validated, immutable collection of entities, QA pairs, and summaries.
/// All three collections are kept sorted by id.
class Corpus {
public:
    Corpus() = default;

    /// Validates every invariant and throws a DataError subclass on the first
    /// violation.
    static Corpus build(std::vector<Entity> entities, std::vector<QAPair> qa_pairs,
                        std::vector<SummaryRecord> summaries);

    const std::vector<Entity>& entities() const noexcept { return entities_; }
    const std::vector<QAPair>& qa_pairs() const noexcept { return qa_pairs_; }
    const std::vector<SummaryRecord>& summaries() const noexcept { return summaries_; }

    const Entity* find_entity(const std::string& id) const;
    const SummaryRecord* summary_of(const std::string& entity_id) const;

    /// QA pairs of one entity in id order.
    std::vector<QAPair> qas_of(const std::string& entity_id) const;

    std::vector<std::string> entity_ids() const;

    /// Restriction to the given entities (unknown ids are ignored).
    Corpus subset(const std::vector<std::string>& entity_ids) const;

    /// Same entities and summaries with a different QA set. Entities left
    /// without QA pairs are dropped along with their summaries.
    Corpus with_qa_pairs(std::vector<QAPair> qa_pairs) const;

    bool operator==(const Corpus& other) const {
        return entities_ == other.entities_ && qa_pairs_ == other.qa_pairs_ &&
               summaries_ == other.summaries_;
    }

private:
    std::vector<Entity> entities_;
    std::vector<QAPair> qa_pairs_;
    std::vector<SummaryRecord> summaries_;
    std::map<std::string, std::size_t> entity_index_;
    std::map<std::string, std::size_t> summary_index_;
    std::map<std::string, std::vector<std::size_t>> qas_by_entity_;
};

inline constexpr const char* kQaPairsFile = "qa_pairs.jsonl";
inline constexpr const char* kSummariesFile = "summaries.jsonl";

/// Reads `dir/qa_pairs.jsonl` and, when present, `dir/summaries.jsonl`.
/// Entities are taken from the entity_id/entity_name/category keys of the QA
/// records.
Corpus load_corpus(const std::filesystem::path& dir);
/// Same as load_corpus with explicit file paths; an empty summaries path
/// means no summaries.
Corpus load_corpus_files(const std::filesystem::path& qa_pairs, const std::filesystem::path& summaries = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

Json qa_pair_to_json(const QAPair& qa, const Entity& entity);
Json summary_to_json(const SummaryRecord& s);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct CorpusSplit {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

/// Sorts ids, shuffles them with splitmix64 Fisher-Yates and cuts
/// floor(N*r_train), floor(N*r_val), remainder. Each part is returned sorted.
CorpusSplit split_ids(std::vector<std::string> ids, const SplitRatios& ratios, std::uint64_t seed);
CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed);

Json split_to_json(const CorpusSplit& split);
CorpusSplit split_from_json(const Json& j);

/// Percentage of distinct summary n-grams absent from the input.
double novel_ngram_pct(const Tokens& summary, const Tokens& input, std::size_t n);

struct GroupStats {
    std::size_t entity_count = 0;
    double avg_input_words = 0.0;
    std::optional<double> avg_raw_summary_words;
    std::optional<double> avg_ref_summary_words;
    std::optional<std::array<double, 4>> novel_ngram_pct; ///< n = 1..4
    std::optional<double> compression_ratio_pct;
};

struct CorpusStats {
    std::map<std::string, GroupStats> per_category;
    GroupStats overall;
};

CorpusStats compute_stats(const Corpus& corpus);
Json stats_to_json(const CorpusStats& stats);
std::string stats_to_markdown(const CorpusStats& stats);

} // namespace cqasum
