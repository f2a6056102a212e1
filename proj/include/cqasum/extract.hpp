#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cqasum/corpus.hpp"
#include "cqasum/error.hpp"

namespace cqasum {

class NoSeedLabels : public DataError {
public:
    explicit NoSeedLabels(const std::string& entity_id)
        : DataError("entity \"" + entity_id + "\" has no QA pair marked is_seed") {}
};

/// "question answer" for every seed pair in id order, joined by single spaces.
std::string seedqas_summary(const std::vector<QAPair>& entity_qas);

// ---------------------------------------------------------------------------
// LexRank

using IdfTable = std::map<Token, double>;

/// Smoothed idf over a unit collection: ln((1+N)/(1+df)) + 1.
IdfTable build_idf(const std::vector<Tokens>& units);

/// idf-modified cosine; tokens missing from `idf` weigh 0.
double idf_cosine(const Tokens& u, const Tokens& v, const IdfTable& idf);

struct SentenceGraph {
    std::vector<Tokens> units;
    Eigen::MatrixXd sim;
    IdfTable idf;
};

SentenceGraph build_sentence_graph(std::vector<Tokens> units);

class NonConvergence : public TrainingFailure {
public:
    NonConvergence(Eigen::VectorXd last, std::size_t iterations)
        : TrainingFailure("power iteration did not converge in " + std::to_string(iterations) + " iterations"),
          last_(std::move(last)) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_; }

private:
    Eigen::VectorXd last_;
};

struct PowerIterationOptions {
    double teleport = 0.15; ///< mass redistributed uniformly every step
    double tol = 1e-10;     ///< L1 change that ends the iteration
    std::size_t max_iter = 10000;
};

/// Stationary distribution of p <- teleport*uniform + (1-teleport)*p^T M.
/// All-zero rows of M are treated as uniform; other rows must sum to 1.
Eigen::VectorXd power_iteration(const Eigen::MatrixXd& transition, const PowerIterationOptions& opts = {},
                                std::optional<Eigen::VectorXd> initial = std::nullopt);

struct LexRankConfig {
    PowerIterationOptions power;
    std::size_t budget_words = 1;
};

struct RankResult {
    Eigen::VectorXd scores;
    std::vector<std::size_t> selected; ///< descending score, ties by index
    std::size_t budget_words = 0;
};

/// Continuous LexRank: idf-cosine graph, row-normalized, ranked by power
/// iteration. Units are then taken best-first until the next one would push
/// the word count past the budget; at least one unit is always taken.
RankResult lexrank(const std::vector<Tokens>& units, const LexRankConfig& cfg);

enum class UnitGranularity { QaPair, Sentence };

/// Extraction units for one entity with their display text.
std::vector<std::string> extraction_units(const std::vector<QAPair>& entity_qas, UnitGranularity g);

std::string lexrank_summary(const std::vector<QAPair>& entity_qas, std::size_t budget_words,
                            UnitGranularity g = UnitGranularity::QaPair,
                            const PowerIterationOptions& power = {});

// ---------------------------------------------------------------------------
// Greedy ROUGE oracle

using OracleMetric = std::function<double(const Tokens& candidate, const Tokens& gold)>;

/// ROUGE-1 F1 + ROUGE-2 F1.
double rouge12_f1_sum(const Tokens& candidate, const Tokens& gold);

struct OracleLabels {
    std::vector<std::size_t> selected;
    std::vector<std::pair<std::size_t, double>> gain_trace; ///< (unit, metric after adding)
};

/// Adds, one at a time, the unit whose addition gives the highest metric for
/// the concatenation (in selection order); stops when nothing strictly
/// improves or max_select is reached. Ties go to the lowest index.
OracleLabels greedy_oracle_labels(const std::vector<Tokens>& units, const Tokens& gold,
                                  std::size_t max_select, const OracleMetric& metric = rouge12_f1_sum);

} // namespace cqasum
