#pragma once

// Synthetic corpora shared by the unit and acceptance suites.

#include <cstdint>
#include <string>
#include <vector>

#include "cqasum/corpus.hpp"
#include "cqasum/rng.hpp"

namespace cqasum::testing {

/// Entities whose seed QA pairs carry the marker token "verified" and whose
/// duplicate pairs restate a seed fact without it. The reference summary
/// lists the seed facts declaratively.
inline Corpus marker_corpus(std::size_t entities, std::uint64_t seed, std::size_t seeds_per_entity = 3,
                            std::size_t features = 12) {
    SplitMix64 rng(seed);
    std::vector<Entity> es;
    std::vector<QAPair> qas;
    std::vector<SummaryRecord> sums;
    for (std::size_t e = 0; e < entities; ++e) {
        char eid[32];
        std::snprintf(eid, sizeof eid, "e%03zu", e);
        es.push_back({eid, std::string("item ") + eid, "synthetic"});
        std::vector<std::size_t> pool(features);
        for (std::size_t i = 0; i < features; ++i) pool[i] = i;
        shuffle(std::span<std::size_t>(pool), rng);
        std::string summary;
        std::size_t q = 0;
        auto add = [&](const std::string& question, const std::string& answer, bool is_seed) {
            char qid[64];
            std::snprintf(qid, sizeof qid, "%s-q%02zu", eid, q);
            qas.push_back({std::string(qid) + "-a0", eid, qid, question, answer, is_seed});
            ++q;
        };
        for (std::size_t s = 0; s < seeds_per_entity; ++s) {
            const std::string f = "feature" + std::to_string(pool[s]);
            add("does it have " + f + " ?", "yes verified it has " + f + " .", true);
            add("is there " + f + " here ?", "it comes with " + f + " .", false);
            summary += (summary.empty() ? "" : " ") + std::string("it has ") + f + " .";
        }
        sums.push_back({eid, std::nullopt, summary});
    }
    return Corpus::build(std::move(es), std::move(qas), std::move(sums));
}

} // namespace cqasum::testing
