#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cqasum/corpus.hpp"
#include "cqasum/error.hpp"

namespace cqasum {

// ---------------------------------------------------------------------------
// Step 1: filtering and seed sampling

/// First-person forms rejected by the pronoun rule.
const std::set<std::string>& default_pronoun_lexicon();

struct FilterConfig {
    std::size_t min_tokens = 5;
    std::size_t max_tokens = 150;
    std::set<std::string> pronoun_lexicon = default_pronoun_lexicon();

    void validate() const;
};

enum class RejectReason { Length, Pronoun };
std::string_view to_string(RejectReason r);

struct FilterResult {
    std::vector<QAPair> kept;
    std::vector<std::pair<QAPair, RejectReason>> rejected;
};

/// Keeps a pair iff min <= tokens(q)+tokens(a) <= max and no token of either
/// side is in the lexicon. The length rule is checked first.
FilterResult filter_qa_pairs(const std::vector<QAPair>& qas, const FilterConfig& cfg);

struct SeedSelection {
    std::string entity_id;
    std::vector<std::string> seed_qa_ids;
    std::size_t k = 0;
};

class InsufficientUniqueQuestions : public DataError {
public:
    InsufficientUniqueQuestions(std::size_t found, std::size_t required)
        : DataError("insufficient unique questions: found " + std::to_string(found) + ", required " +
                    std::to_string(required)),
          found_(found), required_(required) {}

    std::size_t found() const noexcept { return found_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t found_;
    std::size_t required_;
};

/// Samples k distinct question texts uniformly without replacement (texts are
/// sorted first, then Fisher-Yates shuffled) and takes the lowest-id pair of
/// each. All pairs must belong to one entity.
SeedSelection sample_seed_qas(const std::vector<QAPair>& kept, std::size_t k, std::uint64_t seed);

Json selection_to_json(const SeedSelection& s);

// ---------------------------------------------------------------------------
// Rewrite scoring

struct AnnotationScore {
    std::size_t lcs_len = 0;
    bool uses_yes_no = false;
    bool starts_interrogative = false;
    bool uses_first_person = false;
    bool starts_with_item_name = false;
    bool ignores_question = false;
    double weighted_score = 0.0; ///< lower is better
};

/// Weights for: copy, yes/no, interrogative, first person, item-name start
/// (negative: a bonus), ignored question.
using AnnotationWeights = std::array<double, 6>;
inline constexpr AnnotationWeights kDefaultAnnotationWeights = {1.0, 1.0, 1.0, 1.0, -0.5, 1.0};

AnnotationScore score_annotation(const QAPair& original, std::string_view rewrite, const Entity& entity,
                                 const AnnotationWeights& weights = kDefaultAnnotationWeights);

/// Index of the lowest weighted score; ties go to the lowest index.
std::size_t choose_best_annotation(const QAPair& original, const std::vector<std::string>& rewrites,
                                   const Entity& entity,
                                   const AnnotationWeights& weights = kDefaultAnnotationWeights);

Json annotation_score_to_json(const AnnotationScore& s);

struct Rewrite {
    std::string qa_id;
    std::string annotator_id;
    std::string rewrite;
};

std::vector<Rewrite> load_rewrites(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Step 2 and Step 3

std::string build_raw_summary(const std::vector<std::string>& rewrites);

/// Jaccard similarity of the distinct token sets; 0 when both are empty.
double word_overlap_similarity(std::string_view a, std::string_view b);

using QuestionSimilarity = std::function<double(std::string_view, std::string_view)>;

/// All answers of every seed question, plus all answers of any other question
/// of the entity whose similarity to some seed question reaches `threshold`.
/// Sorted by QA id.
std::vector<QAPair> enrich_inputs(const Corpus& corpus, const SeedSelection& selection,
                                  const QuestionSimilarity& sim = word_overlap_similarity,
                                  double threshold = 0.5);

/// Selection recovered from the is_seed flags of one entity's pairs.
SeedSelection selection_from_flags(const Corpus& corpus, const std::string& entity_id);

} // namespace cqasum
