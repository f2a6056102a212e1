#include "cqasum/pipeline.hpp"

#include <algorithm>
#include <map>

#include "cqasum/metrics.hpp"
#include "cqasum/rng.hpp"

namespace cqasum {

const std::set<std::string>& default_pronoun_lexicon() {
    static const std::set<std::string> lexicon = {"i",  "me",  "my",   "mine", "myself",
                                                  "we", "us",  "our",  "ours", "ourselves"};
    return lexicon;
}

void FilterConfig::validate() const {
    if (min_tokens == 0 || min_tokens > max_tokens)
        throw UsageError("filter: require 0 < min_tokens <= max_tokens");
    if (pronoun_lexicon.empty()) throw UsageError("filter: pronoun lexicon is empty");
}

std::string_view to_string(RejectReason r) { return r == RejectReason::Length ? "length" : "pronoun"; }

FilterResult filter_qa_pairs(const std::vector<QAPair>& qas, const FilterConfig& cfg) {
    cfg.validate();
    FilterResult out;
    for (const auto& qa : qas) {
        const Tokens tokens = qa.tokens();
        if (tokens.size() < cfg.min_tokens || tokens.size() > cfg.max_tokens) {
            out.rejected.emplace_back(qa, RejectReason::Length);
            continue;
        }
        const bool pronoun = std::any_of(tokens.begin(), tokens.end(),
                                         [&](const Token& t) { return cfg.pronoun_lexicon.count(t) > 0; });
        if (pronoun) {
            out.rejected.emplace_back(qa, RejectReason::Pronoun);
            continue;
        }
        out.kept.push_back(qa);
    }
    return out;
}

SeedSelection sample_seed_qas(const std::vector<QAPair>& kept, std::size_t k, std::uint64_t seed) {
    // question text -> lowest QA id carrying it
    std::map<std::string, std::string> representative;
    for (const auto& qa : kept) {
        if (qa.entity_id != kept.front().entity_id)
            throw DataError("sample_seed_qas: pairs from several entities");
        auto [it, fresh] = representative.emplace(qa.question, qa.id);
        if (!fresh && qa.id < it->second) it->second = qa.id;
    }
    if (representative.size() < k) throw InsufficientUniqueQuestions(representative.size(), k);

    std::vector<std::string> questions;
    for (const auto& [text, id] : representative) questions.push_back(text);
    SplitMix64 rng(seed);
    shuffle(std::span<std::string>(questions), rng);

    SeedSelection s;
    s.entity_id = kept.empty() ? std::string() : kept.front().entity_id;
    s.k = k;
    for (std::size_t i = 0; i < k; ++i) s.seed_qa_ids.push_back(representative.at(questions[i]));
    return s;
}

Json selection_to_json(const SeedSelection& s) {
    Json j;
    j["entity_id"] = s.entity_id;
    j["k"] = s.k;
    j["seed_qa_ids"] = s.seed_qa_ids;
    return j;
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kYesNo = {"yes", "no"};

const std::set<std::string> kInterrogative = {"what", "which", "who",  "whom", "whose", "where",
                                              "when", "why",   "how",  "do",   "does",  "did",
                                              "is",   "are",   "can",  "will"};

// Function words plus punctuation, removed from the question before checking
// whether a rewrite carries any of its content.
const std::set<std::string> kStopwords = {
    "a",    "an",   "the",  "is",    "are",  "was",   "were", "be",   "been", "am",   "do",
    "does", "did",  "can",  "could", "will", "would", "should", "shall", "may", "might", "must",
    "have", "has",  "had",  "it",    "its",  "this",  "that", "these", "those", "there", "to",
    "of",   "in",   "on",   "at",    "for",  "with",  "by",   "from", "as",   "and",  "or",
    "but",  "if",   "so",   "not",   "any",  "what",  "which", "who", "whom", "whose", "where",
    "when", "why",  "how",  "you",   "your", "i",     "me",   "my",   "we",   "us",   "our",
    "?",    ".",    ",",    "!",     ";",    ":",     "'",    "\"",   "(",    ")",    "-"};

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

} // namespace

AnnotationScore score_annotation(const QAPair& original, std::string_view rewrite, const Entity& entity,
                                 const AnnotationWeights& w) {
    const Tokens r = tokenize(rewrite);
    const Tokens orig = original.tokens();
    AnnotationScore s;
    s.lcs_len = lcs_length(r, orig);
    if (!r.empty()) {
        s.uses_yes_no = kYesNo.count(r.front()) > 0;
        s.starts_interrogative = kInterrogative.count(r.front()) > 0;
    }
    const auto& lexicon = default_pronoun_lexicon();
    s.uses_first_person = std::any_of(r.begin(), r.end(), [&](const Token& t) { return lexicon.count(t) > 0; });

    const Tokens name = tokenize(entity.name);
    const bool generic_start = r.size() >= 2 && r[0] == "this" && (r[1] == "product" || r[1] == "item");
    const bool name_start = !name.empty() && r.size() >= name.size() && std::equal(name.begin(), name.end(), r.begin());
    s.starts_with_item_name = generic_start || name_start;

    std::set<std::string> question_content;
    for (const auto& t : tokenize(original.question))
        if (!kStopwords.count(t)) question_content.insert(t);
    s.ignores_question = jaccard(std::set<std::string>(r.begin(), r.end()), question_content) < 0.1;

    const double copy = orig.empty() ? 0.0 : static_cast<double>(s.lcs_len) / static_cast<double>(orig.size());
    const std::array<double, 6> penalty = {copy,
                                           s.uses_yes_no ? 1.0 : 0.0,
                                           s.starts_interrogative ? 1.0 : 0.0,
                                           s.uses_first_person ? 1.0 : 0.0,
                                           s.starts_with_item_name ? 1.0 : 0.0,
                                           s.ignores_question ? 1.0 : 0.0};
    for (std::size_t i = 0; i < 6; ++i) s.weighted_score += w[i] * penalty[i];
    return s;
}

std::size_t choose_best_annotation(const QAPair& original, const std::vector<std::string>& rewrites,
                                   const Entity& entity, const AnnotationWeights& weights) {
    if (rewrites.empty()) throw UsageError("choose_best_annotation: no rewrites");
    std::size_t best = 0;
    double best_score = score_annotation(original, rewrites[0], entity, weights).weighted_score;
    for (std::size_t i = 1; i < rewrites.size(); ++i) {
        const double s = score_annotation(original, rewrites[i], entity, weights).weighted_score;
        if (s < best_score) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

Json annotation_score_to_json(const AnnotationScore& s) {
    Json j;
    j["lcs_len"] = s.lcs_len;
    j["uses_yes_no"] = s.uses_yes_no;
    j["starts_interrogative"] = s.starts_interrogative;
    j["uses_first_person"] = s.uses_first_person;
    j["starts_with_item_name"] = s.starts_with_item_name;
    j["ignores_question"] = s.ignores_question;
    j["weighted_score"] = s.weighted_score;
    return j;
}

std::vector<Rewrite> load_rewrites(const std::filesystem::path& path) {
    std::vector<Rewrite> out;
    read_jsonl(path, [&](const Json& j, std::size_t line) {
        Rewrite r{j.at("qa_id").get<std::string>(), j.value("annotator_id", std::string()),
                  j.at("rewrite").get<std::string>()};
        if (tokenize(r.rewrite).empty()) throw ParseError(path.string(), line, "empty rewrite");
        out.push_back(std::move(r));
    });
    return out;
}

// ---------------------------------------------------------------------------

std::string build_raw_summary(const std::vector<std::string>& rewrites) {
    if (rewrites.empty()) throw UsageError("build_raw_summary: no rewrites");
    std::string out;
    for (std::size_t i = 0; i < rewrites.size(); ++i) {
        if (i) out.push_back(' ');
        out += rewrites[i];
    }
    return out;
}

double word_overlap_similarity(std::string_view a, std::string_view b) {
    const Tokens ta = tokenize(a);
    const Tokens tb = tokenize(b);
    return jaccard(std::set<std::string>(ta.begin(), ta.end()), std::set<std::string>(tb.begin(), tb.end()));
}

std::vector<QAPair> enrich_inputs(const Corpus& corpus, const SeedSelection& selection,
                                  const QuestionSimilarity& sim, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) throw UsageError("enrich_inputs: threshold must be in [0,1]");
    const std::vector<QAPair> qas = corpus.qas_of(selection.entity_id);
    const std::set<std::string> seed_ids(selection.seed_qa_ids.begin(), selection.seed_qa_ids.end());

    std::set<std::string> seed_questions; // question_id
    std::vector<std::string> seed_texts;
    for (const auto& qa : qas) {
        if (seed_ids.count(qa.id) && seed_questions.insert(qa.question_id).second)
            seed_texts.push_back(qa.question);
    }

    std::map<std::string, bool> include; // question_id -> decision
    std::vector<QAPair> out;
    for (const auto& qa : qas) {
        auto it = include.find(qa.question_id);
        if (it == include.end()) {
            bool take = seed_questions.count(qa.question_id) > 0;
            for (std::size_t i = 0; !take && i < seed_texts.size(); ++i)
                take = sim(qa.question, seed_texts[i]) >= threshold;
            it = include.emplace(qa.question_id, take).first;
        }
        if (it->second) out.push_back(qa);
    }
    return out;
}

SeedSelection selection_from_flags(const Corpus& corpus, const std::string& entity_id) {
    SeedSelection s;
    s.entity_id = entity_id;
    for (const auto& qa : corpus.qas_of(entity_id))
        if (qa.is_seed.value_or(false)) s.seed_qa_ids.push_back(qa.id);
    s.k = s.seed_qa_ids.size();
    return s;
}

} // namespace cqasum
