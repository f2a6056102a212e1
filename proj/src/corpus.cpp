#include "cqasum/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cqasum/error.hpp"
#include "cqasum/rng.hpp"

namespace cqasum {

Tokens QAPair::tokens() const {
    Tokens out = tokenize(question);
    Tokens a = tokenize(answer);
    out.insert(out.end(), a.begin(), a.end());
    return out;
}

Corpus Corpus::build(std::vector<Entity> entities, std::vector<QAPair> qa_pairs,
                     std::vector<SummaryRecord> summaries) {
    Corpus c;
    std::sort(entities.begin(), entities.end(),
              [](const Entity& a, const Entity& b) { return a.id < b.id; });
    std::sort(qa_pairs.begin(), qa_pairs.end(),
              [](const QAPair& a, const QAPair& b) { return a.id < b.id; });
    std::sort(summaries.begin(), summaries.end(),
              [](const SummaryRecord& a, const SummaryRecord& b) { return a.entity_id < b.entity_id; });

    for (std::size_t i = 0; i < entities.size(); ++i) {
        const Entity& e = entities[i];
        if (e.id.empty()) throw DataError("entity with empty id");
        if (e.category.empty()) throw DataError("entity \"" + e.id + "\" has empty category");
        if (!c.entity_index_.emplace(e.id, i).second) throw DuplicateIdError(e.id, "entities");
    }

    std::map<std::string, const QAPair*> question_text;
    for (std::size_t i = 0; i < qa_pairs.size(); ++i) {
        const QAPair& qa = qa_pairs[i];
        if (qa.id.empty()) throw DataError("QA pair with empty id");
        if (i > 0 && qa_pairs[i - 1].id == qa.id) throw DuplicateIdError(qa.id, "qa_pairs");
        if (!c.entity_index_.count(qa.entity_id))
            throw ReferentialIntegrityError(qa.entity_id, "qa_pair \"" + qa.id + "\"");
        if (tokenize(qa.question).empty())
            throw DataError("qa_pair \"" + qa.id + "\": question is empty after tokenization");
        if (tokenize(qa.answer).empty())
            throw DataError("qa_pair \"" + qa.id + "\": answer is empty after tokenization");
        auto [it, fresh] = question_text.emplace(qa.question_id, &qa);
        if (!fresh && (it->second->question != qa.question || it->second->entity_id != qa.entity_id))
            throw DataError("qa_pair \"" + qa.id + "\": question_id \"" + qa.question_id +
                            "\" is shared with a different question text or entity");
        c.qas_by_entity_[qa.entity_id].push_back(i);
    }

    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const SummaryRecord& s = summaries[i];
        if (!c.entity_index_.count(s.entity_id))
            throw ReferentialIntegrityError(s.entity_id, "summary");
        if (tokenize(s.reference_summary).empty())
            throw DataError("summary for \"" + s.entity_id + "\": reference_summary is empty");
        if (!c.summary_index_.emplace(s.entity_id, i).second)
            throw DuplicateIdError(s.entity_id, "summaries");
    }

    c.entities_ = std::move(entities);
    c.qa_pairs_ = std::move(qa_pairs);
    c.summaries_ = std::move(summaries);
    return c;
}

const Entity* Corpus::find_entity(const std::string& id) const {
    auto it = entity_index_.find(id);
    return it == entity_index_.end() ? nullptr : &entities_[it->second];
}

const SummaryRecord* Corpus::summary_of(const std::string& entity_id) const {
    auto it = summary_index_.find(entity_id);
    return it == summary_index_.end() ? nullptr : &summaries_[it->second];
}

std::vector<QAPair> Corpus::qas_of(const std::string& entity_id) const {
    std::vector<QAPair> out;
    auto it = qas_by_entity_.find(entity_id);
    if (it == qas_by_entity_.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(qa_pairs_[i]);
    return out;
}

std::vector<std::string> Corpus::entity_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entities_.size());
    for (const auto& e : entities_) ids.push_back(e.id);
    return ids;
}

Corpus Corpus::subset(const std::vector<std::string>& entity_ids) const {
    const std::set<std::string> keep(entity_ids.begin(), entity_ids.end());
    std::vector<Entity> es;
    std::vector<QAPair> qs;
    std::vector<SummaryRecord> ss;
    for (const auto& e : entities_)
        if (keep.count(e.id)) es.push_back(e);
    for (const auto& q : qa_pairs_)
        if (keep.count(q.entity_id)) qs.push_back(q);
    for (const auto& s : summaries_)
        if (keep.count(s.entity_id)) ss.push_back(s);
    return build(std::move(es), std::move(qs), std::move(ss));
}

Corpus Corpus::with_qa_pairs(std::vector<QAPair> qa_pairs) const {
    std::set<std::string> live;
    for (const auto& q : qa_pairs) live.insert(q.entity_id);
    std::vector<Entity> es;
    std::vector<SummaryRecord> ss;
    for (const auto& e : entities_)
        if (live.count(e.id)) es.push_back(e);
    for (const auto& s : summaries_)
        if (live.count(s.entity_id)) ss.push_back(s);
    return build(std::move(es), std::move(qa_pairs), std::move(ss));
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

std::string required_string(const Json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("missing key \"") + key + "\"");
    if (!j.at(key).is_string()) throw DataError(std::string("key \"") + key + "\" must be a string");
    return j.at(key).get<std::string>();
}

} // namespace

Json qa_pair_to_json(const QAPair& qa, const Entity& entity) {
    Json j;
    j["id"] = qa.id;
    j["entity_id"] = qa.entity_id;
    j["entity_name"] = entity.name;
    j["category"] = entity.category;
    j["question_id"] = qa.question_id;
    j["question"] = qa.question;
    j["answer"] = qa.answer;
    if (qa.is_seed) j["is_seed"] = *qa.is_seed;
    return j;
}

Json summary_to_json(const SummaryRecord& s) {
    Json j;
    j["entity_id"] = s.entity_id;
    if (s.raw_summary) j["raw_summary"] = *s.raw_summary;
    j["reference_summary"] = s.reference_summary;
    return j;
}

Corpus load_corpus(const std::filesystem::path& dir) {
    const auto sum_path = dir / kSummariesFile;
    return load_corpus_files(dir / kQaPairsFile,
                             std::filesystem::exists(sum_path) ? sum_path : std::filesystem::path());
}

Corpus load_corpus_files(const std::filesystem::path& qa_path, const std::filesystem::path& sum_path) {
    if (!std::filesystem::exists(qa_path)) throw DataError("missing " + qa_path.string());

    std::map<std::string, Entity> entities;
    std::vector<QAPair> qas;
    std::set<std::string> seen_qa;
    read_jsonl(qa_path, [&](const Json& j, std::size_t line) {
        try {
            QAPair qa;
            qa.id = required_string(j, "id");
            qa.entity_id = required_string(j, "entity_id");
            qa.question_id = required_string(j, "question_id");
            qa.question = required_string(j, "question");
            qa.answer = required_string(j, "answer");
            if (j.contains("is_seed") && !j.at("is_seed").is_null()) {
                if (!j.at("is_seed").is_boolean()) throw DataError("is_seed must be a boolean");
                qa.is_seed = j.at("is_seed").get<bool>();
            }
            Entity e{qa.entity_id, required_string(j, "entity_name"), required_string(j, "category")};
            if (e.id.empty()) throw DataError("empty entity_id");
            if (e.category.empty()) throw DataError("empty category");
            if (tokenize(qa.question).empty()) throw DataError("question is empty after tokenization");
            if (tokenize(qa.answer).empty()) throw DataError("answer is empty after tokenization");
            if (!seen_qa.insert(qa.id).second) throw DuplicateIdError(qa.id, "qa_pairs");
            auto [it, fresh] = entities.emplace(e.id, e);
            if (!fresh && it->second != e)
                throw DataError("entity \"" + e.id + "\" has inconsistent name or category");
            qas.push_back(std::move(qa));
        } catch (const DuplicateIdError& e) {
            throw ParseError(qa_path.string(), line, e.what());
        } catch (const ParseError&) {
            throw;
        } catch (const DataError& e) {
            throw ParseError(qa_path.string(), line, e.what());
        }
    });

    std::vector<SummaryRecord> summaries;
    if (!sum_path.empty()) {
        if (!std::filesystem::exists(sum_path)) throw DataError("missing " + sum_path.string());
        std::set<std::string> seen;
        read_jsonl(sum_path, [&](const Json& j, std::size_t line) {
            SummaryRecord s;
            try {
                s.entity_id = required_string(j, "entity_id");
                s.reference_summary = required_string(j, "reference_summary");
                if (j.contains("raw_summary") && !j.at("raw_summary").is_null())
                    s.raw_summary = required_string(j, "raw_summary");
                if (tokenize(s.reference_summary).empty()) throw DataError("reference_summary is empty");
            } catch (const ParseError&) {
                throw;
            } catch (const DataError& e) {
                throw ParseError(sum_path.string(), line, e.what());
            }
            if (!entities.count(s.entity_id))
                throw ReferentialIntegrityError(s.entity_id, sum_path.string() + ":" + std::to_string(line));
            if (!seen.insert(s.entity_id).second)
                throw DuplicateIdError(s.entity_id, sum_path.string() + ":" + std::to_string(line));
            summaries.push_back(std::move(s));
        });
    }

    std::vector<Entity> es;
    for (auto& [id, e] : entities) es.push_back(std::move(e));
    return Corpus::build(std::move(es), std::move(qas), std::move(summaries));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::vector<Json> qa_lines;
    for (const auto& qa : corpus.qa_pairs())
        qa_lines.push_back(qa_pair_to_json(qa, *corpus.find_entity(qa.entity_id)));
    std::vector<Json> sum_lines;
    for (const auto& s : corpus.summaries()) sum_lines.push_back(summary_to_json(s));
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / kQaPairsFile, to_jsonl(qa_lines));
    write_file_atomic(dir / kSummariesFile, to_jsonl(sum_lines));
}

// ---------------------------------------------------------------------------
// Splits

CorpusSplit split_ids(std::vector<std::string> ids, const SplitRatios& r, std::uint64_t seed) {
    if (ids.empty()) throw DataError("cannot split a corpus with 0 entities");
    if (!(r.train > 0 && r.val > 0 && r.test > 0) ||
        std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
        throw UsageError("split ratios must be positive and sum to 1");
    std::sort(ids.begin(), ids.end());
    SplitMix64 rng(seed);
    shuffle(std::span<std::string>(ids), rng);

    const double n = static_cast<double>(ids.size());
    // The 1e-9 slack absorbs representation error such as 10 * 0.7 = 6.999...
    const auto n_train = static_cast<std::size_t>(std::floor(n * r.train + 1e-9));
    const auto n_val = std::min(ids.size() - n_train, static_cast<std::size_t>(std::floor(n * r.val + 1e-9)));

    CorpusSplit s;
    s.seed = seed;
    auto b = ids.begin();
    s.train.assign(b, b + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(b + static_cast<std::ptrdiff_t>(n_train), b + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(b + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed) {
    return split_ids(corpus.entity_ids(), ratios, seed);
}

Json split_to_json(const CorpusSplit& split) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = split.seed;
    j["train"] = split.train;
    j["val"] = split.val;
    j["test"] = split.test;
    return j;
}

CorpusSplit split_from_json(const Json& j) {
    CorpusSplit s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
}

// ---------------------------------------------------------------------------
// Statistics

double novel_ngram_pct(const Tokens& summary, const Tokens& input, std::size_t n) {
    const NgramCounts s = ngrams(summary, n);
    if (s.empty()) return 0.0;
    const NgramCounts in = ngrams(input, n);
    std::size_t novel = 0;
    for (const auto& [g, count] : s)
        if (!in.count(g)) ++novel;
    return 100.0 * static_cast<double>(novel) / static_cast<double>(s.size());
}

namespace {

struct Accumulator {
    std::size_t entities = 0;
    double input_words = 0;
    std::size_t raw_count = 0;
    double raw_words = 0;
    std::size_t ref_count = 0;
    double ref_words = 0;
    std::array<double, 4> novel{};

    GroupStats finish() const {
        GroupStats g;
        g.entity_count = entities;
        g.avg_input_words = entities ? input_words / static_cast<double>(entities) : 0.0;
        if (raw_count) g.avg_raw_summary_words = raw_words / static_cast<double>(raw_count);
        if (ref_count) {
            g.avg_ref_summary_words = ref_words / static_cast<double>(ref_count);
            std::array<double, 4> pct{};
            for (std::size_t k = 0; k < 4; ++k) pct[k] = novel[k] / static_cast<double>(ref_count);
            g.novel_ngram_pct = pct;
            if (g.avg_input_words > 0)
                g.compression_ratio_pct = 100.0 * *g.avg_ref_summary_words / g.avg_input_words;
        }
        return g;
    }
};

Json group_to_json(const GroupStats& g) {
    Json j;
    j["entity_count"] = g.entity_count;
    j["avg_input_words"] = g.avg_input_words;
    j["avg_raw_summary_words"] = g.avg_raw_summary_words ? Json(*g.avg_raw_summary_words) : Json();
    j["avg_ref_summary_words"] = g.avg_ref_summary_words ? Json(*g.avg_ref_summary_words) : Json();
    if (g.novel_ngram_pct) {
        Json novel;
        for (std::size_t k = 0; k < 4; ++k) novel[std::to_string(k + 1)] = (*g.novel_ngram_pct)[k];
        j["novel_ngram_pct"] = novel;
    } else {
        j["novel_ngram_pct"] = nullptr;
    }
    j["compression_ratio_pct"] = g.compression_ratio_pct ? Json(*g.compression_ratio_pct) : Json();
    return j;
}

std::string cell(const std::optional<double>& v, int decimals = 1) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
    return buf;
}

std::string group_row(const std::string& label, const GroupStats& g) {
    std::string row = "| " + label + " | " + std::to_string(g.entity_count) + " | " +
                      cell(g.avg_input_words) + " | " + cell(g.avg_raw_summary_words) + " | " +
                      cell(g.avg_ref_summary_words);
    for (std::size_t k = 0; k < 4; ++k)
        row += " | " + (g.novel_ngram_pct ? cell((*g.novel_ngram_pct)[k], 2) : std::string("-"));
    row += " | " + cell(g.compression_ratio_pct, 2) + " |\n";
    return row;
}

} // namespace

CorpusStats compute_stats(const Corpus& corpus) {
    std::map<std::string, Accumulator> per_cat;
    Accumulator all;
    for (const auto& e : corpus.entities()) {
        Tokens input;
        for (const auto& qa : corpus.qas_of(e.id)) {
            Tokens t = qa.tokens();
            input.insert(input.end(), t.begin(), t.end());
        }
        for (Accumulator* acc : {&per_cat[e.category], &all}) {
            acc->entities += 1;
            acc->input_words += static_cast<double>(input.size());
        }
        const SummaryRecord* s = corpus.summary_of(e.id);
        if (!s) continue;
        const Tokens ref = tokenize(s->reference_summary);
        std::array<double, 4> novel{};
        for (std::size_t n = 1; n <= 4; ++n) novel[n - 1] = novel_ngram_pct(ref, input, n);
        for (Accumulator* acc : {&per_cat[e.category], &all}) {
            acc->ref_count += 1;
            acc->ref_words += static_cast<double>(ref.size());
            for (std::size_t k = 0; k < 4; ++k) acc->novel[k] += novel[k];
            if (s->raw_summary) {
                acc->raw_count += 1;
                acc->raw_words += static_cast<double>(word_count(*s->raw_summary));
            }
        }
    }
    CorpusStats stats;
    for (const auto& [cat, acc] : per_cat) stats.per_category[cat] = acc.finish();
    stats.overall = all.finish();
    return stats;
}

Json stats_to_json(const CorpusStats& stats) {
    Json j;
    j["format_version"] = kFormatVersion;
    Json cats = Json::object();
    for (const auto& [cat, g] : stats.per_category) cats[cat] = group_to_json(g);
    j["per_category"] = cats;
    j["overall"] = group_to_json(stats.overall);
    return j;
}

std::string stats_to_markdown(const CorpusStats& stats) {
    std::string md =
        "| Category | # Entities | Input words | Raw summary words | Ref summary words "
        "| Novel 1-gram % | Novel 2-gram % | Novel 3-gram % | Novel 4-gram % | Compression % |\n"
        "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& [cat, g] : stats.per_category) md += group_row(cat, g);
    md += group_row("**All**", stats.overall);
    return md;
}

} // namespace cqasum
