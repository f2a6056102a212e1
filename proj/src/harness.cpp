#include "cqasum/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <set>

#include "cqasum/rng.hpp"

namespace cqasum {

const char* const kReproducibilityNote =
    "Scores are computed on the supplied corpus only and are not comparable to published benchmark numbers: "
    "absolute system-comparison, cross-category and Best-Worst Scaling results are not reproducible at this "
    "scale because the original annotated corpus, pretrained checkpoints and crowd judgments are not bundled.";

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
    if (systems.empty()) throw UsageError("experiment: at least one system is required");
    if (metrics.empty()) throw UsageError("experiment: at least one metric is required");
    for (const auto& s : systems)
        if (std::find(kKnownSystems.begin(), kKnownSystems.end(), s) == kKnownSystems.end())
            throw UsageError("experiment: unknown system \"" + s + "\" (expected seedqas, lexrank or dedupled-toy)");
    if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw UsageError("experiment: split ratios must be positive and sum to 1");
}

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base) {
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base.empty() ? base / path : path;
    };
    ExperimentConfig c;
    try {
        if (j.contains("corpus")) c.corpus_dir = resolve(j.at("corpus").get<std::string>());
        if (j.contains("split")) {
            const Json& s = j.at("split");
            c.ratios = {s.value("train", 0.8), s.value("val", 0.1), s.value("test", 0.1)};
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("systems")) c.systems = j.at("systems").get<std::vector<std::string>>();
        if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
        if (j.contains("model")) c.model = neural::config_from_json(j.at("model"));
        if (j.contains("optimizer")) c.optimizer = neural::optimizer_from_json(j.at("optimizer"));
        c.vocab_min_freq = j.value("vocab_min_freq", c.vocab_min_freq);
        if (j.contains("lexrank")) {
            const Json& l = j.at("lexrank");
            const std::string g = l.value("granularity", std::string("qa_pair"));
            if (g == "qa_pair") c.granularity = UnitGranularity::QaPair;
            else if (g == "sentence") c.granularity = UnitGranularity::Sentence;
            else throw UsageError("experiment: lexrank.granularity must be qa_pair or sentence");
            c.lexrank_budget = l.value("budget_words", std::size_t{0});
        }
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

Json experiment_to_json(const ExperimentConfig& c) {
    Json j;
    j["corpus"] = c.corpus_dir.string();
    j["split"] = {{"train", c.ratios.train}, {"val", c.ratios.val}, {"test", c.ratios.test}};
    j["seed"] = c.seed;
    j["systems"] = c.systems;
    j["metrics"] = c.metrics;
    j["model"] = neural::config_to_json(c.model);
    j["optimizer"] = neural::optimizer_to_json(c.optimizer);
    j["vocab_min_freq"] = c.vocab_min_freq;
    j["lexrank"] = {{"granularity", c.granularity == UnitGranularity::QaPair ? "qa_pair" : "sentence"},
                    {"budget_words", c.lexrank_budget}};
    j["output_dir"] = c.output_dir.string();
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    Json j = experiment_to_json(cfg);
    j.erase("output_dir");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Systems

std::size_t average_reference_words(const Corpus& corpus, const std::vector<std::string>& ids) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& id : ids) {
        if (const SummaryRecord* s = corpus.summary_of(id)) {
            total += static_cast<double>(word_count(s->reference_summary));
            ++n;
        }
    }
    if (n == 0) throw UsageError("lexrank budget: no training references to average");
    return static_cast<std::size_t>(std::llround(total / static_cast<double>(n)));
}

std::vector<neural::TokenizedExample> training_examples(const Corpus& corpus, const std::vector<std::string>& ids,
                                                        const neural::Vocab& vocab, const neural::ModelConfig& mc) {
    std::vector<neural::TokenizedExample> out;
    for (const auto& id : ids) {
        const SummaryRecord* s = corpus.summary_of(id);
        if (!s) continue;
        auto ex = neural::encode_example(corpus.qas_of(id), s->reference_summary, vocab, mc);
        if (ex.qa_boundaries.empty()) continue;
        out.push_back(std::move(ex));
    }
    return out;
}

namespace {

class SeedQasSummarizer final : public Summarizer {
public:
    std::string summarize(const std::vector<QAPair>& qas) const override { return seedqas_summary(qas); }
};

class LexRankSummarizer final : public Summarizer {
public:
    LexRankSummarizer(std::size_t budget, UnitGranularity g) : budget_(budget), granularity_(g) {}
    std::string summarize(const std::vector<QAPair>& qas) const override {
        return lexrank_summary(qas, budget_, granularity_);
    }

private:
    std::size_t budget_;
    UnitGranularity granularity_;
};

class DedupLedSummarizer final : public Summarizer {
public:
    DedupLedSummarizer(neural::Model model, neural::Vocab vocab) : model_(std::move(model)), vocab_(std::move(vocab)) {}
    std::string summarize(const std::vector<QAPair>& qas) const override {
        const auto ex = neural::encode_example(qas, std::nullopt, vocab_, model_.config);
        return neural::generate_text(model_, vocab_, ex);
    }

private:
    neural::Model model_;
    neural::Vocab vocab_;
};

// Re-raises with the system name in front, keeping the error category.
[[noreturn]] void rethrow_with_system(const std::string& system) {
    try {
        throw;
    } catch (const UsageError& e) {
        throw UsageError("system " + system + ": " + e.what());
    } catch (const TrainingFailure& e) {
        throw TrainingFailure("system " + system + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("system " + system + ": " + e.what());
    }
}

} // namespace

std::unique_ptr<Summarizer> fit_system(const std::string& system, const Corpus& corpus,
                                       const std::vector<std::string>& train_ids,
                                       const std::vector<std::string>& val_ids, const ExperimentConfig& cfg) {
    if (system == "seedqas") return std::make_unique<SeedQasSummarizer>();
    if (system == "lexrank") {
        const std::size_t budget = cfg.lexrank_budget ? cfg.lexrank_budget : average_reference_words(corpus, train_ids);
        return std::make_unique<LexRankSummarizer>(budget, cfg.granularity);
    }
    if (system == "dedupled-toy") {
        const Corpus train_corpus = corpus.subset(train_ids);
        neural::Vocab vocab = neural::build_vocab(train_corpus, cfg.vocab_min_freq);
        neural::ModelConfig mc = cfg.model;
        mc.vocab_size = vocab.size();
        mc.seed = derive_seed(cfg.seed, "dedupled-toy");
        const auto train_set = training_examples(corpus, train_ids, vocab, mc);
        const auto val_set = training_examples(corpus, val_ids, vocab, mc);
        neural::TrainResult r = neural::train(mc, train_set, val_set, cfg.optimizer);
        return std::make_unique<DedupLedSummarizer>(neural::Model{mc, std::move(r.params)}, std::move(vocab));
    }
    throw UsageError("unknown system \"" + system + "\"");
}

// ---------------------------------------------------------------------------
// Runners

namespace {

ReportTable to_report(const EvaluationTable& eval, const ExperimentConfig& cfg, bool keep_rouge) {
    ReportTable t;
    t.systems = cfg.systems;
    for (const auto& c : eval.columns) {
        const bool is_rouge = std::find(kRougeColumns.begin(), kRougeColumns.end(), c) != kRougeColumns.end();
        if (!is_rouge || keep_rouge) t.columns.push_back(c);
    }
    for (const auto& s : t.systems)
        for (const auto& c : t.columns) t.cells[s][c] = eval.rows.at(s).at(c);
    t.provenance.config_hash = config_hash(cfg);
    t.provenance.seed = cfg.seed;
    t.notes.push_back(kReproducibilityNote);
    return t;
}

} // namespace

ExperimentRun run_on_split(const Corpus& corpus, const CorpusSplit& split, const ExperimentConfig& cfg,
                           const MetricRegistry* registry) {
    cfg.validate();
    ExperimentRun run;
    run.split = split;
    const std::string started = utc_timestamp();

    References refs;
    for (const auto& id : split.test)
        if (const SummaryRecord* s = corpus.summary_of(id)) refs[id] = s->reference_summary;
    if (refs.empty()) throw DataError("experiment: no test entity has a reference summary");

    for (const auto& system : cfg.systems) {
        try {
            const auto summarizer = fit_system(system, corpus, split.train, split.val, cfg);
            for (const auto& [id, ref] : refs) run.outputs[system][id] = summarizer->summarize(corpus.qas_of(id));
        } catch (const Error&) {
            rethrow_with_system(system);
        }
    }

    std::vector<std::string> external;
    bool rouge = false;
    for (const auto& m : cfg.metrics) {
        if (m == "rouge") rouge = true;
        else external.push_back(m);
    }
    const EvaluationTable eval = evaluate_corpus(run.outputs, refs, registry, external);
    run.table = to_report(eval, cfg, rouge);
    run.table.provenance.started_at = started;
    run.table.provenance.finished_at = utc_timestamp();
    return run;
}

ExperimentRun run_experiment(const Corpus& corpus, const ExperimentConfig& cfg, const MetricRegistry* registry) {
    cfg.validate();
    return run_on_split(corpus, split_corpus(corpus, cfg.ratios, derive_seed(cfg.seed, "split")), cfg, registry);
}

ExperimentRun run_experiment(const ExperimentConfig& cfg, const MetricRegistry* registry) {
    return run_experiment(load_corpus(cfg.corpus_dir), cfg, registry);
}

std::vector<LearningCurvePoint> learning_curve(const Corpus& corpus, const ExperimentConfig& cfg,
                                               const std::vector<double>& fractions, const MetricRegistry* registry) {
    cfg.validate();
    if (fractions.empty()) throw UsageError("learning_curve: no fractions");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw UsageError("learning_curve: fractions must lie in (0,1]");
        if (i && fractions[i] <= fractions[i - 1]) throw UsageError("learning_curve: fractions must be ascending");
    }
    const CorpusSplit split = split_corpus(corpus, cfg.ratios, derive_seed(cfg.seed, "split"));
    std::vector<std::string> order = split.train;
    SplitMix64 rng(derive_seed(cfg.seed, "learning-curve"));
    shuffle(std::span<std::string>(order), rng);

    std::vector<LearningCurvePoint> out;
    for (double f : fractions) {
        const double exact = f * static_cast<double>(order.size());
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact + 1e-9)));
        LearningCurvePoint p;
        p.fraction = f;
        p.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
        std::sort(p.train_ids.begin(), p.train_ids.end());
        CorpusSplit sub = split;
        sub.train = p.train_ids;
        p.table = run_on_split(corpus, sub, cfg, registry).table;
        out.push_back(std::move(p));
    }
    return out;
}

CrossCategoryResult cross_category(const Corpus& corpus, const ExperimentConfig& cfg,
                                   const std::vector<std::string>& categories) {
    cfg.validate();
    if (categories.empty()) throw UsageError("cross_category: no categories");
    CrossCategoryResult r;
    r.categories = categories;
    r.system = cfg.systems.front();
    r.provenance.config_hash = config_hash(cfg);
    r.provenance.seed = cfg.seed;
    r.provenance.started_at = utc_timestamp();

    for (const auto& cat : categories) {
        std::vector<std::string> ids;
        for (const auto& e : corpus.entities())
            if (e.category == cat) ids.push_back(e.id);
        if (ids.size() < 10) throw TooFewEntities(cat, ids.size());
        r.splits[cat] = split_ids(ids, cfg.ratios, derive_seed(cfg.seed, "cross-category/" + cat));
    }

    for (const auto& train_cat : categories) {
        const CorpusSplit& own = r.splits.at(train_cat);
        std::unique_ptr<Summarizer> summarizer;
        try {
            summarizer = fit_system(r.system, corpus, own.train, own.val, cfg);
        } catch (const Error&) {
            rethrow_with_system(r.system);
        }
        std::vector<double> row;
        for (const auto& test_cat : categories) {
            References refs;
            std::map<std::string, std::string> outputs;
            for (const auto& id : r.splits.at(test_cat).test) {
                const SummaryRecord* s = corpus.summary_of(id);
                if (!s) continue;
                refs[id] = s->reference_summary;
                outputs[id] = summarizer->summarize(corpus.qas_of(id));
            }
            if (refs.empty()) throw DataError("cross_category: test split of \"" + test_cat + "\" has no references");
            const EvaluationTable eval = evaluate_corpus({{r.system, outputs}}, refs);
            row.push_back(eval.rows.at(r.system).at("R1-F"));
        }
        double sum = 0.0;
        for (double v : row) sum += v;
        r.row_average.push_back(sum / static_cast<double>(row.size()));
        r.r1_f1.push_back(std::move(row));
    }
    r.provenance.finished_at = utc_timestamp();
    return r;
}

// ---------------------------------------------------------------------------
// Reports

Json report_to_json(const ReportTable& t) {
    Json j;
    j["format_version"] = t.provenance.format_version;
    j["provenance"] = {{"config_hash", t.provenance.config_hash}, {"seed", t.provenance.seed}};
    j["columns"] = t.columns;
    Json rows = Json::object();
    for (const auto& s : t.systems) {
        Json r = Json::object();
        for (const auto& c : t.columns) r[c] = t.cells.at(s).at(c);
        rows[s] = r;
    }
    j["systems"] = t.systems;
    j["rows"] = rows;
    j["notes"] = t.notes;
    return j;
}

ReportTable report_from_json(const Json& j) {
    ReportTable t;
    t.provenance.format_version = j.at("format_version").get<std::string>();
    t.provenance.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    t.provenance.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.systems = j.at("systems").get<std::vector<std::string>>();
    for (const auto& s : t.systems)
        for (const auto& c : t.columns) t.cells[s][c] = j.at("rows").at(s).at(c).get<double>();
    t.notes = j.at("notes").get<std::vector<std::string>>();
    return t;
}

std::string report_to_markdown(const ReportTable& t) {
    std::string md = "| System |";
    std::string rule = "|---|";
    for (const auto& c : t.columns) {
        md += " " + c + " |";
        rule += "---:|";
    }
    md += "\n" + rule + "\n";
    for (const auto& s : t.systems) {
        md += "| " + s + " |";
        for (const auto& c : t.columns) md += " " + format_fixed2(t.cells.at(s).at(c)) + " |";
        md += "\n";
    }
    md += "\nconfig " + t.provenance.config_hash + ", seed " + std::to_string(t.provenance.seed) + ", format " +
          t.provenance.format_version + "\n";
    for (const auto& n : t.notes) md += "\n" + n + "\n";
    return md;
}

void emit_report(const ReportTable& t, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_json_file(dir / "report.json", report_to_json(t));
    write_file_atomic(dir / "report.md", report_to_markdown(t));
    write_json_file(dir / "timestamps.json",
                    Json{{"started_at", t.provenance.started_at}, {"finished_at", t.provenance.finished_at}});
}

ReportTable read_report(const std::filesystem::path& dir) {
    ReportTable t;
    try {
        t = report_from_json(read_json_file(dir / "report.json"));
        if (std::filesystem::exists(dir / "timestamps.json")) {
            const Json ts = read_json_file(dir / "timestamps.json");
            t.provenance.started_at = ts.value("started_at", std::string());
            t.provenance.finished_at = ts.value("finished_at", std::string());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(dir.string() + ": malformed report: " + e.what());
    }
    return t;
}

void emit_split_manifest(const CorpusSplit& split, const std::filesystem::path& path) {
    write_json_file(path, split_to_json(split));
}

void emit_learning_curve(const std::vector<LearningCurvePoint>& points, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    Json j;
    j["format_version"] = kFormatVersion;
    Json arr = Json::array();
    std::string md;
    for (const auto& p : points) {
        char label[32];
        std::snprintf(label, sizeof label, "%.0f%%", p.fraction * 100.0);
        Json e;
        e["fraction"] = p.fraction;
        e["train_ids"] = p.train_ids;
        e["report"] = report_to_json(p.table);
        arr.push_back(e);
        if (md.empty()) {
            md = "| Fraction | System |";
            std::string rule = "|---|---|";
            for (const auto& c : p.table.columns) {
                md += " " + c + " |";
                rule += "---:|";
            }
            md += "\n" + rule + "\n";
        }
        for (const auto& s : p.table.systems) {
            md += std::string("| ") + label + " | " + s + " |";
            for (const auto& c : p.table.columns) md += " " + format_fixed2(p.table.cells.at(s).at(c)) + " |";
            md += "\n";
        }
    }
    j["points"] = arr;
    if (!points.empty()) md += "\n" + points.front().table.notes.front() + "\n";
    write_json_file(dir / "learning_curve.json", j);
    write_file_atomic(dir / "learning_curve.md", md);
}

Json cross_category_to_json(const CrossCategoryResult& r) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["provenance"] = {{"config_hash", r.provenance.config_hash}, {"seed", r.provenance.seed}};
    j["system"] = r.system;
    j["metric"] = "R1-F";
    j["categories"] = r.categories;
    j["matrix"] = r.r1_f1;
    j["row_average"] = r.row_average;
    Json splits = Json::object();
    for (const auto& c : r.categories) splits[c] = split_to_json(r.splits.at(c));
    j["splits"] = splits;
    j["notes"] = {kReproducibilityNote};
    return j;
}

std::string cross_category_to_markdown(const CrossCategoryResult& r) {
    std::string md = "| Train \\ Test |";
    std::string rule = "|---|";
    for (const auto& c : r.categories) {
        md += " " + c + " |";
        rule += "---:|";
    }
    md += " Avg |\n" + rule + "---:|\n";
    for (std::size_t i = 0; i < r.categories.size(); ++i) {
        md += "| " + r.categories[i] + " (" + std::to_string(r.splits.at(r.categories[i]).train.size()) + ") |";
        for (double v : r.r1_f1[i]) md += " " + format_fixed2(v) + " |";
        md += " " + format_fixed2(r.row_average[i]) + " |\n";
    }
    md += "\nROUGE-1 F1 of " + r.system + "; row label shows the training-set size.\n\n";
    md += std::string(kReproducibilityNote) + "\n";
    return md;
}

void emit_cross_category(const CrossCategoryResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_json_file(dir / "cross_category.json", cross_category_to_json(r));
    write_file_atomic(dir / "cross_category.md", cross_category_to_markdown(r));
    write_json_file(dir / "timestamps.json",
                    Json{{"started_at", r.provenance.started_at}, {"finished_at", r.provenance.finished_at}});
}

} // namespace cqasum
