#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "cqasum/corpus.hpp"
#include "cqasum/error.hpp"
#include "cqasum/extract.hpp"
#include "cqasum/harness.hpp"
#include "cqasum/io.hpp"
#include "cqasum/metrics.hpp"
#include "cqasum/neural.hpp"
#include "cqasum/pipeline.hpp"
#include "cqasum/rng.hpp"

namespace cqasum::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSummariesOutput = "system_summaries.jsonl";

struct Options {
    std::string corpus, out, input, summaries, config, split, checkpoint, rewrites, judgments, lexicon;
    std::string method, granularity = "qa_pair";
    std::vector<std::string> summary_files, categories;
    std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
    std::uint64_t seed = 0;
    std::size_t k = 8, budget = 0, max_select = 8, min_tokens = 5, max_tokens = 150;
    double threshold = 0.5;
};

void write_jsonl(const fs::path& path, const std::vector<Json>& lines) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, to_jsonl(lines));
}

void write_report_pair(const fs::path& dir, const Json& j, const std::string& md) {
    fs::create_directories(dir);
    write_json_file(dir / "report.json", j);
    write_file_atomic(dir / "report.md", md);
}

UnitGranularity parse_granularity(const std::string& g) {
    return g == "sentence" ? UnitGranularity::Sentence : UnitGranularity::QaPair;
}

std::optional<CorpusSplit> maybe_split(const std::string& path) {
    if (path.empty()) return std::nullopt;
    try {
        return split_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed split manifest: " + e.what());
    }
}

ExperimentConfig load_experiment(const Options& o) {
    const fs::path path(o.config);
    ExperimentConfig cfg = experiment_from_json(read_json_file(path), path.parent_path());
    cfg.seed = o.seed;
    if (!o.corpus.empty()) cfg.corpus_dir = o.corpus;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (cfg.corpus_dir.empty()) throw UsageError("no corpus: set \"corpus\" in the config or pass --corpus");
    if (cfg.output_dir.empty()) throw UsageError("no output directory: set \"output_dir\" in the config or pass --out");
    return cfg;
}

SystemOutputs load_system_summaries(const std::vector<std::string>& files) {
    SystemOutputs outputs;
    for (const auto& f : files) {
        read_jsonl(f, [&](const Json& j, std::size_t line) {
            try {
                const auto system = j.at("system").get<std::string>();
                const auto entity = j.at("entity_id").get<std::string>();
                if (!outputs[system].emplace(entity, j.at("summary").get<std::string>()).second)
                    throw DuplicateIdError(system + "/" + entity, f + ":" + std::to_string(line));
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(f, line, e.what());
            }
        });
    }
    return outputs;
}

Json summary_line(const std::string& entity, const std::string& system, const std::string& summary) {
    Json j;
    j["entity_id"] = entity;
    j["system"] = system;
    j["summary"] = summary;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_ingest(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus_files(o.input, o.summaries);
    save_corpus(c, o.out);
    Json r;
    r["format_version"] = kFormatVersion;
    r["entities"] = c.entities().size();
    r["qa_pairs"] = c.qa_pairs().size();
    r["summaries"] = c.summaries().size();
    write_json_file(fs::path(o.out) / "ingest_report.json", r);
    out << "ingested " << c.entities().size() << " entities, " << c.qa_pairs().size() << " QA pairs, "
        << c.summaries().size() << " summaries\n";
}

void cmd_stats(const Options& o, std::ostream& out) {
    const CorpusStats s = compute_stats(load_corpus(o.corpus));
    write_report_pair(o.out, stats_to_json(s), stats_to_markdown(s));
    out << "wrote " << (fs::path(o.out) / "report.json").string() << "\n";
}

void cmd_filter(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus(o.corpus);
    FilterConfig cfg;
    cfg.min_tokens = o.min_tokens;
    cfg.max_tokens = o.max_tokens;
    if (!o.lexicon.empty()) {
        cfg.pronoun_lexicon.clear();
        std::istringstream in(read_text_file(o.lexicon));
        for (std::string w; in >> w;) cfg.pronoun_lexicon.insert(w);
    }
    cfg.validate();
    const FilterResult r = filter_qa_pairs(c.qa_pairs(), cfg);
    std::vector<Json> audit;
    for (const auto& [qa, reason] : r.rejected) {
        Json j;
        j["qa_id"] = qa.id;
        j["entity_id"] = qa.entity_id;
        j["reason"] = std::string(to_string(reason));
        audit.push_back(j);
    }
    save_corpus(c.with_qa_pairs(r.kept), o.out);
    write_jsonl(fs::path(o.out) / "filter_report.jsonl", audit);
    out << "kept " << r.kept.size() << ", rejected " << r.rejected.size() << "\n";
}

void cmd_sample_seeds(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus(o.corpus);
    std::vector<QAPair> flagged;
    std::vector<Json> report;
    for (const auto& id : c.entity_ids()) {
        const auto qas = c.qas_of(id);
        SeedSelection s;
        try {
            s = sample_seed_qas(qas, o.k, derive_seed(o.seed, "sample-seeds/" + id));
        } catch (const InsufficientUniqueQuestions& e) {
            throw DataError("entity \"" + id + "\": " + e.what());
        }
        const std::set<std::string> chosen(s.seed_qa_ids.begin(), s.seed_qa_ids.end());
        for (auto qa : qas) {
            qa.is_seed = chosen.count(qa.id) > 0;
            flagged.push_back(std::move(qa));
        }
        report.push_back(selection_to_json(s));
    }
    save_corpus(c.with_qa_pairs(std::move(flagged)), o.out);
    write_jsonl(fs::path(o.out) / "selection.jsonl", report);
    out << "selected " << o.k << " seed QA pairs for " << report.size() << " entities\n";
}

void cmd_score_rewrites(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus(o.corpus);
    std::map<std::string, std::vector<Rewrite>> by_qa;
    for (auto& r : load_rewrites(o.rewrites)) by_qa[r.qa_id].push_back(std::move(r));

    std::map<std::string, const QAPair*> qa_index;
    for (const auto& qa : c.qa_pairs()) qa_index[qa.id] = &qa;

    std::vector<Json> best_lines;
    std::map<std::string, std::vector<std::string>> chosen_by_entity;
    for (auto& [qa_id, rewrites] : by_qa) {
        const auto it = qa_index.find(qa_id);
        if (it == qa_index.end()) throw ReferentialIntegrityError(qa_id, o.rewrites);
        const QAPair& qa = *it->second;
        const Entity& entity = *c.find_entity(qa.entity_id);
        std::stable_sort(rewrites.begin(), rewrites.end(),
                         [](const Rewrite& a, const Rewrite& b) { return a.annotator_id < b.annotator_id; });
        std::vector<std::string> texts;
        Json candidates = Json::array();
        for (const auto& r : rewrites) {
            texts.push_back(r.rewrite);
            Json cj = annotation_score_to_json(score_annotation(qa, r.rewrite, entity));
            cj["annotator_id"] = r.annotator_id;
            candidates.push_back(cj);
        }
        const std::size_t best = choose_best_annotation(qa, texts, entity);
        Json j;
        j["qa_id"] = qa_id;
        j["entity_id"] = qa.entity_id;
        j["annotator_id"] = rewrites[best].annotator_id;
        j["rewrite"] = rewrites[best].rewrite;
        j["candidates"] = candidates;
        best_lines.push_back(j);
        chosen_by_entity[qa.entity_id].push_back(rewrites[best].rewrite);
    }
    std::vector<Json> raw_lines;
    for (const auto& [entity, texts] : chosen_by_entity) {
        Json j;
        j["entity_id"] = entity;
        j["raw_summary"] = build_raw_summary(texts);
        raw_lines.push_back(j);
    }
    write_jsonl(fs::path(o.out) / "best_rewrites.jsonl", best_lines);
    write_jsonl(fs::path(o.out) / "raw_summaries.jsonl", raw_lines);
    out << "scored rewrites for " << best_lines.size() << " QA pairs\n";
}

void cmd_enrich(const Options& o, std::ostream& out) {
    if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) throw UsageError("--threshold must lie in [0,1]");
    const Corpus c = load_corpus(o.corpus);
    std::vector<QAPair> kept;
    std::vector<Json> report;
    for (const auto& id : c.entity_ids()) {
        const SeedSelection s = selection_from_flags(c, id);
        if (s.seed_qa_ids.empty()) throw NoSeedLabels(id);
        auto enriched = enrich_inputs(c, s, word_overlap_similarity, o.threshold);
        Json j;
        j["entity_id"] = id;
        j["seed_qa_ids"] = s.seed_qa_ids;
        Json ids = Json::array();
        for (const auto& qa : enriched) ids.push_back(qa.id);
        j["input_qa_ids"] = ids;
        report.push_back(j);
        for (auto& qa : enriched) kept.push_back(std::move(qa));
    }
    save_corpus(c.with_qa_pairs(std::move(kept)), o.out);
    write_jsonl(fs::path(o.out) / "enrich_report.jsonl", report);
    out << "enriched inputs for " << report.size() << " entities\n";
}

void cmd_summarize(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus(o.corpus);
    const auto split = maybe_split(o.split);
    const std::vector<std::string> targets = split ? split->test : c.entity_ids();
    std::size_t budget = o.budget;
    if (o.method == "lexrank" && budget == 0) {
        const std::vector<std::string> train = split ? split->train : c.entity_ids();
        const bool have_refs =
            std::any_of(train.begin(), train.end(), [&](const std::string& id) { return c.summary_of(id); });
        if (!have_refs)
            throw UsageError("lexrank needs a word budget: pass --budget, or supply training reference summaries "
                             "(budget = rounded mean reference-summary length)");
        budget = average_reference_words(c, train);
    }
    std::vector<Json> lines;
    for (const auto& id : targets) {
        const auto qas = c.qas_of(id);
        const std::string s = o.method == "seedqas" ? seedqas_summary(qas)
                                                    : lexrank_summary(qas, budget, parse_granularity(o.granularity));
        lines.push_back(summary_line(id, o.method, s));
    }
    write_jsonl(o.out, lines);
    out << "wrote " << lines.size() << " summaries";
    if (o.method == "lexrank") out << " (budget " << budget << " words)";
    out << "\n";
}

void cmd_oracle_labels(const Options& o, std::ostream& out) {
    if (o.max_select == 0) throw UsageError("--max-select must be at least 1");
    const Corpus c = load_corpus(o.corpus);
    std::vector<Json> lines;
    for (const auto& s : c.summaries()) {
        const auto qas = c.qas_of(s.entity_id);
        std::vector<Tokens> units;
        for (const auto& qa : qas) units.push_back(qa.tokens());
        const OracleLabels labels = greedy_oracle_labels(units, tokenize(s.reference_summary), o.max_select);
        Json ids = Json::array(), gains = Json::array();
        for (std::size_t i : labels.selected) ids.push_back(qas[i].id);
        for (const auto& [unit, value] : labels.gain_trace) gains.push_back(value);
        Json j;
        j["entity_id"] = s.entity_id;
        j["selected_qa_ids"] = ids;
        j["gains"] = gains;
        lines.push_back(j);
    }
    write_jsonl(o.out, lines);
    out << "wrote oracle labels for " << lines.size() << " entities\n";
}

void cmd_train(const Options& o, std::ostream& out) {
    const fs::path cfg_path(o.config);
    const ExperimentConfig cfg = experiment_from_json(read_json_file(cfg_path), cfg_path.parent_path());
    const Corpus c = load_corpus(o.corpus);
    const CorpusSplit split = o.split.empty() ? split_corpus(c, cfg.ratios, derive_seed(o.seed, "split"))
                                              : *maybe_split(o.split);
    neural::Vocab vocab = neural::build_vocab(c.subset(split.train), cfg.vocab_min_freq);
    neural::ModelConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    mc.seed = derive_seed(o.seed, "dedupled-toy");
    const auto train_set = training_examples(c, split.train, vocab, mc);
    const auto val_set = training_examples(c, split.val, vocab, mc);
    if (train_set.empty()) throw DataError("no training entity has a reference summary");
    neural::TrainResult r = neural::train(mc, train_set, val_set, cfg.optimizer);

    const fs::path dir(o.out);
    fs::create_directories(dir);
    neural::save_checkpoint(neural::Checkpoint{mc, vocab, r.params}, dir / "checkpoint.json");
    write_file_atomic(dir / "loss_history.csv", neural::loss_history_csv(r.history));
    emit_split_manifest(split, dir / "split.json");
    out << "trained " << r.history.size() << " epochs; best epoch " << r.best_epoch << "\n";
}

void cmd_generate(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus(o.corpus);
    const neural::Checkpoint ck = neural::load_checkpoint(o.checkpoint);
    const neural::Model model{ck.config, ck.params};
    const auto split = maybe_split(o.split);
    std::vector<Json> lines;
    for (const auto& id : split ? split->test : c.entity_ids()) {
        const auto ex = neural::encode_example(c.qas_of(id), std::nullopt, ck.vocab, ck.config);
        lines.push_back(summary_line(id, "dedupled-toy", neural::generate_text(model, ck.vocab, ex)));
    }
    write_jsonl(o.out, lines);
    out << "wrote " << lines.size() << " summaries\n";
}

void cmd_evaluate(const Options& o, std::ostream& out) {
    const Corpus c = load_corpus(o.corpus);
    const SystemOutputs outputs = load_system_summaries(o.summary_files);
    if (outputs.empty()) throw DataError("no system summaries in the given files");
    const auto split = maybe_split(o.split);
    References refs;
    for (const auto& id : split ? split->test : c.entity_ids())
        if (const SummaryRecord* s = c.summary_of(id)) refs[id] = s->reference_summary;
    if (refs.empty()) throw DataError("corpus has no reference summaries to evaluate against");
    const EvaluationTable t = evaluate_corpus(outputs, refs);
    write_report_pair(o.out, evaluation_to_json(t), evaluation_to_markdown(t));
    out << "evaluated " << outputs.size() << " systems on " << refs.size() << " entities\n";
}

void cmd_bws(const Options& o, std::ostream& out) {
    const BwsReport r = bws_scores(load_judgments(o.judgments));
    write_report_pair(o.out, bws_to_json(r), bws_to_markdown(r));
    out << bws_to_markdown(r);
}

void cmd_experiment(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = load_experiment(o);
    const ExperimentRun run = run_experiment(cfg);
    emit_report(run.table, cfg.output_dir);
    emit_split_manifest(run.split, cfg.output_dir / "split.json");
    write_json_file(cfg.output_dir / "config.json", experiment_to_json(cfg));
    std::vector<Json> lines;
    for (const auto& [system, per_entity] : run.outputs)
        for (const auto& [entity, summary] : per_entity) lines.push_back(summary_line(entity, system, summary));
    write_jsonl(cfg.output_dir / kSummariesOutput, lines);
    out << report_to_markdown(run.table);
}

void cmd_learning_curve(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = load_experiment(o);
    const auto points = learning_curve(load_corpus(cfg.corpus_dir), cfg, o.fractions);
    emit_learning_curve(points, cfg.output_dir);
    emit_split_manifest(split_corpus(load_corpus(cfg.corpus_dir), cfg.ratios, derive_seed(cfg.seed, "split")),
                        cfg.output_dir / "split.json");
    out << "wrote " << points.size() << " learning-curve points\n";
}

void cmd_cross_category(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = load_experiment(o);
    const Corpus c = load_corpus(cfg.corpus_dir);
    std::vector<std::string> cats = o.categories;
    if (cats.empty()) {
        std::set<std::string> all;
        for (const auto& e : c.entities()) all.insert(e.category);
        cats.assign(all.begin(), all.end());
    }
    const CrossCategoryResult r = cross_category(c, cfg, cats);
    emit_cross_category(r, cfg.output_dir);
    out << cross_category_to_markdown(r);
}

// ---------------------------------------------------------------------------
// Command-line definition

using Handler = void (*)(const Options&, std::ostream&);

struct Command {
    CLI::App* app;
    Handler handler;
};

std::vector<Command> define(CLI::App& app, Options& o) {
    app.description("Community-QA summarization toolkit: corpus tooling, extractive and toy neural "
                    "summarizers, and an evaluation harness. Exit codes: 0 success, 1 usage error, "
                    "2 data error, 3 training failure or nonconvergence.");
    app.set_version_flag("--version", std::string(kFormatVersion), "Print the file format version and exit");
    app.require_subcommand(1);
    std::vector<Command> cmds;

    auto corpus = [&](CLI::App* s) { s->add_option("--corpus", o.corpus, "Corpus directory (qa_pairs.jsonl, summaries.jsonl)")->required(); };
    auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "Master random seed")->required(); };
    auto split = [&](CLI::App* s, const char* what) { s->add_option("--split", o.split, what); };

    auto* ingest = app.add_subcommand("ingest", "Validate raw JSONL files and write a canonical corpus directory");
    ingest->add_option("--qa-pairs", o.input, "QA pairs JSONL file")->required();
    ingest->add_option("--summaries", o.summaries, "Summaries JSONL file");
    ingest->add_option("--out", o.out, "Output corpus directory")->required();
    cmds.push_back({ingest, cmd_ingest});

    auto* stats = app.add_subcommand("stats", "Corpus statistics (report.json, report.md)");
    corpus(stats);
    stats->add_option("--out", o.out, "Output directory")->required();
    cmds.push_back({stats, cmd_stats});

    auto* filter = app.add_subcommand("filter", "Drop QA pairs by length and first-person pronouns");
    corpus(filter);
    filter->add_option("--out", o.out, "Output corpus directory (plus filter_report.jsonl)")->required();
    filter->add_option("--min-tokens", o.min_tokens, "Minimum question+answer tokens")->capture_default_str();
    filter->add_option("--max-tokens", o.max_tokens, "Maximum question+answer tokens")->capture_default_str();
    filter->add_option("--pronoun-lexicon", o.lexicon, "Whitespace-separated pronoun list replacing the default");
    cmds.push_back({filter, cmd_filter});

    auto* sample = app.add_subcommand("sample-seeds", "Sample k seed QA pairs with distinct questions per entity");
    corpus(sample);
    sample->add_option("--out", o.out, "Output corpus directory (plus selection.jsonl)")->required();
    sample->add_option("--k", o.k, "Seed QA pairs per entity")->capture_default_str();
    seed(sample);
    cmds.push_back({sample, cmd_sample_seeds});

    auto* score = app.add_subcommand("score-rewrites", "Pick the best crowd rewrite per QA pair");
    corpus(score);
    score->add_option("--rewrites", o.rewrites, "rewrites.jsonl (qa_id, annotator_id, rewrite)")->required();
    score->add_option("--out", o.out, "Output directory (best_rewrites.jsonl, raw_summaries.jsonl)")->required();
    cmds.push_back({score, cmd_score_rewrites});

    auto* enrich = app.add_subcommand("enrich", "Add all answers of seed and similar questions as model input");
    corpus(enrich);
    enrich->add_option("--out", o.out, "Output corpus directory (plus enrich_report.jsonl)")->required();
    enrich->add_option("--threshold", o.threshold, "Word-overlap similarity threshold")->capture_default_str();
    cmds.push_back({enrich, cmd_enrich});

    auto* summarize = app.add_subcommand("summarize", "Extractive summaries (system_summaries.jsonl)");
    corpus(summarize);
    summarize->add_option("--method", o.method, "seedqas or lexrank")->required()->check(
        CLI::IsMember({"seedqas", "lexrank"}));
    summarize->add_option("--out", o.out, "Output JSONL file")->required();
    summarize->add_option("--budget", o.budget,
                          "LexRank word budget; default: rounded mean reference length of the training entities");
    summarize->add_option("--granularity", o.granularity, "LexRank unit: qa_pair or sentence")
        ->check(CLI::IsMember({"qa_pair", "sentence"}))
        ->capture_default_str();
    split(summarize, "Split manifest: summarize test entities, budget from training entities");
    cmds.push_back({summarize, cmd_summarize});

    auto* oracle = app.add_subcommand("oracle-labels", "Greedy ROUGE oracle over QA pairs (labels.jsonl)");
    corpus(oracle);
    oracle->add_option("--out", o.out, "Output JSONL file")->required();
    oracle->add_option("--max-select", o.max_select, "Maximum selected QA pairs")->capture_default_str();
    cmds.push_back({oracle, cmd_oracle_labels});

    auto* train = app.add_subcommand("train", "Train the toy DedupLED model (checkpoint.json, loss_history.csv)");
    corpus(train);
    train->add_option("--config", o.config, "Experiment JSON (model, optimizer, split, vocab_min_freq)")->required();
    train->add_option("--out", o.out, "Output directory")->required();
    split(train, "Split manifest; default: split the corpus with the seed");
    seed(train);
    cmds.push_back({train, cmd_train});

    auto* generate = app.add_subcommand("generate", "Greedy decoding with a trained checkpoint");
    corpus(generate);
    generate->add_option("--checkpoint", o.checkpoint, "checkpoint.json from train")->required();
    generate->add_option("--out", o.out, "Output JSONL file")->required();
    split(generate, "Split manifest: generate for its test entities only");
    cmds.push_back({generate, cmd_generate});

    auto* evaluate = app.add_subcommand("evaluate", "ROUGE-1/2/L against reference summaries");
    corpus(evaluate);
    evaluate->add_option("--summaries", o.summary_files, "System summaries JSONL (repeatable)")->required();
    evaluate->add_option("--out", o.out, "Output directory (report.json, report.md)")->required();
    split(evaluate, "Split manifest: evaluate on its test entities only");
    cmds.push_back({evaluate, cmd_evaluate});

    auto* bws = app.add_subcommand("bws", "Best-Worst Scaling scores from judgments.jsonl");
    bws->add_option("--judgments", o.judgments, "judgments.jsonl")->required();
    bws->add_option("--out", o.out, "Output directory (report.json, report.md)")->required();
    cmds.push_back({bws, cmd_bws});

    auto experiment_opts = [&](CLI::App* s) {
        s->add_option("--config", o.config, "experiment.json")->required();
        s->add_option("--corpus", o.corpus, "Corpus directory overriding the config");
        s->add_option("--out", o.out, "Output directory overriding the config");
        seed(s);
    };
    auto* experiment = app.add_subcommand("experiment", "Train and score every configured system on one split");
    experiment_opts(experiment);
    cmds.push_back({experiment, cmd_experiment});

    auto* curve = app.add_subcommand("learning-curve", "Scores for nested fractions of the training split");
    experiment_opts(curve);
    curve->add_option("--fractions", o.fractions, "Ascending training fractions in (0,1]")->delimiter(',')
        ->capture_default_str();
    cmds.push_back({curve, cmd_learning_curve});

    auto* cross = app.add_subcommand("cross-category", "Train on one category, test on every category");
    experiment_opts(cross);
    cross->add_option("--categories", o.categories, "Comma-separated categories; default: all")->delimiter(',');
    cmds.push_back({cross, cmd_cross_category});

    return cmds;
}

} // namespace

std::string full_help() {
    CLI::App app("", "cqasum");
    Options o;
    define(app, o);
    return app.help("", CLI::AppFormatMode::All);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("", "cqasum");
    Options o;
    const auto cmds = define(app, o);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help("", CLI::AppFormatMode::All) : app.help());
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kFormatVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << " (run with --help for usage)\n";
        return kUsage;
    }

    try {
        for (const auto& c : cmds)
            if (c.app->parsed()) c.handler(o, out);
        return kOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << " (run with --help for usage)\n";
        return kUsage;
    } catch (const TrainingFailure& e) {
        err << "error: " << e.what() << "\n";
        return kTraining;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
}

} // namespace cqasum::cli
