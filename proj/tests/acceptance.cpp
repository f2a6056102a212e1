// Acceptance checks: one PASS/FAIL line per criterion. Each oracle below is an
// independent re-implementation and does not call the code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "cqasum/error.hpp"
#include "cqasum/corpus.hpp"
#include "cqasum/extract.hpp"
#include "cqasum/harness.hpp"
#include "cqasum/io.hpp"
#include "cqasum/metrics.hpp"
#include "cqasum/neural.hpp"
#include "cqasum/rng.hpp"
#include "synthetic.hpp"

using namespace cqasum;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.ok && secs >= limit_s) {
        o.ok = false;
        o.detail = "runtime limit exceeded";
    }
    if (!o.ok) ++failures;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs / %.0fs", secs, limit_s);
    std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " (" << timing << ")";
    if (!o.detail.empty()) std::cout << " - " << o.detail;
    std::cout << std::endl;
}

// ---------------------------------------------------------------------------
// Brute-force oracles

/// Clipped n-gram overlap by linear scans over explicit windows.
struct Counts {
    double overlap = 0, cand = 0, ref = 0;
};

Counts brute_ngram(const Tokens& c, const Tokens& r, std::size_t n) {
    auto windows = [n](const Tokens& t) {
        std::vector<Tokens> w;
        for (std::size_t i = 0; i + n <= t.size(); ++i) w.emplace_back(t.begin() + i, t.begin() + i + n);
        return w;
    };
    const auto cw = windows(c);
    auto rw = windows(r);
    Counts k;
    k.cand = static_cast<double>(cw.size());
    k.ref = static_cast<double>(rw.size());
    std::vector<bool> used(rw.size(), false);
    for (const auto& g : cw)
        for (std::size_t j = 0; j < rw.size(); ++j)
            if (!used[j] && rw[j] == g) {
                used[j] = true;
                k.overlap += 1;
                break;
            }
    return k;
}

double f1_of(const Counts& k) {
    const double p = k.cand > 0 ? k.overlap / k.cand : 0.0;
    const double r = k.ref > 0 ? k.overlap / k.ref : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

bool is_subsequence(const Tokens& s, const Tokens& t) {
    std::size_t i = 0;
    for (const auto& x : t)
        if (i < s.size() && s[i] == x) ++i;
    return i == s.size();
}

std::size_t brute_lcs(const Tokens& a, const Tokens& b) {
    std::size_t best = 0;
    for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
        Tokens s;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (mask & (1u << i)) s.push_back(a[i]);
        if (s.size() > best && is_subsequence(s, b)) best = s.size();
    }
    return best;
}

Tokens random_tokens(SplitMix64& rng, std::size_t vocab, std::size_t max_len, std::size_t min_len = 0) {
    const std::size_t len = min_len + rng.uniform(max_len - min_len + 1);
    Tokens t;
    for (std::size_t i = 0; i < len; ++i) t.push_back(std::string(1, static_cast<char>('a' + rng.uniform(vocab))));
    return t;
}

double oracle_metric(const Tokens& c, const Tokens& g) { return f1_of(brute_ngram(c, g, 1)) + f1_of(brute_ngram(c, g, 2)); }

// ---------------------------------------------------------------------------
// Criteria

Outcome arithmetic() {
    Outcome o;
    std::vector<std::string> ids;
    for (int i = 0; i < 1440; ++i) ids.push_back("entity" + std::to_string(i));
    const auto s = split_ids(ids, {0.8, 0.1, 0.1}, 2024);
    o.require(s.train.size() == 1152 && s.val.size() == 144 && s.test.size() == 144, "split sizes differ");

    // Five entities totalling 5278 input and 574 reference words: means 1055.6 and 114.8.
    const std::vector<std::size_t> inputs = {1055, 1056, 1055, 1056, 1056};
    const std::vector<std::size_t> refs = {115, 115, 115, 115, 114};
    std::vector<Entity> es;
    std::vector<QAPair> qas;
    std::vector<SummaryRecord> sums;
    for (std::size_t e = 0; e < 5; ++e) {
        const std::string id = "e" + std::to_string(e);
        es.push_back({id, id, "all"});
        std::string answer;
        for (std::size_t i = 1; i < inputs[e]; ++i) answer += "word ";
        qas.push_back({id + "-a", id, id + "-q", "question", answer, std::nullopt});
        std::string ref;
        for (std::size_t i = 0; i < refs[e]; ++i) ref += "summary ";
        sums.push_back({id, std::nullopt, ref});
    }
    const auto st = compute_stats(Corpus::build(es, qas, sums));
    o.require(std::abs(st.overall.avg_input_words - 1055.6) < 1e-9, "average input is not 1055.6");
    o.require(st.overall.avg_ref_summary_words && std::abs(*st.overall.avg_ref_summary_words - 114.8) < 1e-9,
              "average reference is not 114.8");
    o.require(st.overall.compression_ratio_pct && std::abs(*st.overall.compression_ratio_pct - 10.88) <= 0.01,
              "compression ratio outside 10.88 +- 0.01");
    return o;
}

Outcome rouge_equivalence() {
    Outcome o;
    SplitMix64 rng(101);
    for (int t = 0; t < 200; ++t) {
        const Tokens c = random_tokens(rng, 1 + rng.uniform(5), 12);
        const Tokens r = random_tokens(rng, 5, 12);
        for (std::size_t n : {1u, 2u}) {
            const Counts k = brute_ngram(c, r, n);
            const RougeScore s = rouge_n(c, r, n);
            const double p = k.cand > 0 ? k.overlap / k.cand : 0.0;
            const double rc = k.ref > 0 ? k.overlap / k.ref : 0.0;
            o.require(s.precision == p && s.recall == rc, "rouge precision/recall mismatch");
            o.require(std::abs(s.f1 - f1_of(k)) <= 1e-15, "rouge f1 mismatch");
        }
    }
    for (int t = 0; t < 200; ++t) {
        const Tokens a = random_tokens(rng, 1 + rng.uniform(5), 10);
        const Tokens b = random_tokens(rng, 1 + rng.uniform(5), 10);
        o.require(lcs_length(a, b) == brute_lcs(a, b), "lcs mismatch");
    }
    return o;
}

Outcome lexrank_properties() {
    Outcome o;
    LexRankConfig cfg;
    cfg.budget_words = 1000;
    // Symmetric instances: identical units, and rings where unit i shares one word with each neighbour.
    for (std::size_t n = 2; n <= 12; ++n) {
        std::vector<Tokens> same(n, Tokens{"x", "y", "z"});
        std::vector<Tokens> ring;
        for (std::size_t i = 0; i < n; ++i) ring.push_back({"w" + std::to_string(i), "w" + std::to_string((i + 1) % n)});
        for (const auto* units : {&same, &ring}) {
            const auto r = lexrank(*units, cfg);
            for (Eigen::Index i = 0; i < r.scores.size(); ++i)
                o.require(std::abs(r.scores(i) - 1.0 / static_cast<double>(n)) <= 1e-8, "non-uniform centrality");
        }
    }
    SplitMix64 rng(77);
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<Eigen::Index>(1 + rng.uniform(20));
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.unit();
            m.row(i) /= m.row(i).sum();
        }
        const Eigen::VectorXd p = power_iteration(m);  // throws NonConvergence otherwise
        // Stationarity of the damped chain.
        const Eigen::VectorXd next = 0.85 * m.transpose() * p + Eigen::VectorXd::Constant(n, 0.15 / static_cast<double>(n));
        o.require((next - p).cwiseAbs().sum() <= 1e-9, "not a fixed point");
        o.require(std::abs(p.sum() - 1.0) <= 1e-9, "not a distribution");
    }
    Eigen::MatrixXd swap(2, 2);
    swap << 0, 1, 1, 0;
    const auto p = power_iteration(swap);
    o.require(std::abs(p(0) - 0.5) <= 1e-9 && std::abs(p(1) - 0.5) <= 1e-9, "2-state example is not (0.5, 0.5)");
    return o;
}

Outcome greedy_oracle() {
    Outcome o;
    SplitMix64 rng(55);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.uniform(6);
        std::vector<Tokens> units;
        for (std::size_t i = 0; i < n; ++i) units.push_back(random_tokens(rng, 6, 5, 1));
        const Tokens gold = random_tokens(rng, 6, 8, 1);
        const std::size_t max_select = 1 + rng.uniform(n);

        // Reference greedy.
        std::vector<std::size_t> chosen;
        std::vector<double> trace;
        double current = 0.0;
        while (chosen.size() < max_select) {
            std::size_t best_unit = n;
            double best = current;
            for (std::size_t u = 0; u < n; ++u) {
                if (std::find(chosen.begin(), chosen.end(), u) != chosen.end()) continue;
                Tokens cand;
                for (std::size_t c : chosen) cand.insert(cand.end(), units[c].begin(), units[c].end());
                cand.insert(cand.end(), units[u].begin(), units[u].end());
                const double v = oracle_metric(cand, gold);
                if (v > best) {
                    best = v;
                    best_unit = u;
                }
            }
            if (best_unit == n) break;
            chosen.push_back(best_unit);
            trace.push_back(best);
            current = best;
        }

        const auto labels = greedy_oracle_labels(units, gold, max_select);
        o.require(labels.selected == chosen, "selection differs from the reference greedy");
        for (std::size_t i = 1; i < labels.gain_trace.size(); ++i)
            o.require(labels.gain_trace[i].second > labels.gain_trace[i - 1].second, "gain trace not increasing");
        const double final_metric = labels.gain_trace.empty() ? 0.0 : labels.gain_trace.back().second;
        for (const auto& u : units)
            o.require(final_metric + 1e-12 >= oracle_metric(u, gold), "final metric below a single unit");
    }
    return o;
}

Outcome gradient_check() {
    Outcome o;
    neural::ModelConfig c;
    c.vocab_size = 20;
    c.d_model = 8;
    c.n_heads = 1;
    c.d_ff = 16;
    c.n_enc_layers = 1;
    c.n_dec_layers = 1;
    c.window = 3;
    c.seed = 17;
    neural::TokenizedExample ex;
    ex.input_ids = {7, 8, 9, 3, 10, 11, 3, 12, 13, 3, 14, 3, 15, 16, 3};
    ex.qa_boundaries = {6, 11, 14};
    ex.seed_labels = {1, 0, 1};
    ex.target_ids = {1, 7, 12, 17, 18, 2};
    std::ostringstream detail;
    for (double lambda : {0.0, 0.5, 1.0}) {
        c.lambda_cls = lambda;
        const neural::Model m{c, neural::init_parameters(c)};
        const auto r = neural::grad_check(m, ex);
        detail << "lambda " << lambda << ": " << r.max_relative_error << " over " << r.coordinates << "; ";
        o.require(r.coordinates >= 200, "fewer than 200 coordinates");
        o.require(r.group_coordinates.count("classifier") && r.group_coordinates.at("classifier") >= 2,
                  "classifier not sampled");
        o.require(r.max_relative_error < 1e-4, "relative error too large");
        if (lambda == 0.0) o.require(r.classifier_grad_abs_max == 0.0, "classifier gradient nonzero at lambda 0");
    }
    if (o.ok) o.detail = detail.str();
    return o;
}

Outcome multitask() {
    Outcome o;
    const Corpus c = testing::marker_corpus(20, 11);
    const neural::Vocab v = neural::build_vocab(c);
    neural::ModelConfig cfg;
    cfg.vocab_size = v.size();
    cfg.max_src_len = 128;
    cfg.max_tgt_len = 24;
    cfg.lambda_cls = 1.0;
    cfg.seed = 5;
    std::vector<neural::TokenizedExample> all;
    for (const auto& id : c.entity_ids())
        all.push_back(neural::encode_example(c.qas_of(id), c.summary_of(id)->reference_summary, v, cfg));

    neural::OptimizerSettings opt;
    opt.batch_size = 4;
    opt.epochs = 1000;
    opt.max_steps = 500;
    const auto r = neural::train(cfg, all, {}, opt);
    const neural::Model m{cfg, r.params};
    std::size_t correct = 0, total = 0;
    for (const auto& ex : all) {
        const auto hidden = neural::encoder_forward(m, ex.input_ids, ex.qa_boundaries).hidden;
        const auto probs = neural::classifier_forward(hidden, ex.qa_boundaries, m.params);
        for (std::size_t i = 0; i < probs.size(); ++i, ++total) correct += (probs[i] >= 0.5) == (ex.seed_labels[i] == 1);
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    o.require(r.history.back().steps <= 500, "more than 500 steps");
    o.require(acc >= 0.95, "classifier accuracy below 0.95");

    const std::vector<neural::TokenizedExample> ten(all.begin(), all.begin() + 10);
    neural::OptimizerSettings fit;
    fit.batch_size = 10;
    fit.epochs = 400;
    const auto f = neural::train(cfg, ten, {}, fit);
    const neural::Model fm{cfg, f.params};
    double r1 = 0.0;
    for (const auto& ex : ten)
        r1 += rouge_n(tokenize(neural::generate_text(fm, v, ex)), tokenize(c.summary_of(ex.entity_id)->reference_summary), 1).f1;
    r1 /= 10.0;
    o.require(r1 >= 0.90, "training ROUGE-1 F1 below 0.90");
    char buf[128];
    std::snprintf(buf, sizeof buf, "accuracy %.3f, train R1-F1 %.3f", acc, r1);
    o.detail = o.ok ? buf : o.detail + " (" + buf + ")";
    return o;
}

Outcome bws() {
    Outcome o;
    auto make = [](std::size_t best, std::size_t worst, std::size_t total) {
        std::vector<Judgment> v;
        for (std::size_t i = 0; i < total; ++i)
            for (Criterion c : {Criterion::Informativeness, Criterion::Coherence, Criterion::Conciseness}) {
                Judgment j;
                j.entity_id = "e" + std::to_string(i);
                j.criterion = c;
                j.best_system = i < best ? "A" : (i % 2 ? "B" : "C");
                j.worst_system = i < best ? "B" : i < best + worst ? "A" : (i % 2 ? "C" : "B");
                v.push_back(j);
            }
        return v;
    };
    auto check = [&](const std::vector<Judgment>& js, double expected) {
        const auto r = bws_scores(js);
        for (Criterion c : {Criterion::Informativeness, Criterion::Coherence, Criterion::Conciseness}) {
            o.require(r.at("A", c).score == expected, "unexpected score for A");
            // Independent count.
            double best = 0, worst = 0, n = 0, sum = 0;
            for (const auto& j : js)
                if (j.criterion == c) {
                    n += 1;
                    best += j.best_system == "A";
                    worst += j.worst_system == "A";
                }
            o.require(r.at("A", c).score == 100.0 * (best - worst) / n, "formula mismatch");
            for (const auto& s : r.systems()) sum += r.at(s, c).score;
            o.require(std::abs(sum) <= 1e-9, "scores do not sum to zero");
        }
    };
    check(make(4, 0, 4), 100.0);
    check(make(3, 3, 8), 0.0);
    check(make(3, 1, 10), 20.0);
    return o;
}

Outcome recall_heavy_baseline() {
    Outcome o;
    ExperimentConfig cfg;
    cfg.systems = {"seedqas"};
    cfg.seed = 12;
    const auto run = run_experiment(testing::marker_corpus(30, 13, 3, 12), cfg);
    const auto& row = run.table.cells.at("seedqas");
    o.require(row.at("R1-R") > row.at("R1-P"), "seedqas recall is not above precision");
    const fs::path dir = fs::temp_directory_path() / "cqasum_accept_shape";
    fs::remove_all(dir);
    emit_report(run.table, dir);
    o.require(read_text_file(dir / "report.md").find("not reproducible") != std::string::npos,
              "footer missing from report");
    char buf[96];
    std::snprintf(buf, sizeof buf, "R1 precision %.2f, recall %.2f", row.at("R1-P"), row.at("R1-R"));
    if (o.ok) o.detail = buf;
    return o;
}

Outcome end_to_end() {
    Outcome o;
    const fs::path fixtures = CQASUM_FIXTURES;
    const fs::path root = fs::temp_directory_path() / "cqasum_accept_e2e";
    fs::remove_all(root);
    auto pipeline = [&](const std::string& run) {
        const fs::path d = root / run;
        const std::vector<std::vector<std::string>> steps = {
            {"ingest", "--qa-pairs", (fixtures / "corpus" / "qa_pairs.jsonl").string(), "--summaries",
             (fixtures / "corpus" / "summaries.jsonl").string(), "--out", (d / "ingested").string()},
            {"filter", "--corpus", (d / "ingested").string(), "--out", (d / "filtered").string()},
            {"sample-seeds", "--corpus", (d / "filtered").string(), "--seed", "2024", "--out", (d / "seeded").string()},
            {"summarize", "--corpus", (d / "seeded").string(), "--method", "lexrank", "--out",
             (d / "lexrank.jsonl").string()},
            {"evaluate", "--corpus", (d / "seeded").string(), "--summaries", (d / "lexrank.jsonl").string(), "--out",
             (d / "eval").string()},
        };
        for (const auto& args : steps) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            o.require(code == 0, args.front() + " failed: " + err.str());
        }
        return d;
    };
    const fs::path a = pipeline("a");
    const fs::path b = pipeline("b");
    if (!o.ok) return o;
    for (const char* f : {"ingested/qa_pairs.jsonl", "filtered/filter_report.jsonl", "seeded/selection.jsonl",
                          "seeded/qa_pairs.jsonl", "lexrank.jsonl", "eval/report.json", "eval/report.md"})
        o.require(read_text_file(a / f) == read_text_file(b / f), std::string(f) + " differs between runs");
    return o;
}

} // namespace

int main() {
    criterion(1, "split 1440 -> 1152/144/144 and compression ratio 10.88%", 1, arithmetic);
    criterion(2, "ROUGE-1/2 and LCS match brute-force oracles", 30, rouge_equivalence);
    criterion(3, "LexRank symmetry, convergence and 2-state example", 10, lexrank_properties);
    criterion(4, "greedy oracle matches a reference greedy", 30, greedy_oracle);
    criterion(5, "gradient check for lambda in {0, 0.5, 1}", 120, gradient_check);
    criterion(6, "seed classifier accuracy and overfit ROUGE-1 on marker corpus", 300, multitask);
    criterion(7, "Best-Worst Scaling arithmetic", 1, bws);
    criterion(8, "concatenated seed QAs are recall-heavy; footer present", 60, recall_heavy_baseline);
    criterion(9, "CLI pipeline is byte-identical across runs", 10, end_to_end);
    std::cout << (failures ? "FAILED " : "ALL PASSED ") << 9 - failures << "/9" << std::endl;
    return failures ? 1 : 0;
}
