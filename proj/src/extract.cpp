#include "cqasum/extract.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cqasum/metrics.hpp"

namespace cqasum {

std::string seedqas_summary(const std::vector<QAPair>& entity_qas) {
    std::vector<QAPair> seeds;
    for (const auto& qa : entity_qas)
        if (qa.is_seed.value_or(false)) seeds.push_back(qa);
    if (seeds.empty()) throw NoSeedLabels(entity_qas.empty() ? std::string() : entity_qas.front().entity_id);
    std::sort(seeds.begin(), seeds.end(), [](const QAPair& a, const QAPair& b) { return a.id < b.id; });
    std::string out;
    for (const auto& qa : seeds) {
        if (!out.empty()) out.push_back(' ');
        out += qa.question + " " + qa.answer;
    }
    return out;
}

// ---------------------------------------------------------------------------

IdfTable build_idf(const std::vector<Tokens>& units) {
    std::map<Token, std::size_t> df;
    for (const auto& u : units)
        for (const auto& t : std::set<Token>(u.begin(), u.end())) ++df[t];
    const double n = static_cast<double>(units.size());
    IdfTable idf;
    for (const auto& [t, count] : df) idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
    return idf;
}

namespace {

std::map<Token, double> term_freq(const Tokens& u) {
    std::map<Token, double> tf;
    for (const auto& t : u) tf[t] += 1.0;
    return tf;
}

double idf_of(const IdfTable& idf, const Token& t) {
    auto it = idf.find(t);
    return it == idf.end() ? 0.0 : it->second;
}

double weighted_norm(const std::map<Token, double>& tf, const IdfTable& idf) {
    double s = 0;
    for (const auto& [t, f] : tf) {
        const double w = f * idf_of(idf, t);
        s += w * w;
    }
    return std::sqrt(s);
}

} // namespace

double idf_cosine(const Tokens& u, const Tokens& v, const IdfTable& idf) {
    const auto tu = term_freq(u);
    const auto tv = term_freq(v);
    const double nu = weighted_norm(tu, idf);
    const double nv = weighted_norm(tv, idf);
    if (nu == 0.0 || nv == 0.0) return 0.0;
    double dot = 0;
    for (const auto& [t, f] : tu) {
        auto it = tv.find(t);
        if (it == tv.end()) continue;
        const double w = idf_of(idf, t);
        dot += f * it->second * w * w;
    }
    return std::clamp(dot / (nu * nv), 0.0, 1.0);
}

SentenceGraph build_sentence_graph(std::vector<Tokens> units) {
    SentenceGraph g;
    g.idf = build_idf(units);
    const auto n = static_cast<Eigen::Index>(units.size());
    g.sim = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g.sim(i, i) = units[static_cast<std::size_t>(i)].empty() ? 0.0 : 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double s = idf_cosine(units[static_cast<std::size_t>(i)], units[static_cast<std::size_t>(j)], g.idf);
            g.sim(i, j) = s;
            g.sim(j, i) = s;
        }
    }
    g.units = std::move(units);
    return g;
}

Eigen::VectorXd power_iteration(const Eigen::MatrixXd& transition, const PowerIterationOptions& opts,
                                std::optional<Eigen::VectorXd> initial) {
    const Eigen::Index n = transition.rows();
    if (n == 0 || transition.cols() != n) throw UsageError("power_iteration: matrix must be square and non-empty");
    if (!(opts.teleport >= 0.0 && opts.teleport < 1.0)) throw UsageError("power_iteration: teleport must be in [0,1)");

    Eigen::MatrixXd m = transition;
    const double uniform = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = m.row(i).sum();
        if (s == 0.0) {
            m.row(i).setConstant(uniform);
        } else if (std::abs(s - 1.0) > 1e-9 || m.row(i).minCoeff() < 0.0) {
            throw UsageError("power_iteration: row " + std::to_string(i) + " is not stochastic");
        }
    }

    Eigen::VectorXd p = initial ? *initial : Eigen::VectorXd::Constant(n, uniform);
    if (p.size() != n || p.minCoeff() < 0.0 || p.sum() <= 0.0)
        throw UsageError("power_iteration: initial vector must be a non-negative vector of matching size");
    p /= p.sum();

    const Eigen::MatrixXd mt = m.transpose();
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        Eigen::VectorXd next = (1.0 - opts.teleport) * (mt * p);
        next.array() += opts.teleport * uniform;
        next /= next.sum();
        const double change = (next - p).lpNorm<1>();
        p = std::move(next);
        if (change < opts.tol) return p;
    }
    throw NonConvergence(p, opts.max_iter);
}

RankResult lexrank(const std::vector<Tokens>& units, const LexRankConfig& cfg) {
    if (cfg.budget_words < 1) throw UsageError("lexrank: budget_words must be >= 1");
    if (std::none_of(units.begin(), units.end(), [](const Tokens& u) { return !u.empty(); }))
        throw UsageError("lexrank: need at least one non-empty unit");

    const SentenceGraph g = build_sentence_graph(units);
    Eigen::MatrixXd m = g.sim;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double s = m.row(i).sum();
        if (s > 0.0) m.row(i) /= s;
    }

    RankResult r;
    r.budget_words = cfg.budget_words;
    r.scores = power_iteration(m, cfg.power);

    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return r.scores(static_cast<Eigen::Index>(a)) > r.scores(static_cast<Eigen::Index>(b));
    });

    std::size_t words = 0;
    for (std::size_t idx : order) {
        const std::size_t len = units[idx].size();
        if (!r.selected.empty() && words + len > cfg.budget_words) break;
        r.selected.push_back(idx);
        words += len;
    }
    return r;
}

std::vector<std::string> extraction_units(const std::vector<QAPair>& entity_qas, UnitGranularity g) {
    std::vector<std::string> out;
    for (const auto& qa : entity_qas) {
        const std::string text = qa.question + " " + qa.answer;
        if (g == UnitGranularity::QaPair) {
            out.push_back(text);
            continue;
        }
        // Sentence granularity: cut the token stream after terminal punctuation.
        Tokens sentence;
        for (auto& t : tokenize(text)) {
            sentence.push_back(t);
            if (t == "." || t == "?" || t == "!") {
                out.push_back(join(sentence));
                sentence.clear();
            }
        }
        if (!sentence.empty()) out.push_back(join(sentence));
    }
    return out;
}

std::string lexrank_summary(const std::vector<QAPair>& entity_qas, std::size_t budget_words, UnitGranularity g,
                            const PowerIterationOptions& power) {
    const std::vector<std::string> texts = extraction_units(entity_qas, g);
    std::vector<Tokens> units;
    units.reserve(texts.size());
    for (const auto& t : texts) units.push_back(tokenize(t));
    const RankResult r = lexrank(units, LexRankConfig{power, budget_words});
    std::string out;
    for (std::size_t idx : r.selected) {
        if (!out.empty()) out.push_back(' ');
        out += texts[idx];
    }
    return out;
}

// ---------------------------------------------------------------------------

double rouge12_f1_sum(const Tokens& candidate, const Tokens& gold) {
    return rouge_n(candidate, gold, 1).f1 + rouge_n(candidate, gold, 2).f1;
}

OracleLabels greedy_oracle_labels(const std::vector<Tokens>& units, const Tokens& gold, std::size_t max_select,
                                  const OracleMetric& metric) {
    if (units.empty()) throw UsageError("greedy_oracle_labels: no units");
    if (max_select < 1) throw UsageError("greedy_oracle_labels: max_select must be >= 1");

    OracleLabels out;
    std::vector<bool> used(units.size(), false);
    Tokens current;
    double current_score = metric(current, gold);
    while (out.selected.size() < max_select) {
        std::optional<std::size_t> best;
        double best_score = current_score;
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (used[i]) continue;
            Tokens trial = current;
            trial.insert(trial.end(), units[i].begin(), units[i].end());
            const double s = metric(trial, gold);
            if (s > best_score) {
                best = i;
                best_score = s;
            }
        }
        if (!best) break;
        used[*best] = true;
        current.insert(current.end(), units[*best].begin(), units[*best].end());
        current_score = best_score;
        out.selected.push_back(*best);
        out.gain_trace.emplace_back(*best, best_score);
    }
    return out;
}

} // namespace cqasum
