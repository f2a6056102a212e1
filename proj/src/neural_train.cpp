#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "cqasum/metrics.hpp"
#include "cqasum/neural.hpp"
#include "cqasum/rng.hpp"

namespace cqasum::neural {

// ---------------------------------------------------------------------------
// Vocabulary

namespace {
const std::vector<std::string> kSpecialTokens = {"<pad>", "<bos>", "<eos>", "<sep>", "<unk>"};
}

Vocab::Vocab() : tokens_(kSpecialTokens) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<TokenId>(i));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < kSpecialCount || !std::equal(kSpecialTokens.begin(), kSpecialTokens.end(), tokens.begin()))
        throw DataError("vocab must start with <pad> <bos> <eos> <sep> <unk>");
    Vocab v;
    v.tokens_ = std::move(tokens);
    v.index_.clear();
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        if (!v.index_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second)
            throw DataError("duplicate vocab token \"" + v.tokens_[i] + "\"");
    return v;
}

TokenId Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocab::encode(const Tokens& tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
}

Tokens Vocab::decode(const std::vector<TokenId>& ids) const {
    Tokens out;
    for (TokenId id : ids)
        if (id >= static_cast<TokenId>(kSpecialCount)) out.push_back(token(id));
    return out;
}

Vocab build_vocab(const Corpus& corpus, std::size_t min_freq) {
    if (min_freq < 1) throw UsageError("build_vocab: min_freq must be >= 1");
    std::map<std::string, std::size_t> freq;
    auto count = [&](const std::string& text) {
        for (auto& t : tokenize(text)) ++freq[t];
    };
    for (const auto& qa : corpus.qa_pairs()) {
        count(qa.question);
        count(qa.answer);
    }
    for (const auto& s : corpus.summaries()) count(s.reference_summary);

    std::vector<std::pair<std::string, std::size_t>> items;
    for (auto& [t, n] : freq)
        if (n >= min_freq) items.emplace_back(t, n);
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> tokens = kSpecialTokens;
    for (auto& [t, n] : items) tokens.push_back(t);
    return Vocab::from_tokens(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Examples

TokenizedExample encode_example(const std::vector<QAPair>& qas, const std::optional<std::string>& summary,
                                const Vocab& vocab, const ModelConfig& cfg) {
    TokenizedExample ex;
    if (!qas.empty()) ex.entity_id = qas.front().entity_id;
    for (const auto& qa : qas) {
        std::vector<TokenId> piece = vocab.encode(tokenize(qa.question));
        piece.push_back(Vocab::kSep);
        const std::vector<TokenId> answer = vocab.encode(tokenize(qa.answer));
        piece.insert(piece.end(), answer.begin(), answer.end());
        piece.push_back(Vocab::kSep);
        if (ex.input_ids.size() + piece.size() > cfg.max_src_len) break;
        ex.input_ids.insert(ex.input_ids.end(), piece.begin(), piece.end());
        ex.qa_boundaries.push_back(ex.input_ids.size() - 1);
        ex.seed_labels.push_back(qa.is_seed.value_or(false) ? 1 : 0);
        ex.seed_labels_known = ex.seed_labels_known && qa.is_seed.has_value();
    }
    if (summary) {
        std::vector<TokenId> body = vocab.encode(tokenize(*summary));
        if (body.size() + 2 > cfg.max_tgt_len) body.resize(cfg.max_tgt_len - 2);
        ex.target_ids.push_back(Vocab::kBos);
        ex.target_ids.insert(ex.target_ids.end(), body.begin(), body.end());
        ex.target_ids.push_back(Vocab::kEos);
    }
    return ex;
}

// ---------------------------------------------------------------------------
// Optimizer

Json optimizer_to_json(const OptimizerSettings& o) {
    Json j;
    j["lr"] = o.lr;
    j["beta1"] = o.beta1;
    j["beta2"] = o.beta2;
    j["eps"] = o.eps;
    j["clip_norm"] = o.clip_norm;
    j["batch_size"] = o.batch_size;
    j["epochs"] = o.epochs;
    j["max_steps"] = o.max_steps;
    return j;
}

OptimizerSettings optimizer_from_json(const Json& j) {
    OptimizerSettings o;
    o.lr = j.value("lr", o.lr);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.eps = j.value("eps", o.eps);
    o.clip_norm = j.value("clip_norm", o.clip_norm);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.epochs = j.value("epochs", o.epochs);
    o.max_steps = j.value("max_steps", o.max_steps);
    return o;
}

double global_norm(const Parameters& grads) {
    double s = 0.0;
    grads.for_each([&](const std::string&, const char*, const auto& t) { s += t.squaredNorm(); });
    return std::sqrt(s);
}

Adam::Adam(const Parameters& like, OptimizerSettings settings)
    : s_(settings), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(Parameters& params, Parameters& grads) {
    const double norm = global_norm(grads);
    if (s_.clip_norm > 0 && norm > s_.clip_norm) {
        const double k = s_.clip_norm / norm;
        grads.for_each([&](const std::string&, const char*, auto& t) { t *= k; });
    }
    ++t_;
    const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));

    // The three structures share one layout, so walking them in lockstep
    // pairs up the same tensor each time.
    std::vector<double*> g_ptr, m_ptr, v_ptr, p_ptr;
    std::vector<Eigen::Index> sizes;
    grads.for_each([&](const std::string&, const char*, auto& t) { g_ptr.push_back(t.data()); sizes.push_back(t.size()); });
    m_.for_each([&](const std::string&, const char*, auto& t) { m_ptr.push_back(t.data()); });
    v_.for_each([&](const std::string&, const char*, auto& t) { v_ptr.push_back(t.data()); });
    params.for_each([&](const std::string&, const char*, auto& t) { p_ptr.push_back(t.data()); });
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        for (Eigen::Index i = 0; i < sizes[k]; ++i) {
            const double g = g_ptr[k][i];
            double& m = m_ptr[k][i];
            double& v = v_ptr[k][i];
            m = s_.beta1 * m + (1.0 - s_.beta1) * g;
            v = s_.beta2 * v + (1.0 - s_.beta2) * g * g;
            p_ptr[k][i] -= s_.lr * (m / c1) / (std::sqrt(v / c2) + s_.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Training

namespace {

double mean_rouge1_f1(const Model& model, const std::vector<TokenizedExample>& set) {
    double sum = 0.0;
    for (const auto& ex : set) {
        const std::vector<TokenId> out = generate(model, ex.input_ids, ex.qa_boundaries, model.config.max_tgt_len);
        const auto strip = [](const std::vector<TokenId>& ids) {
            Tokens t;
            for (TokenId id : ids)
                if (id >= static_cast<TokenId>(Vocab::kSpecialCount)) t.push_back(std::to_string(id));
            return t;
        };
        sum += rouge_n(strip(out), strip(ex.target_ids), 1).f1;
    }
    return set.empty() ? 0.0 : sum / static_cast<double>(set.size());
}

} // namespace

TrainResult train(const ModelConfig& cfg, const std::vector<TokenizedExample>& train_set,
                  const std::vector<TokenizedExample>& val_set, const OptimizerSettings& opt) {
    cfg.validate();
    if (train_set.empty()) throw DataError("train: empty training set");
    if (opt.batch_size == 0) throw UsageError("train: batch_size must be >= 1");
    for (const auto& ex : train_set) {
        if (ex.target_ids.size() < 2) throw DataError("train: entity \"" + ex.entity_id + "\" has no reference summary");
        if (cfg.lambda_cls > 0 && !ex.seed_labels_known) throw MissingSeedLabels(ex.entity_id);
    }

    Model model{cfg, init_parameters(cfg)};
    Adam adam(model.params, opt);
    SplitMix64 order_rng(derive_seed(cfg.seed, "train-order"));

    TrainResult result;
    result.params = model.params;
    double best_key = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    bool out_of_steps = false;
    for (std::size_t epoch = 1; epoch <= opt.epochs && !out_of_steps; ++epoch) {
        shuffle(std::span<std::size_t>(order), order_rng);
        LossBreakdown sum;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            if (opt.max_steps && adam.steps() >= opt.max_steps) {
                out_of_steps = true;
                break;
            }
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            Parameters grads = model.params.zeros_like();
            for (std::size_t i = start; i < end; ++i) {
                const LossBreakdown l = loss_and_gradient(model, train_set[order[i]], &grads);
                sum.gen_loss += l.gen_loss;
                sum.cls_loss += l.cls_loss;
                sum.total += l.total;
                ++seen;
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            grads.for_each([&](const std::string&, const char*, auto& t) { t *= scale; });
            adam.step(model.params, grads);
            if (!model.params.all_finite()) throw TrainingFailure("train: parameters became non-finite");
        }
        if (seen == 0) break;
        EpochRecord rec;
        rec.epoch = epoch;
        rec.steps = adam.steps();
        rec.train = {sum.gen_loss / static_cast<double>(seen), sum.cls_loss / static_cast<double>(seen),
                     sum.total / static_cast<double>(seen)};
        double key = -rec.train.total;
        if (!val_set.empty()) {
            rec.val_rouge1_f1 = mean_rouge1_f1(model, val_set);
            key = *rec.val_rouge1_f1;
        }
        if (key > best_key) {
            best_key = key;
            result.best_epoch = epoch;
            result.params = model.params;
        }
        result.history.push_back(rec);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Decoding

std::vector<TokenId> generate(const Model& model, const std::vector<TokenId>& input_ids,
                              const std::vector<std::size_t>& qa_boundaries, std::size_t max_tgt_len) {
    const Matrix hidden = encoder_forward(model, input_ids, qa_boundaries).hidden;
    std::vector<TokenId> out = {Vocab::kBos};
    while (out.size() < max_tgt_len) {
        const Matrix logits = decoder_forward(model, hidden, input_ids, out);
        Eigen::RowVectorXd last = logits.row(logits.rows() - 1);
        last(Vocab::kPad) = -std::numeric_limits<double>::infinity();
        last(Vocab::kBos) = -std::numeric_limits<double>::infinity();
        Eigen::Index best = 0;
        last.maxCoeff(&best);
        out.push_back(static_cast<TokenId>(best));
        if (best == Vocab::kEos) break;
    }
    return out;
}

std::string generate_text(const Model& model, const Vocab& vocab, const TokenizedExample& example) {
    return join(vocab.decode(generate(model, example.input_ids, example.qa_boundaries, model.config.max_tgt_len)));
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check(const Model& model, const TokenizedExample& example, const GradCheckOptions& opt) {
    if (!(opt.epsilon > 0)) throw UsageError("grad_check: epsilon must be positive");
    Parameters analytic = model.params.zeros_like();
    loss_and_gradient(model, example, &analytic);

    struct Coord {
        std::size_t tensor;
        Eigen::Index index;
    };
    std::vector<std::string> names, groups;
    std::vector<Eigen::Index> sizes;
    std::vector<const double*> grad_data;
    analytic.for_each([&](const std::string& name, const char* group, const auto& t) {
        names.push_back(name);
        groups.push_back(group);
        sizes.push_back(t.size());
        grad_data.push_back(t.data());
    });

    GradCheckReport report;
    for (std::size_t k = 0; k < names.size(); ++k)
        if (groups[k] == "classifier")
            for (Eigen::Index i = 0; i < sizes[k]; ++i)
                report.classifier_grad_abs_max = std::max(report.classifier_grad_abs_max, std::abs(grad_data[k][i]));

    SplitMix64 rng(opt.seed);
    std::vector<Coord> coords;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const Eigen::Index take = std::min<Eigen::Index>(2, sizes[k]);
        for (Eigen::Index i = 0; i < take; ++i)
            coords.push_back({k, static_cast<Eigen::Index>(rng.uniform(static_cast<std::uint64_t>(sizes[k])))});
    }
    const auto total = static_cast<std::uint64_t>(std::accumulate(sizes.begin(), sizes.end(), Eigen::Index{0}));
    while (coords.size() < opt.samples) {
        std::uint64_t flat = rng.uniform(total);
        std::size_t k = 0;
        while (flat >= static_cast<std::uint64_t>(sizes[k])) flat -= static_cast<std::uint64_t>(sizes[k++]);
        coords.push_back({k, static_cast<Eigen::Index>(flat)});
    }

    Model probe = model;
    std::vector<double*> data;
    probe.params.for_each([&](const std::string&, const char*, auto& t) { data.push_back(t.data()); });
    for (const Coord& c : coords) {
        double& x = data[c.tensor][c.index];
        const double saved = x;
        x = saved + opt.epsilon;
        const double up = loss_and_gradient(probe, example, nullptr).total;
        x = saved - opt.epsilon;
        const double down = loss_and_gradient(probe, example, nullptr).total;
        x = saved;
        const double numeric = (up - down) / (2.0 * opt.epsilon);
        const double a = grad_data[c.tensor][c.index];
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
        report.max_relative_error = std::max(report.max_relative_error, err);
        auto& gmax = report.group_max_error[groups[c.tensor]];
        gmax = std::max(gmax, err);
        ++report.group_coordinates[groups[c.tensor]];
        ++report.coordinates;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Checkpoints

Json checkpoint_to_json(const Checkpoint& c) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["config"] = config_to_json(c.config);
    j["vocab"] = c.vocab.tokens();
    Json params = Json::object();
    c.params.for_each([&](const std::string& name, const char*, const auto& t) {
        std::vector<double> flat(t.data(), t.data() + t.size());
        params[name] = {{"rows", t.rows()}, {"cols", t.cols()}, {"data", flat}};
    });
    j["params"] = params;
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    if (j.value("format_version", std::string()) != kFormatVersion)
        throw DataError("checkpoint: unsupported format_version");
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    if (c.vocab.size() != c.config.vocab_size) throw DataError("checkpoint: vocab size does not match config");
    c.params = init_parameters(c.config);
    const Json& params = j.at("params");
    c.params.for_each([&](const std::string& name, const char*, auto& t) {
        if (!params.contains(name)) throw DataError("checkpoint: missing tensor " + name);
        const Json& e = params.at(name);
        const auto rows = e.at("rows").get<Eigen::Index>();
        const auto cols = e.at("cols").get<Eigen::Index>();
        const auto flat = e.at("data").get<std::vector<double>>();
        if (rows != t.rows() || cols != t.cols() || static_cast<Eigen::Index>(flat.size()) != t.size())
            throw DataError("checkpoint: shape mismatch for " + name);
        std::copy(flat.begin(), flat.end(), t.data());
    });
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    write_file_atomic(path, checkpoint_to_json(c).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    try {
        return checkpoint_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string loss_history_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,steps,total_loss,gen_loss,cls_loss,val_rouge1_f1\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,", r.epoch, r.steps, r.train.total, r.train.gen_loss,
                      r.train.cls_loss);
        out += buf;
        if (r.val_rouge1_f1) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.val_rouge1_f1);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace cqasum::neural
