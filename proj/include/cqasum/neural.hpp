#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cqasum/corpus.hpp"
#include "cqasum/error.hpp"
#include "cqasum/io.hpp"

// Toy-scale encoder-decoder summarizer with an auxiliary seed-selection head.
// Everything runs in double precision with hand-written backward passes so the
// multi-task gradient can be checked against finite differences.
namespace cqasum::neural {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using TokenId = std::int32_t;

// ---------------------------------------------------------------------------
// Vocabulary

class Vocab {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;
    static constexpr TokenId kSep = 3;
    static constexpr TokenId kUnk = 4;
    static constexpr std::size_t kSpecialCount = 5;

    Vocab();
    /// Builds from tokens in id order; the first five must be the specials.
    static Vocab from_tokens(std::vector<std::string> tokens);

    TokenId id(const std::string& token) const;
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    std::vector<TokenId> encode(const Tokens& tokens) const;
    /// Drops special ids.
    Tokens decode(const std::vector<TokenId>& ids) const;

    bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::map<std::string, TokenId> index_;
};

/// Tokens from questions, answers and reference summaries occurring at least
/// min_freq times, ordered by (descending frequency, token).
Vocab build_vocab(const Corpus& corpus, std::size_t min_freq = 1);

// ---------------------------------------------------------------------------
// Configuration and parameters

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t d_model = 32;
    std::size_t n_heads = 2;
    std::size_t d_ff = 64;
    std::size_t n_enc_layers = 1;
    std::size_t n_dec_layers = 1;
    std::size_t window = 8;       ///< local attention half-width
    std::size_t max_src_len = 256;
    std::size_t max_tgt_len = 64;
    double lambda_cls = 1.0;      ///< weight of the seed-selection loss
    bool positional = true;       ///< add sinusoidal positions to embeddings
    std::uint64_t seed = 0;

    void validate() const;
};

Json config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults.
ModelConfig config_from_json(const Json& j);

struct LayerNormParams {
    RowVector gain;
    RowVector bias;
};

struct AttentionParams {
    Matrix wq, wk, wv, wo;
    RowVector bq, bk, bv, bo;
};

struct FeedForwardParams {
    Matrix w1, w2;
    RowVector b1, b2;
};

struct EncoderLayerParams {
    LayerNormParams ln_attn;
    AttentionParams self_attn;
    LayerNormParams ln_ff;
    FeedForwardParams ff;
};

struct DecoderLayerParams {
    LayerNormParams ln_self;
    AttentionParams self_attn;
    LayerNormParams ln_cross;
    AttentionParams cross_attn;
    LayerNormParams ln_ff;
    FeedForwardParams ff;
};

struct Parameters {
    Matrix embedding; ///< vocab x d_model, shared by encoder and decoder inputs
    std::vector<EncoderLayerParams> encoder;
    LayerNormParams encoder_norm;
    std::vector<DecoderLayerParams> decoder;
    LayerNormParams decoder_norm;
    Matrix out_w; ///< d_model x vocab
    RowVector out_b;
    RowVector cls_w; ///< seed classifier over the trailing SEP state
    RowVector cls_b; ///< 1 element

    /// Calls f(name, group, tensor) for every tensor in a fixed order. Groups:
    /// embedding, encoder, decoder, output, classifier.
    template <class F> void for_each(F&& f) { visit(*this, f); }
    template <class F> void for_each(F&& f) const { visit(*this, f); }

    /// Same shapes, all zeros.
    Parameters zeros_like() const;
    std::size_t count() const;
    bool all_finite() const;

private:
    template <class Self, class F> static void visit(Self& p, F& f);
};

/// Xavier-uniform weights from splitmix64(cfg.seed), unit norm gains, zero biases.
Parameters init_parameters(const ModelConfig& cfg);

struct Model {
    ModelConfig config;
    Parameters params;
};

// ---------------------------------------------------------------------------
// Examples

struct TokenizedExample {
    std::string entity_id;
    std::vector<TokenId> input_ids;
    std::vector<std::size_t> qa_boundaries; ///< trailing SEP of each QA pair
    std::vector<int> seed_labels;           ///< 0/1 per QA pair
    bool seed_labels_known = true;          ///< every pair carried is_seed
    std::vector<TokenId> target_ids;        ///< BOS summary EOS, empty at inference
};

/// Renders "q SEP a SEP" per pair. Pairs whose trailing SEP would land at or
/// beyond max_src_len are dropped together with everything after them.
TokenizedExample encode_example(const std::vector<QAPair>& qas, const std::optional<std::string>& summary,
                                const Vocab& vocab, const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Forward passes

/// Sinusoidal position table, `length` x d_model.
Matrix positional_encoding(std::size_t length, std::size_t d_model);

/// allowed(i, j): key j is not PAD and (|i-j| <= window, or i or j is a
/// boundary). `window` of 0 means unlimited.
Mask encoder_mask(const std::vector<TokenId>& input_ids, const std::vector<std::size_t>& boundaries,
                  std::size_t window);

struct EncoderOutput {
    Matrix hidden; ///< src_len x d_model after the final norm
    /// attention[layer][head]: src_len x src_len row-stochastic weights
    std::vector<std::vector<Matrix>> attention;
};

/// `window_override` replaces cfg.window (0 = full attention).
EncoderOutput encoder_forward(const Model& model, const std::vector<TokenId>& input_ids,
                              const std::vector<std::size_t>& qa_boundaries,
                              std::optional<std::size_t> window_override = std::nullopt);

/// sigmoid(w . h_boundary + b) per QA pair.
std::vector<double> classifier_forward(const Matrix& hidden, const std::vector<std::size_t>& qa_boundaries,
                                       const Parameters& params);

/// Next-token logits, prefix_len x vocab. The prefix must start with BOS.
Matrix decoder_forward(const Model& model, const Matrix& encoder_hidden, const std::vector<TokenId>& input_ids,
                       const std::vector<TokenId>& target_prefix);

struct LossBreakdown {
    double gen_loss = 0.0;
    double cls_loss = 0.0;
    double total = 0.0;
};

/// Logits row t predicts target_ids[t+1]; PAD targets are skipped.
LossBreakdown compute_loss(const Matrix& logits, const std::vector<TokenId>& target_ids,
                           const std::vector<double>& seed_probs, const std::vector<int>& seed_labels,
                           double lambda_cls);

/// Full forward pass and, when `grads` is non-null, accumulation of
/// d(total)/d(params) into it.
LossBreakdown loss_and_gradient(const Model& model, const TokenizedExample& example, Parameters* grads);

// ---------------------------------------------------------------------------
// Training and decoding

class MissingSeedLabels : public DataError {
public:
    explicit MissingSeedLabels(const std::string& entity_id)
        : DataError("lambda_cls > 0 but entity \"" + entity_id + "\" has QA pairs without is_seed") {}
};

struct OptimizerSettings {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;
    std::size_t batch_size = 4;
    std::size_t epochs = 10;
    std::size_t max_steps = 0; ///< 0 = no step limit
};

Json optimizer_to_json(const OptimizerSettings& o);
OptimizerSettings optimizer_from_json(const Json& j);

struct EpochRecord {
    std::size_t epoch = 0;
    std::size_t steps = 0; ///< optimizer steps taken so far
    LossBreakdown train;   ///< mean over the epoch's examples
    std::optional<double> val_rouge1_f1;
};

struct TrainResult {
    Parameters params;       ///< best epoch
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
};

/// Adam over shuffled mini-batches with global-norm clipping. After each epoch
/// the validation set is decoded greedily and scored with ROUGE-1 F1; the
/// parameters of the best epoch are returned (lowest training loss when there
/// is no validation set).
TrainResult train(const ModelConfig& cfg, const std::vector<TokenizedExample>& train_set,
                  const std::vector<TokenizedExample>& val_set, const OptimizerSettings& opt);

/// One optimizer state for callers that drive steps themselves.
class Adam {
public:
    Adam(const Parameters& like, OptimizerSettings settings);
    /// Clips `grads` in place and updates `params`.
    void step(Parameters& params, Parameters& grads);
    std::size_t steps() const noexcept { return t_; }

private:
    OptimizerSettings s_;
    Parameters m_, v_;
    std::size_t t_ = 0;
};

double global_norm(const Parameters& grads);

/// Greedy decoding from BOS until EOS or max_tgt_len; PAD and BOS are never
/// emitted. The result starts with BOS. The classifier is not evaluated.
std::vector<TokenId> generate(const Model& model, const std::vector<TokenId>& input_ids,
                              const std::vector<std::size_t>& qa_boundaries, std::size_t max_tgt_len);

std::string generate_text(const Model& model, const Vocab& vocab, const TokenizedExample& example);

// ---------------------------------------------------------------------------
// Verification

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t samples = 256;
    std::uint64_t seed = 7;
    /// Denominator floor of the relative error |a-n| / max(|a|, |n|, floor).
    double floor = 1e-6;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
    std::map<std::string, double> group_max_error;
    std::map<std::string, std::size_t> group_coordinates;
    double classifier_grad_abs_max = 0.0; ///< over every classifier coordinate
};

/// Analytic gradient vs central differences on sampled coordinates; every
/// tensor contributes at least two coordinates.
GradCheckReport grad_check(const Model& model, const TokenizedExample& example, const GradCheckOptions& opt = {});

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
    ModelConfig config;
    Vocab vocab;
    Parameters params;
};

Json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string loss_history_csv(const std::vector<EpochRecord>& history);

// ---------------------------------------------------------------------------

template <class Self, class F> void Parameters::visit(Self& p, F& f) {
    auto ln = [&](auto& n, const std::string& name, const char* group) {
        f(name + ".gain", group, n.gain);
        f(name + ".bias", group, n.bias);
    };
    auto attn = [&](auto& a, const std::string& name, const char* group) {
        f(name + ".wq", group, a.wq);
        f(name + ".bq", group, a.bq);
        f(name + ".wk", group, a.wk);
        f(name + ".bk", group, a.bk);
        f(name + ".wv", group, a.wv);
        f(name + ".bv", group, a.bv);
        f(name + ".wo", group, a.wo);
        f(name + ".bo", group, a.bo);
    };
    auto ff = [&](auto& x, const std::string& name, const char* group) {
        f(name + ".w1", group, x.w1);
        f(name + ".b1", group, x.b1);
        f(name + ".w2", group, x.w2);
        f(name + ".b2", group, x.b2);
    };
    f(std::string("embedding"), "embedding", p.embedding);
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        const std::string base = "encoder." + std::to_string(l);
        ln(p.encoder[l].ln_attn, base + ".ln_attn", "encoder");
        attn(p.encoder[l].self_attn, base + ".self_attn", "encoder");
        ln(p.encoder[l].ln_ff, base + ".ln_ff", "encoder");
        ff(p.encoder[l].ff, base + ".ff", "encoder");
    }
    ln(p.encoder_norm, "encoder.norm", "encoder");
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
        const std::string base = "decoder." + std::to_string(l);
        ln(p.decoder[l].ln_self, base + ".ln_self", "decoder");
        attn(p.decoder[l].self_attn, base + ".self_attn", "decoder");
        ln(p.decoder[l].ln_cross, base + ".ln_cross", "decoder");
        attn(p.decoder[l].cross_attn, base + ".cross_attn", "decoder");
        ln(p.decoder[l].ln_ff, base + ".ln_ff", "decoder");
        ff(p.decoder[l].ff, base + ".ff", "decoder");
    }
    ln(p.decoder_norm, "decoder.norm", "decoder");
    f(std::string("output.w"), "output", p.out_w);
    f(std::string("output.b"), "output", p.out_b);
    f(std::string("classifier.w"), "classifier", p.cls_w);
    f(std::string("classifier.b"), "classifier", p.cls_b);
}

} // namespace cqasum::neural
