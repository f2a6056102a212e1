#include <algorithm>
#include <cmath>
#include <limits>

#include "cqasum/neural.hpp"
#include "cqasum/rng.hpp"

namespace cqasum::neural {

void ModelConfig::validate() const {
    if (vocab_size < Vocab::kSpecialCount) throw UsageError("model: vocab_size must cover the 5 special tokens");
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
        throw UsageError("model: d_model must be a positive multiple of n_heads");
    if (d_ff == 0) throw UsageError("model: d_ff must be positive");
    if (window < 1) throw UsageError("model: window must be >= 1");
    if (max_src_len < 2 || max_tgt_len < 2) throw UsageError("model: max lengths must be >= 2");
    if (!(lambda_cls >= 0.0)) throw UsageError("model: lambda_cls must be >= 0");
}

Json config_to_json(const ModelConfig& c) {
    Json j;
    j["vocab_size"] = c.vocab_size;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["d_ff"] = c.d_ff;
    j["n_enc_layers"] = c.n_enc_layers;
    j["n_dec_layers"] = c.n_dec_layers;
    j["window"] = c.window;
    j["max_src_len"] = c.max_src_len;
    j["max_tgt_len"] = c.max_tgt_len;
    j["lambda_cls"] = c.lambda_cls;
    j["positional"] = c.positional;
    j["seed"] = c.seed;
    return j;
}

ModelConfig config_from_json(const Json& j) {
    ModelConfig c;
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_ff = j.value("d_ff", c.d_ff);
    c.n_enc_layers = j.value("n_enc_layers", c.n_enc_layers);
    c.n_dec_layers = j.value("n_dec_layers", c.n_dec_layers);
    c.window = j.value("window", c.window);
    c.max_src_len = j.value("max_src_len", c.max_src_len);
    c.max_tgt_len = j.value("max_tgt_len", c.max_tgt_len);
    c.lambda_cls = j.value("lambda_cls", c.lambda_cls);
    c.positional = j.value("positional", c.positional);
    c.seed = j.value("seed", c.seed);
    return c;
}

// ---------------------------------------------------------------------------
// Parameters

Parameters Parameters::zeros_like() const {
    Parameters z = *this;
    z.for_each([](const std::string&, const char*, auto& t) { t.setZero(); });
    return z;
}

std::size_t Parameters::count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

bool Parameters::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const char*, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
}

namespace {

Matrix xavier(Eigen::Index rows, Eigen::Index cols, SplitMix64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = (2.0 * rng.unit() - 1.0) * a;
    return m;
}

LayerNormParams init_ln(Eigen::Index d) { return {RowVector::Ones(d), RowVector::Zero(d)}; }

AttentionParams init_attn(Eigen::Index d, SplitMix64& rng) {
    AttentionParams a;
    a.wq = xavier(d, d, rng);
    a.wk = xavier(d, d, rng);
    a.wv = xavier(d, d, rng);
    a.wo = xavier(d, d, rng);
    a.bq = a.bk = a.bv = a.bo = RowVector::Zero(d);
    return a;
}

FeedForwardParams init_ff(Eigen::Index d, Eigen::Index hidden, SplitMix64& rng) {
    FeedForwardParams f;
    f.w1 = xavier(d, hidden, rng);
    f.b1 = RowVector::Zero(hidden);
    f.w2 = xavier(hidden, d, rng);
    f.b2 = RowVector::Zero(d);
    return f;
}

} // namespace

Parameters init_parameters(const ModelConfig& cfg) {
    cfg.validate();
    SplitMix64 rng(derive_seed(cfg.seed, "init"));
    const auto d = static_cast<Eigen::Index>(cfg.d_model);
    const auto v = static_cast<Eigen::Index>(cfg.vocab_size);
    const auto ff = static_cast<Eigen::Index>(cfg.d_ff);
    Parameters p;
    p.embedding = xavier(v, d, rng);
    for (std::size_t l = 0; l < cfg.n_enc_layers; ++l) {
        EncoderLayerParams e;
        e.ln_attn = init_ln(d);
        e.self_attn = init_attn(d, rng);
        e.ln_ff = init_ln(d);
        e.ff = init_ff(d, ff, rng);
        p.encoder.push_back(std::move(e));
    }
    p.encoder_norm = init_ln(d);
    for (std::size_t l = 0; l < cfg.n_dec_layers; ++l) {
        DecoderLayerParams e;
        e.ln_self = init_ln(d);
        e.self_attn = init_attn(d, rng);
        e.ln_cross = init_ln(d);
        e.cross_attn = init_attn(d, rng);
        e.ln_ff = init_ln(d);
        e.ff = init_ff(d, ff, rng);
        p.decoder.push_back(std::move(e));
    }
    p.decoder_norm = init_ln(d);
    p.out_w = xavier(d, v, rng);
    p.out_b = RowVector::Zero(v);
    p.cls_w = xavier(1, d, rng);
    p.cls_b = RowVector::Zero(1);
    return p;
}

// ---------------------------------------------------------------------------
// Building blocks. Each forward fills a cache read by the matching backward;
// backward functions accumulate parameter gradients and return d(input).

namespace {

constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
    Matrix xhat;
    Eigen::VectorXd inv_std;
};

Matrix layer_norm_forward(const LayerNormParams& p, const Matrix& x, LayerNormCache& c) {
    const double d = static_cast<double>(x.cols());
    const Eigen::VectorXd mean = x.rowwise().mean();
    const Matrix centered = x.colwise() - mean;
    const Eigen::VectorXd var = centered.array().square().rowwise().sum() / d;
    c.inv_std = (var.array() + kLayerNormEps).rsqrt();
    c.xhat = centered.array().colwise() * c.inv_std.array();
    Matrix y = c.xhat.array().rowwise() * p.gain.array();
    y.rowwise() += p.bias;
    return y;
}

Matrix layer_norm_backward(const LayerNormParams& p, LayerNormParams& g, const LayerNormCache& c, const Matrix& dy) {
    g.gain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
    g.bias += dy.colwise().sum();
    const double d = static_cast<double>(dy.cols());
    const Matrix dxhat = dy.array().rowwise() * p.gain.array();
    const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).rowwise().sum();
    Matrix dx = d * dxhat;
    dx.colwise() -= sum_dxhat;
    dx -= (c.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
    return dx.array().colwise() * (c.inv_std.array() / d);
}

struct AttentionCache {
    Matrix xq, xkv, q, k, v, concat;
    std::vector<Matrix> probs; // per head
};

// Rows with no allowed key produce a zero output row.
Matrix attention_forward(const AttentionParams& p, const Matrix& xq, const Matrix& xkv, const Mask& allowed,
                         std::size_t heads, AttentionCache& c) {
    c.xq = xq;
    c.xkv = xkv;
    c.q = (xq * p.wq).rowwise() + p.bq;
    c.k = (xkv * p.wk).rowwise() + p.bk;
    c.v = (xkv * p.wv).rowwise() + p.bv;
    const Eigen::Index d = p.wq.cols();
    const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    c.concat = Matrix::Zero(xq.rows(), d);
    c.probs.assign(heads, Matrix());
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
        const Matrix s = (c.q.middleCols(off, dh) * c.k.middleCols(off, dh).transpose()) * scale;
        Matrix a = Matrix::Zero(s.rows(), s.cols());
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < s.cols(); ++j)
                if (allowed(i, j)) mx = std::max(mx, s(i, j));
            if (!std::isfinite(mx)) continue;
            double sum = 0.0;
            for (Eigen::Index j = 0; j < s.cols(); ++j) {
                if (!allowed(i, j)) continue;
                a(i, j) = std::exp(s(i, j) - mx);
                sum += a(i, j);
            }
            a.row(i) /= sum;
        }
        c.concat.middleCols(off, dh) = a * c.v.middleCols(off, dh);
        c.probs[h] = std::move(a);
    }
    return (c.concat * p.wo).rowwise() + p.bo;
}

void attention_backward(const AttentionParams& p, AttentionParams& g, const AttentionCache& c, const Matrix& dout,
                        std::size_t heads, Matrix& dxq, Matrix& dxkv) {
    g.wo += c.concat.transpose() * dout;
    g.bo += dout.colwise().sum();
    const Matrix dconcat = dout * p.wo.transpose();
    const Eigen::Index d = p.wq.cols();
    const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix dq = Matrix::Zero(c.q.rows(), d);
    Matrix dk = Matrix::Zero(c.k.rows(), d);
    Matrix dv = Matrix::Zero(c.v.rows(), d);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
        const Matrix& a = c.probs[h];
        const Matrix dout_h = dconcat.middleCols(off, dh);
        const Matrix da = dout_h * c.v.middleCols(off, dh).transpose();
        dv.middleCols(off, dh) = a.transpose() * dout_h;
        const Eigen::VectorXd row_dot = (a.array() * da.array()).rowwise().sum();
        Matrix centered = da;
        centered.colwise() -= row_dot;
        const Matrix ds = (a.array() * centered.array()).matrix() * scale;
        dq.middleCols(off, dh) = ds * c.k.middleCols(off, dh);
        dk.middleCols(off, dh) = ds.transpose() * c.q.middleCols(off, dh);
    }
    g.wq += c.xq.transpose() * dq;
    g.bq += dq.colwise().sum();
    g.wk += c.xkv.transpose() * dk;
    g.bk += dk.colwise().sum();
    g.wv += c.xkv.transpose() * dv;
    g.bv += dv.colwise().sum();
    dxq = dq * p.wq.transpose();
    dxkv = dk * p.wk.transpose() + dv * p.wv.transpose();
}

// tanh approximation of GELU; smooth everywhere, which keeps finite
// differences honest.
constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

struct FeedForwardCache {
    Matrix x, pre, act;
};

Matrix feed_forward_forward(const FeedForwardParams& p, const Matrix& x, FeedForwardCache& c) {
    c.x = x;
    c.pre = (x * p.w1).rowwise() + p.b1;
    c.act = c.pre.unaryExpr([](double v) { return gelu(v); });
    return (c.act * p.w2).rowwise() + p.b2;
}

Matrix feed_forward_backward(const FeedForwardParams& p, FeedForwardParams& g, const FeedForwardCache& c,
                             const Matrix& dy) {
    g.w2 += c.act.transpose() * dy;
    g.b2 += dy.colwise().sum();
    const Matrix dact = dy * p.w2.transpose();
    const Matrix dpre = dact.cwiseProduct(c.pre.unaryExpr([](double v) { return gelu_grad(v); }));
    g.w1 += c.x.transpose() * dpre;
    g.b1 += dpre.colwise().sum();
    return dpre * p.w1.transpose();
}

struct EncoderLayerCache {
    LayerNormCache ln_attn, ln_ff;
    AttentionCache attn;
    FeedForwardCache ff;
};

struct DecoderLayerCache {
    LayerNormCache ln_self, ln_cross, ln_ff;
    AttentionCache self_attn, cross_attn;
    FeedForwardCache ff;
};

struct ForwardCache {
    std::vector<TokenId> src;
    std::vector<TokenId> tgt_in;
    std::vector<EncoderLayerCache> enc;
    LayerNormCache enc_norm;
    Matrix hidden;
    std::vector<DecoderLayerCache> dec;
    LayerNormCache dec_norm;
    Matrix dec_out;
};

Matrix embed(const Parameters& p, const std::vector<TokenId>& ids, bool positional) {
    const auto d = static_cast<std::size_t>(p.embedding.cols());
    Matrix x = positional ? positional_encoding(ids.size(), d)
                          : Matrix::Zero(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < ids.size(); ++t) x.row(static_cast<Eigen::Index>(t)) += p.embedding.row(ids[t]);
    return x;
}

void embed_backward(Parameters& g, const std::vector<TokenId>& ids, const Matrix& dx) {
    for (std::size_t t = 0; t < ids.size(); ++t) g.embedding.row(ids[t]) += dx.row(static_cast<Eigen::Index>(t));
}

Matrix run_encoder(const Model& m, const std::vector<TokenId>& ids, const Mask& mask, ForwardCache& c,
                   std::vector<std::vector<Matrix>>* attention) {
    const auto& p = m.params;
    Matrix x = embed(p, ids, m.config.positional);
    c.enc.assign(p.encoder.size(), EncoderLayerCache{});
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        auto& lc = c.enc[l];
        const auto& lp = p.encoder[l];
        const Matrix n1 = layer_norm_forward(lp.ln_attn, x, lc.ln_attn);
        x += attention_forward(lp.self_attn, n1, n1, mask, m.config.n_heads, lc.attn);
        const Matrix n2 = layer_norm_forward(lp.ln_ff, x, lc.ln_ff);
        x += feed_forward_forward(lp.ff, n2, lc.ff);
        if (attention) attention->push_back(lc.attn.probs);
    }
    c.hidden = layer_norm_forward(p.encoder_norm, x, c.enc_norm);
    return c.hidden;
}

Mask cross_mask(const std::vector<TokenId>& src, std::size_t tgt_len) {
    Mask m(static_cast<Eigen::Index>(tgt_len), static_cast<Eigen::Index>(src.size()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j).setConstant(src[static_cast<std::size_t>(j)] != Vocab::kPad);
    return m;
}

Mask causal_mask(const std::vector<TokenId>& tgt) {
    const auto n = static_cast<Eigen::Index>(tgt.size());
    Mask m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = j <= i && tgt[static_cast<std::size_t>(j)] != Vocab::kPad;
    return m;
}

Matrix run_decoder(const Model& m, const Matrix& hidden, const std::vector<TokenId>& src,
                   const std::vector<TokenId>& tgt_in, ForwardCache& c) {
    const auto& p = m.params;
    const Mask self_mask = causal_mask(tgt_in);
    const Mask xmask = cross_mask(src, tgt_in.size());
    Matrix y = embed(p, tgt_in, m.config.positional);
    c.dec.assign(p.decoder.size(), DecoderLayerCache{});
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
        auto& lc = c.dec[l];
        const auto& lp = p.decoder[l];
        const Matrix n1 = layer_norm_forward(lp.ln_self, y, lc.ln_self);
        y += attention_forward(lp.self_attn, n1, n1, self_mask, m.config.n_heads, lc.self_attn);
        const Matrix n2 = layer_norm_forward(lp.ln_cross, y, lc.ln_cross);
        y += attention_forward(lp.cross_attn, n2, hidden, xmask, m.config.n_heads, lc.cross_attn);
        const Matrix n3 = layer_norm_forward(lp.ln_ff, y, lc.ln_ff);
        y += feed_forward_forward(lp.ff, n3, lc.ff);
    }
    c.dec_out = layer_norm_forward(p.decoder_norm, y, c.dec_norm);
    return (c.dec_out * p.out_w).rowwise() + p.out_b;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

void check_ids(const Model& m, const std::vector<TokenId>& ids, const char* what) {
    for (TokenId id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= m.config.vocab_size)
            throw UsageError(std::string(what) + ": token id out of range");
}

} // namespace

// ---------------------------------------------------------------------------

Matrix positional_encoding(std::size_t length, std::size_t d_model) {
    Matrix pe(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(d_model));
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t i = 0; i < d_model; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
            const double angle = static_cast<double>(pos) * rate;
            pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Mask encoder_mask(const std::vector<TokenId>& ids, const std::vector<std::size_t>& boundaries, std::size_t window) {
    const auto n = static_cast<Eigen::Index>(ids.size());
    std::vector<bool> global(ids.size(), false);
    for (std::size_t b : boundaries)
        if (b < ids.size()) global[b] = true;
    Mask m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            const std::size_t dist = ui > uj ? ui - uj : uj - ui;
            const bool local = window == 0 || dist <= window;
            m(i, j) = ids[uj] != Vocab::kPad && (local || global[ui] || global[uj]);
        }
    }
    return m;
}

EncoderOutput encoder_forward(const Model& model, const std::vector<TokenId>& input_ids,
                              const std::vector<std::size_t>& qa_boundaries, std::optional<std::size_t> window_override) {
    check_ids(model, input_ids, "encoder_forward");
    if (input_ids.size() > model.config.max_src_len) throw UsageError("encoder_forward: input longer than max_src_len");
    const Mask mask = encoder_mask(input_ids, qa_boundaries, window_override.value_or(model.config.window));
    ForwardCache c;
    EncoderOutput out;
    out.hidden = run_encoder(model, input_ids, mask, c, &out.attention);
    return out;
}

std::vector<double> classifier_forward(const Matrix& hidden, const std::vector<std::size_t>& qa_boundaries,
                                       const Parameters& params) {
    std::vector<double> probs;
    probs.reserve(qa_boundaries.size());
    for (std::size_t b : qa_boundaries) {
        if (b >= static_cast<std::size_t>(hidden.rows())) throw UsageError("classifier_forward: boundary out of range");
        probs.push_back(sigmoid(hidden.row(static_cast<Eigen::Index>(b)).dot(params.cls_w) + params.cls_b(0)));
    }
    return probs;
}

Matrix decoder_forward(const Model& model, const Matrix& encoder_hidden, const std::vector<TokenId>& input_ids,
                       const std::vector<TokenId>& target_prefix) {
    if (target_prefix.empty() || target_prefix.front() != Vocab::kBos)
        throw UsageError("decoder_forward: prefix must start with BOS");
    check_ids(model, target_prefix, "decoder_forward");
    ForwardCache c;
    return run_decoder(model, encoder_hidden, input_ids, target_prefix, c);
}

LossBreakdown compute_loss(const Matrix& logits, const std::vector<TokenId>& target_ids,
                           const std::vector<double>& seed_probs, const std::vector<int>& seed_labels,
                           double lambda_cls) {
    if (seed_probs.size() != seed_labels.size()) throw UsageError("compute_loss: probability/label count mismatch");
    if (target_ids.empty() || static_cast<std::size_t>(logits.rows()) + 1 != target_ids.size())
        throw UsageError("compute_loss: logits must have one row per predicted target");
    LossBreakdown l;
    std::size_t counted = 0;
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        const TokenId gold = target_ids[static_cast<std::size_t>(t) + 1];
        if (gold == Vocab::kPad) continue;
        const double mx = logits.row(t).maxCoeff();
        const double lse = mx + std::log((logits.row(t).array() - mx).exp().sum());
        l.gen_loss += lse - logits(t, gold);
        ++counted;
    }
    if (counted) l.gen_loss /= static_cast<double>(counted);
    for (std::size_t i = 0; i < seed_probs.size(); ++i) {
        const double p = seed_probs[i];
        l.cls_loss -= seed_labels[i] ? std::log(p) : std::log1p(-p);
    }
    if (!seed_probs.empty()) l.cls_loss /= static_cast<double>(seed_probs.size());
    l.total = l.gen_loss + lambda_cls * l.cls_loss;
    return l;
}

LossBreakdown loss_and_gradient(const Model& model, const TokenizedExample& ex, Parameters* grads) {
    if (ex.target_ids.size() < 2) throw UsageError("loss_and_gradient: example has no target");
    check_ids(model, ex.input_ids, "loss_and_gradient");
    check_ids(model, ex.target_ids, "loss_and_gradient");
    const Parameters& p = model.params;
    const double lambda = model.config.lambda_cls;

    ForwardCache c;
    const Mask enc_mask = encoder_mask(ex.input_ids, ex.qa_boundaries, model.config.window);
    run_encoder(model, ex.input_ids, enc_mask, c, nullptr);
    const std::vector<TokenId> tgt_in(ex.target_ids.begin(), ex.target_ids.end() - 1);
    const Matrix logits = run_decoder(model, c.hidden, ex.input_ids, tgt_in, c);

    // Generation loss and its logit gradient.
    LossBreakdown l;
    Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
    std::size_t counted = 0;
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        const TokenId gold = ex.target_ids[static_cast<std::size_t>(t) + 1];
        if (gold == Vocab::kPad) continue;
        const double mx = logits.row(t).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(t).array() - mx).exp();
        const double z = e.sum();
        l.gen_loss += mx + std::log(z) - logits(t, gold);
        dlogits.row(t) = e / z;
        dlogits(t, gold) -= 1.0;
        ++counted;
    }
    if (counted) {
        l.gen_loss /= static_cast<double>(counted);
        dlogits /= static_cast<double>(counted);
    }

    // Seed classification loss on the shared encoder, in logit form.
    const std::size_t pairs = ex.qa_boundaries.size();
    std::vector<double> dz(pairs, 0.0);
    if (ex.seed_labels_known && pairs > 0) {
        for (std::size_t i = 0; i < pairs; ++i) {
            const double z = c.hidden.row(static_cast<Eigen::Index>(ex.qa_boundaries[i])).dot(p.cls_w) + p.cls_b(0);
            const double y = ex.seed_labels[i];
            l.cls_loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
            dz[i] = lambda * (sigmoid(z) - y) / static_cast<double>(pairs);
        }
        l.cls_loss /= static_cast<double>(pairs);
    }
    l.total = l.gen_loss + lambda * l.cls_loss;
    if (!grads) return l;

    Parameters& g = *grads;
    const std::size_t heads = model.config.n_heads;

    // Output projection and decoder stack.
    g.out_w += c.dec_out.transpose() * dlogits;
    g.out_b += dlogits.colwise().sum();
    Matrix dy = layer_norm_backward(p.decoder_norm, g.decoder_norm, c.dec_norm, dlogits * p.out_w.transpose());
    Matrix dhidden = Matrix::Zero(c.hidden.rows(), c.hidden.cols());
    for (std::size_t l_idx = p.decoder.size(); l_idx-- > 0;) {
        const auto& lp = p.decoder[l_idx];
        auto& lg = g.decoder[l_idx];
        const auto& lc = c.dec[l_idx];
        dy += layer_norm_backward(lp.ln_ff, lg.ln_ff, lc.ln_ff, feed_forward_backward(lp.ff, lg.ff, lc.ff, dy));
        Matrix dq, dkv;
        attention_backward(lp.cross_attn, lg.cross_attn, lc.cross_attn, dy, heads, dq, dkv);
        dhidden += dkv;
        dy += layer_norm_backward(lp.ln_cross, lg.ln_cross, lc.ln_cross, dq);
        attention_backward(lp.self_attn, lg.self_attn, lc.self_attn, dy, heads, dq, dkv);
        dy += layer_norm_backward(lp.ln_self, lg.ln_self, lc.ln_self, dq + dkv);
    }
    embed_backward(g, tgt_in, dy);

    // Classifier head.
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto row = static_cast<Eigen::Index>(ex.qa_boundaries[i]);
        g.cls_w += dz[i] * c.hidden.row(row);
        g.cls_b(0) += dz[i];
        dhidden.row(row) += dz[i] * p.cls_w;
    }

    // Encoder stack.
    Matrix dx = layer_norm_backward(p.encoder_norm, g.encoder_norm, c.enc_norm, dhidden);
    for (std::size_t l_idx = p.encoder.size(); l_idx-- > 0;) {
        const auto& lp = p.encoder[l_idx];
        auto& lg = g.encoder[l_idx];
        const auto& lc = c.enc[l_idx];
        dx += layer_norm_backward(lp.ln_ff, lg.ln_ff, lc.ln_ff, feed_forward_backward(lp.ff, lg.ff, lc.ff, dx));
        Matrix dq, dkv;
        attention_backward(lp.self_attn, lg.self_attn, lc.attn, dx, heads, dq, dkv);
        dx += layer_norm_backward(lp.ln_attn, lg.ln_attn, lc.ln_attn, dq + dkv);
    }
    embed_backward(g, ex.input_ids, dx);
    return l;
}

} // namespace cqasum::neural
