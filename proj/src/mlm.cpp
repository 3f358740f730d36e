#include "gramvec/mlm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gramvec/error.hpp"
#include "gramvec/rng.hpp"

namespace gramvec {

namespace {

constexpr double kLnEps = 1e-12;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void check_config(const ModelConfig& c) {
    if (c.layers < 1 || c.heads < 1 || c.d_model < 1 || c.d_ff < 1 ||
        c.vocab_size < 1 || c.max_len < 3) {
        throw ConfigError("mlm: model dimensions out of range");
    }
    if (c.d_model % c.heads != 0) {
        throw ConfigError("mlm: d_model must be divisible by heads");
    }
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
           x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct LnCache {
    std::vector<double> xhat;   // T x d
    std::vector<double> inv_s;  // T
};

void ln_forward(const double* x, int T, int d, const double* gamma,
                const double* beta, double* y, LnCache& cache) {
    cache.xhat.resize(static_cast<std::size_t>(T) * d);
    cache.inv_s.resize(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
        const double* row = x + static_cast<std::size_t>(i) * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += row[j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = row[j] - mu;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_s[i] = inv;
        double* xh = cache.xhat.data() + static_cast<std::size_t>(i) * d;
        double* yrow = y + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            xh[j] = (row[j] - mu) * inv;
            yrow[j] = gamma[j] * xh[j] + beta[j];
        }
    }
}

// dx is overwritten, dgamma/dbeta are accumulated.
void ln_backward(const double* dy, const LnCache& cache, int T, int d,
                 const double* gamma, double* dx, double* dgamma, double* dbeta) {
    for (int i = 0; i < T; ++i) {
        const double* dyrow = dy + static_cast<std::size_t>(i) * d;
        const double* xh = cache.xhat.data() + static_cast<std::size_t>(i) * d;
        double mean_g = 0.0;
        double mean_gx = 0.0;
        for (int j = 0; j < d; ++j) {
            const double gd = dyrow[j] * gamma[j];
            mean_g += gd;
            mean_gx += gd * xh[j];
        }
        mean_g /= d;
        mean_gx /= d;
        double* dxrow = dx + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            const double gd = dyrow[j] * gamma[j];
            dxrow[j] = (gd - mean_g - xh[j] * mean_gx) * cache.inv_s[i];
            dgamma[j] += dyrow[j] * xh[j];
            dbeta[j] += dyrow[j];
        }
    }
}

// y = x W + b with x: T x din, W: din x dout (row-major), y: T x dout.
void linear_forward(const double* x, int T, int din, int dout, const double* W,
                    const double* b, double* y) {
    for (int i = 0; i < T; ++i) {
        double* yrow = y + static_cast<std::size_t>(i) * dout;
        for (int j = 0; j < dout; ++j) yrow[j] = b[j];
        const double* xrow = x + static_cast<std::size_t>(i) * din;
        for (int k = 0; k < din; ++k) {
            const double xv = xrow[k];
            const double* wrow = W + static_cast<std::size_t>(k) * dout;
            for (int j = 0; j < dout; ++j) yrow[j] += xv * wrow[j];
        }
    }
}

// dW += x^T dy, db += column sums of dy, dx += dy W^T (dx may be null).
void linear_backward(const double* x, const double* dy, int T, int din, int dout,
                     const double* W, double* dx, double* dW, double* db) {
    for (int i = 0; i < T; ++i) {
        const double* dyrow = dy + static_cast<std::size_t>(i) * dout;
        for (int j = 0; j < dout; ++j) db[j] += dyrow[j];
        const double* xrow = x + static_cast<std::size_t>(i) * din;
        double* dxrow = dx == nullptr ? nullptr : dx + static_cast<std::size_t>(i) * din;
        for (int k = 0; k < din; ++k) {
            const double xv = xrow[k];
            double* dwrow = dW + static_cast<std::size_t>(k) * dout;
            const double* wrow = W + static_cast<std::size_t>(k) * dout;
            double acc = 0.0;
            for (int j = 0; j < dout; ++j) {
                dwrow[j] += xv * dyrow[j];
                acc += wrow[j] * dyrow[j];
            }
            if (dxrow != nullptr) dxrow[k] += acc;
        }
    }
}

struct LayerCache {
    std::vector<double> h_in, q, k, v, attn, ctx, a, h1, fpre, fact, bsum, h_out;
    LnCache ln1, ln2;
};

struct FwdCache {
    int T = 0;
    std::vector<int> ids;
    std::vector<double> x0, h_emb;
    LnCache ln_emb;
    std::vector<LayerCache> layers;
    const std::vector<double>* h_final = nullptr;
};

std::vector<int> to_ids(const TokenVocab& vocab, const std::vector<std::string>& tokens) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& token : tokens) {
        ids.push_back(vocab.id(token));
    }
    return ids;
}

void forward(const ModelParams& P, const ParamLayout& L, const std::vector<int>& ids,
             FwdCache& C) {
    const ModelConfig& cfg = P.config;
    const int T = static_cast<int>(ids.size());
    if (T < 1) {
        throw ArgumentError("mlm: cannot encode an empty sequence");
    }
    if (T > cfg.max_len) {
        throw ArgumentError("mlm: sequence longer than max_len");
    }
    const int d = cfg.d_model;
    const int H = cfg.heads;
    const int dh = d / H;
    const int F = cfg.d_ff;
    const double* th = P.theta.data();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::size_t Td = static_cast<std::size_t>(T) * d;

    C.T = T;
    C.ids = ids;
    C.x0.resize(Td);
    for (int i = 0; i < T; ++i) {
        const double* e = th + L.tok_emb + static_cast<std::size_t>(ids[i]) * d;
        const double* p = th + L.pos_emb + static_cast<std::size_t>(i) * d;
        double* row = C.x0.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) row[j] = e[j] + p[j];
    }
    C.h_emb.resize(Td);
    ln_forward(C.x0.data(), T, d, th + L.emb_ln_g, th + L.emb_ln_b,
               C.h_emb.data(), C.ln_emb);

    C.layers.assign(static_cast<std::size_t>(cfg.layers), LayerCache{});
    const std::vector<double>* h_prev = &C.h_emb;
    for (int l = 0; l < cfg.layers; ++l) {
        LayerCache& lc = C.layers[l];
        const ParamLayout::Layer& off = L.layers[l];
        lc.h_in = *h_prev;

        lc.q.resize(Td);
        lc.k.resize(Td);
        lc.v.resize(Td);
        linear_forward(lc.h_in.data(), T, d, d, th + off.wq, th + off.bq, lc.q.data());
        linear_forward(lc.h_in.data(), T, d, d, th + off.wk, th + off.bk, lc.k.data());
        linear_forward(lc.h_in.data(), T, d, d, th + off.wv, th + off.bv, lc.v.data());

        lc.attn.assign(static_cast<std::size_t>(H) * T * T, 0.0);
        lc.ctx.assign(Td, 0.0);
        for (int h = 0; h < H; ++h) {
            for (int i = 0; i < T; ++i) {
                double* arow = lc.attn.data() + (static_cast<std::size_t>(h) * T + i) * T;
                const double* qrow = lc.q.data() + static_cast<std::size_t>(i) * d + h * dh;
                double mx = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < T; ++j) {
                    const double* krow = lc.k.data() + static_cast<std::size_t>(j) * d + h * dh;
                    double s = 0.0;
                    for (int t = 0; t < dh; ++t) s += qrow[t] * krow[t];
                    s *= scale;
                    arow[j] = s;
                    mx = std::max(mx, s);
                }
                double z = 0.0;
                for (int j = 0; j < T; ++j) {
                    arow[j] = std::exp(arow[j] - mx);
                    z += arow[j];
                }
                double* crow = lc.ctx.data() + static_cast<std::size_t>(i) * d + h * dh;
                for (int j = 0; j < T; ++j) {
                    arow[j] /= z;
                    const double* vrow = lc.v.data() + static_cast<std::size_t>(j) * d + h * dh;
                    const double aij = arow[j];
                    for (int t = 0; t < dh; ++t) crow[t] += aij * vrow[t];
                }
            }
        }

        lc.a.resize(Td);
        linear_forward(lc.ctx.data(), T, d, d, th + off.wo, th + off.bo, lc.a.data());
        for (std::size_t idx = 0; idx < Td; ++idx) lc.a[idx] += lc.h_in[idx];
        lc.h1.resize(Td);
        ln_forward(lc.a.data(), T, d, th + off.ln1_g, th + off.ln1_b, lc.h1.data(), lc.ln1);

        lc.fpre.resize(static_cast<std::size_t>(T) * F);
        linear_forward(lc.h1.data(), T, d, F, th + off.w1, th + off.b1, lc.fpre.data());
        lc.fact.resize(lc.fpre.size());
        for (std::size_t idx = 0; idx < lc.fpre.size(); ++idx) {
            lc.fact[idx] = gelu(lc.fpre[idx]);
        }
        lc.bsum.resize(Td);
        linear_forward(lc.fact.data(), T, F, d, th + off.w2, th + off.b2, lc.bsum.data());
        for (std::size_t idx = 0; idx < Td; ++idx) lc.bsum[idx] += lc.h1[idx];
        lc.h_out.resize(Td);
        ln_forward(lc.bsum.data(), T, d, th + off.ln2_g, th + off.ln2_b,
                   lc.h_out.data(), lc.ln2);
        h_prev = &lc.h_out;
    }
    C.h_final = h_prev;
}

// Gold token id for every predicted position, in instance order.
std::vector<std::pair<int, int>> target_positions(const ModelParams& P,
                                                  const MaskedInstance& instance,
                                                  int T) {
    std::vector<std::pair<int, int>> out;
    for (const MaskedTarget& target : instance.targets) {
        if (target.span.start < 0 || target.span.end >= T ||
            target.span.start > target.span.end) {
            throw ArgumentError("mlm: target span out of bounds");
        }
        if (static_cast<int>(target.tokens.size()) != target.span.length()) {
            throw ArgumentError("mlm: target tokens do not fill their span");
        }
        for (int p = target.span.start; p <= target.span.end; ++p) {
            out.emplace_back(p, P.vocab.id(target.tokens[p - target.span.start]));
        }
    }
    return out;
}

// Sum of per-position NLL over the instance's targets.  When gradv is given,
// the unscaled output-side gradients are accumulated there and dH receives
// d(loss)/d(h_final).
double target_nll(const ModelParams& P, const ParamLayout& L, const FwdCache& C,
                  const std::vector<std::pair<int, int>>& targets, double* gradv,
                  double* dH) {
    const int d = P.config.d_model;
    const int V = P.config.vocab_size;
    const double* th = P.theta.data();
    const double* h = C.h_final->data();
    std::vector<double> logits(static_cast<std::size_t>(V));
    double nll = 0.0;
    for (const auto& [pos, gold] : targets) {
        const double* hrow = h + static_cast<std::size_t>(pos) * d;
        double mx = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < V; ++v) {
            const double* erow = th + L.tok_emb + static_cast<std::size_t>(v) * d;
            double s = th[L.out_bias + v];
            for (int j = 0; j < d; ++j) s += hrow[j] * erow[j];
            logits[v] = s;
            mx = std::max(mx, s);
        }
        double z = 0.0;
        for (int v = 0; v < V; ++v) z += std::exp(logits[v] - mx);
        const double lse = mx + std::log(z);
        nll += lse - logits[gold];
        if (gradv != nullptr) {
            double* dHrow = dH + static_cast<std::size_t>(pos) * d;
            for (int v = 0; v < V; ++v) {
                const double dl = std::exp(logits[v] - lse) - (v == gold ? 1.0 : 0.0);
                gradv[L.out_bias + v] += dl;
                double* derow = gradv + L.tok_emb + static_cast<std::size_t>(v) * d;
                const double* erow = th + L.tok_emb + static_cast<std::size_t>(v) * d;
                for (int j = 0; j < d; ++j) {
                    derow[j] += dl * hrow[j];
                    dHrow[j] += dl * erow[j];
                }
            }
        }
    }
    return nll;
}

void backward(const ModelParams& P, const ParamLayout& L, const FwdCache& C,
              std::vector<double>& dH, double* gradv) {
    const ModelConfig& cfg = P.config;
    const int T = C.T;
    const int d = cfg.d_model;
    const int H = cfg.heads;
    const int dh = d / H;
    const int F = cfg.d_ff;
    const double* th = P.theta.data();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::size_t Td = static_cast<std::size_t>(T) * d;

    std::vector<double> d_b(Td), d_h1(Td), d_fact(static_cast<std::size_t>(T) * F);
    std::vector<double> d_fpre(d_fact.size()), d_a(Td), d_hin(Td), d_ctx(Td);
    std::vector<double> d_q(Td), d_k(Td), d_v(Td), da(static_cast<std::size_t>(T));

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const LayerCache& lc = C.layers[l];
        const ParamLayout::Layer& off = L.layers[l];

        ln_backward(dH.data(), lc.ln2, T, d, th + off.ln2_g, d_b.data(),
                    gradv + off.ln2_g, gradv + off.ln2_b);

        d_h1 = d_b;  // residual path around the feed-forward block
        std::fill(d_fact.begin(), d_fact.end(), 0.0);
        linear_backward(lc.fact.data(), d_b.data(), T, F, d, th + off.w2,
                        d_fact.data(), gradv + off.w2, gradv + off.b2);
        for (std::size_t idx = 0; idx < d_fact.size(); ++idx) {
            d_fpre[idx] = d_fact[idx] * gelu_grad(lc.fpre[idx]);
        }
        linear_backward(lc.h1.data(), d_fpre.data(), T, d, F, th + off.w1,
                        d_h1.data(), gradv + off.w1, gradv + off.b1);

        ln_backward(d_h1.data(), lc.ln1, T, d, th + off.ln1_g, d_a.data(),
                    gradv + off.ln1_g, gradv + off.ln1_b);

        d_hin = d_a;  // residual path around attention
        std::fill(d_ctx.begin(), d_ctx.end(), 0.0);
        linear_backward(lc.ctx.data(), d_a.data(), T, d, d, th + off.wo,
                        d_ctx.data(), gradv + off.wo, gradv + off.bo);

        std::fill(d_q.begin(), d_q.end(), 0.0);
        std::fill(d_k.begin(), d_k.end(), 0.0);
        std::fill(d_v.begin(), d_v.end(), 0.0);
        for (int h = 0; h < H; ++h) {
            for (int i = 0; i < T; ++i) {
                const double* arow =
                    lc.attn.data() + (static_cast<std::size_t>(h) * T + i) * T;
                const double* dctx_row =
                    d_ctx.data() + static_cast<std::size_t>(i) * d + h * dh;
                double dot_da_a = 0.0;
                for (int j = 0; j < T; ++j) {
                    const double* vrow =
                        lc.v.data() + static_cast<std::size_t>(j) * d + h * dh;
                    double* dvrow = d_v.data() + static_cast<std::size_t>(j) * d + h * dh;
                    double acc = 0.0;
                    const double aij = arow[j];
                    for (int t = 0; t < dh; ++t) {
                        acc += dctx_row[t] * vrow[t];
                        dvrow[t] += aij * dctx_row[t];
                    }
                    da[j] = acc;
                    dot_da_a += acc * aij;
                }
                const double* qrow = lc.q.data() + static_cast<std::size_t>(i) * d + h * dh;
                double* dqrow = d_q.data() + static_cast<std::size_t>(i) * d + h * dh;
                for (int j = 0; j < T; ++j) {
                    const double ds = arow[j] * (da[j] - dot_da_a) * scale;
                    const double* krow =
                        lc.k.data() + static_cast<std::size_t>(j) * d + h * dh;
                    double* dkrow = d_k.data() + static_cast<std::size_t>(j) * d + h * dh;
                    for (int t = 0; t < dh; ++t) {
                        dqrow[t] += ds * krow[t];
                        dkrow[t] += ds * qrow[t];
                    }
                }
            }
        }
        linear_backward(lc.h_in.data(), d_q.data(), T, d, d, th + off.wq,
                        d_hin.data(), gradv + off.wq, gradv + off.bq);
        linear_backward(lc.h_in.data(), d_k.data(), T, d, d, th + off.wk,
                        d_hin.data(), gradv + off.wk, gradv + off.bk);
        linear_backward(lc.h_in.data(), d_v.data(), T, d, d, th + off.wv,
                        d_hin.data(), gradv + off.wv, gradv + off.bv);
        dH = d_hin;
    }

    std::vector<double> d_x0(Td);
    ln_backward(dH.data(), C.ln_emb, T, d, th + L.emb_ln_g, d_x0.data(),
                gradv + L.emb_ln_g, gradv + L.emb_ln_b);
    for (int i = 0; i < T; ++i) {
        double* derow = gradv + L.tok_emb + static_cast<std::size_t>(C.ids[i]) * d;
        double* dprow = gradv + L.pos_emb + static_cast<std::size_t>(i) * d;
        const double* row = d_x0.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            derow[j] += row[j];
            dprow[j] += row[j];
        }
    }
}

}  // namespace

TokenVocab TokenVocab::build(const DocumentSet& set,
                             const std::vector<std::string>& specials) {
    TokenVocab vocab;
    for (const std::string& special : specials) {
        if (!vocab.ids.emplace(special, static_cast<int>(vocab.tokens.size())).second) {
            throw ArgumentError("mlm: duplicate special token '" + special + "'");
        }
        vocab.tokens.push_back(special);
    }
    std::set<std::string> distinct;
    for (const Document& doc : set.docs) {
        distinct.insert(doc.tokens.begin(), doc.tokens.end());
    }
    for (const std::string& token : distinct) {
        if (vocab.ids.emplace(token, static_cast<int>(vocab.tokens.size())).second) {
            vocab.tokens.push_back(token);
        }
    }
    return vocab;
}

int TokenVocab::id(const std::string& token) const {
    const auto it = ids.find(token);
    if (it == ids.end()) {
        throw VocabError("mlm: token '" + token + "' not in vocabulary");
    }
    return it->second;
}

bool TokenVocab::contains(const std::string& token) const {
    return ids.find(token) != ids.end();
}

ParamLayout make_layout(const ModelConfig& config) {
    check_config(config);
    const std::size_t V = static_cast<std::size_t>(config.vocab_size);
    const std::size_t d = static_cast<std::size_t>(config.d_model);
    const std::size_t F = static_cast<std::size_t>(config.d_ff);

    ParamLayout layout;
    std::size_t at = 0;
    const auto claim = [&at](std::size_t n) {
        const std::size_t offset = at;
        at += n;
        return offset;
    };
    layout.tok_emb = claim(V * d);
    layout.pos_emb = claim(static_cast<std::size_t>(config.max_len) * d);
    layout.emb_ln_g = claim(d);
    layout.emb_ln_b = claim(d);
    layout.layers.resize(static_cast<std::size_t>(config.layers));
    for (ParamLayout::Layer& layer : layout.layers) {
        layer.wq = claim(d * d);
        layer.bq = claim(d);
        layer.wk = claim(d * d);
        layer.bk = claim(d);
        layer.wv = claim(d * d);
        layer.bv = claim(d);
        layer.wo = claim(d * d);
        layer.bo = claim(d);
        layer.ln1_g = claim(d);
        layer.ln1_b = claim(d);
        layer.w1 = claim(d * F);
        layer.b1 = claim(F);
        layer.w2 = claim(F * d);
        layer.b2 = claim(d);
        layer.ln2_g = claim(d);
        layer.ln2_b = claim(d);
    }
    layout.out_bias = claim(V);
    layout.total = at;
    return layout;
}

ModelParams init_model(ModelConfig config, TokenVocab vocab, std::uint64_t seed) {
    if (config.vocab_size == 0) {
        config.vocab_size = static_cast<int>(vocab.size());
    }
    if (config.vocab_size != static_cast<int>(vocab.size())) {
        throw ConfigError("mlm: config vocab_size does not match the vocabulary");
    }
    const ParamLayout layout = make_layout(config);

    ModelParams params;
    params.config = config;
    params.vocab = std::move(vocab);
    params.theta.assign(layout.total, 0.0);

    Rng rng(seed);
    const auto fill_normal = [&](std::size_t offset, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            params.theta[offset + i] = 0.02 * rng.normal();
        }
    };
    const auto fill_ones = [&](std::size_t offset, std::size_t n) {
        std::fill_n(params.theta.begin() + offset, n, 1.0);
    };
    const std::size_t V = static_cast<std::size_t>(config.vocab_size);
    const std::size_t d = static_cast<std::size_t>(config.d_model);
    const std::size_t F = static_cast<std::size_t>(config.d_ff);

    fill_normal(layout.tok_emb, V * d);
    fill_normal(layout.pos_emb, static_cast<std::size_t>(config.max_len) * d);
    fill_ones(layout.emb_ln_g, d);
    for (const ParamLayout::Layer& layer : layout.layers) {
        fill_normal(layer.wq, d * d);
        fill_normal(layer.wk, d * d);
        fill_normal(layer.wv, d * d);
        fill_normal(layer.wo, d * d);
        fill_ones(layer.ln1_g, d);
        fill_normal(layer.w1, d * F);
        fill_normal(layer.w2, F * d);
        fill_ones(layer.ln2_g, d);
    }
    return params;
}

std::vector<double> encode_states(const ModelParams& params,
                                  const std::vector<std::string>& input) {
    const ParamLayout layout = make_layout(params.config);
    FwdCache cache;
    forward(params, layout, to_ids(params.vocab, input), cache);
    return *cache.h_final;
}

double mlm_loss(const ModelParams& params, const MaskedInstance& instance) {
    if (instance.targets.empty()) {
        return 0.0;
    }
    const ParamLayout layout = make_layout(params.config);
    FwdCache cache;
    forward(params, layout, to_ids(params.vocab, instance.input), cache);
    const auto targets = target_positions(params, instance, cache.T);
    return target_nll(params, layout, cache, targets, nullptr, nullptr) /
           static_cast<double>(targets.size());
}

double batch_loss(const ModelParams& params, const std::vector<MaskedInstance>& batch) {
    const ParamLayout layout = make_layout(params.config);
    double nll = 0.0;
    long count = 0;
    for (const MaskedInstance& instance : batch) {
        if (instance.targets.empty()) {
            continue;
        }
        FwdCache cache;
        forward(params, layout, to_ids(params.vocab, instance.input), cache);
        const auto targets = target_positions(params, instance, cache.T);
        nll += target_nll(params, layout, cache, targets, nullptr, nullptr);
        count += static_cast<long>(targets.size());
    }
    return count == 0 ? 0.0 : nll / static_cast<double>(count);
}

GradResult grad(const ModelParams& params, const std::vector<MaskedInstance>& batch) {
    const ParamLayout layout = make_layout(params.config);
    GradResult result;
    result.grad.assign(layout.total, 0.0);

    double nll = 0.0;
    for (const MaskedInstance& instance : batch) {
        if (instance.targets.empty()) {
            ++result.degenerate_instances;
            continue;
        }
        FwdCache cache;
        forward(params, layout, to_ids(params.vocab, instance.input), cache);
        const auto targets = target_positions(params, instance, cache.T);
        std::vector<double> dH(static_cast<std::size_t>(cache.T) * params.config.d_model,
                               0.0);
        nll += target_nll(params, layout, cache, targets, result.grad.data(), dH.data());
        backward(params, layout, cache, dH, result.grad.data());
        result.total_targets += static_cast<long>(targets.size());
    }

    if (result.total_targets > 0) {
        result.loss = nll / static_cast<double>(result.total_targets);
        const double inv = 1.0 / static_cast<double>(result.total_targets);
        for (double& g : result.grad) g *= inv;
    }
    return result;
}

TrainReport train(ModelParams& params, const std::vector<MaskedInstance>& data,
                  const TrainOptions& options) {
    if (data.empty()) {
        throw ArgumentError("mlm: cannot train on an empty dataset");
    }
    if (options.steps < 1 || !(options.lr > 0.0) || options.batch_size < 1) {
        throw ConfigError("mlm: invalid training options");
    }
    const long warmup = std::max<long>(
        1, std::llround(options.warmup_fraction * static_cast<double>(options.steps)));

    Rng rng(options.seed);
    TrainReport report;
    report.losses.reserve(static_cast<std::size_t>(options.steps));
    std::vector<MaskedInstance> batch;
    for (long step = 0; step < options.steps; ++step) {
        batch.clear();
        for (int b = 0; b < options.batch_size; ++b) {
            batch.push_back(data[rng.index(data.size())]);
        }
        const GradResult g = grad(params, batch);
        report.degenerate_instances += g.degenerate_instances;
        if (g.total_targets == 0) {
            report.losses.push_back(0.0);
            continue;
        }
        if (!std::isfinite(g.loss)) {
            throw TrainingError("mlm: loss became non-finite", step);
        }
        const double lr = step < warmup
                              ? options.lr * static_cast<double>(step + 1) /
                                    static_cast<double>(warmup)
                              : options.lr;
        for (std::size_t i = 0; i < params.theta.size(); ++i) {
            params.theta[i] -= lr * g.grad[i];
        }
        report.losses.push_back(g.loss);
    }
    return report;
}

TrainReport train(ModelParams& params, const std::vector<MaskedInstance>& data,
                  long steps, double lr, std::uint64_t seed) {
    TrainOptions options;
    options.steps = steps;
    options.lr = lr;
    options.seed = seed;
    return train(params, data, options);
}

std::vector<double> embed(const ModelParams& params,
                          const std::vector<std::string>& tokens) {
    if (tokens.empty()) {
        throw ArgumentError("mlm: cannot embed an empty sequence");
    }
    const std::size_t keep = std::min(
        tokens.size(), static_cast<std::size_t>(params.config.max_len - 2));
    std::vector<std::string> input;
    input.reserve(keep + 2);
    input.push_back(params.config.cls_token);
    input.insert(input.end(), tokens.begin(), tokens.begin() + keep);
    input.push_back(params.config.sep_token);

    const std::vector<double> states = encode_states(params, input);
    const int d = params.config.d_model;
    const int T = static_cast<int>(input.size());
    std::vector<double> pooled(static_cast<std::size_t>(d), 0.0);
    for (int i = 1; i + 1 < T; ++i) {
        const double* row = states.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) pooled[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(T - 2);
    for (double& x : pooled) x *= inv;
    normalize_in_place(pooled);
    return pooled;
}

EmbeddingProvider make_embedding_provider(const ModelParams& params) {
    const auto shared = std::make_shared<const ModelParams>(params);
    return [shared](const std::string& text) {
        std::istringstream in(text);
        std::vector<std::string> kept;
        std::string token;
        while (in >> token) {
            if (shared->vocab.contains(token)) {
                kept.push_back(token);
            }
        }
        if (kept.empty()) {
            throw VocabError("mlm: no embeddable tokens in '" + text + "'");
        }
        return embed(*shared, kept);
    };
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = "gramvec-checkpoint";
    j["version"] = 1;
    j["config"] = {{"layers", params.config.layers},
                   {"heads", params.config.heads},
                   {"d_model", params.config.d_model},
                   {"d_ff", params.config.d_ff},
                   {"vocab_size", params.config.vocab_size},
                   {"max_len", params.config.max_len},
                   {"cls_token", params.config.cls_token},
                   {"sep_token", params.config.sep_token}};
    j["vocab"] = params.vocab.tokens;
    j["theta"] = params.theta;

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("mlm: cannot open '" + path + "' for writing");
    }
    out << j.dump() << '\n';
    if (!out) {
        throw IoError("mlm: failed while writing '" + path + "'");
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("mlm: cannot open '" + path + "' for reading");
    }
    nlohmann::json j;
    try {
        in >> j;
        if (j.at("format").get<std::string>() != "gramvec-checkpoint" ||
            j.at("version").get<int>() != 1) {
            throw FormatError("mlm: not a recognized checkpoint file");
        }
        ModelParams params;
        const auto& c = j.at("config");
        params.config.layers = c.at("layers").get<int>();
        params.config.heads = c.at("heads").get<int>();
        params.config.d_model = c.at("d_model").get<int>();
        params.config.d_ff = c.at("d_ff").get<int>();
        params.config.vocab_size = c.at("vocab_size").get<int>();
        params.config.max_len = c.at("max_len").get<int>();
        params.config.cls_token = c.at("cls_token").get<std::string>();
        params.config.sep_token = c.at("sep_token").get<std::string>();
        params.vocab.tokens = j.at("vocab").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < params.vocab.tokens.size(); ++i) {
            params.vocab.ids.emplace(params.vocab.tokens[i], static_cast<int>(i));
        }
        params.theta = j.at("theta").get<std::vector<double>>();

        if (static_cast<int>(params.vocab.size()) != params.config.vocab_size) {
            throw FormatError("mlm: checkpoint vocabulary does not match its config");
        }
        if (params.theta.size() != make_layout(params.config).total) {
            throw FormatError("mlm: checkpoint parameter count does not match its config");
        }
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("mlm: bad checkpoint: ") + e.what());
    }
}

}  // namespace gramvec
