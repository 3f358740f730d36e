#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gramvec/corpus.hpp"
#include "gramvec/embedding.hpp"
#include "gramvec/masking.hpp"

namespace gramvec {

// Token-level vocabulary of the encoder: special markers first, then the
// distinct corpus tokens in sorted order.
struct TokenVocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> ids;

    static TokenVocab build(const DocumentSet& set,
                            const std::vector<std::string>& specials);

    int id(const std::string& token) const;  // throws VocabError when absent
    bool contains(const std::string& token) const;
    std::size_t size() const { return tokens.size(); }
};

struct ModelConfig {
    int layers = 2;
    int heads = 4;
    int d_model = 64;
    int d_ff = 128;
    int vocab_size = 0;  // filled in from the vocabulary when 0
    int max_len = 128;
    std::string cls_token = "[CLS]";  // markers wrapped around every input
    std::string sep_token = "[SEP]";
};

// Offsets of every tensor inside the flat parameter vector.  Public so tests
// can read and perturb individual weights without private access.
struct ParamLayout {
    struct Layer {
        std::size_t wq, bq, wk, bk, wv, bv, wo, bo;  // attention
        std::size_t ln1_g, ln1_b;                    // post-attention norm
        std::size_t w1, b1, w2, b2;                  // feed-forward
        std::size_t ln2_g, ln2_b;                    // post-ffn norm
    };

    std::size_t tok_emb = 0;   // vocab_size x d_model, rows are tied with the output layer
    std::size_t pos_emb = 0;   // max_len x d_model
    std::size_t emb_ln_g = 0;  // d_model
    std::size_t emb_ln_b = 0;  // d_model
    std::vector<Layer> layers;
    std::size_t out_bias = 0;  // vocab_size
    std::size_t total = 0;
};

ParamLayout make_layout(const ModelConfig& config);

struct ModelParams {
    ModelConfig config;
    TokenVocab vocab;
    std::vector<double> theta;
};

// Fresh parameters: weights and embeddings N(0, 0.02^2), biases zero, norm
// gains one.  The draw order follows the layout, so a seed pins every value.
ModelParams init_model(ModelConfig config, TokenVocab vocab, std::uint64_t seed);

// Hidden states (T x d_model, row-major) for a full marker-wrapped input.
std::vector<double> encode_states(const ModelParams& params,
                                  const std::vector<std::string>& input);

// Span-corruption objective: the model predicts every original token inside
// the corrupted spans; the loss is the mean negative log-likelihood over
// those positions, each conditioned on the full corrupted sequence.
// An instance without targets scores 0.
double mlm_loss(const ModelParams& params, const MaskedInstance& instance);

// Mean NLL over all target positions pooled across the batch.
double batch_loss(const ModelParams& params, const std::vector<MaskedInstance>& batch);

struct GradResult {
    std::vector<double> grad;  // d(batch_loss)/d(theta), same layout as theta
    double loss = 0.0;
    long total_targets = 0;
    int degenerate_instances = 0;  // instances that had nothing to predict
};

GradResult grad(const ModelParams& params, const std::vector<MaskedInstance>& batch);

struct TrainOptions {
    long steps = 0;
    double lr = 0.0;
    std::uint64_t seed = 0;
    int batch_size = 16;
    // The learning rate ramps linearly over the first warmup_fraction of the
    // steps, then stays constant.
    double warmup_fraction = 0.1;
};

struct TrainReport {
    std::vector<double> losses;  // batch loss at every step
    long degenerate_instances = 0;
};

// Plain SGD over uniformly re-sampled batches.  Throws TrainingError when the
// loss stops being finite.
TrainReport train(ModelParams& params, const std::vector<MaskedInstance>& data,
                  const TrainOptions& options);
TrainReport train(ModelParams& params, const std::vector<MaskedInstance>& data,
                  long steps, double lr, std::uint64_t seed);

// Sequence embedding: wrap in markers, encode, average the content positions,
// scale to unit norm.  Unknown tokens throw VocabError.
std::vector<double> embed(const ModelParams& params,
                          const std::vector<std::string>& tokens);

// Adapter for the evaluation code: splits on whitespace, silently drops
// unknown tokens, and embeds the rest (all-unknown input still throws).
EmbeddingProvider make_embedding_provider(const ModelParams& params);

// JSON checkpoint; reloading restores every parameter bit-for-bit.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace gramvec
