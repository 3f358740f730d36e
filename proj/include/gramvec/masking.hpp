#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gramvec/corpus.hpp"
#include "gramvec/ngram.hpp"
#include "gramvec/rng.hpp"

namespace gramvec {

// Inclusive token range [start, end] in an instance's input sequence.
struct Span {
    int start = 0;
    int end = 0;

    int length() const { return end - start + 1; }
};

enum class CorruptionMode { mask, random, keep };

std::string mode_name(CorruptionMode mode);
CorruptionMode mode_from_name(const std::string& name);

struct MaskingConfig {
    double mask_ratio = 0.15;     // fraction of tokens chosen for prediction
    double p_mask = 0.8;          // span replaced by mask_token
    double p_random = 0.1;        // span replaced by random real tokens
    double p_keep = 0.1;          // span left untouched (still predicted)
    int max_n = 10;               // longest multi-token span
    double geo_p = 0.2;           // geometric span-length parameter (baseline)
    int geo_lmax = 10;
    int max_seq_len = 512;        // inputs longer than this are truncated
    std::string mask_token = "[MASK]";
    std::string cls_token = "[CLS]";
    std::string sep_token = "[SEP]";
    // Pool for the p_random replacement.  When empty, the sorted distinct
    // tokens of the sequence being corrupted are used instead.
    std::vector<std::string> random_tokens;
};

struct MaskedTarget {
    Span span;                        // location in MaskedInstance::input
    std::vector<std::string> tokens;  // original tokens to be predicted
    CorruptionMode mode;
};

struct MaskedInstance {
    std::vector<std::string> input;    // cls + corrupted tokens + sep
    std::vector<MaskedTarget> targets; // selection order preserved
    std::uint64_t seed = 0;            // the draw that produced this instance
};

// Number of prediction tokens budgeted for a sequence of length len:
// max(1, round(mask_ratio * len)), halves rounding away from zero.
int mask_budget(double mask_ratio, int len);

// Every occurrence of a vocabulary sequence in `tokens`, all lengths from 2
// up to the vocabulary's longest entry.  Matches may overlap; spans index
// `tokens` directly.  Ordered by (start asc, longer first).
std::vector<std::pair<Span, NgramEntry>> match_ngrams(
    const std::vector<std::string>& tokens, const NgramVocab& vocab);

// Greedy leftmost-longest scan: at each position take the longest vocabulary
// match; overlapped shorter matches never fire.  Same ordering as above.
std::vector<std::pair<Span, NgramEntry>> greedy_longest_matches(
    const std::vector<std::string>& tokens, const NgramVocab& vocab);

// Builds one training instance.  Candidate spans are the greedy matches plus
// a single-token span for every position they leave uncovered; spans are
// drawn uniformly without replacement, skipping any that overlap previous
// picks or would overshoot the budget by a full span, until the budget is
// met.  Each chosen span is corrupted whole by one draw of
// (p_mask | p_random | p_keep).  `matches` must be non-overlapping and
// ordered, as produced by greedy_longest_matches.
MaskedInstance generate_instance(const std::vector<std::string>& tokens,
                                 const std::vector<std::pair<Span, NgramEntry>>& matches,
                                 const MaskingConfig& config, std::uint64_t seed);

// Baseline span sampler: lengths from a geometric distribution truncated at
// geo_lmax, placed uniformly over free positions until the budget is met.
std::vector<Span> sample_geometric_spans(int token_count, const MaskingConfig& config,
                                         Rng& rng);

MaskedInstance generate_geometric_instance(const std::vector<std::string>& tokens,
                                           const MaskingConfig& config,
                                           std::uint64_t seed);

// One dynamic-masking pass over the corpus: every document is truncated to
// max_seq_len - 2 tokens, matched against the vocabulary, and corrupted with
// the per-document seed combine_seed({base_seed, doc.id, epoch}), so every
// epoch re-draws fresh spans.  `geometric` switches to the baseline sampler.
std::vector<MaskedInstance> generate_epoch_dataset(const DocumentSet& set,
                                                   const NgramVocab& vocab,
                                                   const MaskingConfig& config,
                                                   std::uint64_t base_seed, int epoch,
                                                   bool geometric = false);

// JSONL: {"input": [...], "targets": [{"start","end","tokens","mode"}], "seed"}
std::string instance_to_json(const MaskedInstance& instance);
MaskedInstance instance_from_json(const std::string& text);
void save_instances_jsonl(const std::vector<MaskedInstance>& instances,
                          const std::string& path);
std::vector<MaskedInstance> load_instances_jsonl(const std::string& path);

}  // namespace gramvec
