#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gramvec/corpus.hpp"

namespace gramvec {

// Occurrence counts for every n-gram of one document, n = 1..max_n, gathered
// with a sliding window.  All probabilities later share the same denominator:
// the document's token count.
struct NgramCounts {
    // per_n[n-1] maps the space-joined n-gram to its occurrence count.
    std::vector<std::unordered_map<std::string, std::int64_t>> per_n;
    std::int64_t doc_tokens = 0;
    int max_n = 0;

    std::int64_t count_of(const std::vector<std::string>& tokens) const;
};

struct NgramEntry {
    std::vector<std::string> tokens;
    std::int64_t count = 0;
    double pmi = 0.0;

    int length() const { return static_cast<int>(tokens.size()); }
};

// The merged association lexicon.  Keys are space-joined token sequences.
struct NgramVocab {
    std::unordered_map<std::string, NgramEntry> entries;
    int max_n = 0;

    std::size_t size() const { return entries.size(); }
    const NgramEntry* lookup(const std::string& joined) const;
    const NgramEntry* lookup(const std::vector<std::string>& tokens) const;
};

std::string join_tokens(const std::vector<std::string>& tokens);

NgramCounts count_ngrams(const Document& doc, int max_n);

// Length-normalized association score
//   score(w) = (1/L) * (ln P(w) - sum_k ln P(w_k))
// with every probability estimated as count / doc_tokens.  Single tokens
// score exactly 0.  Throws NotObservedError when the sequence or one of its
// tokens has no count.
double pmi_score(const std::vector<std::string>& tokens, const NgramCounts& counts);

struct VocabBuildOptions {
    int max_n = 10;
    int top_k = 3000;            // kept per document, before merging
    int min_len = 2;             // single tokens carry no association signal
    std::optional<double> pmi_threshold;  // absolute floor, off by default
    int threads = 1;
};

// Scores every document independently, keeps its top_k n-grams ranked by
// (pmi desc, count desc, tokens asc), then merges the per-document lists.  A
// sequence seen in several documents keeps its best (pmi, count) pair, which
// makes the merge independent of document order.
NgramVocab build_ngram_vocab(const DocumentSet& set, const VocabBuildOptions& options);
NgramVocab build_ngram_vocab(const DocumentSet& set, int max_n, int top_k, int min_len = 2);

// Entries ranked the same way documents rank their candidates.
std::vector<NgramEntry> sorted_entries(const NgramVocab& vocab);

// TSV: tokens<TAB>count<TAB>pmi (6 decimal places), best first.
void save_vocab_tsv(const NgramVocab& vocab, const std::string& path);
NgramVocab load_vocab_tsv(const std::string& path);

}  // namespace gramvec
