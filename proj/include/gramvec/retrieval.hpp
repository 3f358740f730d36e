#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gramvec/embedding.hpp"

namespace gramvec {

// Inverted statistics over a fixed document collection.  Immutable after
// build; safe for concurrent queries.
struct Index {
    std::int64_t doc_count = 0;
    std::unordered_map<std::string, std::int64_t> df;                // docs containing t
    std::vector<std::unordered_map<std::string, std::int64_t>> tf;  // per document
    std::vector<std::int64_t> doc_len;
    double avgdl = 0.0;
    std::vector<std::vector<std::string>> docs;  // retained for re-ranking
};

enum class LexicalMode { tfidf, bm25 };

// Throws EmptyCorpusError on an empty collection.
Index build_index(const std::vector<std::vector<std::string>>& docs);

// One document per line, tokens separated by whitespace.
std::vector<std::vector<std::string>> load_token_lines(const std::string& path);

// bm25: sum over query tokens of IDF(t) * tf*(k1+1) / (tf + k1*(1-b+b*len/avgdl))
//       with IDF(t) = ln(1 + (N-df+0.5)/(df+0.5)), k1 = 1.2, b = 0.75;
//       repeated query tokens contribute once per occurrence.
// tfidf: cosine between query and document vectors with weights
//       (1 + ln tf) * ln(N/df) over the terms present (0 when df = 0).
double score_lexical(const Index& index, const std::vector<std::string>& query,
                     std::size_t doc_id, LexicalMode mode);

struct ScoredDoc {
    std::size_t id = 0;
    double score = 0.0;
};

// Descending score, ties by ascending doc id.
struct RankedList {
    std::vector<ScoredDoc> items;
};

RankedList rank_lexical(const Index& index, const std::vector<std::string>& query,
                        LexicalMode mode);

// Embeds the query and every doc text with the provider, ranks by cosine.
RankedList rank_embedding(const EmbeddingProvider& provider, const std::string& query,
                          const std::vector<std::string>& docs);

struct QAPair {
    std::string question;
    std::string answer;
};

struct QASet {
    std::vector<QAPair> pairs;
    std::vector<std::pair<std::string, std::size_t>> queries;  // text, gold pair id
};

// JSONL: {"question":…,"answer":…} records first, then {"query":…,"gold":id}.
QASet load_qa_jsonl(const std::string& path);

struct FaqMetrics {
    double acc = 0.0;  // fraction of queries whose gold pair ranks first
    double mrr = 0.0;  // mean reciprocal rank of the gold pair
};

struct FaqQueryOutcome {
    std::size_t query_id = 0;
    std::size_t top_doc = 0;
    double top_score = 0.0;
    std::size_t gold_rank = 0;  // 1-based
};

// The ranker maps a query text to a ranking over the QA pairs (ids into
// qa.pairs).  Matching is against the questions, never the answers.
FaqMetrics evaluate_faq(const std::function<RankedList(const std::string&)>& ranker,
                        const QASet& qa,
                        std::vector<FaqQueryOutcome>* outcomes = nullptr);

// TSV: query id, rank-1 doc id, its score, gold rank.
void save_faq_results_tsv(const std::vector<FaqQueryOutcome>& outcomes,
                          const std::string& path);

// A handful of sentences (1..6) sharing a category label, used to drive
// retrieval-backed generation.
struct SentenceTemplate {
    std::vector<std::string> sentences;
    std::string category;
};

// JSONL: {"category":…, "sentences":[…]}
std::vector<SentenceTemplate> load_templates_jsonl(const std::string& path);

struct SentencePick {
    std::string sentence;
    std::size_t doc_id = 0;
    double score = 0.0;       // cosine from the re-rank stage
    std::size_t bm25_rank = 0;  // 1-based rank in the first stage
};

struct TwoStageResult {
    std::vector<SentencePick> picks;
    int k_used = 0;
    bool k_clamped = false;  // requested k exceeded the collection size
};

// Stage 1: BM25 top-k candidates for the sentence; stage 2: cosine re-rank
// with the provider.  The winner is always one of the stage-1 candidates.
TwoStageResult two_stage_retrieve(const Index& index, const EmbeddingProvider& provider,
                                  const SentenceTemplate& tpl, int k);

}  // namespace gramvec
