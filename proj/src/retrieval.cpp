#include "gramvec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gramvec/error.hpp"

namespace gramvec {

namespace {

constexpr double kBm25K1 = 1.2;
constexpr double kBm25B = 0.75;

double bm25_idf(const Index& index, const std::string& term) {
    const auto it = index.df.find(term);
    const double df = it == index.df.end() ? 0.0 : static_cast<double>(it->second);
    const double n = static_cast<double>(index.doc_count);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

// 0 for terms absent from the collection; ln(N/df) otherwise.
double plain_idf(const Index& index, const std::string& term) {
    const auto it = index.df.find(term);
    if (it == index.df.end() || it->second == 0) {
        return 0.0;
    }
    return std::log(static_cast<double>(index.doc_count) /
                    static_cast<double>(it->second));
}

double bm25_score(const Index& index, const std::vector<std::string>& query,
                  std::size_t doc_id) {
    const auto& tf = index.tf[doc_id];
    const double len_norm =
        kBm25K1 * (1.0 - kBm25B +
                   kBm25B * static_cast<double>(index.doc_len[doc_id]) / index.avgdl);
    double score = 0.0;
    for (const std::string& term : query) {
        const auto it = tf.find(term);
        if (it == tf.end()) {
            continue;
        }
        const double f = static_cast<double>(it->second);
        score += bm25_idf(index, term) * f * (kBm25K1 + 1.0) / (f + len_norm);
    }
    return score;
}

double tfidf_score(const Index& index, const std::vector<std::string>& query,
                   std::size_t doc_id) {
    // Query vector: (1 + ln qtf) * idf over distinct query terms.
    std::unordered_map<std::string, std::int64_t> qtf;
    for (const std::string& term : query) {
        ++qtf[term];
    }
    double dot = 0.0;
    double qnorm = 0.0;
    const auto& tf = index.tf[doc_id];
    for (const auto& [term, qcount] : qtf) {
        const double idf = plain_idf(index, term);
        if (idf == 0.0) {
            continue;
        }
        const double qw = (1.0 + std::log(static_cast<double>(qcount))) * idf;
        qnorm += qw * qw;
        const auto it = tf.find(term);
        if (it != tf.end()) {
            dot += qw * (1.0 + std::log(static_cast<double>(it->second))) * idf;
        }
    }
    double dnorm = 0.0;
    for (const auto& [term, count] : tf) {
        const double idf = plain_idf(index, term);
        const double w = (1.0 + std::log(static_cast<double>(count))) * idf;
        dnorm += w * w;
    }
    if (qnorm == 0.0 || dnorm == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(qnorm) * std::sqrt(dnorm));
}

std::string join_with_spaces(const std::vector<std::string>& tokens) {
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            joined.push_back(' ');
        }
        joined += tokens[i];
    }
    return joined;
}

void sort_ranked(std::vector<ScoredDoc>& items) {
    std::sort(items.begin(), items.end(), [](const ScoredDoc& x, const ScoredDoc& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.id < y.id;
    });
}

}  // namespace

Index build_index(const std::vector<std::vector<std::string>>& docs) {
    if (docs.empty()) {
        throw EmptyCorpusError("retrieval: cannot index an empty collection");
    }
    Index index;
    index.doc_count = static_cast<std::int64_t>(docs.size());
    index.tf.resize(docs.size());
    index.doc_len.reserve(docs.size());
    index.docs = docs;

    std::int64_t total_len = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const std::string& token : docs[d]) {
            ++index.tf[d][token];
        }
        index.doc_len.push_back(static_cast<std::int64_t>(docs[d].size()));
        total_len += index.doc_len.back();
        for (const auto& [term, count] : index.tf[d]) {
            ++index.df[term];
        }
    }
    index.avgdl = static_cast<double>(total_len) / static_cast<double>(docs.size());
    return index;
}

std::vector<std::vector<std::string>> load_token_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("retrieval: cannot open '" + path + "' for reading");
    }
    std::vector<std::vector<std::string>> docs;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::vector<std::string> tokens;
        std::string token;
        while (fields >> token) {
            tokens.push_back(std::move(token));
        }
        if (!tokens.empty()) {
            docs.push_back(std::move(tokens));
        }
    }
    return docs;
}

double score_lexical(const Index& index, const std::vector<std::string>& query,
                     std::size_t doc_id, LexicalMode mode) {
    if (doc_id >= index.tf.size()) {
        throw ArgumentError("retrieval: document id out of range");
    }
    return mode == LexicalMode::bm25 ? bm25_score(index, query, doc_id)
                                     : tfidf_score(index, query, doc_id);
}

RankedList rank_lexical(const Index& index, const std::vector<std::string>& query,
                        LexicalMode mode) {
    RankedList ranked;
    ranked.items.reserve(index.tf.size());
    for (std::size_t d = 0; d < index.tf.size(); ++d) {
        ranked.items.push_back(ScoredDoc{d, score_lexical(index, query, d, mode)});
    }
    sort_ranked(ranked.items);
    return ranked;
}

RankedList rank_embedding(const EmbeddingProvider& provider, const std::string& query,
                          const std::vector<std::string>& docs) {
    const std::vector<double> q = provider(query);
    RankedList ranked;
    ranked.items.reserve(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        ranked.items.push_back(ScoredDoc{d, cosine(q, provider(docs[d]))});
    }
    sort_ranked(ranked.items);
    return ranked;
}

QASet load_qa_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("retrieval: cannot open '" + path + "' for reading");
    }
    QASet qa;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            if (j.contains("question")) {
                qa.pairs.push_back(QAPair{j.at("question").get<std::string>(),
                                          j.at("answer").get<std::string>()});
            } else if (j.contains("query")) {
                qa.queries.emplace_back(j.at("query").get<std::string>(),
                                        j.at("gold").get<std::size_t>());
            } else {
                throw FormatError("retrieval: record is neither a pair nor a query",
                                  line_no);
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("retrieval: bad qa record: ") + e.what(),
                              line_no);
        }
    }
    for (const auto& [text, gold] : qa.queries) {
        if (gold >= qa.pairs.size()) {
            throw FormatError("retrieval: query '" + text +
                              "' points at a missing pair");
        }
    }
    return qa;
}

FaqMetrics evaluate_faq(const std::function<RankedList(const std::string&)>& ranker,
                        const QASet& qa, std::vector<FaqQueryOutcome>* outcomes) {
    if (qa.queries.empty()) {
        throw ArgumentError("retrieval: no queries to evaluate");
    }
    FaqMetrics metrics;
    for (std::size_t q = 0; q < qa.queries.size(); ++q) {
        const auto& [text, gold] = qa.queries[q];
        const RankedList ranked = ranker(text);
        if (ranked.items.empty()) {
            throw ArgumentError("retrieval: ranker returned an empty list");
        }
        std::size_t gold_rank = 0;
        for (std::size_t r = 0; r < ranked.items.size(); ++r) {
            if (ranked.items[r].id == gold) {
                gold_rank = r + 1;
                break;
            }
        }
        if (gold_rank == 0) {
            throw ArgumentError("retrieval: ranker never returned the gold pair");
        }
        metrics.acc += gold_rank == 1 ? 1.0 : 0.0;
        metrics.mrr += 1.0 / static_cast<double>(gold_rank);
        if (outcomes != nullptr) {
            outcomes->push_back(FaqQueryOutcome{q, ranked.items[0].id,
                                                ranked.items[0].score, gold_rank});
        }
    }
    metrics.acc /= static_cast<double>(qa.queries.size());
    metrics.mrr /= static_cast<double>(qa.queries.size());
    return metrics;
}

void save_faq_results_tsv(const std::vector<FaqQueryOutcome>& outcomes,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("retrieval: cannot open '" + path + "' for writing");
    }
    out << "query_id\ttop_doc\ttop_score\tgold_rank\n";
    char score_text[64];
    for (const FaqQueryOutcome& o : outcomes) {
        std::snprintf(score_text, sizeof(score_text), "%.6f", o.top_score);
        out << o.query_id << '\t' << o.top_doc << '\t' << score_text << '\t'
            << o.gold_rank << '\n';
    }
    if (!out) {
        throw IoError("retrieval: failed while writing '" + path + "'");
    }
}

std::vector<SentenceTemplate> load_templates_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("retrieval: cannot open '" + path + "' for reading");
    }
    std::vector<SentenceTemplate> templates;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            SentenceTemplate tpl;
            tpl.category = j.at("category").get<std::string>();
            tpl.sentences = j.at("sentences").get<std::vector<std::string>>();
            if (tpl.sentences.empty() || tpl.sentences.size() > 6) {
                throw FormatError("retrieval: template needs 1 to 6 sentences", line_no);
            }
            templates.push_back(std::move(tpl));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("retrieval: bad template record: ") + e.what(),
                              line_no);
        }
    }
    return templates;
}

TwoStageResult two_stage_retrieve(const Index& index, const EmbeddingProvider& provider,
                                  const SentenceTemplate& tpl, int k) {
    if (k < 1) {
        throw ArgumentError("retrieval: candidate count must be at least 1");
    }
    if (tpl.sentences.empty() || tpl.sentences.size() > 6) {
        throw ArgumentError("retrieval: template needs 1 to 6 sentences");
    }
    TwoStageResult result;
    result.k_used = k;
    if (static_cast<std::int64_t>(k) > index.doc_count) {
        result.k_used = static_cast<int>(index.doc_count);
        result.k_clamped = true;
    }

    for (const std::string& sentence : tpl.sentences) {
        std::istringstream fields(sentence);
        std::vector<std::string> query;
        std::string token;
        while (fields >> token) {
            query.push_back(std::move(token));
        }
        const RankedList stage1 = rank_lexical(index, query, LexicalMode::bm25);

        const std::vector<double> qvec = provider(sentence);
        SentencePick pick;
        pick.sentence = sentence;
        bool have = false;
        for (int r = 0; r < result.k_used; ++r) {
            const ScoredDoc& cand = stage1.items[static_cast<std::size_t>(r)];
            const double score =
                cosine(qvec, provider(join_with_spaces(index.docs[cand.id])));
            // Ties fall to the earlier BM25 rank, which itself ties by doc id.
            if (!have || score > pick.score) {
                have = true;
                pick.doc_id = cand.id;
                pick.score = score;
                pick.bm25_rank = static_cast<std::size_t>(r) + 1;
            }
        }
        result.picks.push_back(std::move(pick));
    }
    return result;
}

}  // namespace gramvec
