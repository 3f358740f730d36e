#include "gramvec/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "gramvec/error.hpp"

namespace gramvec {

namespace {

std::vector<std::string> split_on_space(const std::string& joined) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= joined.size()) {
        std::size_t end = joined.find(' ', start);
        if (end == std::string::npos) {
            end = joined.size();
        }
        tokens.push_back(joined.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

// Candidate ordering everywhere a list is ranked or truncated: strongest
// association first, frequency and spelling as deterministic tie-breakers.
bool rank_less(const NgramEntry& a, const NgramEntry& b) {
    if (a.pmi != b.pmi) return a.pmi > b.pmi;
    if (a.count != b.count) return a.count > b.count;
    return a.tokens < b.tokens;
}

std::vector<NgramEntry> document_candidates(const Document& doc,
                                            const VocabBuildOptions& options) {
    const NgramCounts counts = count_ngrams(doc, options.max_n);
    const double total = static_cast<double>(counts.doc_tokens);

    // ln P of each token, shared by every candidate that contains it.
    std::unordered_map<std::string, double> log_p1;
    log_p1.reserve(counts.per_n[0].size());
    for (const auto& [token, count] : counts.per_n[0]) {
        log_p1.emplace(token, std::log(static_cast<double>(count) / total));
    }

    std::vector<NgramEntry> candidates;
    const int lo = std::max(options.min_len, 1);
    for (int n = lo; n <= counts.max_n; ++n) {
        for (const auto& [joined, count] : counts.per_n[n - 1]) {
            NgramEntry entry;
            entry.tokens = split_on_space(joined);
            entry.count = count;
            double sum = 0.0;
            for (const std::string& token : entry.tokens) {
                sum += log_p1.at(token);
            }
            entry.pmi = (std::log(static_cast<double>(count) / total) - sum) /
                        static_cast<double>(n);
            if (options.pmi_threshold && entry.pmi < *options.pmi_threshold) {
                continue;
            }
            candidates.push_back(std::move(entry));
        }
    }

    const std::size_t keep = static_cast<std::size_t>(options.top_k);
    if (candidates.size() > keep) {
        std::partial_sort(candidates.begin(), candidates.begin() + keep,
                          candidates.end(), rank_less);
        candidates.resize(keep);
    } else {
        std::sort(candidates.begin(), candidates.end(), rank_less);
    }
    return candidates;
}

// Keeps the better (pmi, count) record for sequences seen in both operands,
// so merging is commutative and associative: the result does not depend on
// the order documents are processed in.
void merge_into(NgramVocab& vocab, std::vector<NgramEntry>&& candidates) {
    for (NgramEntry& entry : candidates) {
        vocab.max_n = std::max(vocab.max_n, entry.length());
        const std::string key = join_tokens(entry.tokens);
        auto [it, inserted] = vocab.entries.try_emplace(key, std::move(entry));
        if (!inserted) {
            NgramEntry& held = it->second;
            if (entry.pmi > held.pmi ||
                (entry.pmi == held.pmi && entry.count > held.count)) {
                held.pmi = entry.pmi;
                held.count = entry.count;
            }
        }
    }
}

}  // namespace

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            joined.push_back(' ');
        }
        joined += tokens[i];
    }
    return joined;
}

std::int64_t NgramCounts::count_of(const std::vector<std::string>& tokens) const {
    const std::size_t n = tokens.size();
    if (n == 0 || n > per_n.size()) {
        return 0;
    }
    const auto& table = per_n[n - 1];
    const auto it = table.find(join_tokens(tokens));
    return it == table.end() ? 0 : it->second;
}

const NgramEntry* NgramVocab::lookup(const std::string& joined) const {
    const auto it = entries.find(joined);
    return it == entries.end() ? nullptr : &it->second;
}

const NgramEntry* NgramVocab::lookup(const std::vector<std::string>& tokens) const {
    return lookup(join_tokens(tokens));
}

NgramCounts count_ngrams(const Document& doc, int max_n) {
    if (max_n < 1) {
        throw ArgumentError("ngram: max_n must be at least 1");
    }
    NgramCounts counts;
    counts.max_n = max_n;
    counts.doc_tokens = static_cast<std::int64_t>(doc.tokens.size());
    counts.per_n.resize(static_cast<std::size_t>(max_n));

    const std::size_t len = doc.tokens.size();
    for (std::size_t i = 0; i < len; ++i) {
        std::string key;
        const std::size_t longest = std::min<std::size_t>(max_n, len - i);
        for (std::size_t n = 1; n <= longest; ++n) {
            if (n > 1) {
                key.push_back(' ');
            }
            key += doc.tokens[i + n - 1];
            ++counts.per_n[n - 1][key];
        }
    }
    return counts;
}

double pmi_score(const std::vector<std::string>& tokens, const NgramCounts& counts) {
    if (tokens.empty()) {
        throw ArgumentError("ngram: cannot score an empty sequence");
    }
    if (static_cast<int>(tokens.size()) > counts.max_n) {
        throw ArgumentError("ngram: sequence longer than the counted max_n");
    }
    const double total = static_cast<double>(counts.doc_tokens);
    const std::int64_t joint = counts.count_of(tokens);
    if (joint == 0) {
        throw NotObservedError("ngram: '" + join_tokens(tokens) +
                               "' was not observed in the document");
    }
    double sum = 0.0;
    for (const std::string& token : tokens) {
        const std::int64_t c = counts.count_of({token});
        if (c == 0) {
            throw NotObservedError("ngram: token '" + token +
                                   "' was not observed in the document");
        }
        sum += std::log(static_cast<double>(c) / total);
    }
    return (std::log(static_cast<double>(joint) / total) - sum) /
           static_cast<double>(tokens.size());
}

NgramVocab build_ngram_vocab(const DocumentSet& set, const VocabBuildOptions& options) {
    if (options.max_n < 1 || options.top_k < 1 || options.min_len < 1 ||
        options.min_len > options.max_n) {
        throw ConfigError("ngram: invalid vocabulary build options");
    }
    NgramVocab vocab;
    const int threads = std::max(1, options.threads);
    if (threads == 1 || set.docs.size() < 2) {
        for (const Document& doc : set.docs) {
            merge_into(vocab, document_candidates(doc, options));
        }
        return vocab;
    }

    // Chunked fan-out; the merge is order-independent, so the result is
    // identical to the sequential pass.
    const std::size_t per_chunk =
        (set.docs.size() + threads - 1) / static_cast<std::size_t>(threads);
    std::vector<std::future<std::vector<std::vector<NgramEntry>>>> futures;
    for (std::size_t begin = 0; begin < set.docs.size(); begin += per_chunk) {
        const std::size_t end = std::min(begin + per_chunk, set.docs.size());
        futures.push_back(std::async(std::launch::async, [&set, &options, begin, end] {
            std::vector<std::vector<NgramEntry>> out;
            out.reserve(end - begin);
            for (std::size_t d = begin; d < end; ++d) {
                out.push_back(document_candidates(set.docs[d], options));
            }
            return out;
        }));
    }
    for (auto& future : futures) {
        for (auto& candidates : future.get()) {
            merge_into(vocab, std::move(candidates));
        }
    }
    return vocab;
}

NgramVocab build_ngram_vocab(const DocumentSet& set, int max_n, int top_k, int min_len) {
    VocabBuildOptions options;
    options.max_n = max_n;
    options.top_k = top_k;
    options.min_len = min_len;
    return build_ngram_vocab(set, options);
}

std::vector<NgramEntry> sorted_entries(const NgramVocab& vocab) {
    std::vector<NgramEntry> entries;
    entries.reserve(vocab.entries.size());
    for (const auto& [key, entry] : vocab.entries) {
        entries.push_back(entry);
    }
    std::sort(entries.begin(), entries.end(), rank_less);
    return entries;
}

void save_vocab_tsv(const NgramVocab& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("ngram: cannot open '" + path + "' for writing");
    }
    char pmi_text[64];
    for (const NgramEntry& entry : sorted_entries(vocab)) {
        std::snprintf(pmi_text, sizeof(pmi_text), "%.6f", entry.pmi);
        out << join_tokens(entry.tokens) << '\t' << entry.count << '\t'
            << pmi_text << '\n';
    }
    if (!out) {
        throw IoError("ngram: failed while writing '" + path + "'");
    }
}

NgramVocab load_vocab_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("ngram: cannot open '" + path + "' for reading");
    }
    NgramVocab vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::size_t tab1 = line.find('\t');
        const std::size_t tab2 = tab1 == std::string::npos
                                     ? std::string::npos
                                     : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw FormatError("ngram: expected 3 tab-separated fields", line_no);
        }
        NgramEntry entry;
        const std::string joined = line.substr(0, tab1);
        if (joined.empty()) {
            throw FormatError("ngram: empty token field", line_no);
        }
        entry.tokens = split_on_space(joined);
        try {
            std::size_t used = 0;
            entry.count = std::stoll(line.substr(tab1 + 1, tab2 - tab1 - 1), &used);
            if (used != tab2 - tab1 - 1) {
                throw std::invalid_argument("trailing bytes");
            }
            const std::string pmi_text = line.substr(tab2 + 1);
            entry.pmi = std::stod(pmi_text, &used);
            if (used != pmi_text.size()) {
                throw std::invalid_argument("trailing bytes");
            }
        } catch (const std::exception&) {
            throw FormatError("ngram: malformed numeric field", line_no);
        }
        vocab.max_n = std::max(vocab.max_n, entry.length());
        vocab.entries.emplace(joined, std::move(entry));
    }
    return vocab;
}

}  // namespace gramvec
