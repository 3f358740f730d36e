#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gramvec {

// How raw text is reduced to tokens.
//  word:  lowercase ASCII words; everything outside [A-Za-z0-9'-] separates.
//  chars: one token per UTF-8 code point with punctuation removed, no case
//         folding (for scripts that do not delimit words with spaces).
enum class TokenMode { word, chars };

struct Document {
    std::int64_t id = 0;                  // 0-based position in the corpus
    std::vector<std::string> tokens;
    std::size_t source_begin = 0;         // byte range of the raw block
    std::size_t source_end = 0;
};

struct DocumentSet {
    TokenMode mode = TokenMode::word;
    std::vector<Document> docs;
    std::size_t total_tokens = 0;
};

// Cleans one raw document body and splits it into tokens.  Idempotent: running
// it over its own space-joined output yields the same tokens.
std::vector<std::string> clean_and_tokenize(std::string_view text, TokenMode mode);

// Splits raw text into documents on blank lines, cleans each, and drops the
// ones that end up empty.  Throws EmptyCorpusError when nothing survives.
DocumentSet ingest_text(std::string_view text, TokenMode mode);

// ingest_text over the contents of a file.  Throws IoError when unreadable.
DocumentSet ingest_corpus(const std::string& path, TokenMode mode);

// One document per line, tokens joined by single spaces.
std::string dump_documents(const DocumentSet& set);
void save_documents(const DocumentSet& set, const std::string& path);

}  // namespace gramvec
