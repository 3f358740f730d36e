#include "gramvec/corpus.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "gramvec/error.hpp"

namespace gramvec {

namespace {

bool is_word_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '\'' || c == '-';
}

// Apostrophes and hyphens are kept inside words ("don't", "state-of-the-art")
// but are not tokens on their own, so they are trimmed from the edges.
std::string trim_edge_marks(std::string_view tok) {
    std::size_t b = 0;
    std::size_t e = tok.size();
    while (b < e && (tok[b] == '\'' || tok[b] == '-')) ++b;
    while (e > b && (tok[e - 1] == '\'' || tok[e - 1] == '-')) --e;
    return std::string(tok.substr(b, e - b));
}

std::vector<std::string> tokenize_words(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            cleaned.push_back(static_cast<char>(std::tolower(c)));
        } else {
            cleaned.push_back(' ');
        }
    }
    std::vector<std::string> tokens;
    std::istringstream in(cleaned);
    std::string piece;
    while (in >> piece) {
        std::string tok = trim_edge_marks(piece);
        if (!tok.empty()) {
            tokens.push_back(std::move(tok));
        }
    }
    return tokens;
}

// Code points removed in chars mode: ASCII punctuation plus the usual
// fullwidth / CJK marks.  Kept sorted for binary search.
constexpr std::array<std::uint32_t, 31> kWidePunct = {
    0x00B7, 0x2014, 0x2018, 0x2019, 0x201C, 0x201D, 0x2026, 0x3000,
    0x3001, 0x3002, 0x3008, 0x3009, 0x300A, 0x300B, 0x300C, 0x300D,
    0x300E, 0x300F, 0x3010, 0x3011, 0x3014, 0x3015, 0x30FB, 0xFF01,
    0xFF08, 0xFF09, 0xFF0C, 0xFF0E, 0xFF1A, 0xFF1B, 0xFF1F,
};

bool is_wide_punct(std::uint32_t cp) {
    if (cp == 0xFF5E) return true;  // fullwidth tilde sorts after the array
    std::size_t lo = 0;
    std::size_t hi = kWidePunct.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (kWidePunct[mid] < cp) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return lo < kWidePunct.size() && kWidePunct[lo] == cp;
}

// Decodes one UTF-8 code point at `i`.  Returns its length in bytes and the
// code point, or length 0 when the bytes are not valid UTF-8.
std::size_t decode_utf8(std::string_view s, std::size_t i, std::uint32_t& cp) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    }
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > s.size()) {
        return 0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const unsigned char b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            return 0;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings and surrogate halves.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) ||
        cp > 0x10FFFF) {
        return 0;
    }
    return len;
}

std::vector<std::string> tokenize_chars(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        std::uint32_t cp = 0;
        const std::size_t len = decode_utf8(text, i, cp);
        if (len == 0) {
            ++i;  // invalid byte: skip it
            continue;
        }
        const bool drop = (cp < 0x80 && (std::isspace(static_cast<int>(cp)) ||
                                         std::ispunct(static_cast<int>(cp)))) ||
                          is_wide_punct(cp);
        if (!drop) {
            tokens.emplace_back(text.substr(i, len));
        }
        i += len;
    }
    return tokens;
}

bool is_blank_line(std::string_view line) {
    for (unsigned char c : line) {
        if (!std::isspace(c)) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<std::string> clean_and_tokenize(std::string_view text, TokenMode mode) {
    return mode == TokenMode::word ? tokenize_words(text) : tokenize_chars(text);
}

DocumentSet ingest_text(std::string_view text, TokenMode mode) {
    DocumentSet set;
    set.mode = mode;

    std::size_t pos = 0;
    std::size_t block_begin = 0;
    std::size_t block_end = 0;
    bool in_block = false;

    auto flush = [&]() {
        if (!in_block) {
            return;
        }
        in_block = false;
        Document doc;
        doc.tokens = clean_and_tokenize(text.substr(block_begin, block_end - block_begin), mode);
        if (doc.tokens.empty()) {
            return;  // nothing but separators / punctuation
        }
        doc.id = static_cast<std::int64_t>(set.docs.size());
        doc.source_begin = block_begin;
        doc.source_end = block_end;
        set.total_tokens += doc.tokens.size();
        set.docs.push_back(std::move(doc));
    };

    while (pos <= text.size()) {
        if (pos == text.size()) {
            flush();
            break;
        }
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        const std::string_view line = text.substr(pos, eol - pos);
        if (is_blank_line(line)) {
            flush();
        } else {
            if (!in_block) {
                in_block = true;
                block_begin = pos;
            }
            block_end = eol;
        }
        pos = eol + 1;
    }

    if (set.docs.empty()) {
        throw EmptyCorpusError("corpus: no non-empty documents after cleaning");
    }
    return set;
}

DocumentSet ingest_corpus(const std::string& path, TokenMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("corpus: cannot open '" + path + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("corpus: failed while reading '" + path + "'");
    }
    return ingest_text(buf.str(), mode);
}

std::string dump_documents(const DocumentSet& set) {
    std::string out;
    for (const Document& doc : set.docs) {
        for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
            if (i > 0) {
                out.push_back(' ');
            }
            out += doc.tokens[i];
        }
        out.push_back('\n');
    }
    return out;
}

void save_documents(const DocumentSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("corpus: cannot open '" + path + "' for writing");
    }
    out << dump_documents(set);
    if (!out) {
        throw IoError("corpus: failed while writing '" + path + "'");
    }
}

}  // namespace gramvec
