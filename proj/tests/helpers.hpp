#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gramvec/rng.hpp"

namespace testutil {

// Self-deleting scratch directory for file-based tests.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "gramvec-test-XXXXXX").string();
        if (mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return path_ + "/" + name; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Deterministic toy corpus with planted collocations: filler tokens are
// drawn uniformly, while a handful of multi-token expressions are injected
// so association scores have something real to find.
inline std::string collocation_corpus(int documents, std::uint64_t seed) {
    static const char* kFiller[] = {
        "the",  "a",     "of",    "to",   "and",  "in",   "for",  "on",
        "with", "at",    "from",  "by",   "about", "into", "over", "after",
        "data", "value", "model", "test", "case",  "line", "word", "form",
    };
    static const char* kPhrases[] = {
        "new york city", "machine learning", "neural network model",
        "natural language", "big bang theory", "ice cream",
    };
    constexpr int kFillerCount = sizeof(kFiller) / sizeof(kFiller[0]);
    constexpr int kPhraseCount = sizeof(kPhrases) / sizeof(kPhrases[0]);

    gramvec::Rng rng(seed);
    std::ostringstream out;
    for (int d = 0; d < documents; ++d) {
        const int sentences = 1 + static_cast<int>(rng.below(3));
        for (int s = 0; s < sentences; ++s) {
            const int words = 6 + static_cast<int>(rng.below(7));
            for (int w = 0; w < words; ++w) {
                if (w > 0) {
                    out << ' ';
                }
                out << kFiller[rng.index(kFillerCount)];
                if (rng.next_double() < 0.25) {
                    out << ' ' << kPhrases[rng.index(kPhraseCount)];
                }
            }
            out << '\n';
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace testutil
