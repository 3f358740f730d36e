#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gramvec/embedding.hpp"

namespace gramvec {

// Static word-vector table (word<space>v1<space>...<space>vD per line).
struct EmbeddingStore {
    int dim = 0;
    std::vector<std::string> order;  // file order, used for deterministic scans
    std::map<std::string, std::vector<double>> table;

    bool contains(const std::string& word) const;
    const std::vector<double>* find(const std::string& word) const;
};

EmbeddingStore load_word_vectors(const std::string& path, bool normalize = true);

// Exact lookup for single words; multi-word strings get the mean of their
// known word vectors.  Throws VocabError when no word is known.
EmbeddingProvider store_provider(const EmbeddingStore& store);

// a : b :: c : ?, answered from a small candidate list.
struct AnalogyQuestion {
    std::string a, b, c;
    std::vector<std::string> candidates;  // lexicographic order
    int answer_index = 0;
    std::string category;
    std::string level;  // "word", "phrase", or "sentence"
};

// One labeled quadruple from the source list.
struct Quadruple {
    std::string a, b, c, d;
    std::string category;
};

// Text format: ": category-name" headers followed by "a b c d" lines.
std::vector<Quadruple> load_quadruples(const std::string& path);

// How one relation category is written out at one level.  Frames contain a
// {w} slot.  The candidate side uses a synonym variant of the second frame so
// questions cannot be solved by lexical overlap with b alone.
struct LevelFrames {
    std::string first;           // frame for the a/c side
    std::string second;          // frame for the b side
    std::string second_variant;  // frame for d and the other candidates
};

struct CategoryTemplate {
    std::string name;
    std::optional<LevelFrames> phrase;    // absent level => category skipped there
    std::optional<LevelFrames> sentence;
    // "reference": candidate words come from the reference-vector ranking.
    // "forms": candidates are the answer plus its fixed distractor forms.
    std::string candidate_mode = "reference";
    std::map<std::string, std::vector<std::string>> forms;  // answer -> distractors
};

// JSON file: {"categories": [{"name", "phrase": {"first","second"},
// "sentence": {...}, "candidate_mode", "forms": {...}}, ...]}
struct AnalogyTemplates {
    std::map<std::string, CategoryTemplate> categories;
};

AnalogyTemplates load_templates(const std::string& path);

struct DatasetBuildOptions {
    int candidates = 5;        // reference-ranked candidate count
    bool word_level = true;
    bool phrase_level = true;
    bool sentence_level = true;
};

struct DatasetBuildStats {
    int skipped_missing_words = 0;  // quadruples with words absent from the store
    int skipped_no_template = 0;    // phrase/sentence questions for uncovered categories
};

// Turns labeled quadruples into questions.  Word-level candidates are the
// reference ranking of cosine(c + b - a, w) over the whole store vocabulary
// (minus a, b, c), truncated to `candidates` entries; when the ranking missed
// the true answer it replaces the last candidate, so ranking order is kept.
// Phrase- and sentence-level questions re-use those candidate words inside
// the template frames; "forms" categories instead take the answer plus its
// distractor forms, sorted.  Categories missing from the template file are
// skipped at those levels and counted; quadruples with words absent from the
// reference store are skipped entirely and counted.
std::vector<AnalogyQuestion> build_analogy_dataset(
    const std::vector<Quadruple>& quadruples, const AnalogyTemplates& templates,
    const EmbeddingStore& reference, const DatasetBuildOptions& options,
    DatasetBuildStats* stats = nullptr);

// Index of the candidate maximizing cosine(c + b - a, candidate); earlier
// candidates win ties.  Vectors come from the provider under evaluation.
int solve_analogy(const EmbeddingProvider& provider, const AnalogyQuestion& question);

struct CategoryResult {
    std::string category;
    std::string level;
    int total = 0;
    int correct = 0;

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct AnalogyReport {
    std::vector<CategoryResult> per_category;  // sorted by (level, category)

    // Micro-average over the questions of one semantic/syntactic group at one
    // level; the level average is the mean of the two groups, and the overall
    // score is the mean of the level averages.
    std::optional<double> group_accuracy(const std::string& level, bool semantic) const;
    std::optional<double> level_average(const std::string& level) const;
    double overall() const;
};

// Which categories count as semantic; everything else is syntactic.
bool is_semantic_category(const std::string& category);

AnalogyReport evaluate_analogy(const EmbeddingProvider& provider,
                               const std::vector<AnalogyQuestion>& questions);

// JSONL: {"a","b","c","candidates","answer","category","level"}
void save_questions_jsonl(const std::vector<AnalogyQuestion>& questions,
                          const std::string& path);
std::vector<AnalogyQuestion> load_questions_jsonl(const std::string& path);

// TSV: one row per level plus an "all" row; columns level, semantic,
// syntactic, avg (empty cell when a group has no questions).
void save_report_tsv(const AnalogyReport& report, const std::string& path);

}  // namespace gramvec
