#include "gramvec/analogy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "gramvec/error.hpp"

namespace gramvec {

namespace {

std::vector<std::string> split_ws(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    std::string piece;
    while (in >> piece) {
        out.push_back(piece);
    }
    return out;
}

std::string render(const std::string& frame, const std::string& word) {
    const std::string slot = "{w}";
    std::string out;
    std::size_t at = 0;
    bool found = false;
    while (true) {
        const std::size_t hit = frame.find(slot, at);
        if (hit == std::string::npos) {
            out += frame.substr(at);
            break;
        }
        found = true;
        out += frame.substr(at, hit - at);
        out += word;
        at = hit + slot.size();
    }
    if (!found) {
        throw TemplateError("analogy: frame '" + frame + "' has no {w} slot");
    }
    return out;
}

LevelFrames frames_from_json(const nlohmann::json& j) {
    LevelFrames frames;
    frames.first = j.at("first").get<std::string>();
    frames.second = j.at("second").get<std::string>();
    // The synonym variant defaults to the second frame itself when a category
    // has no distinct wording for the candidate side.
    frames.second_variant = j.contains("second_variant")
                                ? j.at("second_variant").get<std::string>()
                                : frames.second;
    // Fail at load time, not at instantiation time.
    render(frames.first, "probe");
    render(frames.second, "probe");
    render(frames.second_variant, "probe");
    return frames;
}

// Ranking-ordered candidate words for one quadruple: top `k` store words by
// cosine(c + b - a, w), cue words excluded, answer forced into the last slot
// when the ranking missed it.
std::vector<std::string> reference_candidates(const Quadruple& quad,
                                              const EmbeddingStore& store, int k) {
    std::vector<double> probe = *store.find(quad.c);
    const std::vector<double>& vb = *store.find(quad.b);
    const std::vector<double>& va = *store.find(quad.a);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        probe[i] += vb[i] - va[i];
    }

    std::vector<std::pair<double, std::size_t>> scored;  // (score, store order)
    scored.reserve(store.order.size());
    for (std::size_t i = 0; i < store.order.size(); ++i) {
        const std::string& word = store.order[i];
        if (word == quad.a || word == quad.b || word == quad.c) {
            continue;
        }
        scored.emplace_back(cosine(probe, *store.find(word)), i);
    }
    const std::size_t keep = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(k));
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                      [](const auto& x, const auto& y) {
                          if (x.first != y.first) return x.first > y.first;
                          return x.second < y.second;  // earlier store entry wins ties
                      });

    std::vector<std::string> words;
    words.reserve(keep);
    bool has_answer = false;
    for (std::size_t i = 0; i < keep; ++i) {
        words.push_back(store.order[scored[i].second]);
        has_answer = has_answer || words.back() == quad.d;
    }
    if (!has_answer && !words.empty()) {
        words.back() = quad.d;
    }
    return words;
}

// Answer plus its listed distractor forms, sorted for a deterministic order
// that does not leak the answer's position.
std::vector<std::string> form_candidates(const Quadruple& quad,
                                         const CategoryTemplate& tpl) {
    const auto it = tpl.forms.find(quad.d);
    if (it == tpl.forms.end()) {
        throw TemplateError("analogy: category '" + tpl.name +
                            "' lists no distractor forms for '" + quad.d + "'");
    }
    std::vector<std::string> words = it->second;
    words.push_back(quad.d);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

AnalogyQuestion instantiate(const Quadruple& quad, const LevelFrames& frames,
                            const std::vector<std::string>& candidate_words,
                            const std::string& level) {
    AnalogyQuestion question;
    question.category = quad.category;
    question.level = level;
    question.a = render(frames.first, quad.a);
    question.b = render(frames.second, quad.b);
    question.c = render(frames.first, quad.c);
    question.answer_index = -1;
    for (const std::string& word : candidate_words) {
        question.candidates.push_back(render(frames.second_variant, word));
        if (word == quad.d) {
            question.answer_index = static_cast<int>(question.candidates.size()) - 1;
        }
    }
    return question;
}

void check_question(const AnalogyQuestion& question) {
    if (question.answer_index < 0 ||
        question.answer_index >= static_cast<int>(question.candidates.size())) {
        throw TemplateError("analogy: question for '" + question.category +
                            "' lost its answer");
    }
    for (std::size_t i = 0; i < question.candidates.size(); ++i) {
        const std::string& cand = question.candidates[i];
        if (cand == question.a || cand == question.b || cand == question.c) {
            throw TemplateError("analogy: candidate '" + cand +
                                "' collides with a cue sequence");
        }
        for (std::size_t j = i + 1; j < question.candidates.size(); ++j) {
            if (cand == question.candidates[j]) {
                throw TemplateError("analogy: duplicate candidate '" + cand + "'");
            }
        }
    }
}

}  // namespace

bool EmbeddingStore::contains(const std::string& word) const {
    return table.find(word) != table.end();
}

const std::vector<double>* EmbeddingStore::find(const std::string& word) const {
    const auto it = table.find(word);
    return it == table.end() ? nullptr : &it->second;
}

EmbeddingStore load_word_vectors(const std::string& path, bool normalize) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("analogy: cannot open '" + path + "' for reading");
    }
    EmbeddingStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) {
            throw FormatError("analogy: missing token", line_no);
        }
        std::vector<double> vec;
        double x = 0.0;
        while (fields >> x) {
            vec.push_back(x);
        }
        if (!fields.eof()) {
            throw FormatError("analogy: malformed vector component", line_no);
        }
        if (vec.empty()) {
            throw FormatError("analogy: token without vector", line_no);
        }
        if (store.dim == 0) {
            store.dim = static_cast<int>(vec.size());
        } else if (static_cast<int>(vec.size()) != store.dim) {
            throw FormatError("analogy: expected " + std::to_string(store.dim) +
                                  " components, found " + std::to_string(vec.size()),
                              line_no);
        }
        if (normalize) {
            normalize_in_place(vec);
        }
        if (store.table.emplace(word, std::move(vec)).second) {
            store.order.push_back(word);
        }
    }
    return store;
}

EmbeddingProvider store_provider(const EmbeddingStore& store) {
    const auto shared = std::make_shared<const EmbeddingStore>(store);
    return [shared](const std::string& text) {
        const std::vector<std::string> words = split_ws(text);
        std::vector<double> sum(static_cast<std::size_t>(shared->dim), 0.0);
        int known = 0;
        for (const std::string& word : words) {
            if (const std::vector<double>* vec = shared->find(word)) {
                for (std::size_t i = 0; i < sum.size(); ++i) {
                    sum[i] += (*vec)[i];
                }
                ++known;
            }
        }
        if (known == 0) {
            throw VocabError("analogy: no known words in '" + text + "'");
        }
        for (double& x : sum) {
            x /= static_cast<double>(known);
        }
        return sum;
    };
}

std::vector<Quadruple> load_quadruples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("analogy: cannot open '" + path + "' for reading");
    }
    std::vector<Quadruple> quadruples;
    std::string line;
    std::string category;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::vector<std::string> fields = split_ws(line);
        if (fields.empty()) {
            continue;
        }
        if (fields[0] == ":") {
            if (fields.size() != 2) {
                throw FormatError("analogy: category header needs exactly one name",
                                  line_no);
            }
            category = fields[1];
            continue;
        }
        if (fields.size() != 4) {
            throw FormatError("analogy: expected 4 words per quadruple", line_no);
        }
        quadruples.push_back(Quadruple{fields[0], fields[1], fields[2], fields[3], category});
    }
    return quadruples;
}

AnalogyTemplates load_templates(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("analogy: cannot open '" + path + "' for reading");
    }
    AnalogyTemplates templates;
    try {
        nlohmann::json j;
        in >> j;
        for (const auto& cj : j.at("categories")) {
            CategoryTemplate tpl;
            tpl.name = cj.at("name").get<std::string>();
            if (cj.contains("phrase")) {
                tpl.phrase = frames_from_json(cj.at("phrase"));
            }
            if (cj.contains("sentence")) {
                tpl.sentence = frames_from_json(cj.at("sentence"));
            }
            if (cj.contains("candidate_mode")) {
                tpl.candidate_mode = cj.at("candidate_mode").get<std::string>();
            }
            if (tpl.candidate_mode != "reference" && tpl.candidate_mode != "forms") {
                throw TemplateError("analogy: unknown candidate_mode '" +
                                    tpl.candidate_mode + "'");
            }
            if (cj.contains("forms")) {
                tpl.forms = cj.at("forms")
                                .get<std::map<std::string, std::vector<std::string>>>();
            }
            if (tpl.candidate_mode == "forms" && tpl.forms.empty()) {
                throw TemplateError("analogy: category '" + tpl.name +
                                    "' uses forms but lists none");
            }
            templates.categories.emplace(tpl.name, std::move(tpl));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("analogy: bad template file: ") + e.what());
    }
    return templates;
}

std::vector<AnalogyQuestion> build_analogy_dataset(
    const std::vector<Quadruple>& quadruples, const AnalogyTemplates& templates,
    const EmbeddingStore& reference, const DatasetBuildOptions& options,
    DatasetBuildStats* stats) {
    if (options.candidates < 2) {
        throw ArgumentError("analogy: need at least 2 candidates");
    }
    DatasetBuildStats local;
    DatasetBuildStats& st = stats == nullptr ? local : *stats;

    std::vector<AnalogyQuestion> questions;
    for (const Quadruple& quad : quadruples) {
        if (!reference.contains(quad.a) || !reference.contains(quad.b) ||
            !reference.contains(quad.c) || !reference.contains(quad.d) ||
            quad.d == quad.a || quad.d == quad.b || quad.d == quad.c) {
            ++st.skipped_missing_words;
            continue;
        }
        const std::vector<std::string> ranked =
            reference_candidates(quad, reference, options.candidates);

        if (options.word_level) {
            AnalogyQuestion question;
            question.a = quad.a;
            question.b = quad.b;
            question.c = quad.c;
            question.category = quad.category;
            question.level = "word";
            question.candidates = ranked;
            question.answer_index = -1;
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                if (ranked[i] == quad.d) {
                    question.answer_index = static_cast<int>(i);
                }
            }
            check_question(question);
            questions.push_back(std::move(question));
        }

        const auto tpl_it = templates.categories.find(quad.category);
        const CategoryTemplate* tpl =
            tpl_it == templates.categories.end() ? nullptr : &tpl_it->second;
        const auto build_level = [&](bool enabled, const char* level,
                                     const std::optional<LevelFrames>& frames) {
            if (!enabled) {
                return;
            }
            if (tpl == nullptr || !frames.has_value()) {
                ++st.skipped_no_template;
                return;
            }
            const std::vector<std::string> words =
                tpl->candidate_mode == "forms" ? form_candidates(quad, *tpl) : ranked;
            AnalogyQuestion question = instantiate(quad, *frames, words, level);
            check_question(question);
            questions.push_back(std::move(question));
        };
        build_level(options.phrase_level, "phrase", tpl ? tpl->phrase : std::nullopt);
        build_level(options.sentence_level, "sentence", tpl ? tpl->sentence : std::nullopt);
    }
    return questions;
}

int solve_analogy(const EmbeddingProvider& provider, const AnalogyQuestion& question) {
    if (question.candidates.empty()) {
        throw ArgumentError("analogy: question has no candidates");
    }
    std::vector<double> va = provider(question.a);
    std::vector<double> vb = provider(question.b);
    std::vector<double> vc = provider(question.c);
    normalize_in_place(va);
    normalize_in_place(vb);
    normalize_in_place(vc);
    if (va.size() != vb.size() || vb.size() != vc.size()) {
        throw ArgumentError("analogy: provider returned inconsistent widths");
    }
    std::vector<double> probe(va.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        probe[i] = vc[i] + vb[i] - va[i];
    }
    int best = 0;
    double best_score = -2.0;
    for (std::size_t i = 0; i < question.candidates.size(); ++i) {
        const double score = cosine(probe, provider(question.candidates[i]));
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(i);
        }
    }
    return best;
}

bool is_semantic_category(const std::string& category) {
    return category.rfind("capital", 0) == 0 || category == "city-state" ||
           category == "male-female" || category == "country-currency";
}

AnalogyReport evaluate_analogy(const EmbeddingProvider& provider,
                               const std::vector<AnalogyQuestion>& questions) {
    if (questions.empty()) {
        throw ArgumentError("analogy: empty dataset");
    }
    std::map<std::pair<std::string, std::string>, CategoryResult> results;
    for (const AnalogyQuestion& question : questions) {
        CategoryResult& r = results[{question.level, question.category}];
        r.category = question.category;
        r.level = question.level;
        ++r.total;
        if (solve_analogy(provider, question) == question.answer_index) {
            ++r.correct;
        }
    }
    AnalogyReport report;
    report.per_category.reserve(results.size());
    for (auto& [key, result] : results) {
        report.per_category.push_back(std::move(result));
    }
    return report;
}

std::optional<double> AnalogyReport::group_accuracy(const std::string& level,
                                                    bool semantic) const {
    long total = 0;
    long correct = 0;
    for (const CategoryResult& r : per_category) {
        if (r.level == level && is_semantic_category(r.category) == semantic) {
            total += r.total;
            correct += r.correct;
        }
    }
    if (total == 0) {
        return std::nullopt;
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> AnalogyReport::level_average(const std::string& level) const {
    const auto sem = group_accuracy(level, true);
    const auto syn = group_accuracy(level, false);
    if (sem && syn) {
        return (*sem + *syn) / 2.0;
    }
    if (sem) {
        return sem;
    }
    return syn;
}

double AnalogyReport::overall() const {
    double sum = 0.0;
    int levels = 0;
    for (const char* level : {"word", "phrase", "sentence"}) {
        if (const auto avg = level_average(level)) {
            sum += *avg;
            ++levels;
        }
    }
    return levels == 0 ? 0.0 : sum / levels;
}

void save_questions_jsonl(const std::vector<AnalogyQuestion>& questions,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("analogy: cannot open '" + path + "' for writing");
    }
    for (const AnalogyQuestion& question : questions) {
        nlohmann::ordered_json j;
        j["a"] = question.a;
        j["b"] = question.b;
        j["c"] = question.c;
        j["candidates"] = question.candidates;
        j["answer"] = question.answer_index;
        j["category"] = question.category;
        j["level"] = question.level;
        out << j.dump() << '\n';
    }
    if (!out) {
        throw IoError("analogy: failed while writing '" + path + "'");
    }
}

std::vector<AnalogyQuestion> load_questions_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("analogy: cannot open '" + path + "' for reading");
    }
    std::vector<AnalogyQuestion> questions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            AnalogyQuestion question;
            question.a = j.at("a").get<std::string>();
            question.b = j.at("b").get<std::string>();
            question.c = j.at("c").get<std::string>();
            question.candidates = j.at("candidates").get<std::vector<std::string>>();
            question.answer_index = j.at("answer").get<int>();
            question.category = j.at("category").get<std::string>();
            question.level = j.at("level").get<std::string>();
            if (question.answer_index < 0 ||
                question.answer_index >= static_cast<int>(question.candidates.size())) {
                throw FormatError("analogy: answer index out of range", line_no);
            }
            questions.push_back(std::move(question));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("analogy: bad question record: ") + e.what(),
                              line_no);
        }
    }
    return questions;
}

void save_report_tsv(const AnalogyReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("analogy: cannot open '" + path + "' for writing");
    }
    char text[64];
    const auto cell = [&text](const std::optional<double>& value) -> std::string {
        if (!value) {
            return "";
        }
        std::snprintf(text, sizeof(text), "%.4f", *value);
        return text;
    };
    out << "level\tsemantic\tsyntactic\tavg\n";
    for (const char* level : {"word", "phrase", "sentence"}) {
        const auto avg = report.level_average(level);
        if (!avg) {
            continue;  // no questions at this level
        }
        out << level << '\t' << cell(report.group_accuracy(level, true)) << '\t'
            << cell(report.group_accuracy(level, false)) << '\t' << cell(avg) << '\n';
    }
    std::snprintf(text, sizeof(text), "%.4f", report.overall());
    out << "all\t\t\t" << text << '\n';
    if (!out) {
        throw IoError("analogy: failed while writing '" + path + "'");
    }
}

}  // namespace gramvec
