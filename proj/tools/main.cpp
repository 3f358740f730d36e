#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gramvec/analogy.hpp"
#include "gramvec/corpus.hpp"
#include "gramvec/embedding.hpp"
#include "gramvec/error.hpp"
#include "gramvec/geometry.hpp"
#include "gramvec/masking.hpp"
#include "gramvec/mlm.hpp"
#include "gramvec/ngram.hpp"
#include "gramvec/retrieval.hpp"

namespace {

using nlohmann::json;

gramvec::TokenMode to_mode(const std::string& name) {
    return name == "chars" ? gramvec::TokenMode::chars : gramvec::TokenMode::word;
}

// The one machine-readable line every subcommand ends with; logs go to stderr.
void print_summary(const json& summary) {
    std::cout << summary.dump() << std::endl;
}

// Exactly one of the two paths is set (enforced at parse time); either way
// the provider owns its backing data.
gramvec::EmbeddingProvider open_provider(const std::string& vectors_path,
                                         const std::string& model_path) {
    if (!vectors_path.empty()) {
        return gramvec::store_provider(gramvec::load_word_vectors(vectors_path));
    }
    return gramvec::make_embedding_provider(gramvec::load_checkpoint(model_path));
}

std::string clean_join(const std::string& text, gramvec::TokenMode mode) {
    return gramvec::join_tokens(gramvec::clean_and_tokenize(text, mode));
}

// ---------------------------------------------------------------------------
// extract-ngrams

struct ExtractArgs {
    std::string in;
    std::string out;
    std::string mode = "word";
    int max_n = 10;
    int top_k = 3000;
    int min_len = 2;
    int threads = 1;
    double pmi_threshold = 0.0;
    bool has_threshold = false;
};

int run_extract(const ExtractArgs& args) {
    const gramvec::DocumentSet set = gramvec::ingest_corpus(args.in, to_mode(args.mode));
    std::cerr << "extract-ngrams: " << set.docs.size() << " documents, "
              << set.total_tokens << " tokens\n";

    gramvec::VocabBuildOptions options;
    options.max_n = args.max_n;
    options.top_k = args.top_k;
    options.min_len = args.min_len;
    options.threads = args.threads;
    if (args.has_threshold) {
        options.pmi_threshold = args.pmi_threshold;
    }
    const gramvec::NgramVocab vocab = gramvec::build_ngram_vocab(set, options);
    gramvec::save_vocab_tsv(vocab, args.out);

    json summary;
    summary["command"] = "extract-ngrams";
    summary["documents"] = set.docs.size();
    summary["tokens"] = set.total_tokens;
    summary["entries"] = vocab.size();
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// make-instances

struct InstancesArgs {
    std::string in;
    std::string vocab;
    std::string out;
    std::string mode = "word";
    std::uint64_t seed = 0;
    int epoch = 0;
    double mask_ratio = 0.15;
    double p_mask = 0.8;
    double p_random = 0.1;
    double p_keep = 0.1;
    int max_n = 10;
    double geo_p = 0.2;
    int geo_lmax = 10;
    int max_seq_len = 512;
    bool geometric = false;
};

int run_instances(const InstancesArgs& args) {
    const gramvec::DocumentSet set = gramvec::ingest_corpus(args.in, to_mode(args.mode));
    const gramvec::NgramVocab vocab = gramvec::load_vocab_tsv(args.vocab);

    gramvec::MaskingConfig config;
    config.mask_ratio = args.mask_ratio;
    config.p_mask = args.p_mask;
    config.p_random = args.p_random;
    config.p_keep = args.p_keep;
    config.max_n = args.max_n;
    config.geo_p = args.geo_p;
    config.geo_lmax = args.geo_lmax;
    config.max_seq_len = args.max_seq_len;

    const std::vector<gramvec::MaskedInstance> instances = gramvec::generate_epoch_dataset(
        set, vocab, config, args.seed, args.epoch, args.geometric);
    gramvec::save_instances_jsonl(instances, args.out);

    std::size_t targets = 0;
    for (const gramvec::MaskedInstance& instance : instances) {
        targets += instance.targets.size();
    }
    std::cerr << "make-instances: " << instances.size() << " instances, " << targets
              << " target spans\n";

    json summary;
    summary["command"] = "make-instances";
    summary["instances"] = instances.size();
    summary["targets"] = targets;
    summary["epoch"] = args.epoch;
    summary["sampler"] = args.geometric ? "geometric" : "ngram";
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string instances;
    std::string corpus;
    std::string out;
    std::string mode = "word";
    std::uint64_t seed = 0;
    long steps = 500;
    double lr = 0.05;
    int batch_size = 16;
    double warmup_fraction = 0.1;
    int layers = 2;
    int heads = 4;
    int d_model = 64;
    int d_ff = 128;
    int max_len = 128;
    std::string cls_token = "[CLS]";
    std::string sep_token = "[SEP]";
    std::string mask_token = "[MASK]";
};

int run_train(const TrainArgs& args) {
    const std::vector<gramvec::MaskedInstance> data =
        gramvec::load_instances_jsonl(args.instances);
    const gramvec::DocumentSet set =
        gramvec::ingest_corpus(args.corpus, to_mode(args.mode));
    const gramvec::TokenVocab vocab = gramvec::TokenVocab::build(
        set, {args.cls_token, args.sep_token, args.mask_token});

    gramvec::ModelConfig config;
    config.layers = args.layers;
    config.heads = args.heads;
    config.d_model = args.d_model;
    config.d_ff = args.d_ff;
    config.max_len = args.max_len;
    config.cls_token = args.cls_token;
    config.sep_token = args.sep_token;

    gramvec::ModelParams params = gramvec::init_model(config, vocab, args.seed);
    std::cerr << "train: " << data.size() << " instances, vocab " << vocab.size()
              << ", " << params.theta.size() << " parameters\n";

    gramvec::TrainOptions options;
    options.steps = args.steps;
    options.lr = args.lr;
    options.seed = args.seed;
    options.batch_size = args.batch_size;
    options.warmup_fraction = args.warmup_fraction;
    const gramvec::TrainReport report = gramvec::train(params, data, options);
    gramvec::save_checkpoint(params, args.out);
    std::cerr << "train: loss " << report.losses.front() << " -> "
              << report.losses.back() << " over " << args.steps << " steps\n";

    json summary;
    summary["command"] = "train";
    summary["steps"] = args.steps;
    summary["initial_loss"] = report.losses.front();
    summary["final_loss"] = report.losses.back();
    summary["degenerate_instances"] = report.degenerate_instances;
    summary["parameters"] = params.theta.size();
    summary["vocab"] = vocab.size();
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// build-analogy

struct BuildAnalogyArgs {
    std::string quadruples;
    std::string vectors;
    std::string templates;
    std::string out;
    int candidates = 5;
    bool word_level = true;
    bool phrase_level = true;
    bool sentence_level = true;
};

int run_build_analogy(const BuildAnalogyArgs& args) {
    const std::vector<gramvec::Quadruple> quadruples =
        gramvec::load_quadruples(args.quadruples);
    const gramvec::EmbeddingStore store = gramvec::load_word_vectors(args.vectors);
    gramvec::AnalogyTemplates templates;
    if (!args.templates.empty()) {
        templates = gramvec::load_templates(args.templates);
    }

    gramvec::DatasetBuildOptions options;
    options.candidates = args.candidates;
    options.word_level = args.word_level;
    // Without templates no phrase or sentence question can be rendered.
    options.phrase_level = args.phrase_level && !args.templates.empty();
    options.sentence_level = args.sentence_level && !args.templates.empty();

    gramvec::DatasetBuildStats stats;
    const std::vector<gramvec::AnalogyQuestion> questions =
        gramvec::build_analogy_dataset(quadruples, templates, store, options, &stats);
    gramvec::save_questions_jsonl(questions, args.out);

    json levels = json::object();
    for (const gramvec::AnalogyQuestion& question : questions) {
        levels[question.level] = levels.value(question.level, 0) + 1;
    }
    std::cerr << "build-analogy: " << questions.size() << " questions from "
              << quadruples.size() << " quadruples\n";

    json summary;
    summary["command"] = "build-analogy";
    summary["questions"] = questions.size();
    summary["levels"] = levels;
    summary["skipped_missing_words"] = stats.skipped_missing_words;
    summary["skipped_no_template"] = stats.skipped_no_template;
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// eval-analogy

struct EvalAnalogyArgs {
    std::string questions;
    std::string vectors;
    std::string model;
    std::string out;
};

int run_eval_analogy(const EvalAnalogyArgs& args) {
    const std::vector<gramvec::AnalogyQuestion> questions =
        gramvec::load_questions_jsonl(args.questions);
    const gramvec::EmbeddingProvider provider = open_provider(args.vectors, args.model);
    const gramvec::AnalogyReport report = gramvec::evaluate_analogy(provider, questions);
    gramvec::save_report_tsv(report, args.out);

    json levels = json::object();
    for (const std::string& level : {"word", "phrase", "sentence"}) {
        if (const auto average = report.level_average(level)) {
            levels[level] = *average;
        }
    }
    std::cerr << "eval-analogy: " << questions.size() << " questions, overall "
              << report.overall() << "\n";

    json summary;
    summary["command"] = "eval-analogy";
    summary["questions"] = questions.size();
    summary["levels"] = levels;
    summary["overall"] = report.overall();
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// faq-eval

struct FaqArgs {
    std::string qa;
    std::string out;
    std::string ranker = "bm25";
    std::string vectors;
    std::string model;
    std::string mode = "word";
};

int run_faq(const FaqArgs& args) {
    const gramvec::QASet qa = gramvec::load_qa_jsonl(args.qa);
    const gramvec::TokenMode mode = to_mode(args.mode);

    std::function<gramvec::RankedList(const std::string&)> ranker;
    if (args.ranker == "embedding") {
        const gramvec::EmbeddingProvider provider =
            open_provider(args.vectors, args.model);
        std::vector<std::string> questions;
        for (const gramvec::QAPair& pair : qa.pairs) {
            questions.push_back(clean_join(pair.question, mode));
        }
        ranker = [provider, questions, mode](const std::string& query) {
            return gramvec::rank_embedding(provider, clean_join(query, mode), questions);
        };
    } else {
        const gramvec::LexicalMode lexical = args.ranker == "tfidf"
                                                 ? gramvec::LexicalMode::tfidf
                                                 : gramvec::LexicalMode::bm25;
        std::vector<std::vector<std::string>> questions;
        for (const gramvec::QAPair& pair : qa.pairs) {
            questions.push_back(gramvec::clean_and_tokenize(pair.question, mode));
        }
        const auto index = std::make_shared<gramvec::Index>(gramvec::build_index(questions));
        ranker = [index, lexical, mode](const std::string& query) {
            return gramvec::rank_lexical(*index, gramvec::clean_and_tokenize(query, mode),
                                         lexical);
        };
    }

    std::vector<gramvec::FaqQueryOutcome> outcomes;
    const gramvec::FaqMetrics metrics = gramvec::evaluate_faq(ranker, qa, &outcomes);
    gramvec::save_faq_results_tsv(outcomes, args.out);
    std::cerr << "faq-eval: " << qa.queries.size() << " queries, acc " << metrics.acc
              << ", mrr " << metrics.mrr << "\n";

    json summary;
    summary["command"] = "faq-eval";
    summary["pairs"] = qa.pairs.size();
    summary["queries"] = qa.queries.size();
    summary["ranker"] = args.ranker;
    summary["acc"] = metrics.acc;
    summary["mrr"] = metrics.mrr;
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string templates;
    std::string corpus;
    std::string out;
    std::string vectors;
    std::string model;
    int rerank_k = 100;
};

int run_generate(const GenerateArgs& args) {
    const std::vector<gramvec::SentenceTemplate> templates =
        gramvec::load_templates_jsonl(args.templates);
    const std::vector<std::vector<std::string>> docs =
        gramvec::load_token_lines(args.corpus);
    const gramvec::Index index = gramvec::build_index(docs);
    const gramvec::EmbeddingProvider provider = open_provider(args.vectors, args.model);

    std::ofstream out(args.out, std::ios::binary);
    if (!out) {
        throw gramvec::IoError("generate: cannot open '" + args.out + "' for writing");
    }
    out << "category\tsentence\tdoc_id\tbm25_rank\tscore\ttext\n";
    std::size_t picks = 0;
    bool clamped = false;
    char score_text[64];
    for (const gramvec::SentenceTemplate& tpl : templates) {
        const gramvec::TwoStageResult result =
            gramvec::two_stage_retrieve(index, provider, tpl, args.rerank_k);
        clamped = clamped || result.k_clamped;
        for (const gramvec::SentencePick& pick : result.picks) {
            std::snprintf(score_text, sizeof(score_text), "%.6f", pick.score);
            out << tpl.category << '\t' << pick.sentence << '\t' << pick.doc_id << '\t'
                << pick.bm25_rank << '\t' << score_text << '\t'
                << gramvec::join_tokens(index.docs[pick.doc_id]) << '\n';
            ++picks;
        }
    }
    if (!out) {
        throw gramvec::IoError("generate: failed while writing '" + args.out + "'");
    }
    std::cerr << "generate: " << picks << " picks across " << templates.size()
              << " templates\n";

    json summary;
    summary["command"] = "generate";
    summary["templates"] = templates.size();
    summary["picks"] = picks;
    summary["documents"] = docs.size();
    summary["rerank_k"] = args.rerank_k;
    summary["k_clamped"] = clamped;
    summary["out"] = args.out;
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------
// project

struct ProjectArgs {
    std::string items;
    std::string vectors;
    std::string model;
    std::string out;
    std::string pairs;
    std::string cohesion_out;
    int dims = 2;
};

struct LabeledItem {
    std::string text;
    std::string category;
};

std::vector<LabeledItem> load_labeled_items(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw gramvec::IoError("project: cannot open '" + path + "' for reading");
    }
    std::vector<LabeledItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw gramvec::FormatError("project: expected text<TAB>category", line_no);
        }
        items.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return items;
}

int run_project(const ProjectArgs& args) {
    const std::vector<LabeledItem> items = load_labeled_items(args.items);
    const gramvec::EmbeddingProvider provider = open_provider(args.vectors, args.model);

    std::vector<std::vector<double>> points;
    std::vector<std::string> labels;
    std::vector<std::string> categories;
    int skipped_unknown = 0;
    for (const LabeledItem& item : items) {
        try {
            points.push_back(provider(item.text));
        } catch (const gramvec::VocabError&) {
            ++skipped_unknown;
            std::cerr << "project: skipping '" << item.text << "' (no known tokens)\n";
            continue;
        }
        labels.push_back(item.text);
        categories.push_back(item.category);
    }
    const gramvec::Projection projection = gramvec::pca_project(points, args.dims);
    gramvec::save_projection_csv(projection, labels, categories, args.out);

    json summary;
    summary["command"] = "project";
    summary["points"] = points.size();
    summary["dims"] = args.dims;
    summary["explained_variance"] = projection.explained_variance;
    summary["skipped_unknown"] = skipped_unknown;
    summary["out"] = args.out;

    // Optional second analysis: offsets between the two sides of labeled
    // pairs, grouped by category.
    if (!args.pairs.empty()) {
        const std::vector<gramvec::Quadruple> quadruples =
            gramvec::load_quadruples(args.pairs);
        std::map<std::string,
                 std::vector<std::pair<std::vector<double>, std::vector<double>>>>
            pairs;
        int skipped_pairs = 0;
        for (const gramvec::Quadruple& quad : quadruples) {
            try {
                // Resolve all four vectors before touching the map, so a
                // lookup failure cannot leave a half-filled category behind.
                std::vector<double> a = provider(quad.a);
                std::vector<double> b = provider(quad.b);
                std::vector<double> c = provider(quad.c);
                std::vector<double> d = provider(quad.d);
                auto& list = pairs[quad.category];
                list.emplace_back(std::move(a), std::move(b));
                list.emplace_back(std::move(c), std::move(d));
            } catch (const gramvec::VocabError&) {
                ++skipped_pairs;
            }
        }
        const gramvec::PairDifferenceReport report =
            gramvec::pair_difference_analysis(pairs);
        gramvec::save_cohesion_csv(report, args.cohesion_out);
        json cohesion;
        for (const gramvec::CategoryCohesion& c : report.per_category) {
            cohesion[c.category] = {{"intra", c.intra_cosine},
                                    {"inter", c.inter_cosine},
                                    {"separated", c.separated}};
        }
        summary["cohesion"] = cohesion;
        summary["skipped_pairs"] = skipped_pairs;
        summary["cohesion_out"] = args.cohesion_out;
    }
    print_summary(summary);
    return 0;
}

// ---------------------------------------------------------------------------

void add_provider_options(CLI::App* sub, std::string& vectors, std::string& model,
                          bool required) {
    auto* group = sub->add_option_group("embedding source");
    group->add_option("--vectors", vectors, "Word-vector table (word v1 .. vD per line)")
        ->check(CLI::ExistingFile);
    group->add_option("--model", model, "Trained encoder checkpoint")
        ->check(CLI::ExistingFile);
    if (required) {
        group->require_option(1);
    } else {
        group->require_option(0, 1);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "gramvec: association-scored n-gram mining, span-masked encoder training, "
        "and embedding evaluation"};
    app.require_subcommand(1);

    ExtractArgs extract;
    CLI::App* extract_cmd = app.add_subcommand(
        "extract-ngrams", "Score and prune n-grams per document, merge into a lexicon");
    extract_cmd->add_option("--in", extract.in, "Raw text corpus (blank-line documents)")
        ->required()
        ->check(CLI::ExistingFile);
    extract_cmd->add_option("--out", extract.out, "Lexicon TSV")->required();
    extract_cmd->add_option("--max-n", extract.max_n, "Longest n-gram")
        ->capture_default_str();
    extract_cmd->add_option("--top-k", extract.top_k, "Entries kept per document")
        ->capture_default_str();
    extract_cmd->add_option("--min-len", extract.min_len, "Shortest n-gram kept")
        ->capture_default_str();
    extract_cmd->add_option("--threads", extract.threads, "Worker threads")
        ->capture_default_str();
    CLI::Option* threshold_opt = extract_cmd->add_option(
        "--pmi-threshold", extract.pmi_threshold, "Drop entries scoring below this");
    extract_cmd->add_option("--mode", extract.mode, "Tokenization: word or chars")
        ->check(CLI::IsMember({"word", "chars"}))
        ->capture_default_str();

    InstancesArgs instances;
    CLI::App* instances_cmd = app.add_subcommand(
        "make-instances", "Corrupt corpus documents into masked training instances");
    instances_cmd->add_option("--in", instances.in, "Raw text corpus")
        ->required()
        ->check(CLI::ExistingFile);
    instances_cmd->add_option("--vocab", instances.vocab, "Lexicon TSV from extract-ngrams")
        ->required()
        ->check(CLI::ExistingFile);
    instances_cmd->add_option("--out", instances.out, "Instances JSONL")->required();
    instances_cmd->add_option("--seed", instances.seed, "Base seed for span draws")
        ->required();
    instances_cmd->add_option("--epoch", instances.epoch, "Epoch index folded into seeds")
        ->capture_default_str();
    instances_cmd->add_option("--mask-ratio", instances.mask_ratio, "Prediction budget")
        ->capture_default_str();
    instances_cmd->add_option("--p-mask", instances.p_mask, "Mask-token share")
        ->capture_default_str();
    instances_cmd->add_option("--p-random", instances.p_random, "Random-token share")
        ->capture_default_str();
    instances_cmd->add_option("--p-keep", instances.p_keep, "Keep-as-is share")
        ->capture_default_str();
    instances_cmd->add_option("--max-n", instances.max_n, "Longest maskable span")
        ->capture_default_str();
    instances_cmd->add_option("--geo-p", instances.geo_p, "Span-length parameter")
        ->capture_default_str();
    instances_cmd->add_option("--geo-lmax", instances.geo_lmax, "Span-length cap")
        ->capture_default_str();
    instances_cmd
        ->add_option("--max-seq-len", instances.max_seq_len, "Input truncation length")
        ->capture_default_str();
    instances_cmd->add_flag("--geometric", instances.geometric,
                            "Sample span lengths geometrically instead of matching");
    instances_cmd->add_option("--mode", instances.mode, "Tokenization: word or chars")
        ->check(CLI::IsMember({"word", "chars"}))
        ->capture_default_str();

    TrainArgs train;
    CLI::App* train_cmd =
        app.add_subcommand("train", "Fit the encoder on masked instances with SGD");
    train_cmd->add_option("--instances", train.instances, "Instances JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd
        ->add_option("--corpus", train.corpus, "Raw corpus defining the token vocabulary")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
    train_cmd->add_option("--seed", train.seed, "Seed for weights and batch order")
        ->required();
    train_cmd->add_option("--steps", train.steps, "SGD steps")->capture_default_str();
    train_cmd->add_option("--lr", train.lr, "Peak learning rate")->capture_default_str();
    train_cmd->add_option("--batch-size", train.batch_size, "Instances per step")
        ->capture_default_str();
    train_cmd
        ->add_option("--warmup-fraction", train.warmup_fraction,
                     "Share of steps ramping the rate linearly")
        ->capture_default_str();
    train_cmd->add_option("--layers", train.layers, "Encoder blocks")
        ->capture_default_str();
    train_cmd->add_option("--heads", train.heads, "Attention heads")
        ->capture_default_str();
    train_cmd->add_option("--d-model", train.d_model, "Hidden width")
        ->capture_default_str();
    train_cmd->add_option("--d-ff", train.d_ff, "Feed-forward width")
        ->capture_default_str();
    train_cmd->add_option("--max-len", train.max_len, "Longest input accepted")
        ->capture_default_str();
    train_cmd->add_option("--cls-token", train.cls_token, "Sequence-start marker")
        ->capture_default_str();
    train_cmd->add_option("--sep-token", train.sep_token, "Sequence-end marker")
        ->capture_default_str();
    train_cmd->add_option("--mask-token", train.mask_token, "Corruption marker")
        ->capture_default_str();
    train_cmd->add_option("--mode", train.mode, "Tokenization: word or chars")
        ->check(CLI::IsMember({"word", "chars"}))
        ->capture_default_str();

    BuildAnalogyArgs build_analogy;
    CLI::App* build_analogy_cmd = app.add_subcommand(
        "build-analogy", "Turn labeled quadruples into multiple-choice questions");
    build_analogy_cmd
        ->add_option("--quadruples", build_analogy.quadruples,
                     "Quadruple list (': category' headers, 'a b c d' rows)")
        ->required()
        ->check(CLI::ExistingFile);
    build_analogy_cmd
        ->add_option("--vectors", build_analogy.vectors,
                     "Reference word vectors ranking the candidates")
        ->required()
        ->check(CLI::ExistingFile);
    build_analogy_cmd
        ->add_option("--templates", build_analogy.templates,
                     "Frame definitions for phrase and sentence questions")
        ->check(CLI::ExistingFile);
    build_analogy_cmd->add_option("--out", build_analogy.out, "Questions JSONL")
        ->required();
    build_analogy_cmd
        ->add_option("--candidates", build_analogy.candidates, "Choices per question")
        ->capture_default_str();
    build_analogy_cmd->add_flag("!--no-word", build_analogy.word_level,
                                "Skip word-level questions");
    build_analogy_cmd->add_flag("!--no-phrase", build_analogy.phrase_level,
                                "Skip phrase-level questions");
    build_analogy_cmd->add_flag("!--no-sentence", build_analogy.sentence_level,
                                "Skip sentence-level questions");

    EvalAnalogyArgs eval_analogy;
    CLI::App* eval_analogy_cmd = app.add_subcommand(
        "eval-analogy", "Answer analogy questions with an embedding and report accuracy");
    eval_analogy_cmd->add_option("--questions", eval_analogy.questions, "Questions JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    eval_analogy_cmd->add_option("--out", eval_analogy.out, "Report TSV")->required();
    add_provider_options(eval_analogy_cmd, eval_analogy.vectors, eval_analogy.model,
                         /*required=*/true);

    FaqArgs faq;
    CLI::App* faq_cmd = app.add_subcommand(
        "faq-eval", "Rank stored questions against queries and score top-1/MRR");
    faq_cmd->add_option("--qa", faq.qa, "Question-answer JSONL with gold queries")
        ->required()
        ->check(CLI::ExistingFile);
    faq_cmd->add_option("--out", faq.out, "Per-query outcome TSV")->required();
    faq_cmd->add_option("--ranker", faq.ranker, "bm25, tfidf, or embedding")
        ->check(CLI::IsMember({"bm25", "tfidf", "embedding"}))
        ->capture_default_str();
    faq_cmd->add_option("--mode", faq.mode, "Tokenization: word or chars")
        ->check(CLI::IsMember({"word", "chars"}))
        ->capture_default_str();
    add_provider_options(faq_cmd, faq.vectors, faq.model, /*required=*/false);

    GenerateArgs generate;
    CLI::App* generate_cmd = app.add_subcommand(
        "generate", "Fill sentence templates by lexical retrieval plus cosine re-rank");
    generate_cmd
        ->add_option("--templates", generate.templates,
                     "Sentence templates JSONL (category + sentences)")
        ->required()
        ->check(CLI::ExistingFile);
    generate_cmd
        ->add_option("--corpus", generate.corpus,
                     "Candidate documents, one whitespace-tokenized doc per line")
        ->required()
        ->check(CLI::ExistingFile);
    generate_cmd->add_option("--out", generate.out, "Picks TSV")->required();
    generate_cmd
        ->add_option("--rerank-k", generate.rerank_k, "Candidates re-ranked per sentence")
        ->capture_default_str();
    add_provider_options(generate_cmd, generate.vectors, generate.model,
                         /*required=*/true);

    ProjectArgs project;
    CLI::App* project_cmd = app.add_subcommand(
        "project", "Project labeled texts to principal components as plot data");
    project_cmd
        ->add_option("--items", project.items, "Items to embed (text<TAB>category lines)")
        ->required()
        ->check(CLI::ExistingFile);
    project_cmd->add_option("--out", project.out, "Coordinates CSV")->required();
    project_cmd->add_option("--dims", project.dims, "Output dimensions")
        ->capture_default_str();
    CLI::Option* pairs_opt =
        project_cmd
            ->add_option("--pairs", project.pairs,
                         "Quadruple list whose (a,b) and (c,d) offsets are compared")
            ->check(CLI::ExistingFile);
    project_cmd
        ->add_option("--cohesion-out", project.cohesion_out, "Cohesion CSV")
        ->needs(pairs_opt);
    pairs_opt->needs("--cohesion-out");
    add_provider_options(project_cmd, project.vectors, project.model, /*required=*/true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::CallForAllHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        app.exit(error);
        return 2;
    }
    extract.has_threshold = threshold_opt->count() > 0;

    if (faq.ranker == "embedding" && faq.vectors.empty() && faq.model.empty()) {
        std::cerr << "faq-eval: --ranker embedding needs --vectors or --model\n";
        return 2;
    }

    try {
        if (*extract_cmd) return run_extract(extract);
        if (*instances_cmd) return run_instances(instances);
        if (*train_cmd) return run_train(train);
        if (*build_analogy_cmd) return run_build_analogy(build_analogy);
        if (*eval_analogy_cmd) return run_eval_analogy(eval_analogy);
        if (*faq_cmd) return run_faq(faq);
        if (*generate_cmd) return run_generate(generate);
        if (*project_cmd) return run_project(project);
    } catch (const gramvec::Error& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
    return 0;
}
