#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "gramvec/analogy.hpp"
#include "gramvec/corpus.hpp"
#include "gramvec/masking.hpp"
#include "gramvec/mlm.hpp"
#include "gramvec/ngram.hpp"
#include "gramvec/retrieval.hpp"
#include "helpers.hpp"

using namespace gramvec;

namespace {

struct CliResult {
    int status = -1;
    std::string out;
    std::string err;
};

// Runs the installed binary with stdout/stderr captured into the temp dir.
CliResult run_cli(const testutil::TempDir& dir, const std::string& args) {
    const std::string out_path = dir.path() + "/cli_stdout.txt";
    const std::string err_path = dir.path() + "/cli_stderr.txt";
    const std::string command = std::string(GRAMVEC_CLI_PATH) + " " + args + " >" +
                                out_path + " 2>" + err_path;
    const int raw = std::system(command.c_str());
    CliResult result;
    result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.out = testutil::read_file(out_path);
    result.err = testutil::read_file(err_path);
    return result;
}

nlohmann::json parse_summary(const CliResult& result) {
    REQUIRE(!result.out.empty());
    return nlohmann::json::parse(result.out);
}

std::string write_corpus(const testutil::TempDir& dir, int documents, int seed) {
    const std::string path = dir.file("corpus.txt");
    testutil::write_file(path, testutil::collocation_corpus(documents, seed));
    return path;
}

std::string analogy_vectors_text() {
    return
        "cat 1 0 0 0\n"
        "cats 1 0 1 0\n"
        "dog 0 1 0 0\n"
        "dogs 0 1 1 0\n"
        "france 0 0 0 1\n"
        "paris 0 0 1 1\n"
        "italy 0 1 0 1\n"
        "rome 0 1 1 1\n";
}

}  // namespace

TEST_CASE("help requests succeed and usage mistakes exit with 2") {
    testutil::TempDir dir;
    CHECK(run_cli(dir, "--help").status == 0);
    CHECK(run_cli(dir, "extract-ngrams --help").status == 0);

    CHECK(run_cli(dir, "").status == 2);               // a subcommand is required
    CHECK(run_cli(dir, "no-such-command").status == 2);
    CHECK(run_cli(dir, "extract-ngrams --in " + dir.path() + "/absent.txt --out x.tsv")
              .status == 2);  // missing input file fails the flag check

    // Sampling without an explicit seed is rejected at parse time.
    const std::string corpus = write_corpus(dir, 5, 1);
    const CliResult no_seed =
        run_cli(dir, "make-instances --in " + corpus + " --vocab " + corpus +
                         " --out " + dir.path() + "/x.jsonl");
    CHECK(no_seed.status == 2);
    CHECK(no_seed.err.find("--seed") != std::string::npos);

    // Embedding ranking needs a vector table or a checkpoint.
    testutil::write_file(dir.file("qa.jsonl"),
                         "{\"question\":\"a b\",\"answer\":\"c\"}\n"
                         "{\"query\":\"a\",\"gold\":0}\n");
    CHECK(run_cli(dir, "faq-eval --qa " + dir.file("qa.jsonl") + " --out " +
                           dir.path() + "/x.tsv --ranker embedding")
              .status == 2);
}

TEST_CASE("broken input content exits with 1 and a diagnostic") {
    testutil::TempDir dir;
    const std::string corpus = write_corpus(dir, 5, 2);
    const std::string bad_vocab = dir.file("bad.tsv");
    testutil::write_file(bad_vocab, "only one field\n");
    const CliResult result =
        run_cli(dir, "make-instances --in " + corpus + " --vocab " + bad_vocab +
                         " --out " + dir.path() + "/x.jsonl --seed 5");
    CHECK(result.status == 1);
    CHECK(result.err.find("error:") != std::string::npos);
    CHECK(result.out.empty());  // no summary on failure
}

TEST_CASE("extract-ngrams writes exactly what the library writes") {
    testutil::TempDir dir;
    const std::string corpus = write_corpus(dir, 30, 3);
    const std::string out = dir.file("vocab.tsv");

    const CliResult result =
        run_cli(dir, "extract-ngrams --in " + corpus + " --out " + out);
    REQUIRE(result.status == 0);
    const nlohmann::json summary = parse_summary(result);
    CHECK(summary.at("command") == "extract-ngrams");
    CHECK(!result.err.empty());  // the human log goes to stderr

    // Same inputs through the library, byte-for-byte.
    const DocumentSet set = ingest_corpus(corpus, TokenMode::word);
    const NgramVocab vocab = build_ngram_vocab(set, VocabBuildOptions{});
    const std::string expected = dir.file("expected.tsv");
    save_vocab_tsv(vocab, expected);
    CHECK(testutil::read_file(out) == testutil::read_file(expected));
    CHECK(summary.at("entries").get<std::size_t>() == vocab.size());
    CHECK(summary.at("documents").get<std::size_t>() == set.docs.size());
    CHECK(summary.at("tokens").get<std::size_t>() == set.total_tokens);

    // The rows arrive ranked: association score never increases.
    const auto entries = sorted_entries(load_vocab_tsv(out));
    for (std::size_t i = 1; i < entries.size(); ++i) {
        CHECK(entries[i].pmi <= entries[i - 1].pmi + 1e-9);
    }
}

TEST_CASE("make-instances is deterministic and matches the library") {
    testutil::TempDir dir;
    const std::string corpus = write_corpus(dir, 20, 4);
    const std::string vocab_path = dir.file("vocab.tsv");
    REQUIRE(run_cli(dir, "extract-ngrams --in " + corpus + " --out " + vocab_path)
                .status == 0);

    const std::string first = dir.file("inst_a.jsonl");
    const std::string second = dir.file("inst_b.jsonl");
    const std::string base_args = "make-instances --in " + corpus + " --vocab " +
                                  vocab_path + " --seed 7 --epoch 0 --out ";
    REQUIRE(run_cli(dir, base_args + first).status == 0);
    const CliResult repeat = run_cli(dir, base_args + second);
    REQUIRE(repeat.status == 0);
    CHECK(testutil::read_file(first) == testutil::read_file(second));

    // Library call with identical inputs produces identical bytes.
    const DocumentSet set = ingest_corpus(corpus, TokenMode::word);
    const NgramVocab vocab = load_vocab_tsv(vocab_path);
    const std::vector<MaskedInstance> instances =
        generate_epoch_dataset(set, vocab, MaskingConfig{}, 7, 0);
    const std::string expected = dir.file("expected.jsonl");
    save_instances_jsonl(instances, expected);
    CHECK(testutil::read_file(first) == testutil::read_file(expected));

    const nlohmann::json summary = parse_summary(repeat);
    CHECK(summary.at("instances").get<std::size_t>() == instances.size());
    std::size_t targets = 0;
    for (const MaskedInstance& instance : instances) targets += instance.targets.size();
    CHECK(summary.at("targets").get<std::size_t>() == targets);

    // A different epoch re-draws the corruption somewhere.
    const std::string epoch1 = dir.file("inst_e1.jsonl");
    REQUIRE(run_cli(dir, "make-instances --in " + corpus + " --vocab " + vocab_path +
                             " --seed 7 --epoch 1 --out " + epoch1)
                .status == 0);
    CHECK(testutil::read_file(epoch1) != testutil::read_file(first));

    // The baseline sampler is reported and also deterministic.
    const std::string geo = dir.file("inst_geo.jsonl");
    const CliResult geo_run =
        run_cli(dir, "make-instances --in " + corpus + " --vocab " + vocab_path +
                         " --seed 7 --geometric --out " + geo);
    REQUIRE(geo_run.status == 0);
    CHECK(parse_summary(geo_run).at("sampler") == "geometric");
}

TEST_CASE("train writes a loadable checkpoint and reports the loss curve") {
    testutil::TempDir dir;
    const std::string corpus = write_corpus(dir, 8, 5);
    const std::string vocab_path = dir.file("vocab.tsv");
    const std::string inst_path = dir.file("inst.jsonl");
    REQUIRE(run_cli(dir, "extract-ngrams --in " + corpus + " --out " + vocab_path)
                .status == 0);
    REQUIRE(run_cli(dir, "make-instances --in " + corpus + " --vocab " + vocab_path +
                             " --seed 11 --out " + inst_path)
                .status == 0);

    const std::string model_a = dir.file("model_a.json");
    const std::string model_b = dir.file("model_b.json");
    const std::string args = "train --instances " + inst_path + " --corpus " + corpus +
                             " --seed 13 --steps 12 --lr 0.2 --batch-size 2"
                             " --layers 1 --heads 2 --d-model 8 --d-ff 16"
                             " --max-len 64 --out ";
    const CliResult result = run_cli(dir, args + model_a);
    REQUIRE(result.status == 0);
    REQUIRE(run_cli(dir, args + model_b).status == 0);
    CHECK(testutil::read_file(model_a) == testutil::read_file(model_b));

    const nlohmann::json summary = parse_summary(result);
    CHECK(summary.at("steps") == 12);
    CHECK(summary.at("initial_loss").get<double>() > 0.0);
    CHECK(std::isfinite(summary.at("final_loss").get<double>()));

    const ModelParams params = load_checkpoint(model_a);
    CHECK(params.theta.size() == summary.at("parameters").get<std::size_t>());
    CHECK(params.vocab.size() == summary.at("vocab").get<std::size_t>());
    CHECK(params.config.layers == 1);
    CHECK(params.config.d_model == 8);
}

TEST_CASE("analogy questions built and scored by the binary match the library") {
    testutil::TempDir dir;
    const std::string vectors = dir.file("vectors.txt");
    testutil::write_file(vectors, analogy_vectors_text());
    const std::string quads = dir.file("quads.txt");
    testutil::write_file(quads,
                         ": capital-common-countries\n"
                         "france paris italy rome\n"
                         ": plural\n"
                         "cat cats dog dogs\n"
                         "cat cats missing word\n");

    const std::string questions_path = dir.file("questions.jsonl");
    const CliResult build =
        run_cli(dir, "build-analogy --quadruples " + quads + " --vectors " + vectors +
                         " --candidates 3 --out " + questions_path);
    REQUIRE(build.status == 0);
    const nlohmann::json build_summary = parse_summary(build);
    CHECK(build_summary.at("questions") == 2);
    CHECK(build_summary.at("skipped_missing_words") == 1);
    CHECK(build_summary.at("levels").at("word") == 2);

    const std::string report_path = dir.file("report.tsv");
    const CliResult eval =
        run_cli(dir, "eval-analogy --questions " + questions_path + " --vectors " +
                         vectors + " --out " + report_path);
    REQUIRE(eval.status == 0);

    // Library-level oracle: same questions, same provider, same report.
    const std::vector<AnalogyQuestion> questions = load_questions_jsonl(questions_path);
    const EmbeddingStore store = load_word_vectors(vectors);
    const AnalogyReport report = evaluate_analogy(store_provider(store), questions);
    const std::string expected = dir.file("expected.tsv");
    save_report_tsv(report, expected);
    CHECK(testutil::read_file(report_path) == testutil::read_file(expected));
    const nlohmann::json summary = parse_summary(eval);
    CHECK(summary.at("overall").get<double>() == doctest::Approx(report.overall()));
    CHECK(summary.at("questions") == 2);
}

TEST_CASE("faq-eval cleans text, ranks the stored questions, and writes outcomes") {
    testutil::TempDir dir;
    const std::string qa_path = dir.file("qa.jsonl");
    testutil::write_file(
        qa_path,
        "{\"question\":\"How do I reset my password?\",\"answer\":\"account page\"}\n"
        "{\"question\":\"Where is the main office located?\",\"answer\":\"king street\"}\n"
        "{\"question\":\"When does support answer tickets?\",\"answer\":\"weekdays\"}\n"
        "{\"query\":\"how do i RESET my password\",\"gold\":0}\n"
        "{\"query\":\"where is the office?\",\"gold\":1}\n"
        "{\"query\":\"support tickets\",\"gold\":2}\n");

    const std::string out = dir.file("faq.tsv");
    const CliResult result =
        run_cli(dir, "faq-eval --qa " + qa_path + " --ranker bm25 --out " + out);
    REQUIRE(result.status == 0);
    const nlohmann::json summary = parse_summary(result);
    CHECK(summary.at("acc").get<double>() == 1.0);  // every gold question wins
    CHECK(summary.at("mrr").get<double>() == 1.0);
    CHECK(summary.at("pairs") == 3);
    CHECK(summary.at("queries") == 3);

    // The outcome file matches a library run with the documented ranker:
    // tokens cleaned the same way, BM25 over the stored questions.
    const QASet qa = load_qa_jsonl(qa_path);
    std::vector<std::vector<std::string>> cleaned;
    for (const QAPair& pair : qa.pairs) {
        cleaned.push_back(clean_and_tokenize(pair.question, TokenMode::word));
    }
    const Index index = build_index(cleaned);
    std::vector<FaqQueryOutcome> outcomes;
    evaluate_faq(
        [&index](const std::string& query) {
            return rank_lexical(index, clean_and_tokenize(query, TokenMode::word),
                                LexicalMode::bm25);
        },
        qa, &outcomes);
    const std::string expected = dir.file("expected.tsv");
    save_faq_results_tsv(outcomes, expected);
    CHECK(testutil::read_file(out) == testutil::read_file(expected));

    // The tfidf ranker is accepted too.
    CHECK(run_cli(dir, "faq-eval --qa " + qa_path + " --ranker tfidf --out " + out)
              .status == 0);
}

TEST_CASE("generate re-ranks lexical candidates exactly like the library") {
    testutil::TempDir dir;
    const std::string docs_path = dir.file("docs.txt");
    testutil::write_file(docs_path,
                         "alpha alpha alpha alpha\n"
                         "alpha beta\n"
                         "beta\n");
    const std::string vectors = dir.file("vectors.txt");
    testutil::write_file(vectors, "alpha 1 0\nbeta 0 1\n");
    const std::string tpl_path = dir.file("templates.jsonl");
    testutil::write_file(tpl_path,
                         "{\"category\":\"demo\",\"sentences\":[\"alpha beta\"]}\n");

    const std::string out = dir.file("picks.tsv");
    const CliResult result =
        run_cli(dir, "generate --templates " + tpl_path + " --corpus " + docs_path +
                         " --vectors " + vectors + " --rerank-k 2 --out " + out);
    REQUIRE(result.status == 0);
    const nlohmann::json summary = parse_summary(result);
    CHECK(summary.at("picks") == 1);
    CHECK(summary.at("documents") == 3);

    const Index index = build_index(load_token_lines(docs_path));
    const EmbeddingProvider provider = store_provider(load_word_vectors(vectors));
    const TwoStageResult two_stage = two_stage_retrieve(
        index, provider, SentenceTemplate{{"alpha beta"}, "demo"}, 2);
    const SentencePick& pick = two_stage.picks[0];

    const std::string text = testutil::read_file(out);
    CHECK(text.find("category\tsentence\tdoc_id\tbm25_rank\tscore\ttext\n") == 0);
    const std::string row = "demo\talpha beta\t" + std::to_string(pick.doc_id) + "\t" +
                            std::to_string(pick.bm25_rank);
    CHECK(text.find(row) != std::string::npos);

    // Requesting more candidates than documents is reported, not fatal.
    const CliResult clamped =
        run_cli(dir, "generate --templates " + tpl_path + " --corpus " + docs_path +
                         " --vectors " + vectors + " --rerank-k 50 --out " + out);
    REQUIRE(clamped.status == 0);
    CHECK(parse_summary(clamped).at("k_clamped") == true);
}

TEST_CASE("project emits coordinates and pair cohesion as plot data") {
    testutil::TempDir dir;
    const std::string vectors = dir.file("vectors.txt");
    testutil::write_file(vectors, analogy_vectors_text());
    const std::string items = dir.file("items.tsv");
    testutil::write_file(items,
                         "cat\tanimal\ndog\tanimal\nfrance\tcountry\nitaly\tcountry\n"
                         "unknowable thing\tmystery\n");
    const std::string quads = dir.file("quads.txt");
    testutil::write_file(quads,
                         ": capital-common-countries\n"
                         "france paris italy rome\n"
                         ": plural\n"
                         "cat cats dog dogs\n");

    const std::string out = dir.file("proj.csv");
    const std::string cohesion_out = dir.file("cohesion.csv");
    const CliResult result = run_cli(
        dir, "project --items " + items + " --vectors " + vectors + " --dims 2 --out " +
                 out + " --pairs " + quads + " --cohesion-out " + cohesion_out);
    REQUIRE(result.status == 0);
    const nlohmann::json summary = parse_summary(result);
    CHECK(summary.at("points") == 4);
    CHECK(summary.at("skipped_unknown") == 1);
    CHECK(summary.at("explained_variance").size() == 2);
    CHECK(summary.at("cohesion").contains("plural"));

    const std::string text = testutil::read_file(out);
    CHECK(text.find("label,category,x,y\n") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);  // header + 4 points
    const std::string cohesion_text = testutil::read_file(cohesion_out);
    CHECK(cohesion_text.find("category,intra_cosine,inter_cosine,n\n") == 0);

    // --pairs and --cohesion-out only make sense together.
    CHECK(run_cli(dir, "project --items " + items + " --vectors " + vectors +
                           " --out " + out + " --pairs " + quads)
              .status == 2);
}
