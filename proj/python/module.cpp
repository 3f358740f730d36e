// Python bindings: a thin adapter over the C++ core.  Every function here
// only converts shapes (dicts, tuples, callables) and validates inputs; the
// behavior lives in the library so the two surfaces cannot drift apart.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gramvec/analogy.hpp"
#include "gramvec/corpus.hpp"
#include "gramvec/embedding.hpp"
#include "gramvec/error.hpp"
#include "gramvec/geometry.hpp"
#include "gramvec/masking.hpp"
#include "gramvec/mlm.hpp"
#include "gramvec/ngram.hpp"
#include "gramvec/retrieval.hpp"

namespace py = pybind11;
using namespace gramvec;

namespace {

TokenMode token_mode(const std::string& name) {
    if (name == "word") return TokenMode::word;
    if (name == "chars") return TokenMode::chars;
    throw ArgumentError("python: unknown token mode '" + name +
                        "' (expected 'word' or 'chars')");
}

LexicalMode lexical_mode(const std::string& name) {
    if (name == "bm25") return LexicalMode::bm25;
    if (name == "tfidf") return LexicalMode::tfidf;
    throw ArgumentError("python: unknown lexical mode '" + name +
                        "' (expected 'bm25' or 'tfidf')");
}

// Token lists coming straight from Python have not been through the cleaner,
// so guard the one invariant the n-gram keys depend on: no embedded spaces.
DocumentSet set_from_docs(const std::vector<std::vector<std::string>>& docs) {
    DocumentSet set;
    for (const auto& tokens : docs) {
        for (const std::string& token : tokens) {
            if (token.empty() || token.find(' ') != std::string::npos) {
                throw ArgumentError(
                    "python: tokens must be non-empty and contain no spaces; "
                    "run tokenize() first");
            }
        }
        Document doc;
        doc.id = static_cast<std::int64_t>(set.docs.size());
        doc.tokens = tokens;
        set.total_tokens += tokens.size();
        set.docs.push_back(std::move(doc));
    }
    return set;
}

// Wrapper types give the Python classes value semantics plus shared
// ownership, so providers built from them can outlive the binding call.
struct PyVocab {
    NgramVocab vocab;
};

struct PyWordVectors {
    EmbeddingStore store;
};

struct PyModel {
    ModelParams params;
};

struct PyIndex {
    Index index;
};

py::dict instance_to_dict(const MaskedInstance& instance) {
    py::list targets;
    for (const MaskedTarget& target : instance.targets) {
        py::dict t;
        t["start"] = target.span.start;
        t["end"] = target.span.end;
        t["tokens"] = target.tokens;
        t["mode"] = mode_name(target.mode);
        targets.append(std::move(t));
    }
    py::dict out;
    out["input"] = instance.input;
    out["targets"] = std::move(targets);
    out["seed"] = instance.seed;
    return out;
}

MaskedInstance instance_from_dict(const py::dict& d) {
    MaskedInstance instance;
    instance.input = d["input"].cast<std::vector<std::string>>();
    instance.seed = d.contains("seed") ? d["seed"].cast<std::uint64_t>() : 0;
    for (const auto& item : d["targets"].cast<py::list>()) {
        const py::dict t = item.cast<py::dict>();
        MaskedTarget target;
        target.span.start = t["start"].cast<int>();
        target.span.end = t["end"].cast<int>();
        target.tokens = t["tokens"].cast<std::vector<std::string>>();
        target.mode = mode_from_name(t["mode"].cast<std::string>());
        instance.targets.push_back(std::move(target));
    }
    return instance;
}

std::vector<MaskedInstance> instances_from_list(const py::list& items) {
    std::vector<MaskedInstance> instances;
    instances.reserve(items.size());
    for (const auto& item : items) {
        instances.push_back(instance_from_dict(item.cast<py::dict>()));
    }
    return instances;
}

py::dict question_to_dict(const AnalogyQuestion& question) {
    py::dict out;
    out["a"] = question.a;
    out["b"] = question.b;
    out["c"] = question.c;
    out["candidates"] = question.candidates;
    out["answer"] = question.answer_index;
    out["category"] = question.category;
    out["level"] = question.level;
    return out;
}

AnalogyQuestion question_from_dict(const py::dict& d) {
    AnalogyQuestion question;
    question.a = d["a"].cast<std::string>();
    question.b = d["b"].cast<std::string>();
    question.c = d["c"].cast<std::string>();
    question.candidates = d["candidates"].cast<std::vector<std::string>>();
    question.answer_index = d["answer"].cast<int>();
    question.category = d.contains("category") ? d["category"].cast<std::string>() : "";
    question.level = d.contains("level") ? d["level"].cast<std::string>() : "word";
    return question;
}

// Anything vector-valued can drive the evaluation code: a static word-vector
// table, a trained model, or a plain Python callable.
EmbeddingProvider as_provider(const py::object& source) {
    if (py::isinstance<PyWordVectors>(source)) {
        auto store = source.cast<std::shared_ptr<PyWordVectors>>();
        const EmbeddingProvider base = store_provider(store->store);
        return [store, base](const std::string& text) { return base(text); };
    }
    if (py::isinstance<PyModel>(source)) {
        auto model = source.cast<std::shared_ptr<PyModel>>();
        const EmbeddingProvider base = make_embedding_provider(model->params);
        return [model, base](const std::string& text) { return base(text); };
    }
    if (py::isinstance<py::function>(source) || py::hasattr(source, "__call__")) {
        return source.cast<EmbeddingProvider>();
    }
    throw ArgumentError(
        "python: a provider must be a WordVectors, a Model, or a callable "
        "mapping text to a vector");
}

std::vector<std::pair<std::size_t, double>> ranking_to_pairs(const RankedList& list) {
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(list.items.size());
    for (const ScoredDoc& item : list.items) {
        out.emplace_back(item.id, item.score);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Collocation-aware masked language modeling: n-gram mining, span "
              "masking, a small trainable encoder, and retrieval / analogy / "
              "geometry evaluation.";

    py::register_exception<Error>(m, "GramvecError");

    // ------------------------------------------------------------------ corpus
    m.def(
        "tokenize",
        [](const std::string& text, const std::string& mode) {
            return clean_and_tokenize(text, token_mode(mode));
        },
        py::arg("text"), py::arg("mode") = "word",
        "Clean one document body into tokens ('word' or 'chars' mode).");

    m.def(
        "split_documents",
        [](const std::string& text, const std::string& mode) {
            std::vector<std::vector<std::string>> docs;
            for (Document& doc : ingest_text(text, token_mode(mode)).docs) {
                docs.push_back(std::move(doc.tokens));
            }
            return docs;
        },
        py::arg("text"), py::arg("mode") = "word",
        "Split raw text on blank lines and tokenize each document.");

    // ------------------------------------------------------------------ ngrams
    py::class_<PyVocab, std::shared_ptr<PyVocab>>(m, "NgramVocab",
                                                  "Merged collocation lexicon.")
        .def_property_readonly(
            "max_n", [](const PyVocab& v) { return v.vocab.max_n; })
        .def("__len__", [](const PyVocab& v) { return v.vocab.size(); })
        .def(
            "__contains__",
            [](const PyVocab& v, const std::vector<std::string>& tokens) {
                return v.vocab.lookup(tokens) != nullptr;
            },
            py::arg("tokens"))
        .def(
            "lookup",
            [](const PyVocab& v, const std::vector<std::string>& tokens)
                -> py::object {
                const NgramEntry* entry = v.vocab.lookup(tokens);
                if (entry == nullptr) {
                    return py::none();
                }
                return py::make_tuple(entry->count, entry->pmi);
            },
            py::arg("tokens"),
            "(count, score) for a token sequence, or None when absent.")
        .def(
            "entries",
            [](const PyVocab& v) {
                std::vector<std::tuple<std::vector<std::string>, std::int64_t, double>>
                    out;
                for (const NgramEntry& entry : sorted_entries(v.vocab)) {
                    out.emplace_back(entry.tokens, entry.count, entry.pmi);
                }
                return out;
            },
            "All (tokens, count, score) entries, best first.")
        .def(
            "save",
            [](const PyVocab& v, const std::string& path) {
                save_vocab_tsv(v.vocab, path);
            },
            py::arg("path"))
        .def_static(
            "load",
            [](const std::string& path) {
                auto v = std::make_shared<PyVocab>();
                v->vocab = load_vocab_tsv(path);
                return v;
            },
            py::arg("path"));

    m.def(
        "build_ngram_vocab",
        [](const std::vector<std::vector<std::string>>& docs, int max_n, int top_k,
           int min_len, py::object pmi_threshold, int threads) {
            VocabBuildOptions options;
            options.max_n = max_n;
            options.top_k = top_k;
            options.min_len = min_len;
            options.threads = threads;
            if (!pmi_threshold.is_none()) {
                options.pmi_threshold = pmi_threshold.cast<double>();
            }
            auto v = std::make_shared<PyVocab>();
            v->vocab = build_ngram_vocab(set_from_docs(docs), options);
            return v;
        },
        py::arg("docs"), py::arg("max_n") = 10, py::arg("top_k") = 3000,
        py::arg("min_len") = 2, py::arg("pmi_threshold") = py::none(),
        py::arg("threads") = 1,
        "Score every document's n-grams and merge the per-document top lists.");

    m.def(
        "score_ngram",
        [](const std::vector<std::string>& doc, const std::vector<std::string>& ngram) {
            Document document;
            document.tokens = doc;
            const int max_n = std::max<int>(1, static_cast<int>(ngram.size()));
            return pmi_score(ngram, count_ngrams(document, max_n));
        },
        py::arg("doc"), py::arg("ngram"),
        "Length-normalized association score of one n-gram inside one document.");

    // ----------------------------------------------------------------- masking
    m.def(
        "mask_instances",
        [](const std::vector<std::vector<std::string>>& docs,
           const std::shared_ptr<PyVocab>& vocab, std::uint64_t seed, int epoch,
           double mask_ratio, int max_seq_len, bool geometric) {
            MaskingConfig config;
            config.mask_ratio = mask_ratio;
            config.max_seq_len = max_seq_len;
            py::list out;
            for (const MaskedInstance& instance : generate_epoch_dataset(
                     set_from_docs(docs), vocab->vocab, config, seed, epoch,
                     geometric)) {
                out.append(instance_to_dict(instance));
            }
            return out;
        },
        py::arg("docs"), py::arg("vocab"), py::arg("seed"), py::arg("epoch") = 0,
        py::arg("mask_ratio") = 0.15, py::arg("max_seq_len") = 512,
        py::arg("geometric") = false,
        "One dynamic-masking pass over the corpus; epochs redraw the spans.");

    // ------------------------------------------------------------------- model
    py::class_<PyModel, std::shared_ptr<PyModel>>(
        m, "Model", "Small transformer encoder trained on span corruption.")
        .def_static(
            "create",
            [](const std::vector<std::vector<std::string>>& docs, int layers,
               int heads, int d_model, int d_ff, int max_len, std::uint64_t seed) {
                const DocumentSet set = set_from_docs(docs);
                const TokenVocab vocab =
                    TokenVocab::build(set, {"[CLS]", "[SEP]", "[MASK]"});
                ModelConfig config;
                config.layers = layers;
                config.heads = heads;
                config.d_model = d_model;
                config.d_ff = d_ff;
                config.max_len = max_len;
                auto model = std::make_shared<PyModel>();
                model->params = init_model(config, vocab, seed);
                return model;
            },
            py::arg("docs"), py::arg("layers") = 2, py::arg("heads") = 4,
            py::arg("d_model") = 64, py::arg("d_ff") = 128, py::arg("max_len") = 128,
            py::arg("seed") = 0,
            "Fresh model over the corpus vocabulary plus [CLS]/[SEP]/[MASK].")
        .def_property_readonly(
            "vocab", [](const PyModel& model) { return model.params.vocab.tokens; })
        .def_property_readonly(
            "parameter_count",
            [](const PyModel& model) { return model.params.theta.size(); })
        .def_property_readonly(
            "config",
            [](const PyModel& model) {
                py::dict out;
                out["layers"] = model.params.config.layers;
                out["heads"] = model.params.config.heads;
                out["d_model"] = model.params.config.d_model;
                out["d_ff"] = model.params.config.d_ff;
                out["vocab_size"] = model.params.config.vocab_size;
                out["max_len"] = model.params.config.max_len;
                return out;
            })
        .def(
            "train",
            [](PyModel& model, const py::list& instances, long steps, double lr,
               std::uint64_t seed, int batch_size) {
                TrainOptions options;
                options.steps = steps;
                options.lr = lr;
                options.seed = seed;
                options.batch_size = batch_size;
                return train(model.params, instances_from_list(instances), options)
                    .losses;
            },
            py::arg("instances"), py::arg("steps"), py::arg("lr"),
            py::arg("seed") = 0, py::arg("batch_size") = 16,
            "SGD over re-sampled batches; returns the per-step batch losses.")
        .def(
            "loss",
            [](const PyModel& model, const py::list& instances) {
                return batch_loss(model.params, instances_from_list(instances));
            },
            py::arg("instances"),
            "Mean NLL over all target positions of the given instances.")
        .def(
            "embed",
            [](const PyModel& model, const std::vector<std::string>& tokens) {
                return embed(model.params, tokens);
            },
            py::arg("tokens"),
            "Unit-norm mean of the encoded content positions.")
        .def(
            "save",
            [](const PyModel& model, const std::string& path) {
                save_checkpoint(model.params, path);
            },
            py::arg("path"))
        .def_static(
            "load",
            [](const std::string& path) {
                auto model = std::make_shared<PyModel>();
                model->params = load_checkpoint(path);
                return model;
            },
            py::arg("path"));

    // ----------------------------------------------------------------- analogy
    py::class_<PyWordVectors, std::shared_ptr<PyWordVectors>>(
        m, "WordVectors", "Static word-vector table loaded from a text file.")
        .def_static(
            "load",
            [](const std::string& path, bool normalize) {
                auto store = std::make_shared<PyWordVectors>();
                store->store = load_word_vectors(path, normalize);
                return store;
            },
            py::arg("path"), py::arg("normalize") = true)
        .def_property_readonly(
            "dim", [](const PyWordVectors& v) { return v.store.dim; })
        .def("__len__", [](const PyWordVectors& v) { return v.store.order.size(); })
        .def(
            "__contains__",
            [](const PyWordVectors& v, const std::string& word) {
                return v.store.contains(word);
            },
            py::arg("word"))
        .def(
            "vector",
            [](const PyWordVectors& v, const std::string& word) -> py::object {
                const std::vector<double>* vec = v.store.find(word);
                return vec == nullptr ? py::object(py::none()) : py::cast(*vec);
            },
            py::arg("word"), "The stored vector, or None for unknown words.")
        .def_property_readonly(
            "words", [](const PyWordVectors& v) { return v.store.order; });

    m.def(
        "solve_analogy",
        [](const py::object& provider, const std::string& a, const std::string& b,
           const std::string& c, const std::vector<std::string>& candidates) {
            AnalogyQuestion question;
            question.a = a;
            question.b = b;
            question.c = c;
            question.candidates = candidates;
            return solve_analogy(as_provider(provider), question);
        },
        py::arg("provider"), py::arg("a"), py::arg("b"), py::arg("c"),
        py::arg("candidates"),
        "Index of the candidate closest to c + b - a by cosine.");

    m.def(
        "evaluate_analogy",
        [](const py::object& provider, const py::list& questions) {
            std::vector<AnalogyQuestion> parsed;
            parsed.reserve(questions.size());
            for (const auto& item : questions) {
                parsed.push_back(question_from_dict(item.cast<py::dict>()));
            }
            const AnalogyReport report =
                evaluate_analogy(as_provider(provider), parsed);
            py::list per_category;
            for (const CategoryResult& result : report.per_category) {
                py::dict row;
                row["category"] = result.category;
                row["level"] = result.level;
                row["total"] = result.total;
                row["correct"] = result.correct;
                row["accuracy"] = result.accuracy();
                per_category.append(std::move(row));
            }
            py::dict out;
            out["overall"] = report.overall();
            out["per_category"] = std::move(per_category);
            return out;
        },
        py::arg("provider"), py::arg("questions"),
        "Accuracy per category plus the grouped overall average.");

    m.def(
        "build_analogy_questions",
        [](const std::vector<std::tuple<std::string, std::string, std::string,
                                        std::string, std::string>>& quadruples,
           const std::shared_ptr<PyWordVectors>& reference, int candidates) {
            std::vector<Quadruple> quads;
            quads.reserve(quadruples.size());
            for (const auto& [a, b, c, d, category] : quadruples) {
                quads.push_back(Quadruple{a, b, c, d, category});
            }
            DatasetBuildOptions options;
            options.candidates = candidates;
            options.phrase_level = false;  // frames need a template file
            options.sentence_level = false;
            DatasetBuildStats stats;
            py::list questions;
            for (const AnalogyQuestion& question : build_analogy_dataset(
                     quads, AnalogyTemplates{}, reference->store, options, &stats)) {
                questions.append(question_to_dict(question));
            }
            py::dict out;
            out["questions"] = std::move(questions);
            out["skipped_missing_words"] = stats.skipped_missing_words;
            return out;
        },
        py::arg("quadruples"), py::arg("reference"), py::arg("candidates") = 5,
        "Word-level questions from (a, b, c, d, category) tuples; candidates "
        "come from the reference ranking of c + b - a.");

    // --------------------------------------------------------------- retrieval
    py::class_<PyIndex, std::shared_ptr<PyIndex>>(
        m, "SearchIndex", "Inverted statistics over a fixed document collection.")
        .def(py::init([](const std::vector<std::vector<std::string>>& docs) {
                 auto index = std::make_shared<PyIndex>();
                 index->index = build_index(docs);
                 return index;
             }),
             py::arg("docs"))
        .def("__len__",
             [](const PyIndex& index) { return index.index.doc_count; })
        .def(
            "score",
            [](const PyIndex& index, const std::vector<std::string>& query,
               std::size_t doc_id, const std::string& mode) {
                return score_lexical(index.index, query, doc_id, lexical_mode(mode));
            },
            py::arg("query"), py::arg("doc_id"), py::arg("mode") = "bm25")
        .def(
            "rank",
            [](const PyIndex& index, const std::vector<std::string>& query,
               const std::string& mode) {
                return ranking_to_pairs(
                    rank_lexical(index.index, query, lexical_mode(mode)));
            },
            py::arg("query"), py::arg("mode") = "bm25",
            "All documents as (doc_id, score), best first.");

    m.def(
        "rank_by_embedding",
        [](const py::object& provider, const std::string& query,
           const std::vector<std::string>& docs) {
            return ranking_to_pairs(rank_embedding(as_provider(provider), query, docs));
        },
        py::arg("provider"), py::arg("query"), py::arg("docs"),
        "Cosine ranking of the document texts against the query.");

    m.def(
        "two_stage_retrieve",
        [](const std::shared_ptr<PyIndex>& index, const py::object& provider,
           const std::vector<std::string>& sentences, int k,
           const std::string& category) {
            SentenceTemplate tpl;
            tpl.sentences = sentences;
            tpl.category = category;
            const TwoStageResult result =
                two_stage_retrieve(index->index, as_provider(provider), tpl, k);
            py::list picks;
            for (const SentencePick& pick : result.picks) {
                py::dict row;
                row["sentence"] = pick.sentence;
                row["doc_id"] = pick.doc_id;
                row["score"] = pick.score;
                row["bm25_rank"] = pick.bm25_rank;
                picks.append(std::move(row));
            }
            py::dict out;
            out["picks"] = std::move(picks);
            out["k_used"] = result.k_used;
            out["k_clamped"] = result.k_clamped;
            return out;
        },
        py::arg("index"), py::arg("provider"), py::arg("sentences"), py::arg("k"),
        py::arg("category") = "",
        "BM25 candidates re-ranked by embedding cosine, one pick per sentence.");

    m.def(
        "evaluate_faq",
        [](const py::object& ranker,
           const std::vector<std::pair<std::string, std::string>>& pairs,
           const std::vector<std::pair<std::string, std::size_t>>& queries) {
            QASet qa;
            for (const auto& [question, answer] : pairs) {
                qa.pairs.push_back(QAPair{question, answer});
            }
            qa.queries = queries;
            const auto fn =
                ranker.cast<std::function<std::vector<std::pair<std::size_t, double>>(
                    const std::string&)>>();
            const auto adapted = [&fn](const std::string& text) {
                RankedList list;
                for (const auto& [id, score] : fn(text)) {
                    list.items.push_back(ScoredDoc{id, score});
                }
                return list;
            };
            std::vector<FaqQueryOutcome> outcomes;
            const FaqMetrics metrics = evaluate_faq(adapted, qa, &outcomes);
            py::list rows;
            for (const FaqQueryOutcome& outcome : outcomes) {
                py::dict row;
                row["query_id"] = outcome.query_id;
                row["top_doc"] = outcome.top_doc;
                row["top_score"] = outcome.top_score;
                row["gold_rank"] = outcome.gold_rank;
                rows.append(std::move(row));
            }
            py::dict out;
            out["acc"] = metrics.acc;
            out["mrr"] = metrics.mrr;
            out["outcomes"] = std::move(rows);
            return out;
        },
        py::arg("ranker"), py::arg("pairs"), py::arg("queries"),
        "Accuracy and mean reciprocal rank of a ranker over (question, answer) "
        "pairs; the ranker maps a query text to (pair_id, score) tuples.");

    // ---------------------------------------------------------------- geometry
    m.def(
        "pca",
        [](const std::vector<std::vector<double>>& vectors, int out_dim) {
            const Projection projection = pca_project(vectors, out_dim);
            py::dict out;
            out["components"] = projection.components;
            out["coords"] = projection.coords;
            out["explained_variance"] = projection.explained_variance;
            return out;
        },
        py::arg("vectors"), py::arg("out_dim"),
        "Mean-centered principal components, coordinates, and explained "
        "variance fractions.");

    m.def(
        "pair_differences",
        [](const std::map<std::string,
                          std::vector<std::pair<std::vector<double>,
                                                std::vector<double>>>>& pairs) {
            py::list out;
            for (const CategoryCohesion& category :
                 pair_difference_analysis(pairs).per_category) {
                py::dict row;
                row["category"] = category.category;
                row["pair_count"] = category.pair_count;
                row["dropped_zero"] = category.dropped_zero;
                row["intra_cosine"] = category.intra_cosine;
                row["inter_cosine"] = category.inter_cosine;
                row["separated"] = category.separated;
                out.append(std::move(row));
            }
            return out;
        },
        py::arg("pairs"),
        "Within- vs across-category cosine of (second - first) directions.");

    m.def("cosine", &cosine, py::arg("a"), py::arg("b"),
          "Cosine similarity; 0 when either vector has zero norm.");
}
