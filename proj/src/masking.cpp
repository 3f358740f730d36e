#include "gramvec/masking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "gramvec/error.hpp"

namespace gramvec {

namespace {

void check_config(const MaskingConfig& config) {
    if (!(config.mask_ratio > 0.0) || config.mask_ratio > 1.0) {
        throw ConfigError("masking: mask_ratio must be in (0, 1]");
    }
    if (config.p_mask < 0.0 || config.p_random < 0.0 || config.p_keep < 0.0 ||
        std::abs(config.p_mask + config.p_random + config.p_keep - 1.0) > 1e-9) {
        throw ConfigError("masking: corruption probabilities must be >= 0 and sum to 1");
    }
    if (config.max_n < 1) {
        throw ConfigError("masking: max_n must be at least 1");
    }
    if (!(config.geo_p > 0.0) || !(config.geo_p < 1.0) || config.geo_lmax < 1) {
        throw ConfigError("masking: geometric parameters out of range");
    }
    if (config.max_seq_len < 3) {
        throw ConfigError("masking: max_seq_len leaves no room for content");
    }
}

void check_matches(const std::vector<std::pair<Span, NgramEntry>>& matches, int len) {
    int prev_end = -1;
    for (const auto& [span, entry] : matches) {
        if (span.start < 0 || span.end >= len || span.start > span.end) {
            throw ArgumentError("masking: match span out of bounds");
        }
        if (span.start <= prev_end) {
            throw ArgumentError("masking: match spans overlap or are unordered");
        }
        if (entry.length() != span.length()) {
            throw ArgumentError("masking: match entry does not fill its span");
        }
        prev_end = span.end;
    }
}

CorruptionMode draw_mode(const MaskingConfig& config, Rng& rng) {
    const double u = rng.next_double();
    if (u < config.p_mask) {
        return CorruptionMode::mask;
    }
    if (u < config.p_mask + config.p_random) {
        return CorruptionMode::random;
    }
    return CorruptionMode::keep;
}

std::vector<std::string> resolve_random_pool(const MaskingConfig& config,
                                             const std::vector<std::string>& tokens) {
    if (!config.random_tokens.empty()) {
        return config.random_tokens;
    }
    const std::set<std::string> distinct(tokens.begin(), tokens.end());
    return std::vector<std::string>(distinct.begin(), distinct.end());
}

// Applies one already-drawn corruption mode to work[span]; `span` indexes
// `work` (content coordinates, no cls/sep yet).
void corrupt_span(std::vector<std::string>& work, Span span, CorruptionMode mode,
                  const std::vector<std::string>& pool, const MaskingConfig& config,
                  Rng& rng) {
    switch (mode) {
        case CorruptionMode::mask:
            for (int p = span.start; p <= span.end; ++p) {
                work[p] = config.mask_token;
            }
            break;
        case CorruptionMode::random:
            // Every position gets its own draw; a multi-token span does not
            // turn into one token repeated.
            for (int p = span.start; p <= span.end; ++p) {
                work[p] = pool[rng.index(pool.size())];
            }
            break;
        case CorruptionMode::keep:
            break;
    }
}

MaskedInstance assemble_instance(const std::vector<std::string>& tokens,
                                 const std::vector<std::pair<Span, CorruptionMode>>& picks,
                                 const MaskingConfig& config, std::uint64_t seed,
                                 Rng& rng) {
    std::vector<std::string> work = tokens;
    const std::vector<std::string> pool = resolve_random_pool(config, tokens);

    MaskedInstance instance;
    instance.seed = seed;
    instance.targets.reserve(picks.size());
    for (const auto& [span, mode] : picks) {
        MaskedTarget target;
        target.tokens.assign(tokens.begin() + span.start, tokens.begin() + span.end + 1);
        target.mode = mode;
        // +1: position 0 of the final input is the cls token.
        target.span = Span{span.start + 1, span.end + 1};
        instance.targets.push_back(std::move(target));
        corrupt_span(work, span, mode, pool, config, rng);
    }

    instance.input.reserve(work.size() + 2);
    instance.input.push_back(config.cls_token);
    for (std::string& token : work) {
        instance.input.push_back(std::move(token));
    }
    instance.input.push_back(config.sep_token);
    return instance;
}

}  // namespace

std::string mode_name(CorruptionMode mode) {
    switch (mode) {
        case CorruptionMode::mask:
            return "mask";
        case CorruptionMode::random:
            return "random";
        case CorruptionMode::keep:
            return "keep";
    }
    throw ArgumentError("masking: unknown corruption mode");
}

CorruptionMode mode_from_name(const std::string& name) {
    if (name == "mask") return CorruptionMode::mask;
    if (name == "random") return CorruptionMode::random;
    if (name == "keep") return CorruptionMode::keep;
    throw FormatError("masking: unknown corruption mode '" + name + "'");
}

int mask_budget(double mask_ratio, int len) {
    return std::max(1, static_cast<int>(std::llround(mask_ratio * len)));
}

std::vector<std::pair<Span, NgramEntry>> match_ngrams(
    const std::vector<std::string>& tokens, const NgramVocab& vocab) {
    std::vector<std::pair<Span, NgramEntry>> matches;
    const int len = static_cast<int>(tokens.size());
    for (int start = 0; start < len; ++start) {
        const int longest = std::min(vocab.max_n, len - start);
        std::string joined = tokens[start];
        std::vector<std::pair<Span, NgramEntry>> here;
        for (int n = 2; n <= longest; ++n) {
            joined.push_back(' ');
            joined += tokens[start + n - 1];
            if (const NgramEntry* entry = vocab.lookup(joined)) {
                here.emplace_back(Span{start, start + n - 1}, *entry);
            }
        }
        // Longer matches first within a start position.
        matches.insert(matches.end(), here.rbegin(), here.rend());
    }
    return matches;
}

std::vector<std::pair<Span, NgramEntry>> greedy_longest_matches(
    const std::vector<std::string>& tokens, const NgramVocab& vocab) {
    std::vector<std::pair<Span, NgramEntry>> matches;
    const int len = static_cast<int>(tokens.size());
    int start = 0;
    while (start < len) {
        const int longest = std::min(vocab.max_n, len - start);
        const NgramEntry* best = nullptr;
        int best_n = 0;
        std::string joined = tokens[start];
        for (int n = 2; n <= longest; ++n) {
            joined.push_back(' ');
            joined += tokens[start + n - 1];
            if (const NgramEntry* entry = vocab.lookup(joined)) {
                best = entry;
                best_n = n;
            }
        }
        if (best != nullptr) {
            matches.emplace_back(Span{start, start + best_n - 1}, *best);
            start += best_n;
        } else {
            start += 1;
        }
    }
    return matches;
}

MaskedInstance generate_instance(const std::vector<std::string>& tokens,
                                 const std::vector<std::pair<Span, NgramEntry>>& matches,
                                 const MaskingConfig& config, std::uint64_t seed) {
    check_config(config);
    const int len = static_cast<int>(tokens.size());
    if (len == 0) {
        throw ArgumentError("masking: cannot build an instance from zero tokens");
    }
    check_matches(matches, len);

    // Candidate spans partition the sequence: the vocabulary matches plus a
    // single-token span for every position they leave uncovered.
    std::vector<bool> covered(static_cast<std::size_t>(len), false);
    std::vector<Span> candidates;
    for (const auto& [span, entry] : matches) {
        candidates.push_back(span);
        for (int p = span.start; p <= span.end; ++p) {
            covered[p] = true;
        }
    }
    for (int p = 0; p < len; ++p) {
        if (!covered[p]) {
            candidates.push_back(Span{p, p});
        }
    }

    Rng rng(seed);
    const int budget = mask_budget(config.mask_ratio, len);
    int remaining = budget;
    std::vector<bool> used(candidates.size(), false);
    std::vector<std::pair<Span, CorruptionMode>> picks;

    while (remaining > 0) {
        std::vector<std::size_t> eligible;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (!used[c] && candidates[c].length() <= remaining) {
                eligible.push_back(c);
            }
        }
        if (eligible.empty()) {
            // Only spans longer than the leftover budget remain; stopping
            // here keeps the total within (budget - max_n, budget].
            break;
        }
        const std::size_t c = eligible[rng.index(eligible.size())];
        used[c] = true;
        remaining -= candidates[c].length();
        picks.emplace_back(candidates[c], draw_mode(config, rng));
    }

    return assemble_instance(tokens, picks, config, seed, rng);
}

std::vector<Span> sample_geometric_spans(int token_count, const MaskingConfig& config,
                                         Rng& rng) {
    check_config(config);
    if (token_count <= 0) {
        throw ArgumentError("masking: cannot sample spans over zero tokens");
    }
    const int budget = mask_budget(config.mask_ratio, token_count);
    std::vector<bool> covered(static_cast<std::size_t>(token_count), false);
    std::vector<Span> spans;
    int remaining = budget;
    // Length-1 spans always fit while budget remains, so this terminates long
    // before the cap; the cap only guards degenerate configurations.
    long attempts_left = 1000 + 100L * token_count;
    while (remaining > 0 && attempts_left-- > 0) {
        const int l = rng.truncated_geometric(config.geo_p, config.geo_lmax);
        if (l > remaining || l > token_count) {
            continue;
        }
        const int start = static_cast<int>(rng.index(token_count - l + 1));
        bool free = true;
        for (int p = start; p < start + l; ++p) {
            if (covered[p]) {
                free = false;
                break;
            }
        }
        if (!free) {
            continue;
        }
        for (int p = start; p < start + l; ++p) {
            covered[p] = true;
        }
        spans.push_back(Span{start, start + l - 1});
        remaining -= l;
    }
    std::sort(spans.begin(), spans.end(),
              [](const Span& a, const Span& b) { return a.start < b.start; });
    return spans;
}

MaskedInstance generate_geometric_instance(const std::vector<std::string>& tokens,
                                           const MaskingConfig& config,
                                           std::uint64_t seed) {
    check_config(config);
    if (tokens.empty()) {
        throw ArgumentError("masking: cannot build an instance from zero tokens");
    }
    Rng rng(seed);
    const std::vector<Span> spans =
        sample_geometric_spans(static_cast<int>(tokens.size()), config, rng);
    std::vector<std::pair<Span, CorruptionMode>> picks;
    picks.reserve(spans.size());
    for (const Span& span : spans) {
        picks.emplace_back(span, draw_mode(config, rng));
    }
    return assemble_instance(tokens, picks, config, seed, rng);
}

std::vector<MaskedInstance> generate_epoch_dataset(const DocumentSet& set,
                                                   const NgramVocab& vocab,
                                                   const MaskingConfig& config,
                                                   std::uint64_t base_seed, int epoch,
                                                   bool geometric) {
    check_config(config);
    std::vector<MaskedInstance> instances;
    instances.reserve(set.docs.size());
    for (const Document& doc : set.docs) {
        const std::size_t keep =
            std::min(doc.tokens.size(), static_cast<std::size_t>(config.max_seq_len - 2));
        const std::vector<std::string> content(doc.tokens.begin(),
                                               doc.tokens.begin() + keep);
        const std::uint64_t seed = combine_seed(
            {base_seed, static_cast<std::uint64_t>(doc.id), static_cast<std::uint64_t>(epoch)});
        if (geometric) {
            instances.push_back(generate_geometric_instance(content, config, seed));
        } else {
            instances.push_back(generate_instance(
                content, greedy_longest_matches(content, vocab), config, seed));
        }
    }
    return instances;
}

std::string instance_to_json(const MaskedInstance& instance) {
    nlohmann::ordered_json j;
    j["input"] = instance.input;
    j["targets"] = nlohmann::ordered_json::array();
    for (const MaskedTarget& target : instance.targets) {
        nlohmann::ordered_json t;
        t["start"] = target.span.start;
        t["end"] = target.span.end;
        t["tokens"] = target.tokens;
        t["mode"] = mode_name(target.mode);
        j["targets"].push_back(std::move(t));
    }
    j["seed"] = instance.seed;
    return j.dump();
}

MaskedInstance instance_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        MaskedInstance instance;
        instance.input = j.at("input").get<std::vector<std::string>>();
        instance.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("targets")) {
            MaskedTarget target;
            target.span.start = t.at("start").get<int>();
            target.span.end = t.at("end").get<int>();
            target.tokens = t.at("tokens").get<std::vector<std::string>>();
            target.mode = mode_from_name(t.at("mode").get<std::string>());
            instance.targets.push_back(std::move(target));
        }
        return instance;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("masking: bad instance record: ") + e.what());
    }
}

void save_instances_jsonl(const std::vector<MaskedInstance>& instances,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("masking: cannot open '" + path + "' for writing");
    }
    for (const MaskedInstance& instance : instances) {
        out << instance_to_json(instance) << '\n';
    }
    if (!out) {
        throw IoError("masking: failed while writing '" + path + "'");
    }
}

std::vector<MaskedInstance> load_instances_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("masking: cannot open '" + path + "' for reading");
    }
    std::vector<MaskedInstance> instances;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            instances.push_back(instance_from_json(line));
        } catch (const FormatError& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return instances;
}

}  // namespace gramvec
