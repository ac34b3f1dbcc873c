#include "instill_cli/synth.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "instill/error.hpp"
#include "instill/io.hpp"

namespace instill::cli {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "kl", "st"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

/// Distinct pronounceable non-words of three syllables, none a stopword.
std::vector<std::string> make_words(std::size_t count, std::mt19937_64& rng, const StopwordSet& stopwords,
                                    std::set<std::string>& used) {
    std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
    std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
    std::vector<std::string> words;
    while (words.size() < count) {
        std::string w;
        for (int s = 0; s < 3; ++s) w += std::string(kOnsets[onset(rng)]) + kVowels[vowel(rng)];
        if (stopwords.contains(w) || !used.insert(w).second) continue;
        words.push_back(std::move(w));
    }
    return words;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

std::string pad_id(const char* prefix, std::size_t i, int width) {
    std::string digits = std::to_string(i);
    if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

SynthData passage_suite(const SynthConfig& config) {
    std::mt19937_64 rng(derive_seed(config.seed, "synth-passage"));
    const auto stopwords = default_stopwords();
    std::set<std::string> used;
    const std::size_t total = config.train_queries + config.test_queries;
    auto topic = make_words(total * config.terms_per_query, rng, stopwords, used);
    auto background = make_words(400, rng, stopwords, used);

    SynthData data;
    data.corpus.set_stopwords(stopwords);
    std::uniform_int_distribution<std::size_t> pick_bg(0, background.size() - 1);
    std::uniform_int_distribution<std::size_t> length(config.min_doc_words, config.max_doc_words);
    std::uniform_int_distribution<int> grade_dist(0, 3);
    std::size_t doc_counter = 0;
    for (std::size_t q = 0; q < total; ++q) {
        const bool train = q < config.train_queries;
        std::vector<std::string> terms(topic.begin() + static_cast<std::ptrdiff_t>(q * config.terms_per_query),
                                       topic.begin() + static_cast<std::ptrdiff_t>((q + 1) * config.terms_per_query));
        Query query{train ? pad_id("train-", q + 1, 3) : pad_id("test-", q - config.train_queries + 1, 3),
                    join(terms)};

        std::vector<int> grades(config.docs_per_query);
        do {
            for (auto& g : grades) g = grade_dist(rng);
        } while (std::all_of(grades.begin(), grades.end(), [&](int g) { return g == grades.front(); }));

        for (int g : grades) {
            std::vector<std::string> words;
            const auto len = length(rng);
            for (std::size_t i = 0; i < len; ++i) words.push_back(background[pick_bg(rng)]);
            if (g == 0) {
                words.push_back(terms[std::uniform_int_distribution<std::size_t>(0, terms.size() - 1)(rng)]);
            } else {
                for (const auto& t : terms)
                    for (int k = 0; k < g; ++k) words.push_back(t);
            }
            std::shuffle(words.begin(), words.end(), rng);
            Document doc{pad_id("d", ++doc_counter, 5), std::nullopt, join(words)};
            data.qrels.set(query.query_id, doc.doc_id, g);
            data.corpus.add(std::move(doc));
        }
        (train ? data.train : data.test).push_back(std::move(query));
    }
    return data;
}

constexpr const char* kGenres[] = {"comedy", "horror", "thriller", "romance", "western",
                                   "animation", "documentary", "musical", "fantasy", "mystery"};

std::string capitalize(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

SynthData movie_suite(const SynthConfig& config) {
    std::mt19937_64 rng(derive_seed(config.seed, "synth-movie"));
    const auto stopwords = default_stopwords();
    std::set<std::string> used(std::begin(kGenres), std::end(kGenres));
    auto names = make_words(config.catalog_size * 2, rng, stopwords, used);
    auto keywords = make_words(config.catalog_size * 3, rng, stopwords, used);
    auto chatter = make_words(100, rng, stopwords, used);

    SynthData data;
    data.corpus.set_stopwords(stopwords);
    std::uniform_int_distribution<std::size_t> pick_genre(0, std::size(kGenres) - 1);
    std::uniform_int_distribution<int> year(1950, 2020);
    std::vector<std::vector<std::string>> movie_keywords;
    for (std::size_t m = 0; m < config.catalog_size; ++m) {
        std::string title = capitalize(names[2 * m]) + " " + capitalize(names[2 * m + 1]) + " (" +
                            std::to_string(year(rng)) + ")";
        std::vector<std::string> kw(keywords.begin() + static_cast<std::ptrdiff_t>(3 * m),
                                    keywords.begin() + static_cast<std::ptrdiff_t>(3 * m + 3));
        std::string text = std::string(kGenres[pick_genre(rng)]) + " " + kGenres[pick_genre(rng)] + " " + join(kw);
        data.corpus.add(Document{pad_id("m", m + 1, 3), title, text});
        movie_keywords.push_back(std::move(kw));
    }

    PopularityTable popularity(config.popularity_threshold);
    std::vector<std::size_t> order(config.catalog_size);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> high(config.popularity_threshold + 1, config.popularity_threshold * 5);
    std::uniform_int_distribution<std::size_t> low(1, config.popularity_threshold);
    for (std::size_t i = 0; i < order.size(); ++i)
        popularity.set(data.corpus[order[i]].doc_id, i < config.popular_movies ? high(rng) : low(rng));
    data.popularity = std::move(popularity);

    std::uniform_int_distribution<std::size_t> pick_movie(0, config.catalog_size - 1);
    std::uniform_int_distribution<std::size_t> pick_chatter(0, chatter.size() - 1);
    for (std::size_t d = 0; d < config.dialogs; ++d) {
        const auto target = pick_movie(rng);
        auto kw = movie_keywords[target];
        std::shuffle(kw.begin(), kw.end(), rng);
        std::vector<std::string> words{chatter[pick_chatter(rng)], chatter[pick_chatter(rng)], kw[0], kw[1]};
        std::shuffle(words.begin(), words.end(), rng);
        Query dialog{pad_id("dialog-", d + 1, 3), "User: I want something with " + join(words)};
        data.qrels.set(dialog.query_id, data.corpus[target].doc_id, 1);
        data.test.push_back(std::move(dialog));
    }
    return data;
}

}  // namespace

void SynthConfig::validate() const {
    if (task == Task::passage) {
        if (docs_per_query < 2) throw ConfigError("synth: docs_per_query must be at least 2");
        if (terms_per_query == 0) throw ConfigError("synth: terms_per_query must be positive");
        if (min_doc_words > max_doc_words) throw ConfigError("synth: min_doc_words exceeds max_doc_words");
        if (train_queries + test_queries == 0) throw ConfigError("synth: no queries requested");
    } else {
        if (catalog_size < kRecTopK + kRecPopularExtra)
            throw ConfigError("synth: catalog_size must be at least " +
                              std::to_string(kRecTopK + kRecPopularExtra));
        if (popular_movies > catalog_size) throw ConfigError("synth: popular_movies exceeds catalog_size");
        if (popularity_threshold == 0) throw ConfigError("synth: popularity_threshold must be positive");
    }
}

SynthData synthesize(const SynthConfig& config) {
    config.validate();
    return config.task == Task::passage ? passage_suite(config) : movie_suite(config);
}

void write_synth(const std::filesystem::path& dir, const SynthData& data) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "corpus.jsonl", format_corpus(data.corpus));
    write_file_atomic(dir / "queries_train.tsv", format_queries_tsv(data.train));
    write_file_atomic(dir / "queries_test.tsv", format_queries_tsv(data.test));
    write_file_atomic(dir / "qrels.txt", format_qrels(data.qrels));
    if (data.popularity) write_file_atomic(dir / "popularity.tsv", format_popularity(*data.popularity));
}

}  // namespace instill::cli
