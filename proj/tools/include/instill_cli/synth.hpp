#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "instill/corpus.hpp"
#include "instill/eval.hpp"
#include "instill/prompts.hpp"

namespace instill::cli {

struct SynthConfig {
    Task task = Task::passage;
    std::uint64_t seed = 42;
    // passage
    std::size_t train_queries = 200;
    std::size_t test_queries = 50;
    std::size_t docs_per_query = 10;
    std::size_t terms_per_query = 3;
    std::size_t min_doc_words = 40;
    std::size_t max_doc_words = 50;
    // movie
    std::size_t catalog_size = 50;
    std::size_t dialogs = 50;
    std::size_t popular_movies = 15;
    std::size_t popularity_threshold = 200;

    void validate() const;
};

struct SynthData {
    Corpus corpus;
    std::vector<Query> train;
    std::vector<Query> test;
    Qrels qrels;
    std::optional<PopularityTable> popularity;
};

/// Passage mode: every query owns docs_per_query documents with grades 0..3.
/// A grade-g document contains each query term g times; grade-0 documents
/// contain a single query term so retrieval still finds them.
///
/// Movie mode: a catalog of movies with genre and keyword descriptions, one
/// dialog per query naming keywords of a target movie (grade 1), and mention
/// counts where `popular_movies` titles exceed the threshold.
SynthData synthesize(const SynthConfig& config);

/// Writes corpus.jsonl, queries_train.tsv, queries_test.tsv, qrels.txt and,
/// for movies, popularity.tsv into `dir`.
void write_synth(const std::filesystem::path& dir, const SynthData& data);

}  // namespace instill::cli
