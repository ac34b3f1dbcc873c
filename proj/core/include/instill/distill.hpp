#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "instill/adamw.hpp"
#include "instill/corpus.hpp"
#include "instill/rankers.hpp"
#include "instill/student.hpp"

namespace instill {

/// One query's candidates with the teacher's ranks (a permutation of 1..n).
struct TrainingExample {
    Query query;
    std::vector<Document> docs;
    std::vector<std::size_t> teacher_ranks;

    /// Throws UsageError unless n >= 2 and teacher_ranks is a permutation.
    void validate() const;
};

struct TrainingSetResult {
    std::vector<TrainingExample> examples;
    /// Query ids with a finished teacher ranking, in input order.
    std::vector<std::string> completed;
    /// Query ids whose retrieval returned fewer than two documents.
    std::vector<std::string> skipped;
    /// (query id, error message) for queries the backend could not finish.
    std::vector<std::pair<std::string, std::string>> failed;
    RankStats stats;
};

/// Candidate generation with BM25 top-n, then all-pair teacher inference.
/// Queries are processed concurrently up to ctx.parallelism; the output is in
/// input order regardless.
TrainingSetResult build_training_set(std::span<const Query> queries, const Corpus& corpus,
                                     const PostingsIndex& index, const RankerContext& ctx,
                                     std::size_t n);

struct TrainConfig {
    std::size_t epochs = 3;
    /// Queries per optimizer step.
    std::size_t batch_size = 32;
    double lr = 3e-5;
    double weight_decay = 0.0;
    std::uint64_t seed = 42;
    std::size_t max_input_tokens = 512;
    Architecture architecture = Architecture::linear;
    std::size_t hidden = 16;
    /// Stop once an epoch's mean loss fails to improve by more than
    /// early_stop_tolerance.
    bool early_stop = false;
    double early_stop_tolerance = 0.0;

    void validate() const;
};

struct TrainResult {
    StudentModel model;
    /// Mean per-query loss of each epoch, measured before each batch update.
    std::vector<double> epoch_loss;
};

/// RankNet + AdamW. Deterministic for a given seed: the seed drives both the
/// initialisation and the per-epoch shuffle.
TrainResult train(std::span<const TrainingExample> examples, const PostingsIndex& index,
                  const TrainConfig& config);

double student_score(const StudentModel& model, const FeatureExtractor& extractor,
                     const Query& query, const Document& doc);

/// Pointwise ranking with the student; issues no backend calls.
RankResult student_rank(const StudentModel& model, const PostingsIndex& index,
                        const CandidateSet& candidates);

// ---- files ---------------------------------------------------------------

/// JSON-lines {query_id, doc_ids[], teacher_ranks[]}.
std::string format_training_set(std::span<const TrainingExample> examples);
std::vector<TrainingExample> load_training_set(const std::filesystem::path& path,
                                               const Corpus& corpus,
                                               std::span<const Query> queries);

/// JSON {architecture, hidden, feature_spec, theta[], train_config, seed}.
std::string format_checkpoint(const StudentModel& model, const TrainConfig& config);
struct Checkpoint {
    StudentModel model;
    TrainConfig config;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint parse_checkpoint(std::string_view json);

/// CSV with header `epoch,mean_loss`.
std::string format_loss_trace(std::span<const double> epoch_loss);

}  // namespace instill
