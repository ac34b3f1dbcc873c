#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "instill/cache.hpp"
#include "instill/corpus.hpp"
#include "instill/distill.hpp"
#include "instill/eval.hpp"
#include "instill/oracle_backend.hpp"
#include "instill/prompts.hpp"
#include "instill/rankers.hpp"
#include "instill_cli/synth.hpp"

namespace instill::cli {

/// Relative paths in a config file resolve against the file's directory.
/// Empty means "not configured"; stage artifacts default into out_dir.
struct PathsConfig {
    std::filesystem::path corpus;
    std::filesystem::path queries;
    std::filesystem::path train_queries;
    std::filesystem::path qrels;
    std::filesystem::path templates;
    std::filesystem::path stopwords;
    std::filesystem::path popularity;
    std::filesystem::path cache;
    std::filesystem::path training_set;
    std::filesystem::path model;
    std::filesystem::path out_dir = ".";

    std::filesystem::path training_set_or_default() const;
    std::filesystem::path model_or_default() const;
};

enum class BackendKind { oracle, http };

BackendKind parse_backend_kind(std::string_view name);
std::string_view to_string(BackendKind kind);

struct BackendSection {
    BackendKind kind = BackendKind::oracle;
    /// Falls back to INSTILL_ENDPOINT when empty.
    std::string endpoint;
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    OracleConfig oracle;
    CacheMode cache_mode = CacheMode::off;
    /// Fixed latency added to every uncached call.
    double mock_delay_ms = 0.0;
};

struct RetrievalSection {
    Bm25Params bm25;
    std::size_t n = 100;
};

struct StrategySection {
    std::string name = strategy::kPointwiseRg;
    ListwiseOptions listwise;
    std::size_t parallelism = 1;
    int max_new_tokens = 16;
};

struct EvalSection {
    Gain gain = Gain::linear;
    std::size_t popularity_threshold = 200;
};

struct BenchSection {
    std::vector<std::string> strategies{strategy::kBm25, strategy::kPointwiseRg, strategy::kPairwiseAllpair,
                                        strategy::kListwise, strategy::kStudent};
    std::string reference = strategy::kPairwiseAllpair;
    /// 0 means every query.
    std::size_t queries = 0;
    std::string model_tag = "oracle";
};

struct RunConfig {
    Task task = Task::passage;
    std::uint64_t seed = 42;
    PathsConfig paths;
    BackendSection backend;
    RetrievalSection retrieval;
    StrategySection strategy;
    TrainConfig train;
    EvalSection eval;
    BenchSection bench;
    SynthConfig synth;

    /// Copies the root seed and task into the sections that use them.
    void propagate();
    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Parses a JSON config. Unknown keys are rejected; input paths that are
/// set must exist.
RunConfig parse_config(std::string_view json, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// True for the names accepted by `rank`.
bool is_known_strategy(std::string_view name);

}  // namespace instill::cli
