#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "instill/backend.hpp"
#include "instill/cache.hpp"
#include "instill/corpus.hpp"
#include "instill/distill.hpp"
#include "instill/eval.hpp"
#include "instill/prompts.hpp"
#include "instill/rankers.hpp"
#include "instill_cli/config.hpp"
#include "instill_cli/synth.hpp"

namespace instill::cli {

/// Some queries could not be processed. Outputs for the rest were written.
class PartialFailure : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "partial"; }
};

/// Inputs loaded from a config, shared by the commands.
struct Workspace {
    Corpus corpus;
    PostingsIndex index;
    std::vector<Query> queries;
    std::vector<Query> train_queries;
    std::optional<Qrels> qrels;
    std::optional<PopularityTable> popularity;
    TemplateSet templates;

    static Workspace load(const RunConfig& config);
};

/// The configured backend chain: base model, optional fixed delay, optional
/// record/replay cache. Replay mode builds no base backend at all.
class BackendStack {
public:
    BackendStack(const RunConfig& config, const Workspace& workspace);

    Backend& backend() { return *top_; }
    const ResponseCache* cache() const { return cache_.get(); }

private:
    std::unique_ptr<Backend> base_;
    std::unique_ptr<Backend> delayed_;
    std::unique_ptr<ResponseCache> cache_;
    std::unique_ptr<CachingBackend> caching_;
    Backend* top_ = nullptr;
};

/// BM25 top-n for passages; popularity-augmented pools for movies.
CandidateSet candidates_for(const RunConfig& config, const Workspace& workspace, const Query& query);

/// Dispatches to one of the ranking strategies. `model` is required for the
/// student strategy.
RankResult rank_with(const std::string& strategy, const RankerContext& ctx, const CandidateSet& candidates,
                     const RunConfig& config, const PostingsIndex& index, const StudentModel* model);

std::filesystem::path run_path(const RunConfig& config, const std::string& strategy);

struct RankOutcome {
    Run run;
    RankStats stats;
    std::size_t calls = 0;
    std::vector<std::pair<std::string, std::string>> failed;
    std::filesystem::path output;
};

Run cmd_retrieve(const RunConfig& config);
/// Writes the completed queries; throws PartialFailure afterwards if any
/// query failed.
RankOutcome cmd_rank(const RunConfig& config, const std::string& strategy);
TrainingSetResult cmd_teach(const RunConfig& config);
TrainResult cmd_distill(const RunConfig& config);
MetricReport cmd_eval(const RunConfig& config, const std::filesystem::path& run_file,
                      const std::filesystem::path& qrels_file);
std::vector<ReportRow> cmd_bench(const RunConfig& config);
SynthData cmd_synth(const RunConfig& config);

}  // namespace instill::cli
