#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instill/backend.hpp"
#include "instill/corpus.hpp"
#include "instill/ranked_list.hpp"

namespace instill {

enum class Gain { linear, exponential };

Gain parse_gain(std::string_view name);

/// gain(rel) / log2(rank + 1) summed over the first k entries of `grades`.
double dcg_at_k(std::span<const int> grades, std::size_t k, Gain gain = Gain::linear);

/// DCG of the ranking over the ideal DCG of all judged documents for the
/// query. Unjudged documents gain nothing; 0 when the ideal DCG is 0.
double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, std::size_t k,
                 Gain gain = Gain::linear);

/// 1 iff the top-ranked document is `target_doc_id`.
int acc_at_1(const RankedList& ranked, const std::string& target_doc_id);

/// 1 iff the top-ranked document carries the query's highest positive grade.
int acc_at_1(const RankedList& ranked, const Qrels& qrels);

struct QueryMetrics {
    std::string query_id;
    double ndcg1 = 0.0;
    double ndcg5 = 0.0;
    double ndcg10 = 0.0;
    int acc1 = 0;
};

struct MetricReport {
    std::vector<QueryMetrics> per_query;
    double ndcg1 = 0.0;
    double ndcg5 = 0.0;
    double ndcg10 = 0.0;
    double acc1 = 0.0;
    std::size_t query_count = 0;
};

/// Every query in the run is counted, including ones without judgments.
MetricReport evaluate(const Run& run, const Qrels& qrels, Gain gain = Gain::linear);

std::string format_metrics_json(const MetricReport& report);

struct LatencyReport {
    std::string strategy;
    std::size_t queries = 0;
    double sec_per_query = 0.0;
    double calls_per_query = 0.0;
    /// reference Sec/Q over this strategy's Sec/Q; 0 until apply_speedup().
    double speedup = 0.0;
};

struct LatencyRun {
    LatencyReport report;
    Run run;
};

/// Times `rank` over each candidate set one query at a time. Call counts are
/// the growth of `counter` for `strategy` across the run.
LatencyRun measure_latency(const std::string& strategy,
                           const std::function<RankedList(const CandidateSet&)>& rank,
                           std::span<const CandidateSet> candidate_sets,
                           const CallCounter& counter);

/// Sets each report's speedup relative to the report named `reference`.
void apply_speedup(std::span<LatencyReport> reports, const std::string& reference);

/// Mention counts per movie. Movies mentioned more than `threshold` times are
/// popular.
class PopularityTable {
public:
    explicit PopularityTable(std::size_t threshold = 200) : threshold_(threshold) {}

    void set(const std::string& doc_id, std::size_t count);
    std::size_t count(const std::string& doc_id) const;
    bool is_popular(const std::string& doc_id) const;
    /// Popular doc ids in ascending id order.
    std::vector<std::string> popular() const;
    std::size_t threshold() const { return threshold_; }
    void set_threshold(std::size_t threshold) { threshold_ = threshold; }
    const std::map<std::string, std::size_t>& counts() const { return counts_; }

private:
    std::size_t threshold_;
    std::map<std::string, std::size_t> counts_;
};

/// TSV `doc_id<TAB>count`.
PopularityTable load_popularity(const std::filesystem::path& path, std::size_t threshold = 200);
std::string format_popularity(const PopularityTable& table);

inline constexpr std::size_t kRecTopK = 5;
inline constexpr std::size_t kRecPopularExtra = 4;

/// BM25 top-5 for the dialog plus 4 distinct popular movies outside the
/// top-5, drawn without replacement with probability proportional to mention
/// count. Short BM25 lists are padded by ascending doc id; a short popular
/// pool is padded with the most-mentioned remaining movies. Always 9 items.
CandidateSet build_rec_pool(const Query& dialog, const Corpus& corpus, const PostingsIndex& index,
                            const PopularityTable& popularity, std::uint64_t seed);

struct ReportRow {
    std::string strategy;
    std::string model_tag;
    std::size_t n = 0;
    double ndcg1 = 0.0;
    double ndcg5 = 0.0;
    double ndcg10 = 0.0;
    double acc1 = 0.0;
    double sec_per_q = 0.0;
    double calls_per_q = 0.0;
    double speedup_vs_ref = 0.0;
};

std::string report_csv(std::span<const ReportRow> rows);
std::string report_markdown(std::span<const ReportRow> rows);
/// Writes report.csv and report.md into `dir`.
void emit_report(const std::filesystem::path& dir, std::span<const ReportRow> rows);

}  // namespace instill
