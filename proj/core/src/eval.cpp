#include "instill/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include <json.hpp>

#include "instill/error.hpp"
#include "instill/io.hpp"

namespace instill {

Gain parse_gain(std::string_view name) {
    if (name == "linear") return Gain::linear;
    if (name == "exp") return Gain::exponential;
    throw ConfigError("unknown gain '" + std::string(name) + "' (expected linear or exp)");
}

double dcg_at_k(std::span<const int> grades, std::size_t k, Gain gain) {
    double dcg = 0.0;
    const auto limit = std::min(k, grades.size());
    for (std::size_t r = 0; r < limit; ++r) {
        const double g = gain == Gain::linear ? grades[r] : std::exp2(grades[r]) - 1.0;
        dcg += g / std::log2(static_cast<double>(r) + 2.0);
    }
    return dcg;
}

double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, std::size_t k, Gain gain) {
    if (k == 0) throw UsageError("ndcg_at_k: k must be at least 1");
    std::vector<int> got;
    got.reserve(std::min(k, ranked.size()));
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r)
        got.push_back(qrels.grade(ranked.query_id, ranked.entries[r].doc_id));
    auto ideal = qrels.grades_for(ranked.query_id);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double idcg = dcg_at_k(ideal, k, gain);
    if (idcg <= 0.0) return 0.0;
    return std::clamp(dcg_at_k(got, k, gain) / idcg, 0.0, 1.0);
}

int acc_at_1(const RankedList& ranked, const std::string& target_doc_id) {
    return !ranked.empty() && ranked.entries.front().doc_id == target_doc_id ? 1 : 0;
}

int acc_at_1(const RankedList& ranked, const Qrels& qrels) {
    if (ranked.empty()) return 0;
    auto grades = qrels.grades_for(ranked.query_id);
    if (grades.empty()) return 0;
    const int best = *std::max_element(grades.begin(), grades.end());
    if (best <= 0) return 0;
    return qrels.grade(ranked.query_id, ranked.entries.front().doc_id) == best ? 1 : 0;
}

MetricReport evaluate(const Run& run, const Qrels& qrels, Gain gain) {
    MetricReport report;
    for (const auto& [qid, list] : run) {
        QueryMetrics m;
        m.query_id = qid;
        m.ndcg1 = ndcg_at_k(list, qrels, 1, gain);
        m.ndcg5 = ndcg_at_k(list, qrels, 5, gain);
        m.ndcg10 = ndcg_at_k(list, qrels, 10, gain);
        m.acc1 = acc_at_1(list, qrels);
        report.ndcg1 += m.ndcg1;
        report.ndcg5 += m.ndcg5;
        report.ndcg10 += m.ndcg10;
        report.acc1 += m.acc1;
        report.per_query.push_back(std::move(m));
    }
    report.query_count = report.per_query.size();
    if (report.query_count > 0) {
        const double n = static_cast<double>(report.query_count);
        report.ndcg1 /= n;
        report.ndcg5 /= n;
        report.ndcg10 /= n;
        report.acc1 /= n;
    }
    return report;
}

std::string format_metrics_json(const MetricReport& report) {
    nlohmann::json j;
    j["queries"] = report.query_count;
    j["mean"] = {{"ndcg@1", report.ndcg1}, {"ndcg@5", report.ndcg5}, {"ndcg@10", report.ndcg10}, {"acc@1", report.acc1}};
    j["per_query"] = nlohmann::json::array();
    for (const auto& m : report.per_query)
        j["per_query"].push_back({{"query_id", m.query_id}, {"ndcg@1", m.ndcg1}, {"ndcg@5", m.ndcg5},
                                  {"ndcg@10", m.ndcg10}, {"acc@1", m.acc1}});
    return j.dump(2) + "\n";
}

LatencyRun measure_latency(const std::string& strategy,
                           const std::function<RankedList(const CandidateSet&)>& rank,
                           std::span<const CandidateSet> candidate_sets, const CallCounter& counter) {
    LatencyRun out;
    out.report.strategy = strategy;
    out.report.queries = candidate_sets.size();
    const auto calls_before = counter.calls(strategy);
    double seconds = 0.0;
    for (const auto& candidates : candidate_sets) {
        const auto start = std::chrono::steady_clock::now();
        auto ranked = rank(candidates);
        seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.run[ranked.query_id] = std::move(ranked);
    }
    if (!candidate_sets.empty()) {
        const double n = static_cast<double>(candidate_sets.size());
        out.report.sec_per_query = seconds / n;
        out.report.calls_per_query = static_cast<double>(counter.calls(strategy) - calls_before) / n;
    }
    return out;
}

void apply_speedup(std::span<LatencyReport> reports, const std::string& reference) {
    auto ref = std::find_if(reports.begin(), reports.end(),
                            [&](const LatencyReport& r) { return r.strategy == reference; });
    if (ref == reports.end()) throw UsageError("no latency report for reference strategy " + reference);
    const double base = ref->sec_per_query;
    for (auto& r : reports) r.speedup = r.sec_per_query > 0.0 ? base / r.sec_per_query : 0.0;
}

// ---- popularity and recommendation pools -----------------------------------

void PopularityTable::set(const std::string& doc_id, std::size_t count) { counts_[doc_id] = count; }

std::size_t PopularityTable::count(const std::string& doc_id) const {
    auto it = counts_.find(doc_id);
    return it == counts_.end() ? 0 : it->second;
}

bool PopularityTable::is_popular(const std::string& doc_id) const { return count(doc_id) > threshold_; }

std::vector<std::string> PopularityTable::popular() const {
    std::vector<std::string> out;
    for (const auto& [id, c] : counts_)
        if (c > threshold_) out.push_back(id);
    return out;
}

PopularityTable load_popularity(const std::filesystem::path& path, std::size_t threshold) {
    PopularityTable table(threshold);
    const auto source = path.string();
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError(source, number, "expected doc_id<TAB>count");
        std::string count(line.substr(tab + 1));
        std::size_t used = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(count, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != count.size() || count.front() == '-')
            throw ParseError(source, number, "invalid mention count '" + count + "'");
        table.set(std::string(line.substr(0, tab)), value);
    });
    return table;
}

std::string format_popularity(const PopularityTable& table) {
    std::string out;
    for (const auto& [id, c] : table.counts()) out += id + "\t" + std::to_string(c) + "\n";
    return out;
}

CandidateSet build_rec_pool(const Query& dialog, const Corpus& corpus, const PostingsIndex& index,
                            const PopularityTable& popularity, std::uint64_t seed) {
    constexpr std::size_t kPool = kRecTopK + kRecPopularExtra;
    if (corpus.size() < kPool)
        throw UsageError("recommendation pools need at least " + std::to_string(kPool) + " movies");

    const auto tokens = tokenize(dialog.text, index.stopwords());
    auto scored = index.score_all(tokens);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return corpus[a.first].doc_id < corpus[b.first].doc_id;
    });

    CandidateSet pool;
    pool.query = dialog;
    std::set<std::string> chosen;
    auto take = [&](std::size_t doc, double score) {
        pool.docs.push_back(corpus[doc]);
        pool.retrieval_scores.push_back(score);
        chosen.insert(corpus[doc].doc_id);
    };
    for (std::size_t i = 0; i < scored.size() && pool.size() < kRecTopK; ++i) take(scored[i].first, scored[i].second);
    if (pool.size() < kRecTopK) {
        std::vector<std::size_t> rest;
        for (std::size_t d = 0; d < corpus.size(); ++d)
            if (!chosen.contains(corpus[d].doc_id)) rest.push_back(d);
        std::sort(rest.begin(), rest.end(), [&](auto a, auto b) { return corpus[a].doc_id < corpus[b].doc_id; });
        for (std::size_t i = 0; i < rest.size() && pool.size() < kRecTopK; ++i) take(rest[i], 0.0);
    }

    std::vector<std::string> universe;
    for (const auto& id : popularity.popular())
        if (!chosen.contains(id) && corpus.index_of(id)) universe.push_back(id);

    std::vector<std::string> extra;
    std::mt19937_64 rng(derive_seed(seed, "rec-pool:" + dialog.query_id));
    while (extra.size() < kRecPopularExtra && !universe.empty()) {
        double total = 0.0;
        for (const auto& id : universe) total += static_cast<double>(popularity.count(id));
        const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = universe.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < universe.size(); ++i) {
            acc += static_cast<double>(popularity.count(universe[i]));
            if (u < acc) {
                pick = i;
                break;
            }
        }
        extra.push_back(universe[pick]);
        universe.erase(universe.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    if (extra.size() < kRecPopularExtra) {
        std::vector<std::string> rest;
        for (const auto& d : corpus.documents())
            if (!chosen.contains(d.doc_id) && std::find(extra.begin(), extra.end(), d.doc_id) == extra.end())
                rest.push_back(d.doc_id);
        std::sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) {
            if (popularity.count(a) != popularity.count(b)) return popularity.count(a) > popularity.count(b);
            return a < b;
        });
        for (std::size_t i = 0; i < rest.size() && extra.size() < kRecPopularExtra; ++i) extra.push_back(rest[i]);
    }

    std::vector<std::pair<std::size_t, double>> extra_scored;
    for (const auto& id : extra) {
        auto idx = *corpus.index_of(id);
        extra_scored.emplace_back(idx, index.score(tokens, idx));
    }
    std::sort(extra_scored.begin(), extra_scored.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return corpus[a.first].doc_id < corpus[b.first].doc_id;
    });
    for (const auto& [idx, score] : extra_scored) take(idx, score);
    return pool;
}

// ---- reports ---------------------------------------------------------------

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string report_csv(std::span<const ReportRow> rows) {
    std::string out = "strategy,model_tag,n,ndcg@1,ndcg@5,ndcg@10,acc@1,sec_per_q,calls_per_q,speedup_vs_ref\n";
    for (const auto& r : rows) {
        out += r.strategy + "," + r.model_tag + "," + std::to_string(r.n) + "," + fixed(r.ndcg1, 6) + "," +
               fixed(r.ndcg5, 6) + "," + fixed(r.ndcg10, 6) + "," + fixed(r.acc1, 6) + "," +
               fixed(r.sec_per_q, 6) + "," + fixed(r.calls_per_q, 2) + "," + fixed(r.speedup_vs_ref, 3) + "\n";
    }
    return out;
}

std::string report_markdown(std::span<const ReportRow> rows) {
    std::string out = "| Method | Model | n | Sec/Q | Calls/Q | nDCG@1/5/10 | Acc@1 | Speedup |\n"
                      "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out += "| " + r.strategy + " | " + r.model_tag + " | " + std::to_string(r.n) + " | " + fixed(r.sec_per_q, 4) +
               " | " + fixed(r.calls_per_q, 1) + " | " + fixed(100 * r.ndcg1, 2) + " / " + fixed(100 * r.ndcg5, 2) +
               " / " + fixed(100 * r.ndcg10, 2) + " | " + fixed(100 * r.acc1, 2) + " | " +
               fixed(r.speedup_vs_ref, 1) + "x |\n";
    }
    return out;
}

void emit_report(const std::filesystem::path& dir, std::span<const ReportRow> rows) {
    write_file_atomic(dir / "report.csv", report_csv(rows));
    write_file_atomic(dir / "report.md", report_markdown(rows));
}

}  // namespace instill
