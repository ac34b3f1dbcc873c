#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace instill {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based

    bool operator==(const RankedEntry&) const = default;
};

/// Final ordering of one query's candidates. Ranks are exactly 1..n and the
/// entries are stored in rank order.
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    /// 1-based rank of `doc_id`, or 0 if absent.
    std::size_t rank_of(const std::string& doc_id) const;

    bool operator==(const RankedList&) const = default;
};

/// Stable descending arg-sort: higher score means better rank, equal scores
/// keep their position in `doc_ids` (the retrieval order).
RankedList scores_to_ranking(std::string query_id,
                             std::span<const double> scores,
                             std::span<const std::string> doc_ids);

}  // namespace instill
