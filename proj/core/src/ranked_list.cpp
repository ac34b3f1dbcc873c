#include "instill/ranked_list.hpp"

#include <algorithm>
#include <numeric>

#include "instill/error.hpp"

namespace instill {

std::size_t RankedList::rank_of(const std::string& doc_id) const {
    for (const auto& e : entries)
        if (e.doc_id == doc_id) return e.rank;
    return 0;
}

RankedList scores_to_ranking(std::string query_id, std::span<const double> scores,
                             std::span<const std::string> doc_ids) {
    if (scores.size() != doc_ids.size())
        throw UsageError("scores_to_ranking: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(doc_ids.size()) + " documents");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    RankedList list{std::move(query_id), {}};
    list.entries.reserve(order.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        list.entries.push_back({doc_ids[order[r]], scores[order[r]], r + 1});
    return list;
}

}  // namespace instill
