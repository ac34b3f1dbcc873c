#include "instill/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "instill/error.hpp"
#include "instill/io.hpp"

namespace instill {

namespace detail {
const std::string& embedded_stopwords();
}

std::string Document::full_text() const {
    if (title && !title->empty()) {
        if (text.empty()) return *title;
        return *title + " " + text;
    }
    return text;
}

Corpus::Corpus(std::vector<Document> documents, StopwordSet stopwords)
    : stopwords_(std::move(stopwords)) {
    documents_.reserve(documents.size());
    for (auto& doc : documents) add(std::move(doc));
}

void Corpus::add(Document doc) {
    if (doc.doc_id.empty()) throw UsageError("document with empty doc_id");
    if (doc.text.empty() && (!doc.title || doc.title->empty()))
        throw UsageError("document " + doc.doc_id + " has neither text nor title");
    auto [it, inserted] = by_id_.emplace(doc.doc_id, documents_.size());
    if (!inserted) throw UsageError("duplicate doc_id " + doc.doc_id);
    documents_.push_back(std::move(doc));
}

std::optional<std::size_t> Corpus::index_of(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

const Document& Corpus::at(std::string_view doc_id) const {
    auto idx = index_of(doc_id);
    if (!idx) throw UsageError("unknown doc_id " + std::string(doc_id));
    return documents_[*idx];
}

std::vector<std::string> tokenize(std::string_view text, const StopwordSet& stopwords) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !stopwords.contains(current)) tokens.push_back(current);
        current.clear();
    };
    for (char c : text) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

StopwordSet parse_stopwords(std::string_view content) {
    StopwordSet words;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(pos, end - pos);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        for (auto& token : tokenize(line, {})) words.insert(std::move(token));
        pos = end + 1;
    }
    return words;
}

StopwordSet default_stopwords() { return parse_stopwords(detail::embedded_stopwords()); }

StopwordSet load_stopwords(const std::filesystem::path& path) {
    return parse_stopwords(read_file(path));
}

// ---- BM25 ----------------------------------------------------------------

PostingsIndex PostingsIndex::build(const Corpus& corpus, Bm25Params params) {
    if (corpus.empty()) throw ConfigError("cannot build an index over an empty corpus");
    if (!(params.k1 > 0.0)) throw ConfigError("BM25 k1 must be positive");
    if (params.b < 0.0 || params.b > 1.0) throw ConfigError("BM25 b must lie in [0, 1]");

    PostingsIndex index;
    index.params_ = params;
    index.stopwords_ = corpus.stopwords();
    index.doc_lengths_.reserve(corpus.size());
    double total_length = 0.0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        auto tokens = tokenize(corpus[d].full_text(), corpus.stopwords());
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [token, count] : tf)
            index.postings_[token].push_back({static_cast<std::uint32_t>(d), count});
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += static_cast<double>(tokens.size());
    }
    index.avg_doc_length_ = total_length / static_cast<double>(corpus.size());
    // All-stopword corpora would otherwise divide by zero in the length norm.
    if (index.avg_doc_length_ <= 0.0) index.avg_doc_length_ = 1.0;
    return index;
}

std::uint32_t PostingsIndex::df(const std::string& token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

std::span<const Posting> PostingsIndex::postings(const std::string& token) const {
    auto it = postings_.find(token);
    if (it == postings_.end()) return {};
    return it->second;
}

double PostingsIndex::idf(const std::string& token) const {
    const double n = static_cast<double>(num_docs());
    const double d = static_cast<double>(df(token));
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double PostingsIndex::term_weight(double idf, std::uint32_t tf, std::uint32_t dl) const {
    const double f = static_cast<double>(tf);
    const double norm = params_.k1 * (1.0 - params_.b + params_.b * dl / avg_doc_length_);
    return idf * f * (params_.k1 + 1.0) / (f + norm);
}

double PostingsIndex::score(std::span<const std::string> query_tokens, std::size_t doc) const {
    double total = 0.0;
    for (const auto& token : query_tokens) {
        auto list = postings(token);
        auto it = std::lower_bound(list.begin(), list.end(), doc,
                                   [](const Posting& p, std::size_t d) { return p.doc < d; });
        if (it == list.end() || it->doc != doc) continue;
        total += term_weight(idf(token), it->tf, doc_lengths_[doc]);
    }
    return total;
}

double PostingsIndex::score_counts(
    std::span<const std::string> query_tokens,
    const std::unordered_map<std::string, std::uint32_t>& term_freqs,
    std::uint32_t doc_length) const {
    double total = 0.0;
    for (const auto& token : query_tokens) {
        auto it = term_freqs.find(token);
        if (it == term_freqs.end() || it->second == 0) continue;
        total += term_weight(idf(token), it->second, doc_length);
    }
    return total;
}

std::vector<std::pair<std::size_t, double>> PostingsIndex::score_all(
    std::span<const std::string> query_tokens) const {
    std::unordered_map<std::size_t, double> acc;
    for (const auto& token : query_tokens) {
        const double w = idf(token);
        for (const auto& p : postings(token)) acc[p.doc] += term_weight(w, p.tf, doc_lengths_[p.doc]);
    }
    std::vector<std::pair<std::size_t, double>> out(acc.begin(), acc.end());
    std::sort(out.begin(), out.end());
    return out;
}

double bm25_score(const PostingsIndex& index, std::span<const std::string> query_tokens,
                  std::size_t doc_index) {
    return index.score(query_tokens, doc_index);
}

std::vector<std::string> CandidateSet::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.doc_id);
    return ids;
}

CandidateSet retrieve_topk(const Corpus& corpus, const PostingsIndex& index, const Query& query,
                           std::size_t k) {
    if (k == 0) throw UsageError("retrieve_topk: k must be at least 1");
    auto tokens = tokenize(query.text, index.stopwords());
    auto scored = index.score_all(tokens);
    auto better = [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return corpus[a.first].doc_id < corpus[b.first].doc_id;
    };
    const auto keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), better);
    scored.resize(keep);

    CandidateSet out;
    out.query = query;
    for (const auto& [doc, score] : scored) {
        out.docs.push_back(corpus[doc]);
        out.retrieval_scores.push_back(score);
    }
    return out;
}

}  // namespace instill
