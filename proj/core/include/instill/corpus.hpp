#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "instill/ranked_list.hpp"

namespace instill {

using StopwordSet = std::unordered_set<std::string>;

struct Document {
    std::string doc_id;
    std::optional<std::string> title;
    std::string text;

    /// Title and body joined by a single space; what the tokenizer and the
    /// prompt renderer see.
    std::string full_text() const;

    bool operator==(const Document&) const = default;
};

struct Query {
    std::string query_id;
    std::string text;

    bool operator==(const Query&) const = default;
};

/// The retrieval universe. Enforces unique, non-empty doc ids.
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<Document> documents, StopwordSet stopwords = {});

    void add(Document doc);

    std::size_t size() const { return documents_.size(); }
    bool empty() const { return documents_.empty(); }
    const Document& operator[](std::size_t i) const { return documents_[i]; }
    const std::vector<Document>& documents() const { return documents_; }

    std::optional<std::size_t> index_of(std::string_view doc_id) const;
    const Document& at(std::string_view doc_id) const;

    const StopwordSet& stopwords() const { return stopwords_; }
    void set_stopwords(StopwordSet stopwords) { stopwords_ = std::move(stopwords); }

private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> by_id_;
    StopwordSet stopwords_;
};

/// Lowercases, splits on runs of non-alphanumeric bytes and drops stopwords.
std::vector<std::string> tokenize(std::string_view text, const StopwordSet& stopwords);

/// The stopword list shipped in assets/stopwords_en.txt.
StopwordSet default_stopwords();
/// One lowercase token per line; '#' starts a comment.
StopwordSet load_stopwords(const std::filesystem::path& path);
StopwordSet parse_stopwords(std::string_view content);

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Okapi BM25 inverted index. Immutable once built; safe to share between
/// threads.
class PostingsIndex {
public:
    static PostingsIndex build(const Corpus& corpus, Bm25Params params = {});

    std::size_t num_docs() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    std::uint32_t doc_length(std::size_t doc) const { return doc_lengths_[doc]; }
    const Bm25Params& params() const { return params_; }
    const StopwordSet& stopwords() const { return stopwords_; }

    std::uint32_t df(const std::string& token) const;
    std::span<const Posting> postings(const std::string& token) const;
    const std::map<std::string, std::vector<Posting>>& all_postings() const { return postings_; }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    double idf(const std::string& token) const;

    /// Sum of the per-token Okapi contributions. Repeated query tokens count
    /// once per occurrence.
    double score(std::span<const std::string> query_tokens, std::size_t doc) const;

    /// Same formula against arbitrary term frequencies, used when a document
    /// has been truncated before scoring.
    double score_counts(std::span<const std::string> query_tokens,
                        const std::unordered_map<std::string, std::uint32_t>& term_freqs,
                        std::uint32_t doc_length) const;

    /// Scores every document that shares at least one token with the query.
    std::vector<std::pair<std::size_t, double>> score_all(
        std::span<const std::string> query_tokens) const;

private:
    double term_weight(double idf, std::uint32_t tf, std::uint32_t dl) const;

    Bm25Params params_;
    StopwordSet stopwords_;
    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
};

double bm25_score(const PostingsIndex& index, std::span<const std::string> query_tokens,
                  std::size_t doc_index);

/// One query's candidate pool, in retrieval order.
struct CandidateSet {
    Query query;
    std::vector<Document> docs;
    std::vector<double> retrieval_scores;

    std::size_t size() const { return docs.size(); }
    std::vector<std::string> doc_ids() const;
};

/// Top-k by BM25, score descending, ties by ascending doc_id. Documents with
/// no query-token overlap are never returned, so the result may be shorter
/// than k.
CandidateSet retrieve_topk(const Corpus& corpus, const PostingsIndex& index,
                           const Query& query, std::size_t k);

// ---- file formats --------------------------------------------------------

/// Relevance judgments keyed by query id then doc id.
class Qrels {
public:
    void set(const std::string& query_id, const std::string& doc_id, int grade);
    /// Grade of (query, doc); unjudged pairs are 0.
    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool has_query(const std::string& query_id) const;
    /// All judged grades for the query (including zeros).
    std::vector<int> grades_for(const std::string& query_id) const;
    const std::map<std::string, std::map<std::string, int>>& judgments() const { return judgments_; }
    std::size_t size() const;

private:
    std::map<std::string, std::map<std::string, int>> judgments_;
};

/// A run file is one RankedList per query, keyed by query id.
using Run = std::map<std::string, RankedList>;

/// JSON-lines {"doc_id", "title"?, "text"}.
Corpus load_corpus(const std::filesystem::path& path, StopwordSet stopwords = default_stopwords());
/// TSV `query_id<TAB>text` or JSON-lines {"query_id","text"}; detected per file.
std::vector<Query> load_queries(const std::filesystem::path& path);
/// TREC qrels: `qid 0 docid grade`.
Qrels load_qrels(const std::filesystem::path& path);
/// TREC run: `qid Q0 docid rank score tag`.
Run read_run(const std::filesystem::path& path);
std::string format_run(const Run& run, const std::string& tag);
void write_run(const std::filesystem::path& path, const Run& run, const std::string& tag);

std::string format_corpus(const Corpus& corpus);
std::string format_queries_tsv(std::span<const Query> queries);
std::string format_qrels(const Qrels& qrels);

}  // namespace instill
