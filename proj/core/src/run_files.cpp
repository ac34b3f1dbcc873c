#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "instill/corpus.hpp"
#include "instill/error.hpp"
#include "instill/io.hpp"

namespace instill {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos >= line.size()) break;
        auto end = pos;
        while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
        fields.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    return fields;
}

template <typename T>
T parse_number(std::string_view field, const std::string& source, std::size_t line,
               const char* what) {
    std::string s(field);
    std::size_t used = 0;
    T value{};
    try {
        if constexpr (std::is_same_v<T, double>) {
            value = std::stod(s, &used);
        } else {
            value = static_cast<T>(std::stoll(s, &used));
        }
    } catch (const std::exception&) {
        throw ParseError(source, line, std::string("invalid ") + what + " '" + s + "'");
    }
    if (used != s.size()) throw ParseError(source, line, std::string("invalid ") + what + " '" + s + "'");
    return value;
}

json parse_json_line(std::string_view line, const std::string& source, std::size_t number) {
    try {
        auto j = json::parse(line);
        if (!j.is_object()) throw ParseError(source, number, "expected a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw ParseError(source, number, e.what());
    }
}

std::string required_string(const json& j, const char* key, const std::string& source,
                            std::size_t number) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ParseError(source, number, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

}  // namespace

// ---- Qrels ---------------------------------------------------------------

void Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) throw UsageError("relevance grades must be non-negative");
    judgments_[query_id][doc_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool Qrels::has_query(const std::string& query_id) const { return judgments_.contains(query_id); }

std::vector<int> Qrels::grades_for(const std::string& query_id) const {
    std::vector<int> out;
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) return out;
    for (const auto& [doc, g] : q->second) out.push_back(g);
    return out;
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [q, docs] : judgments_) n += docs.size();
    return n;
}

// ---- readers -------------------------------------------------------------

Corpus load_corpus(const std::filesystem::path& path, StopwordSet stopwords) {
    Corpus corpus({}, std::move(stopwords));
    const auto source = path.string();
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        auto j = parse_json_line(line, source, number);
        Document doc;
        doc.doc_id = required_string(j, "doc_id", source, number);
        if (auto it = j.find("title"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) throw ParseError(source, number, "'title' must be a string");
            doc.title = it->get<std::string>();
        }
        doc.text = required_string(j, "text", source, number);
        try {
            corpus.add(std::move(doc));
        } catch (const UsageError& e) {
            throw ParseError(source, number, e.what());
        }
    });
    return corpus;
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::vector<Query> queries;
    std::set<std::string> seen;
    const auto source = path.string();
    std::optional<bool> jsonl;
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        if (!jsonl) jsonl = line.find_first_not_of(" \t") != std::string_view::npos &&
                            line[line.find_first_not_of(" \t")] == '{';
        Query q;
        if (*jsonl) {
            auto j = parse_json_line(line, source, number);
            auto id = j.find("query_id");
            if (id == j.end()) throw ParseError(source, number, "missing field 'query_id'");
            q.query_id = id->is_string() ? id->get<std::string>() : id->dump();
            q.text = required_string(j, "text", source, number);
        } else {
            auto tab = line.find('\t');
            if (tab == std::string_view::npos)
                throw ParseError(source, number, "expected query_id<TAB>text");
            q.query_id = std::string(line.substr(0, tab));
            q.text = std::string(line.substr(tab + 1));
        }
        if (q.query_id.empty()) throw ParseError(source, number, "empty query_id");
        if (!seen.insert(q.query_id).second)
            throw ParseError(source, number, "duplicate query_id " + q.query_id);
        queries.push_back(std::move(q));
    });
    return queries;
}

Qrels load_qrels(const std::filesystem::path& path) {
    Qrels qrels;
    const auto source = path.string();
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        auto f = split_whitespace(line);
        if (f.size() != 4) throw ParseError(source, number, "expected 'qid 0 docid grade'");
        auto grade = parse_number<long long>(f[3], source, number, "grade");
        if (grade < 0) throw ParseError(source, number, "negative relevance grade");
        std::string qid(f[0]), docid(f[2]);
        if (qrels.has_query(qid) && qrels.judgments().at(qid).contains(docid))
            throw ParseError(source, number, "duplicate judgment for " + qid + " " + docid);
        qrels.set(qid, docid, static_cast<int>(grade));
    });
    return qrels;
}

Run read_run(const std::filesystem::path& path) {
    Run run;
    std::map<std::string, std::set<std::string>> seen;
    const auto source = path.string();
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        auto f = split_whitespace(line);
        if (f.size() != 6) throw ParseError(source, number, "expected 'qid Q0 docid rank score tag'");
        std::string qid(f[0]), docid(f[2]);
        auto rank = parse_number<long long>(f[3], source, number, "rank");
        if (rank < 1) throw ParseError(source, number, "rank must start at 1");
        auto score = parse_number<double>(f[4], source, number, "score");
        if (!seen[qid].insert(docid).second)
            throw ParseError(source, number, "document " + docid + " listed twice for " + qid);
        auto& list = run[qid];
        list.query_id = qid;
        list.entries.push_back({docid, score, static_cast<std::size_t>(rank)});
    });
    for (auto& [qid, list] : run) {
        std::stable_sort(list.entries.begin(), list.entries.end(),
                         [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
        for (std::size_t i = 0; i < list.entries.size(); ++i) list.entries[i].rank = i + 1;
    }
    return run;
}

// ---- writers -------------------------------------------------------------

std::string format_run(const Run& run, const std::string& tag) {
    std::string out;
    char score[64];
    for (const auto& [qid, list] : run) {
        for (const auto& e : list.entries) {
            std::snprintf(score, sizeof score, "%.6f", e.score);
            out += qid + " Q0 " + e.doc_id + " " + std::to_string(e.rank) + " " + score + " " + tag + "\n";
        }
    }
    return out;
}

void write_run(const std::filesystem::path& path, const Run& run, const std::string& tag) {
    write_file_atomic(path, format_run(run, tag));
}

std::string format_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& d : corpus.documents()) {
        json j = {{"doc_id", d.doc_id}, {"text", d.text}};
        if (d.title) j["title"] = *d.title;
        out += j.dump() + "\n";
    }
    return out;
}

std::string format_queries_tsv(std::span<const Query> queries) {
    std::string out;
    for (const auto& q : queries) {
        if (q.text.find_first_of("\t\n") != std::string::npos)
            throw UsageError("query " + q.query_id + " contains a tab or newline");
        out += q.query_id + "\t" + q.text + "\n";
    }
    return out;
}

std::string format_qrels(const Qrels& qrels) {
    std::string out;
    for (const auto& [qid, docs] : qrels.judgments())
        for (const auto& [doc, grade] : docs) out += qid + " 0 " + doc + " " + std::to_string(grade) + "\n";
    return out;
}

}  // namespace instill
