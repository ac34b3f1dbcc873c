#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "instill/backend.hpp"
#include "instill/corpus.hpp"
#include "instill/oracle_backend.hpp"
#include "instill/prompts.hpp"

namespace instill::test {

/// Answers every request through `fn` and counts calls.
class ScriptedBackend : public Backend {
public:
    using Fn = std::function<GenerationResult(const GenerationRequest&)>;
    explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}

    GenerationResult generate(const GenerationRequest& request) override {
        ++calls_;
        return fn_(request);
    }
    std::size_t calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<std::size_t> calls_{0};
};

inline GenerationResult text_result(std::string text) {
    GenerationResult r;
    r.text = std::move(text);
    return r;
}

/// Candidates d1..dn with the given grades for one query, plus matching
/// oracle truth.
struct GradedFixture {
    Query query{"q1", "what is the answer"};
    CandidateSet candidates;
    RelevanceTruth truth;
    Qrels qrels;

    explicit GradedFixture(const std::vector<int>& grades) {
        candidates.query = query;
        for (std::size_t i = 0; i < grades.size(); ++i) {
            Document d{"d" + std::to_string(i + 1), std::nullopt, "passage text number " + std::to_string(i + 1)};
            truth.set(query.text, item_text(d), grades[i]);
            qrels.set(query.query_id, d.doc_id, grades[i]);
            candidates.docs.push_back(d);
            candidates.retrieval_scores.push_back(static_cast<double>(grades.size() - i));
        }
    }
};

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("instill-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace instill::test
