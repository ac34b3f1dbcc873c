#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "instill/backend.hpp"

namespace instill {

enum class CacheMode { off, record, replay };

CacheMode parse_cache_mode(std::string_view name);

/// Append-only store of {request_hash, request, result} JSON lines. Existing
/// entries are loaded on open; later duplicates of a hash are ignored.
/// Thread-safe.
class ResponseCache {
public:
    /// In-memory only.
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path path);

    std::optional<GenerationResult> lookup(const std::string& hash) const;
    void record(const GenerationRequest& request, const GenerationResult& result);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::filesystem::path path_;
    std::ofstream out_;
    std::unordered_map<std::string, std::string> results_;  // hash -> result json
};

/// Record mode reads through to `inner` on a miss and stores the answer;
/// replay mode never touches `inner` and throws CacheMissError on a miss.
class CachingBackend : public Backend {
public:
    CachingBackend(ResponseCache& cache, Backend* inner, CacheMode mode);
    GenerationResult generate(const GenerationRequest& request) override;

    std::size_t hits() const;
    std::size_t misses() const;

private:
    ResponseCache& cache_;
    Backend* inner_;
    CacheMode mode_;
    mutable std::mutex stats_mutex_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace instill
