#include "instill/cache.hpp"

#include <json.hpp>

#include "instill/io.hpp"

namespace instill {

using nlohmann::json;

CacheMode parse_cache_mode(std::string_view name) {
    if (name == "off") return CacheMode::off;
    if (name == "record") return CacheMode::record;
    if (name == "replay") return CacheMode::replay;
    throw ConfigError("unknown cache mode '" + std::string(name) + "' (expected off, record or replay)");
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        const auto source = path_.string();
        for_each_line(path_, [&](std::string_view line, std::size_t number) {
            try {
                auto j = json::parse(line);
                auto hash = j.at("request_hash").get<std::string>();
                results_.try_emplace(hash, j.at("result").dump());
            } catch (const json::exception& e) {
                throw ParseError(source, number, e.what());
            }
        });
    } else if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw IoError("cannot open cache " + path_.string());
}

std::optional<GenerationResult> ResponseCache::lookup(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    auto it = results_.find(hash);
    if (it == results_.end()) return std::nullopt;
    return result_from_json(it->second);
}

void ResponseCache::record(const GenerationRequest& request, const GenerationResult& result) {
    const auto hash = request_hash(request);
    const auto result_json = to_json(result);
    std::lock_guard lock(mutex_);
    if (!results_.try_emplace(hash, result_json).second) return;
    if (out_.is_open()) {
        json line = {{"request_hash", hash},
                     {"request", json::parse(to_json(request))},
                     {"result", json::parse(result_json)}};
        out_ << line.dump() << '\n';
        out_.flush();
    }
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return results_.size();
}

CachingBackend::CachingBackend(ResponseCache& cache, Backend* inner, CacheMode mode)
    : cache_(cache), inner_(inner), mode_(mode) {
    if (mode_ != CacheMode::replay && inner_ == nullptr)
        throw ConfigError("record and pass-through caching need an inner backend");
}

GenerationResult CachingBackend::generate(const GenerationRequest& request) {
    if (mode_ == CacheMode::off) return inner_->generate(request);
    const auto hash = request_hash(request);
    if (auto hit = cache_.lookup(hash)) {
        std::lock_guard lock(stats_mutex_);
        ++hits_;
        return *hit;
    }
    {
        std::lock_guard lock(stats_mutex_);
        ++misses_;
    }
    if (mode_ == CacheMode::replay) throw CacheMissError(hash);
    auto result = inner_->generate(request);
    cache_.record(request, result);
    return result;
}

std::size_t CachingBackend::hits() const {
    std::lock_guard lock(stats_mutex_);
    return hits_;
}

std::size_t CachingBackend::misses() const {
    std::lock_guard lock(stats_mutex_);
    return misses_;
}

}  // namespace instill
