#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "instill/error.hpp"

namespace instill {

struct GenerationRequest {
    std::string prompt;
    int max_new_tokens = 16;
    /// Candidate answers whose probabilities the backend should report.
    std::vector<std::string> options;
    /// Text whose per-token log-likelihood the backend should report.
    std::optional<std::string> echo_target;

    /// Throws UsageError on duplicate options, both options and echo_target,
    /// or a non-positive token budget.
    void validate() const;

    bool operator==(const GenerationRequest&) const = default;
};

struct GenerationResult {
    std::string text;
    std::optional<std::map<std::string, double>> option_probs;
    std::optional<std::vector<double>> target_token_logprobs;

    bool operator==(const GenerationResult&) const = default;
};

/// Wire format of POST /v1/generate. Keys are emitted in sorted order, so the
/// request encoding is canonical and doubles as the cache key input.
std::string to_json(const GenerationRequest& request);
std::string to_json(const GenerationResult& result);
GenerationRequest request_from_json(std::string_view json);
GenerationResult result_from_json(std::string_view json);

/// SHA-256 of the canonical request encoding.
std::string request_hash(const GenerationRequest& request);

/// Non-2xx response from a generation server.
class BackendError : public Error {
public:
    BackendError(int status, std::string body)
        : Error("backend returned status " + std::to_string(status) + ": " + body),
          status_(status), body_(std::move(body)) {}
    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }
    const char* kind() const noexcept override { return "backend"; }

private:
    int status_;
    std::string body_;
};

/// Network failure or timeout. Retriable; `attempts()` is how many tries
/// were made before giving up.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempt(s))"),
          attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }
    const char* kind() const noexcept override { return "transport"; }

private:
    int attempts_;
};

class CacheMissError : public Error {
public:
    explicit CacheMissError(const std::string& hash)
        : Error("replay cache has no entry for request " + hash) {}
    const char* kind() const noexcept override { return "cache-miss"; }
};

/// The backend cannot provide what a strategy needs (e.g. token logprobs).
class CapabilityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "capability"; }
};

/// True for failures a ranker may absorb into a neutral score.
bool is_call_failure(const std::exception& e);

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

/// Per-strategy call counts and cumulative wall-clock. Thread-safe.
class CallCounter {
public:
    struct Entry {
        std::size_t calls = 0;
        double seconds = 0.0;
    };

    void count(const std::string& strategy, double seconds = 0.0);
    std::size_t calls(const std::string& strategy) const;
    double seconds(const std::string& strategy) const;
    std::size_t total_calls() const;
    std::map<std::string, Entry> snapshot() const;
    void reset();

private:
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
};

/// Sleeps a fixed time before forwarding each call. Used to model a
/// constant per-call model latency in benchmarks.
class DelayedBackend : public Backend {
public:
    DelayedBackend(Backend& inner, std::chrono::microseconds delay)
        : inner_(inner), delay_(delay) {}
    GenerationResult generate(const GenerationRequest& request) override;

private:
    Backend& inner_;
    std::chrono::microseconds delay_;
};

}  // namespace instill
