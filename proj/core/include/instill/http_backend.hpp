#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "instill/backend.hpp"

namespace instill {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// One HTTP POST. Implementations throw TransportError on network failure
/// or timeout; any received response, whatever its status, is returned.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::string& auth_token,
                              std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib client. A fresh connection per call keeps it safe to share
/// between threads.
class HttplibTransport : public Transport {
public:
    explicit HttplibTransport(std::string base_url);
    HttpResponse post(const std::string& path, const std::string& body,
                      const std::string& auth_token,
                      std::chrono::milliseconds timeout) override;

private:
    std::string base_url_;
};

/// Serves requests in-process from another Backend through the JSON wire
/// format, optionally after a fixed delay. Counts invocations.
class LoopbackTransport : public Transport {
public:
    explicit LoopbackTransport(Backend& server,
                               std::chrono::microseconds delay = std::chrono::microseconds{0})
        : server_(server), delay_(delay) {}
    HttpResponse post(const std::string& path, const std::string& body,
                      const std::string& auth_token,
                      std::chrono::milliseconds timeout) override;
    std::size_t invocations() const { return invocations_.load(); }

private:
    Backend& server_;
    std::chrono::microseconds delay_;
    std::atomic<std::size_t> invocations_{0};
};

inline constexpr const char* kEndpointEnv = "INSTILL_ENDPOINT";
inline constexpr const char* kAuthTokenEnv = "INSTILL_AUTH_TOKEN";
inline constexpr const char* kGeneratePath = "/v1/generate";

struct HttpBackendConfig {
    std::string endpoint;
    std::string auth_token;
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};

    /// Fills endpoint and auth token from INSTILL_ENDPOINT / INSTILL_AUTH_TOKEN.
    static HttpBackendConfig from_env();
};

/// Client for POST /v1/generate. Network failures are retried with
/// exponential backoff; non-2xx responses are not.
class HttpBackend : public Backend {
public:
    /// With no transport, an HttplibTransport for `config.endpoint` is used.
    explicit HttpBackend(HttpBackendConfig config, std::shared_ptr<Transport> transport = nullptr);
    GenerationResult generate(const GenerationRequest& request) override;

private:
    HttpBackendConfig config_;
    std::shared_ptr<Transport> transport_;
};

}  // namespace instill
