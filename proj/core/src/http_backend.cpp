#include "instill/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

namespace instill {

HttplibTransport::HttplibTransport(std::string base_url) : base_url_(std::move(base_url)) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

HttpResponse HttplibTransport::post(const std::string& path, const std::string& body,
                                    const std::string& auth_token,
                                    std::chrono::milliseconds timeout) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!auth_token.empty()) headers.emplace("Authorization", "Bearer " + auth_token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) throw TransportError("POST " + base_url_ + path + " failed: " + httplib::to_string(res.error()), 1);
    return {res->status, res->body};
}

HttpResponse LoopbackTransport::post(const std::string& path, const std::string& body,
                                     const std::string& /*auth_token*/,
                                     std::chrono::milliseconds /*timeout*/) {
    ++invocations_;
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    if (path != kGeneratePath) return {404, "no route " + path};
    try {
        auto request = request_from_json(body);
        return {200, to_json(server_.generate(request))};
    } catch (const BackendError& e) {
        return {e.status(), e.body()};
    } catch (const std::exception& e) {
        return {400, e.what()};
    }
}

HttpBackendConfig HttpBackendConfig::from_env() {
    HttpBackendConfig config;
    if (const char* url = std::getenv(kEndpointEnv)) config.endpoint = url;
    if (const char* token = std::getenv(kAuthTokenEnv)) config.auth_token = token;
    return config;
}

HttpBackend::HttpBackend(HttpBackendConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.max_attempts < 1) throw ConfigError("http backend needs at least one attempt");
    if (!transport_) {
        if (config_.endpoint.empty())
            throw ConfigError(std::string("no endpoint configured; set ") + kEndpointEnv);
        transport_ = std::make_shared<HttplibTransport>(config_.endpoint);
    }
}

GenerationResult HttpBackend::generate(const GenerationRequest& request) {
    request.validate();
    const auto body = to_json(request);
    auto backoff = config_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        HttpResponse response;
        try {
            response = transport_->post(kGeneratePath, body, config_.auth_token, config_.timeout);
        } catch (const TransportError& e) {
            if (attempt >= config_.max_attempts) throw TransportError(e.what(), attempt);
            spdlog::warn("generate attempt {} failed, retrying in {} ms: {}", attempt, backoff.count(), e.what());
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
            continue;
        }
        if (response.status < 200 || response.status >= 300)
            throw BackendError(response.status, response.body);
        return result_from_json(response.body);
    }
}

}  // namespace instill
