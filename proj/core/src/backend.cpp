#include "instill/backend.hpp"

#include <set>
#include <thread>

#include <json.hpp>

#include "instill/io.hpp"

namespace instill {

using nlohmann::json;

void GenerationRequest::validate() const {
    if (max_new_tokens <= 0) throw UsageError("max_new_tokens must be positive");
    if (!options.empty() && echo_target) throw UsageError("a request may set options or echo_target, not both");
    std::set<std::string> unique(options.begin(), options.end());
    if (unique.size() != options.size()) throw UsageError("request options must be distinct");
}

std::string to_json(const GenerationRequest& request) {
    json j = {{"prompt", request.prompt}, {"max_new_tokens", request.max_new_tokens}};
    if (!request.options.empty()) j["options"] = request.options;
    if (request.echo_target) j["echo_target"] = *request.echo_target;
    return j.dump();
}

std::string to_json(const GenerationResult& result) {
    json j = {{"text", result.text}};
    if (result.option_probs) j["option_probs"] = *result.option_probs;
    if (result.target_token_logprobs) j["target_token_logprobs"] = *result.target_token_logprobs;
    return j.dump();
}

GenerationRequest request_from_json(std::string_view text) {
    try {
        auto j = json::parse(text);
        GenerationRequest r;
        r.prompt = j.at("prompt").get<std::string>();
        r.max_new_tokens = j.value("max_new_tokens", 16);
        if (auto it = j.find("options"); it != j.end() && !it->is_null())
            r.options = it->get<std::vector<std::string>>();
        if (auto it = j.find("echo_target"); it != j.end() && !it->is_null())
            r.echo_target = it->get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed generation request: ") + e.what());
    }
}

GenerationResult result_from_json(std::string_view text) {
    try {
        auto j = json::parse(text);
        GenerationResult r;
        r.text = j.at("text").get<std::string>();
        if (auto it = j.find("option_probs"); it != j.end() && !it->is_null())
            r.option_probs = it->get<std::map<std::string, double>>();
        if (auto it = j.find("target_token_logprobs"); it != j.end() && !it->is_null())
            r.target_token_logprobs = it->get<std::vector<double>>();
        return r;
    } catch (const json::exception& e) {
        throw BackendError(200, std::string("malformed generation response: ") + e.what());
    }
}

std::string request_hash(const GenerationRequest& request) { return sha256_hex(to_json(request)); }

bool is_call_failure(const std::exception& e) {
    return dynamic_cast<const TransportError*>(&e) != nullptr ||
           dynamic_cast<const BackendError*>(&e) != nullptr;
}

void CallCounter::count(const std::string& strategy, double seconds) {
    std::lock_guard lock(mutex_);
    auto& e = entries_[strategy];
    ++e.calls;
    e.seconds += seconds;
}

std::size_t CallCounter::calls(const std::string& strategy) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(strategy);
    return it == entries_.end() ? 0 : it->second.calls;
}

double CallCounter::seconds(const std::string& strategy) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(strategy);
    return it == entries_.end() ? 0.0 : it->second.seconds;
}

std::size_t CallCounter::total_calls() const {
    std::lock_guard lock(mutex_);
    std::size_t total = 0;
    for (const auto& [k, e] : entries_) total += e.calls;
    return total;
}

std::map<std::string, CallCounter::Entry> CallCounter::snapshot() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

void CallCounter::reset() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

GenerationResult DelayedBackend::generate(const GenerationRequest& request) {
    std::this_thread::sleep_for(delay_);
    return inner_.generate(request);
}

}  // namespace instill
