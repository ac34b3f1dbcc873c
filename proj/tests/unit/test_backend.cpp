#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "instill/backend.hpp"
#include "instill/cache.hpp"
#include "instill/error.hpp"
#include "instill/http_backend.hpp"
#include "instill/io.hpp"
#include "instill/oracle_backend.hpp"
#include "instill/rankers.hpp"
#include "support.hpp"

using namespace instill;
using namespace std::chrono_literals;

namespace {

GenerationRequest pair_request(const test::GradedFixture& fx, std::size_t i, std::size_t j) {
    const auto& t = TemplateSet::builtin().get(PromptKind::pairwise, Task::passage);
    std::vector<Document> items{fx.candidates.docs[i], fx.candidates.docs[j]};
    GenerationRequest r;
    r.prompt = render(t, fx.query, items);
    return r;
}

/// Fails the first `failures` calls, then forwards.
class FlakyTransport : public Transport {
public:
    FlakyTransport(Transport& inner, int failures) : inner_(inner), failures_(failures) {}
    HttpResponse post(const std::string& path, const std::string& body, const std::string& token,
                      std::chrono::milliseconds timeout) override {
        ++calls;
        if (calls <= failures_) throw TransportError("simulated timeout", 1);
        return inner_.post(path, body, token, timeout);
    }
    int calls = 0;

private:
    Transport& inner_;
    int failures_;
};

class FixedTransport : public Transport {
public:
    explicit FixedTransport(HttpResponse response) : response_(std::move(response)) {}
    HttpResponse post(const std::string&, const std::string&, const std::string&, std::chrono::milliseconds) override {
        ++calls;
        return response_;
    }
    int calls = 0;

private:
    HttpResponse response_;
};

HttpBackendConfig fast_config() {
    HttpBackendConfig c;
    c.endpoint = "http://unused";
    c.initial_backoff = 1ms;
    return c;
}

}  // namespace

TEST(Request, ValidateRejectsBadShapes) {
    GenerationRequest r{"p", 16, {"Yes", "Yes"}, std::nullopt};
    EXPECT_THROW(r.validate(), UsageError);
    r = {"p", 16, {"Yes"}, std::string("q")};
    EXPECT_THROW(r.validate(), UsageError);
    r = {"p", 0, {}, std::nullopt};
    EXPECT_THROW(r.validate(), UsageError);
    r = {"p", 4, {"Yes", "No"}, std::nullopt};
    EXPECT_NO_THROW(r.validate());
}

TEST(Request, JsonRoundTripAndStableHash) {
    GenerationRequest r{"prompt \"x\"\n", 8, {"Yes", "No"}, std::nullopt};
    EXPECT_EQ(request_from_json(to_json(r)), r);
    EXPECT_EQ(to_json(r), "{\"max_new_tokens\":8,\"options\":[\"Yes\",\"No\"],\"prompt\":\"prompt \\\"x\\\"\\n\"}");
    EXPECT_EQ(request_hash(r), sha256_hex(to_json(r)));
    GenerationRequest other = r;
    other.max_new_tokens = 9;
    EXPECT_NE(request_hash(r), request_hash(other));

    GenerationResult res{"Yes", std::map<std::string, double>{{"Yes", 0.75}}, std::nullopt};
    EXPECT_EQ(result_from_json(to_json(res)), res);
    GenerationResult lp{"q", std::nullopt, std::vector<double>{-0.5, -1.25}};
    EXPECT_EQ(result_from_json(to_json(lp)), lp);
}

TEST(Oracle, PerfectComparatorPrefersHigherGrade) {
    test::GradedFixture fx({3, 1});
    OracleBackend oracle(fx.truth, {}, Task::passage);
    EXPECT_EQ(oracle.generate(pair_request(fx, 0, 1)).text, "Passage A");
    EXPECT_EQ(oracle.generate(pair_request(fx, 1, 0)).text, "Passage B");
}

TEST(Oracle, TieRateOneAlwaysNeither) {
    test::GradedFixture fx({3, 1, 0, 2});
    OracleConfig c;
    c.tie_rate = 1.0;
    OracleBackend oracle(fx.truth, c, Task::passage);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) {
                EXPECT_EQ(parse_pair_choice(oracle.generate(pair_request(fx, i, j)).text), PairwiseChoice::neither);
            }
}

TEST(Oracle, FullPositionBiasAlwaysFirst) {
    test::GradedFixture fx({0, 3});
    OracleConfig c;
    c.position_bias = 1.0;
    OracleBackend oracle(fx.truth, c, Task::passage);
    EXPECT_EQ(parse_pair_choice(oracle.generate(pair_request(fx, 0, 1)).text), PairwiseChoice::first);
}

TEST(Oracle, DeterministicPerSeedAndRequest) {
    test::GradedFixture fx({3, 1, 2});
    OracleConfig c;
    c.comparator_accuracy = 0.6;
    c.position_bias = 0.2;
    c.tie_rate = 0.1;
    c.pointwise_noise = 0.3;
    c.seed = 9;
    OracleBackend a(fx.truth, c, Task::passage), b(fx.truth, c, Task::passage);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) {
                auto r = pair_request(fx, i, j);
                EXPECT_EQ(a.generate(r), a.generate(r));
                EXPECT_EQ(a.generate(r), b.generate(r));
            }
}

// With a perfect comparator the answers form a strict weak order: the
// comparison is antisymmetric and transitive, and ties are exactly equal
// grades.
TEST(OracleProperty, PerfectComparatorIsStrictWeakOrder) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<int> grades(6);
        for (auto& g : grades) g = std::uniform_int_distribution<int>(0, 3)(rng);
        test::GradedFixture fx(grades);
        OracleConfig c;
        c.seed = static_cast<std::uint64_t>(trial);
        OracleBackend oracle(fx.truth, c, Task::passage);
        auto better = [&](std::size_t i, std::size_t j) {
            return parse_pair_choice(oracle.generate(pair_request(fx, i, j)).text) == PairwiseChoice::first;
        };
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) {
                if (i == j) continue;
                EXPECT_EQ(better(i, j), grades[i] > grades[j]);
                EXPECT_FALSE(better(i, j) && better(j, i));
                for (std::size_t k = 0; k < 6; ++k)
                    if (k != i && k != j && better(i, j) && better(j, k)) {
                        EXPECT_TRUE(better(i, k));
                    }
            }
    }
}

TEST(Oracle, PointwiseAnswersYesIffRelevantWithProbabilities) {
    test::GradedFixture fx({0, 1, 3});
    OracleConfig c;
    c.pointwise_noise = 0.3;
    OracleBackend oracle(fx.truth, c, Task::passage);
    const auto& t = TemplateSet::builtin().get(PromptKind::pointwise_rg, Task::passage);
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<Document> item{fx.candidates.docs[i]};
        GenerationRequest r{render(t, fx.query, item), 16, {"Yes", "No"}, std::nullopt};
        auto res = oracle.generate(r);
        EXPECT_EQ(res.text, i == 0 ? "No" : "Yes");
        ASSERT_TRUE(res.option_probs);
        double sum = 0.0;
        for (const auto& [_, p] : *res.option_probs) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            sum += p;
        }
        EXPECT_LE(sum, 1.0 + 1e-6);
    }
}

TEST(Oracle, UnknownPromptIs422) {
    OracleBackend oracle(RelevanceTruth{}, {}, Task::passage);
    try {
        oracle.generate({"hello", 16, {}, std::nullopt});
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.status(), 422);
    }
}

TEST(Oracle, ConfigValidation) {
    OracleConfig c;
    c.comparator_accuracy = 0.4;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.pointwise_noise = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CallCounter, CountsPerStrategy) {
    CallCounter c;
    c.count("a", 0.5);
    c.count("a", 0.25);
    c.count("b");
    EXPECT_EQ(c.calls("a"), 2u);
    EXPECT_DOUBLE_EQ(c.seconds("a"), 0.75);
    EXPECT_EQ(c.total_calls(), 3u);
    EXPECT_EQ(c.calls("missing"), 0u);
}

TEST(Cache, RecordThenReplayWithoutTransport) {
    test::TempDir dir;
    test::GradedFixture fx({3, 1, 2, 0});
    OracleBackend oracle(fx.truth, {}, Task::passage);
    LoopbackTransport transport(oracle);
    HttpBackend http(fast_config(), std::shared_ptr<Transport>(&transport, [](Transport*) {}));
    std::vector<GenerationResult> recorded;
    {
        ResponseCache cache(dir / "cache.jsonl");
        CachingBackend caching(cache, &http, CacheMode::record);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                if (i != j) recorded.push_back(caching.generate(pair_request(fx, i, j)));
        EXPECT_EQ(caching.misses(), 12u);
        EXPECT_EQ(cache.size(), 12u);
    }
    const auto invocations = transport.invocations();
    EXPECT_EQ(invocations, 12u);

    ResponseCache cache(dir / "cache.jsonl");
    CachingBackend replay(cache, nullptr, CacheMode::replay);
    std::size_t k = 0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) {
                EXPECT_EQ(replay.generate(pair_request(fx, i, j)), recorded[k++]);
            }
    EXPECT_EQ(transport.invocations(), invocations);
    EXPECT_EQ(replay.hits(), 12u);
    EXPECT_THROW(replay.generate({"never seen", 16, {}, std::nullopt}), CacheMissError);
}

TEST(Cache, FileLinesCarryHashRequestAndResult) {
    test::TempDir dir;
    {
        ResponseCache cache(dir / "c.jsonl");
        GenerationRequest r{"p", 16, {}, std::nullopt};
        cache.record(r, test::text_result("out"));
        cache.record(r, test::text_result("ignored duplicate"));
    }
    const auto text = read_file(dir / "c.jsonl");
    EXPECT_NE(text.find("\"request_hash\""), std::string::npos);
    EXPECT_NE(text.find("\"request\""), std::string::npos);
    EXPECT_NE(text.find("\"result\""), std::string::npos);
    ResponseCache reopened(dir / "c.jsonl");
    EXPECT_EQ(reopened.size(), 1u);
    EXPECT_EQ(reopened.lookup(request_hash({"p", 16, {}, std::nullopt}))->text, "out");
}

TEST(Cache, ConcurrentRecordIsSafe) {
    ResponseCache cache;
    test::ScriptedBackend inner([](const GenerationRequest& r) { return test::text_result(r.prompt); });
    CachingBackend caching(cache, &inner, CacheMode::record);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (int i = 0; i < 50; ++i) caching.generate({"p" + std::to_string((4 * i + t) % 60), 16, {}, std::nullopt});
        });
    threads.clear();
    EXPECT_EQ(cache.size(), 60u);
    EXPECT_EQ(caching.hits() + caching.misses(), 200u);
}

TEST(HttpBackend, RetriesTransportErrorsThenSucceeds) {
    test::GradedFixture fx({3, 1});
    OracleBackend oracle(fx.truth, {}, Task::passage);
    LoopbackTransport loop(oracle);
    auto flaky = std::make_shared<FlakyTransport>(loop, 2);
    HttpBackend http(fast_config(), flaky);
    EXPECT_EQ(http.generate(pair_request(fx, 0, 1)).text, "Passage A");
    EXPECT_EQ(flaky->calls, 3);
}

TEST(HttpBackend, ExhaustedRetriesReportAttempts) {
    test::GradedFixture fx({3, 1});
    OracleBackend oracle(fx.truth, {}, Task::passage);
    LoopbackTransport loop(oracle);
    auto flaky = std::make_shared<FlakyTransport>(loop, 100);
    HttpBackend http(fast_config(), flaky);
    try {
        http.generate(pair_request(fx, 0, 1));
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 3);
        EXPECT_TRUE(is_call_failure(e));
    }
    EXPECT_EQ(flaky->calls, 3);
}

TEST(HttpBackend, Non2xxIsNotRetried) {
    auto fixed = std::make_shared<FixedTransport>(HttpResponse{503, "overloaded"});
    HttpBackend http(fast_config(), fixed);
    try {
        http.generate({"p", 16, {}, std::nullopt});
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.status(), 503);
        EXPECT_EQ(e.body(), "overloaded");
    }
    EXPECT_EQ(fixed->calls, 1);
}

TEST(HttpBackend, MalformedBodyIsBackendError) {
    auto fixed = std::make_shared<FixedTransport>(HttpResponse{200, "not json"});
    HttpBackend http(fast_config(), fixed);
    EXPECT_THROW(http.generate({"p", 16, {}, std::nullopt}), Error);
}

TEST(HttpBackend, FailedCallsScoreNeutrallyInRankers) {
    auto fixed = std::make_shared<FixedTransport>(HttpResponse{500, "boom"});
    HttpBackend http(fast_config(), fixed);
    test::GradedFixture fx({3, 1, 2});
    RankerContext ctx{http};
    auto result = rank_pairwise_allpair(ctx, fx.candidates);
    EXPECT_EQ(result.stats.failures, 6u);
    for (double s : result.scores) EXPECT_DOUBLE_EQ(s, 2.0);
}

TEST(HttpBackend, SpeaksWireFormatToRealServer) {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        auto request = request_from_json(req.body);
        GenerationResult out;
        out.text = "echo:" + request.prompt;
        out.option_probs = std::map<std::string, double>{{"Yes", 0.25}};
        res.set_content(to_json(out), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig c = fast_config();
    c.endpoint = "http://127.0.0.1:" + std::to_string(port);
    c.auth_token = "secret";
    HttpBackend http(c);
    auto res = http.generate({"hi", 16, {"Yes", "No"}, std::nullopt});
    EXPECT_EQ(res.text, "echo:hi");
    EXPECT_DOUBLE_EQ(res.option_probs->at("Yes"), 0.25);
    EXPECT_EQ(seen_auth, "Bearer secret");

    server.stop();
    thread.join();
}

TEST(HttpBackend, UnreachableServerIsTransportError) {
    HttpBackendConfig c = fast_config();
    c.endpoint = "http://127.0.0.1:1";
    c.timeout = 200ms;
    HttpBackend http(c);
    EXPECT_THROW(http.generate({"hi", 16, {}, std::nullopt}), TransportError);
}
