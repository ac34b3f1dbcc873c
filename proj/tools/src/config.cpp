#include "instill_cli/config.hpp"

#include <set>

#include <json.hpp>

#include "instill/error.hpp"
#include "instill/io.hpp"

namespace instill::cli {

using nlohmann::json;

std::filesystem::path PathsConfig::training_set_or_default() const {
    return training_set.empty() ? out_dir / "training_set.jsonl" : training_set;
}

std::filesystem::path PathsConfig::model_or_default() const {
    return model.empty() ? out_dir / "model.json" : model;
}

BackendKind parse_backend_kind(std::string_view name) {
    if (name == "oracle") return BackendKind::oracle;
    if (name == "http") return BackendKind::http;
    throw ConfigError("unknown backend kind '" + std::string(name) + "' (expected oracle or http)");
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::oracle ? "oracle" : "http"; }

bool is_known_strategy(std::string_view name) {
    for (const char* s : {strategy::kPointwiseRg, strategy::kPointwiseQg, strategy::kPairwiseAllpair,
                          strategy::kListwise, strategy::kStudent, strategy::kBm25})
        if (name == s) return true;
    return false;
}

namespace {

/// One JSON object; each key read is marked, and finish() rejects the rest.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config: " + label() + " must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: " + path(key) + " has the wrong type");
        }
    }

    template <typename T>
    void read_positive(const char* key, T& out) {
        read(key, out);
        if (!(out > T{})) throw ConfigError("config: " + path(key) + " must be positive");
    }

    void read_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
        std::string s;
        read(key, s);
        if (!s.empty()) out = std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s;
    }

    std::optional<Section> child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        return Section(*it, path(key));
    }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.contains(key)) throw ConfigError("config: unknown key " + path(key.c_str()));
    }

private:
    std::string label() const { return name_.empty() ? "top level" : name_; }
    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void read_enum(Section& s, const char* key, Enum& out, Parse parse) {
    std::string name;
    s.read(key, name);
    if (!name.empty()) out = parse(name);
}

void read_ms(Section& s, const char* key, std::chrono::milliseconds& out) {
    long long ms = out.count();
    s.read_positive(key, ms);
    out = std::chrono::milliseconds(ms);
}

}  // namespace

void RunConfig::propagate() {
    backend.oracle.seed = seed;
    train.seed = seed;
    synth.seed = seed;
    synth.task = task;
    synth.popularity_threshold = eval.popularity_threshold;
}

void RunConfig::validate() const {
    backend.oracle.validate();
    train.validate();
    synth.validate();
    if (retrieval.n == 0) throw ConfigError("config: retrieval.n must be positive");
    if (retrieval.bm25.k1 < 0.0) throw ConfigError("config: retrieval.k1 must be non-negative");
    if (retrieval.bm25.b < 0.0 || retrieval.bm25.b > 1.0) throw ConfigError("config: retrieval.b must lie in [0,1]");
    if (strategy.parallelism == 0) throw ConfigError("config: strategy.parallelism must be positive");
    if (strategy.listwise.window < 2) throw ConfigError("config: strategy.window must be at least 2");
    if (strategy.listwise.stride == 0) throw ConfigError("config: strategy.stride must be positive");
    if (strategy.listwise.passes == 0) throw ConfigError("config: strategy.passes must be positive");
    if (!is_known_strategy(strategy.name)) throw UsageError("unknown strategy '" + strategy.name + "'");
    for (const auto& s : bench.strategies)
        if (!is_known_strategy(s)) throw UsageError("unknown strategy '" + s + "' in bench.strategies");
    if (backend.mock_delay_ms < 0.0) throw ConfigError("config: backend.mock_delay_ms must be non-negative");
    if (backend.max_attempts < 1) throw ConfigError("config: backend.max_attempts must be at least 1");
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    Section root(j, "");
    read_enum(root, "task", cfg.task, parse_task);
    root.read("seed", cfg.seed);

    if (auto s = root.child("paths")) {
        auto& p = cfg.paths;
        s->read_path("corpus", p.corpus, base_dir);
        s->read_path("queries", p.queries, base_dir);
        s->read_path("train_queries", p.train_queries, base_dir);
        s->read_path("qrels", p.qrels, base_dir);
        s->read_path("templates", p.templates, base_dir);
        s->read_path("stopwords", p.stopwords, base_dir);
        s->read_path("popularity", p.popularity, base_dir);
        s->read_path("cache", p.cache, base_dir);
        s->read_path("training_set", p.training_set, base_dir);
        s->read_path("model", p.model, base_dir);
        s->read_path("out_dir", p.out_dir, base_dir);
        s->finish();
        for (const auto* input : {&p.corpus, &p.queries, &p.train_queries, &p.qrels, &p.templates, &p.stopwords,
                                  &p.popularity})
            if (!input->empty() && !std::filesystem::exists(*input))
                throw ConfigError("config: path does not exist: " + input->string());
    }

    if (auto s = root.child("backend")) {
        auto& b = cfg.backend;
        read_enum(*s, "kind", b.kind, parse_backend_kind);
        s->read("endpoint", b.endpoint);
        read_ms(*s, "timeout_ms", b.timeout);
        s->read("max_attempts", b.max_attempts);
        read_ms(*s, "initial_backoff_ms", b.initial_backoff);
        read_enum(*s, "cache_mode", b.cache_mode, parse_cache_mode);
        s->read("mock_delay_ms", b.mock_delay_ms);
        if (auto o = s->child("oracle")) {
            o->read("comparator_accuracy", b.oracle.comparator_accuracy);
            o->read("position_bias", b.oracle.position_bias);
            o->read("tie_rate", b.oracle.tie_rate);
            o->read("pointwise_noise", b.oracle.pointwise_noise);
            o->read("max_grade", b.oracle.max_grade);
            o->finish();
        }
        s->finish();
    }

    if (auto s = root.child("retrieval")) {
        s->read("k1", cfg.retrieval.bm25.k1);
        s->read("b", cfg.retrieval.bm25.b);
        s->read("n", cfg.retrieval.n);
        s->finish();
    }

    if (auto s = root.child("strategy")) {
        s->read("name", cfg.strategy.name);
        s->read("window", cfg.strategy.listwise.window);
        s->read("stride", cfg.strategy.listwise.stride);
        s->read("passes", cfg.strategy.listwise.passes);
        s->read("parallelism", cfg.strategy.parallelism);
        s->read_positive("max_new_tokens", cfg.strategy.max_new_tokens);
        s->finish();
    }

    if (auto s = root.child("train")) {
        auto& t = cfg.train;
        s->read("epochs", t.epochs);
        s->read("batch_size", t.batch_size);
        s->read("lr", t.lr);
        s->read("weight_decay", t.weight_decay);
        s->read("max_input_tokens", t.max_input_tokens);
        read_enum(*s, "architecture", t.architecture, parse_architecture);
        s->read("hidden", t.hidden);
        s->read("early_stop", t.early_stop);
        s->read("early_stop_tolerance", t.early_stop_tolerance);
        s->finish();
    }

    if (auto s = root.child("eval")) {
        read_enum(*s, "gain", cfg.eval.gain, parse_gain);
        s->read("popularity_threshold", cfg.eval.popularity_threshold);
        s->finish();
    }

    if (auto s = root.child("bench")) {
        s->read("strategies", cfg.bench.strategies);
        s->read("reference", cfg.bench.reference);
        s->read("queries", cfg.bench.queries);
        s->read("model_tag", cfg.bench.model_tag);
        s->finish();
    }

    if (auto s = root.child("synth")) {
        auto& y = cfg.synth;
        s->read("train_queries", y.train_queries);
        s->read("test_queries", y.test_queries);
        s->read("docs_per_query", y.docs_per_query);
        s->read("terms_per_query", y.terms_per_query);
        s->read("min_doc_words", y.min_doc_words);
        s->read("max_doc_words", y.max_doc_words);
        s->read("catalog_size", y.catalog_size);
        s->read("dialogs", y.dialogs);
        s->read("popular_movies", y.popular_movies);
        s->finish();
    }
    root.finish();

    cfg.propagate();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace instill::cli
