#include "instill/distill.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "instill/error.hpp"
#include "instill/io.hpp"
#include "instill/parallel.hpp"
#include "instill/ranknet.hpp"

namespace instill {

using nlohmann::json;

void TrainingExample::validate() const {
    const auto n = docs.size();
    if (n < 2) throw UsageError("training example for " + query.query_id + " has fewer than 2 documents");
    if (teacher_ranks.size() != n)
        throw UsageError("training example for " + query.query_id + " has mismatched teacher ranks");
    std::vector<bool> seen(n + 1, false);
    for (auto r : teacher_ranks) {
        if (r < 1 || r > n || seen[r])
            throw UsageError("teacher ranks for " + query.query_id + " are not a permutation of 1..n");
        seen[r] = true;
    }
}

TrainingSetResult build_training_set(std::span<const Query> queries, const Corpus& corpus,
                                     const PostingsIndex& index, const RankerContext& ctx,
                                     std::size_t n) {
    if (n < 2) throw UsageError("teacher inference needs at least 2 candidates per query");

    enum class Status { done, skipped, failed };
    struct Slot {
        Status status = Status::failed;
        TrainingExample example;
        RankStats stats;
        std::string error;
    };
    std::vector<Slot> slots(queries.size());

    RankerContext per_query{ctx};
    per_query.parallelism = 1;
    parallel_for(queries.size(), ctx.parallelism, [&](std::size_t q) {
        auto& slot = slots[q];
        try {
            auto candidates = retrieve_topk(corpus, index, queries[q], n);
            if (candidates.size() < 2) {
                slot.status = Status::skipped;
                return;
            }
            auto result = rank_pairwise_allpair(per_query, candidates);
            slot.stats = result.stats;
            slot.example.query = queries[q];
            slot.example.teacher_ranks.reserve(candidates.size());
            for (const auto& doc : candidates.docs)
                slot.example.teacher_ranks.push_back(result.ranking.rank_of(doc.doc_id));
            slot.example.docs = std::move(candidates.docs);
            slot.status = Status::done;
        } catch (const std::exception& e) {
            slot.status = Status::failed;
            slot.error = e.what();
        }
    });

    TrainingSetResult out;
    for (std::size_t q = 0; q < slots.size(); ++q) {
        auto& slot = slots[q];
        const auto& id = queries[q].query_id;
        switch (slot.status) {
            case Status::done:
                out.completed.push_back(id);
                out.stats += slot.stats;
                out.examples.push_back(std::move(slot.example));
                break;
            case Status::skipped: out.skipped.push_back(id); break;
            case Status::failed: out.failed.emplace_back(id, slot.error); break;
        }
    }
    return out;
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
    if (max_input_tokens == 0) throw ConfigError("train.max_input_tokens must be positive");
    if (architecture == Architecture::mlp1 && hidden == 0) throw ConfigError("train.hidden must be positive for mlp1");
}

TrainResult train(std::span<const TrainingExample> examples, const PostingsIndex& index,
                  const TrainConfig& config) {
    config.validate();
    if (examples.empty()) throw UsageError("cannot train on an empty training set");
    for (const auto& ex : examples) ex.validate();

    FeatureExtractor extractor(index, config.max_input_tokens);
    std::vector<std::vector<std::vector<double>>> raw(examples.size());
    std::vector<std::vector<double>> all_rows;
    for (std::size_t e = 0; e < examples.size(); ++e) {
        for (const auto& doc : examples[e].docs) {
            raw[e].push_back(extractor.extract(examples[e].query, doc));
            all_rows.push_back(raw[e].back());
        }
    }
    auto spec = FeatureSpec::fit(all_rows, config.max_input_tokens);
    for (auto& rows : raw)
        for (auto& row : rows) row = spec.normalize(row);

    auto scorer = StudentScorer::create(config.architecture, FeatureExtractor::kDimension, config.hidden,
                                        derive_seed(config.seed, "student-init"));
    OptimizerState state(scorer.num_parameters(),
                         AdamWParams{config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, "shuffle"));

    TrainResult result{{spec, scorer}, {}};
    auto& model_scorer = result.model.scorer;
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(model_scorer.num_parameters());

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const auto end = std::min(order.size(), begin + config.batch_size);
            const double weight = 1.0 / static_cast<double>(end - begin);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = begin; b < end; ++b) {
                const auto& ex = examples[order[b]];
                const auto& rows = raw[order[b]];
                std::vector<double> scores(rows.size()), dscores(rows.size());
                for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = model_scorer.score(rows[i]);
                epoch_loss += ranknet_loss_and_grad(ex.teacher_ranks, scores, dscores);
                for (std::size_t i = 0; i < rows.size(); ++i)
                    model_scorer.accumulate_gradient(rows[i], dscores[i] * weight, grad);
            }
            adamw_step(state, model_scorer.parameters(), grad);
        }
        const double mean = epoch_loss / static_cast<double>(examples.size());
        result.epoch_loss.push_back(mean);
        spdlog::debug("epoch {} mean loss {:.6f}", epoch + 1, mean);
        if (config.early_stop && result.epoch_loss.size() >= 2) {
            const double previous = result.epoch_loss[result.epoch_loss.size() - 2];
            if (previous - mean <= config.early_stop_tolerance) break;
        }
    }
    return result;
}

double student_score(const StudentModel& model, const FeatureExtractor& extractor, const Query& query,
                     const Document& doc) {
    return model.scorer.score(model.features.normalize(extractor.extract(query, doc)));
}

RankResult student_rank(const StudentModel& model, const PostingsIndex& index, const CandidateSet& candidates) {
    FeatureExtractor extractor(index, model.features.max_input_tokens);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& doc : candidates.docs) scores.push_back(student_score(model, extractor, candidates.query, doc));
    RankResult out;
    out.ranking = scores_to_ranking(candidates.query.query_id, scores, candidates.doc_ids());
    out.scores = std::move(scores);
    return out;
}

// ---- files ---------------------------------------------------------------

std::string format_training_set(std::span<const TrainingExample> examples) {
    std::string out;
    for (const auto& ex : examples) {
        json j;
        j["query_id"] = ex.query.query_id;
        j["doc_ids"] = json::array();
        for (const auto& d : ex.docs) j["doc_ids"].push_back(d.doc_id);
        j["teacher_ranks"] = ex.teacher_ranks;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<TrainingExample> load_training_set(const std::filesystem::path& path, const Corpus& corpus,
                                               std::span<const Query> queries) {
    std::unordered_map<std::string, const Query*> by_id;
    for (const auto& q : queries) by_id.emplace(q.query_id, &q);
    std::vector<TrainingExample> out;
    const auto source = path.string();
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        TrainingExample ex;
        try {
            auto j = json::parse(line);
            auto qid = j.at("query_id").get<std::string>();
            auto q = by_id.find(qid);
            if (q == by_id.end()) throw ParseError(source, number, "unknown query_id " + qid);
            ex.query = *q->second;
            for (const auto& id : j.at("doc_ids")) {
                auto idx = corpus.index_of(id.get<std::string>());
                if (!idx) throw ParseError(source, number, "unknown doc_id " + id.get<std::string>());
                ex.docs.push_back(corpus[*idx]);
            }
            ex.teacher_ranks = j.at("teacher_ranks").get<std::vector<std::size_t>>();
        } catch (const json::exception& e) {
            throw ParseError(source, number, e.what());
        }
        try {
            ex.validate();
        } catch (const UsageError& e) {
            throw ParseError(source, number, e.what());
        }
        out.push_back(std::move(ex));
    });
    return out;
}

std::string format_checkpoint(const StudentModel& model, const TrainConfig& config) {
    json j;
    j["architecture"] = std::string(to_string(model.scorer.architecture()));
    j["hidden"] = model.scorer.hidden();
    j["input_dim"] = model.scorer.input_dim();
    j["feature_spec"] = {{"names", model.features.names},
                         {"mean", model.features.mean},
                         {"scale", model.features.scale},
                         {"max_input_tokens", model.features.max_input_tokens}};
    j["theta"] = std::vector<double>(model.scorer.parameters().begin(), model.scorer.parameters().end());
    j["train_config"] = {{"epochs", config.epochs},
                         {"batch_size", config.batch_size},
                         {"lr", config.lr},
                         {"weight_decay", config.weight_decay},
                         {"max_input_tokens", config.max_input_tokens},
                         {"architecture", std::string(to_string(config.architecture))},
                         {"hidden", config.hidden},
                         {"early_stop", config.early_stop},
                         {"early_stop_tolerance", config.early_stop_tolerance}};
    j["seed"] = config.seed;
    return j.dump(2) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
    try {
        auto j = json::parse(text);
        TrainConfig config;
        const auto& tc = j.at("train_config");
        config.epochs = tc.at("epochs").get<std::size_t>();
        config.batch_size = tc.at("batch_size").get<std::size_t>();
        config.lr = tc.at("lr").get<double>();
        config.weight_decay = tc.at("weight_decay").get<double>();
        config.max_input_tokens = tc.at("max_input_tokens").get<std::size_t>();
        config.architecture = parse_architecture(tc.at("architecture").get<std::string>());
        config.hidden = tc.at("hidden").get<std::size_t>();
        config.early_stop = tc.value("early_stop", false);
        config.early_stop_tolerance = tc.value("early_stop_tolerance", 0.0);
        config.seed = j.at("seed").get<std::uint64_t>();

        FeatureSpec spec;
        const auto& fs = j.at("feature_spec");
        spec.names = fs.at("names").get<std::vector<std::string>>();
        spec.mean = fs.at("mean").get<std::vector<double>>();
        spec.scale = fs.at("scale").get<std::vector<double>>();
        spec.max_input_tokens = fs.at("max_input_tokens").get<std::size_t>();
        if (spec.names != FeatureExtractor::names())
            throw ConfigError("checkpoint feature set does not match this build");
        if (spec.mean.size() != spec.names.size() || spec.scale.size() != spec.names.size())
            throw ConfigError("checkpoint feature normalisation has the wrong size");

        auto scorer = StudentScorer::from_parameters(parse_architecture(j.at("architecture").get<std::string>()),
                                                     j.at("input_dim").get<std::size_t>(),
                                                     j.at("hidden").get<std::size_t>(),
                                                     j.at("theta").get<std::vector<double>>());
        return {{std::move(spec), std::move(scorer)}, config};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

std::string format_loss_trace(std::span<const double> epoch_loss) {
    std::string out = "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g\n", e + 1, epoch_loss[e]);
        out += buf;
    }
    return out;
}

}  // namespace instill
