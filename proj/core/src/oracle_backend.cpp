#include "instill/oracle_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "instill/io.hpp"

namespace instill {

void OracleConfig::validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (comparator_accuracy < 0.5 || comparator_accuracy > 1.0)
        throw ConfigError("oracle comparator_accuracy must lie in [0.5, 1]");
    if (!unit(position_bias)) throw ConfigError("oracle position_bias must lie in [0, 1]");
    if (!unit(tie_rate)) throw ConfigError("oracle tie_rate must lie in [0, 1]");
    if (!(pointwise_noise >= 0.0)) throw ConfigError("oracle pointwise_noise must be non-negative");
    if (max_grade < 1) throw ConfigError("oracle max_grade must be at least 1");
}

void RelevanceTruth::set(const std::string& query_text, const std::string& item_text, int grade) {
    grades_[query_text][item_text] = grade;
}

int RelevanceTruth::grade(const std::string& query_text, const std::string& item_text) const {
    auto q = grades_.find(query_text);
    if (q == grades_.end()) return 0;
    auto d = q->second.find(item_text);
    return d == q->second.end() ? 0 : d->second;
}

RelevanceTruth RelevanceTruth::from_qrels(const Corpus& corpus, std::span<const Query> queries,
                                          const Qrels& qrels) {
    RelevanceTruth truth;
    for (const auto& q : queries) {
        if (!qrels.has_query(q.query_id)) continue;
        for (const auto& [doc_id, grade] : qrels.judgments().at(q.query_id)) {
            if (auto idx = corpus.index_of(doc_id)) truth.set(q.text, item_text(corpus[*idx]), grade);
        }
    }
    return truth;
}

namespace {

std::mt19937_64 request_rng(std::uint64_t seed, const GenerationRequest& request) {
    const auto digest = sha256_hex(to_json(request));
    const auto hi = std::stoull(digest.substr(0, 16), nullptr, 16);
    const auto lo = std::stoull(digest.substr(16, 16), nullptr, 16);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32),
                      static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32)};
    return std::mt19937_64(seq);
}

// Noise-free probability of a "relevant" answer for a grade. Grade 0 sits
// below 0.5 and every relevant grade above it, so the label is the argmax;
// relevant grades are only weakly separated from each other.
double base_probability(int grade, int max_grade) {
    if (grade <= 0) return 0.25;
    return std::clamp(0.5 + 0.25 * grade / (max_grade + 1.0), 0.0, 1.0);
}

bool is_word(const std::string& option, std::initializer_list<std::string_view> words) {
    std::string lower;
    for (char c : option)
        if (std::isalpha(static_cast<unsigned char>(c))) lower.push_back(static_cast<char>(std::tolower(c)));
    return std::find(words.begin(), words.end(), lower) != words.end();
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

}  // namespace

GenerationResult oracle_answer(const GenerationRequest& request, const RelevanceTruth& truth,
                               const OracleConfig& config, Task task, const TemplateSet& templates) {
    request.validate();
    auto rng = request_rng(config.seed, request);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::optional<TemplateSet::Identified> id;
    if (request.echo_target) {
        if (auto m = templates.get(PromptKind::pointwise_qg, task).match(request.prompt + *request.echo_target))
            id = TemplateSet::Identified{PromptKind::pointwise_qg, std::move(*m)};
    } else {
        id = templates.identify(task, request.prompt);
    }
    if (!id) throw BackendError(422, "oracle could not match the prompt to a template");

    const auto& query = id->match.query;
    const auto& items = id->match.items;
    GenerationResult result;

    switch (id->kind) {
        case PromptKind::pairwise: {
            const double u_tie = uniform(rng), u_bias = uniform(rng), u_correct = uniform(rng),
                         u_coin = uniform(rng);
            const int ga = truth.grade(query, items[0]);
            const int gb = truth.grade(query, items[1]);
            PairwiseChoice choice;
            if (u_tie < config.tie_rate) {
                choice = PairwiseChoice::neither;
            } else if (u_bias < config.position_bias) {
                choice = PairwiseChoice::first;
            } else {
                const bool correct = u_correct < config.comparator_accuracy;
                if (ga == gb) {
                    choice = correct ? PairwiseChoice::neither
                                     : (u_coin < 0.5 ? PairwiseChoice::first : PairwiseChoice::second);
                } else {
                    const bool first_better = ga > gb;
                    choice = (first_better == correct) ? PairwiseChoice::first : PairwiseChoice::second;
                }
            }
            const std::string prefix = task == Task::passage ? "Passage " : "";
            switch (choice) {
                case PairwiseChoice::first: result.text = prefix + "A"; break;
                case PairwiseChoice::second: result.text = prefix + "B"; break;
                case PairwiseChoice::neither: result.text = "Neither"; break;
            }
            break;
        }
        case PromptKind::pointwise_rg: {
            const int g = truth.grade(query, items[0]);
            double p_yes = base_probability(g, config.max_grade);
            if (config.pointwise_noise > 0.0) p_yes = std::clamp(p_yes + config.pointwise_noise * normal(rng), 0.0, 1.0);
            const bool yes = g > 0;
            result.text = task == Task::passage ? (yes ? "Yes" : "No") : (yes ? "Y" : "N");
            if (!request.options.empty()) {
                std::map<std::string, double> probs;
                for (const auto& opt : request.options) {
                    if (is_word(opt, {"yes", "y"})) probs[opt] = p_yes;
                    else if (is_word(opt, {"no", "n"})) probs[opt] = 1.0 - p_yes;
                    else probs[opt] = 0.0;
                }
                result.option_probs = std::move(probs);
            }
            break;
        }
        case PromptKind::pointwise_qg: {
            const int g = truth.grade(query, items[0]);
            const double base = base_probability(g, config.max_grade);
            std::vector<double> logprobs;
            for (std::size_t t = 0, n = whitespace_tokens(*request.echo_target).size(); t < n; ++t) {
                double p = base;
                if (config.pointwise_noise > 0.0) p += config.pointwise_noise * normal(rng);
                logprobs.push_back(std::log(std::clamp(p, 1e-6, 1.0)));
            }
            result.text = *request.echo_target;
            result.target_token_logprobs = std::move(logprobs);
            break;
        }
        case PromptKind::listwise: {
            std::vector<std::size_t> order(items.size());
            std::iota(order.begin(), order.end(), 0);
            std::vector<int> grades;
            for (const auto& item : items) grades.push_back(truth.grade(query, item));
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return grades[a] > grades[b]; });
            for (std::size_t i = 0; i + 1 < order.size(); ++i)
                if (uniform(rng) < 1.0 - config.comparator_accuracy) std::swap(order[i], order[i + 1]);
            for (std::size_t i = 0; i < order.size(); ++i) {
                if (i > 0) result.text += " > ";
                result.text += "[" + std::to_string(order[i] + 1) + "]";
            }
            break;
        }
    }
    return result;
}

OracleBackend::OracleBackend(RelevanceTruth truth, OracleConfig config, Task task,
                             const TemplateSet& templates)
    : truth_(std::move(truth)), config_(config), task_(task), templates_(templates) {
    config_.validate();
}

GenerationResult OracleBackend::generate(const GenerationRequest& request) {
    return oracle_answer(request, truth_, config_, task_, templates_);
}

}  // namespace instill
