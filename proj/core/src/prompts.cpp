#include "instill/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "instill/error.hpp"
#include "instill/io.hpp"

namespace instill {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::pointwise_rg: return "pointwise_rg";
        case PromptKind::pointwise_qg: return "pointwise_qg";
        case PromptKind::pairwise: return "pairwise";
        case PromptKind::listwise: return "listwise";
    }
    return "unknown";
}

std::string_view to_string(Task task) { return task == Task::passage ? "passage" : "movie"; }

Task parse_task(std::string_view name) {
    if (name == "passage") return Task::passage;
    if (name == "movie") return Task::movie;
    throw ConfigError("unknown task '" + std::string(name) + "' (expected passage or movie)");
}

namespace {

std::string item_word(Task task) { return std::string(to_string(task)); }

std::string template_name(Task task, PromptKind kind) {
    return std::string(to_string(task)) + "_" + std::string(to_string(kind));
}

std::string strip_final_newline(std::string text) {
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return text;
}

std::string slot(const std::string& name) { return "{{" + name + "}}"; }

}  // namespace

InstructionTemplate::InstructionTemplate(PromptKind kind, Task task, std::string text)
    : kind_(kind), task_(task), text_(std::move(text)) {
    const auto word = item_word(task);
    const auto where = " in " + template_name(task, kind) + " template";

    std::string_view rest = text_;
    std::string before_block, after_block;
    std::string separator;
    bool has_block = false;
    if (kind == PromptKind::listwise) {
        const auto first = "[1]: " + slot(word + "_1");
        const auto second = "[2]: " + slot(word + "_2");
        auto p1 = text_.find(first);
        auto p2 = p1 == std::string::npos ? p1 : text_.find(second, p1 + first.size());
        if (p2 == std::string::npos)
            throw ConfigError("listwise item block '" + first + "' ... '" + second + "' not found" + where);
        separator = text_.substr(p1 + first.size(), p2 - p1 - first.size());
        const auto tail = separator + "...";
        const auto after2 = p2 + second.size();
        if (text_.compare(after2, tail.size(), tail) != 0)
            throw ConfigError("listwise item block must end with '...'" + where);
        before_block = text_.substr(0, p1);
        after_block = text_.substr(after2 + tail.size());
        has_block = true;
    }

    std::multiset<std::string> seen;
    auto scan = [&](std::string_view s) {
        std::size_t pos = 0;
        std::string literal;
        while (pos < s.size()) {
            auto open = s.find("{{", pos);
            if (open == std::string_view::npos) {
                literal.append(s.substr(pos));
                break;
            }
            auto close = s.find("}}", open + 2);
            if (close == std::string_view::npos) throw ConfigError("unterminated placeholder" + where);
            literal.append(s.substr(pos, open - pos));
            if (!literal.empty()) parts_.push_back({Part::Type::literal, literal});
            literal.clear();
            std::string name(s.substr(open + 2, close - open - 2));
            seen.insert(name);
            parts_.push_back({Part::Type::slot, name});
            pos = close + 2;
        }
        if (!literal.empty()) parts_.push_back({Part::Type::literal, literal});
    };
    if (has_block) {
        scan(before_block);
        parts_.push_back({Part::Type::items, separator});
        scan(after_block);
    } else {
        scan(text_);
    }

    std::multiset<std::string> required{"query"};
    switch (kind) {
        case PromptKind::pointwise_rg:
        case PromptKind::pointwise_qg: required.insert(word); break;
        case PromptKind::pairwise:
            required.insert(word + "_A");
            required.insert(word + "_B");
            break;
        case PromptKind::listwise: break;
    }
    if (seen != required) {
        std::string expected;
        for (const auto& r : required) expected += " " + slot(r);
        throw ConfigError("placeholders must be exactly" + expected + where);
    }
    for (std::size_t i = 1; i < parts_.size(); ++i)
        if (parts_[i].type != Part::Type::literal && parts_[i - 1].type != Part::Type::literal)
            throw ConfigError("adjacent placeholders are ambiguous" + where);
    if (kind == PromptKind::pointwise_qg &&
        (parts_.empty() || parts_.back().type != Part::Type::slot || parts_.back().text != "query"))
        throw ConfigError("query-generation templates must end with {{query}}" + where);
}

std::size_t InstructionTemplate::arity() const {
    switch (kind_) {
        case PromptKind::pointwise_rg:
        case PromptKind::pointwise_qg: return 1;
        case PromptKind::pairwise: return 2;
        case PromptKind::listwise: return 0;
    }
    return 0;
}

std::string InstructionTemplate::render(std::string_view query,
                                        std::span<const std::string> items) const {
    const auto n = arity();
    if (n == 0 ? items.size() < 2 : items.size() != n)
        throw UsageError(template_name(task_, kind_) + " template takes " +
                         (n == 0 ? std::string("at least 2") : std::to_string(n)) + " item(s), got " +
                         std::to_string(items.size()));
    const auto word = item_word(task_);
    std::string out;
    for (const auto& part : parts_) {
        switch (part.type) {
            case Part::Type::literal: out += part.text; break;
            case Part::Type::slot:
                if (part.text == "query") out += query;
                else if (part.text == word + "_B") out += items[1];
                else out += items[0];
                break;
            case Part::Type::items:
                for (std::size_t k = 0; k < items.size(); ++k) {
                    if (k > 0) out += part.text;
                    out += "[" + std::to_string(k + 1) + "]: ";
                    out += items[k];
                }
                break;
        }
    }
    return out;
}

std::optional<InstructionTemplate::Match> InstructionTemplate::match(std::string_view prompt) const {
    Match m;
    std::vector<std::string> named(2);
    const auto word = item_word(task_);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        const auto& part = parts_[i];
        if (part.type == Part::Type::literal) {
            if (prompt.compare(pos, part.text.size(), part.text) != 0) return std::nullopt;
            pos += part.text.size();
            continue;
        }
        std::size_t end = prompt.size();
        if (i + 1 < parts_.size()) {
            end = prompt.find(parts_[i + 1].text, pos);
            if (end == std::string_view::npos) return std::nullopt;
        }
        auto value = prompt.substr(pos, end - pos);
        pos = end;
        if (part.type == Part::Type::slot) {
            if (part.text == "query") m.query = value;
            else if (part.text == word + "_B") named[1] = value;
            else named[0] = value;
            continue;
        }
        // Item block: "[1]: a<sep>[2]: b<sep>..."
        std::size_t k = 1;
        std::size_t cursor = 0;
        auto header = [&](std::size_t idx) { return "[" + std::to_string(idx) + "]: "; };
        if (value.compare(0, header(1).size(), header(1)) != 0) return std::nullopt;
        cursor = header(1).size();
        while (true) {
            auto next = part.text + header(k + 1);
            auto found = value.find(next, cursor);
            if (found == std::string_view::npos) {
                m.items.emplace_back(value.substr(cursor));
                break;
            }
            m.items.emplace_back(value.substr(cursor, found - cursor));
            cursor = found + next.size();
            ++k;
        }
    }
    if (pos != prompt.size()) return std::nullopt;
    if (kind_ == PromptKind::pairwise) m.items = std::move(named);
    else if (kind_ != PromptKind::listwise) m.items = {std::move(named[0])};
    return m;
}

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set = [] {
        TemplateSet s;
        const auto& embedded = detail::embedded_templates();
        for (auto task : {Task::passage, Task::movie}) {
            for (auto kind : kAllPromptKinds) {
                auto it = embedded.find(template_name(task, kind));
                if (it == embedded.end())
                    throw ConfigError("missing built-in template " + template_name(task, kind));
                s.templates_.emplace(std::pair{task, kind},
                                     InstructionTemplate(kind, task, strip_final_newline(it->second)));
            }
        }
        return s;
    }();
    return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("template directory " + dir.string() + " does not exist");
    TemplateSet s = builtin();
    for (auto task : {Task::passage, Task::movie}) {
        for (auto kind : kAllPromptKinds) {
            auto path = dir / (template_name(task, kind) + ".txt");
            if (!std::filesystem::exists(path)) continue;
            s.templates_.insert_or_assign(std::pair{task, kind},
                                          InstructionTemplate(kind, task, strip_final_newline(read_file(path))));
        }
    }
    return s;
}

const InstructionTemplate& TemplateSet::get(PromptKind kind, Task task) const {
    return templates_.at({task, kind});
}

std::optional<TemplateSet::Identified> TemplateSet::identify(Task task, std::string_view prompt) const {
    for (auto kind : kAllPromptKinds) {
        if (auto m = get(kind, task).match(prompt)) return Identified{kind, std::move(*m)};
    }
    return std::nullopt;
}

std::string item_text(const Document& doc) { return doc.full_text(); }

std::string render(const InstructionTemplate& tmpl, const Query& query, std::span<const Document> items) {
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& d : items) texts.push_back(item_text(d));
    return tmpl.render(query.text, texts);
}

// ---- parsers -------------------------------------------------------------

namespace {

std::vector<std::string> lower_words(std::string_view text, bool alpha_only) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        auto uc = static_cast<unsigned char>(c);
        if (alpha_only ? std::isalpha(uc) : std::isalnum(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::optional<double> lookup_ci(const std::map<std::string, double>& probs,
                                std::initializer_list<std::string_view> keys) {
    for (auto key : keys) {
        for (const auto& [k, v] : probs) {
            auto words = lower_words(k, true);
            if (words.size() == 1 && words[0] == key) return v;
        }
    }
    return std::nullopt;
}

}  // namespace

PointwiseVerdict parse_yes_no(std::string_view text, const std::map<std::string, double>& option_probs) {
    auto words = lower_words(text, true);
    std::size_t i = 0;
    if (!words.empty() && words[0] == "answer") i = 1;
    if (i >= words.size()) return {YesNo::other, 0.0};
    const auto& w = words[i];
    YesNo label = YesNo::other;
    std::optional<double> p;
    if (w == "yes" || w == "y") {
        label = YesNo::yes;
        p = lookup_ci(option_probs, {"yes", "y"});
    } else if (w == "no" || w == "n") {
        label = YesNo::no;
        p = lookup_ci(option_probs, {"no", "n"});
    } else {
        return {YesNo::other, 0.0};
    }
    return {label, std::clamp(p.value_or(1.0), 0.0, 1.0)};
}

PairwiseChoice parse_pair_choice(std::string_view text) {
    for (const auto& w : lower_words(text, false)) {
        if (w == "a") return PairwiseChoice::first;
        if (w == "b") return PairwiseChoice::second;
    }
    return PairwiseChoice::neither;
}

PermutationParse parse_permutation(std::string_view text, std::size_t n) {
    if (n == 0) throw UsageError("parse_permutation: n must be at least 1");
    PermutationParse out;
    std::vector<bool> used(n + 1, false);
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
            continue;
        }
        auto end = pos;
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
        auto digits = text.substr(pos, end - pos);
        pos = end;
        auto first_nonzero = digits.find_first_not_of('0');
        std::size_t value = 0;
        if (first_nonzero == std::string_view::npos) {
            value = 0;
        } else if (digits.size() - first_nonzero > 18) {
            value = n + 1;
        } else {
            for (char c : digits.substr(first_nonzero)) value = value * 10 + static_cast<std::size_t>(c - '0');
        }
        if (value < 1 || value > n || used[value]) {
            out.repaired = true;
            continue;
        }
        used[value] = true;
        out.order.push_back(value);
    }
    for (std::size_t id = 1; id <= n; ++id) {
        if (!used[id]) {
            out.order.push_back(id);
            out.repaired = true;
        }
    }
    return out;
}

}  // namespace instill
