#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instill/corpus.hpp"

namespace instill {

enum class PromptKind { pointwise_rg, pointwise_qg, pairwise, listwise };
enum class Task { passage, movie };

inline constexpr std::array<PromptKind, 4> kAllPromptKinds = {
    PromptKind::pointwise_rg, PromptKind::pointwise_qg, PromptKind::pairwise,
    PromptKind::listwise};

std::string_view to_string(PromptKind kind);
std::string_view to_string(Task task);
Task parse_task(std::string_view name);

/// A parsed instruction template. Placeholders are `{{name}}`; listwise
/// templates carry an item block of the form
///
///     [1]: {{passage_1}}<sep>[2]: {{passage_2}}<sep>...
///
/// which is expanded to one `[k]: ` line per item when rendering.
class InstructionTemplate {
public:
    /// Validates that `text` has exactly the placeholders `kind` requires.
    InstructionTemplate(PromptKind kind, Task task, std::string text);

    PromptKind kind() const { return kind_; }
    Task task() const { return task_; }
    const std::string& text() const { return text_; }

    /// Number of items the kind accepts: 1, 2, or 0 meaning "two or more".
    std::size_t arity() const;

    std::string render(std::string_view query, std::span<const std::string> items) const;

    struct Match {
        std::string query;
        std::vector<std::string> items;
    };
    /// Inverse of render(). Returns nullopt if `prompt` was not produced by
    /// this template.
    std::optional<Match> match(std::string_view prompt) const;

private:
    struct Part {
        enum class Type { literal, slot, items } type;
        std::string text;  // literal bytes, slot name, or item separator
    };

    PromptKind kind_;
    Task task_;
    std::string text_;
    std::vector<Part> parts_;
};

/// All templates for both tasks.
class TemplateSet {
public:
    /// Templates compiled into the library from assets/templates.
    static const TemplateSet& builtin();
    /// Reads `<task>_<kind>.txt` files from `dir`. Missing files fall back to
    /// the built-in copy.
    static TemplateSet load(const std::filesystem::path& dir);

    const InstructionTemplate& get(PromptKind kind, Task task) const;

    struct Identified {
        PromptKind kind;
        InstructionTemplate::Match match;
    };
    std::optional<Identified> identify(Task task, std::string_view prompt) const;

private:
    std::map<std::pair<Task, PromptKind>, InstructionTemplate> templates_;
};

/// Text used for a document inside a prompt.
std::string item_text(const Document& doc);

std::string render(const InstructionTemplate& tmpl, const Query& query,
                   std::span<const Document> items);

// ---- output parsing ------------------------------------------------------

enum class YesNo { yes, no, other };

struct PointwiseVerdict {
    YesNo label = YesNo::other;
    double label_probability = 0.0;
};

/// Label from the first alphabetic word of `text` ("yes"/"y", "no"/"n",
/// case-insensitive). The probability comes from `option_probs` (keys matched
/// case-insensitively against Yes/Y or No/N); 1.0 when it is not available.
PointwiseVerdict parse_yes_no(std::string_view text,
                              const std::map<std::string, double>& option_probs);

enum class PairwiseChoice { first, second, neither };

/// First standalone "a" or "b" word wins ("Passage A", "Movie B", "B").
PairwiseChoice parse_pair_choice(std::string_view text);

struct PermutationParse {
    std::vector<std::size_t> order;  // 1-based identifiers
    bool repaired = false;
};

/// Extracts integers in order of appearance, drops out-of-range values and
/// repeats, then appends missing identifiers in ascending order. The result
/// is always a permutation of 1..n.
PermutationParse parse_permutation(std::string_view text, std::size_t n);

}  // namespace instill
