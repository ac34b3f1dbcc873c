#include <gtest/gtest.h>

#include <random>
#include <set>

#include "instill/error.hpp"
#include "instill/prompts.hpp"

using namespace instill;

namespace {

Document doc(std::string id, std::string text) { return {std::move(id), std::nullopt, std::move(text)}; }

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::string alphabet = "abc xyz{}[]:\n\"AB12";
    std::uniform_int_distribution<std::size_t> len(1, max_len), ch(0, alphabet.size() - 1);
    std::string s;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) s += alphabet[ch(rng)];
    return s;
}

}  // namespace

TEST(Render, PointwisePassageMatchesAppendixText) {
    const auto& t = TemplateSet::builtin().get(PromptKind::pointwise_rg, Task::passage);
    std::vector<Document> items{doc("d", "p")};
    EXPECT_EQ(render(t, Query{"x", "q"}, items),
              "Question: Given a query \"q\", Is the following passage relevant to the query?\n\n"
              "Passage : p\n\n"
              "If it is relevant answer Yes, else answer No.\n\n"
              "Answer:");
}

TEST(Render, PairwiseSwapDiffersOnlyInSlots) {
    const auto& t = TemplateSet::builtin().get(PromptKind::pairwise, Task::passage);
    Query q{"x", "query"};
    std::vector<Document> ab{doc("a", "first text"), doc("b", "second text")};
    std::vector<Document> ba{ab[1], ab[0]};
    auto p1 = render(t, q, ab), p2 = render(t, q, ba);
    EXPECT_NE(p1, p2);
    EXPECT_NE(p1.find("passage A: first text\n"), std::string::npos);
    EXPECT_NE(p2.find("passage A: second text\n"), std::string::npos);
    auto swapped = p1;
    auto a = swapped.find("first text");
    swapped.replace(a, 10, "second text");
    auto b = swapped.find("second text", a + 11);
    swapped.replace(b, 11, "first text");
    EXPECT_EQ(swapped, p2);
}

TEST(Render, ListwiseMovieEnumeratesItems) {
    const auto& t = TemplateSet::builtin().get(PromptKind::listwise, Task::movie);
    std::vector<Document> movies;
    for (int i = 1; i <= 4; ++i) movies.push_back(doc("m" + std::to_string(i), "Movie " + std::to_string(i)));
    auto prompt = render(t, Query{"x", "User: hi"}, movies);
    for (int i = 1; i <= 4; ++i) EXPECT_NE(prompt.find("[" + std::to_string(i) + "]: Movie " + std::to_string(i)), std::string::npos);
    EXPECT_EQ(prompt.find("[5]:"), std::string::npos);
    EXPECT_NE(prompt.find("Answer the question with the number of the movie."), std::string::npos);
}

TEST(Render, WrongItemCountIsUsageError) {
    const auto& t = TemplateSet::builtin().get(PromptKind::pairwise, Task::passage);
    std::vector<Document> one{doc("a", "x")};
    EXPECT_THROW(render(t, Query{"x", "q"}, one), UsageError);
    const auto& l = TemplateSet::builtin().get(PromptKind::listwise, Task::passage);
    EXPECT_THROW(render(l, Query{"x", "q"}, one), UsageError);
}

TEST(Template, MissingPlaceholderRejected) {
    EXPECT_THROW(InstructionTemplate(PromptKind::pairwise, Task::passage, "{{query}} {{passage_A}}"), ConfigError);
    EXPECT_THROW(InstructionTemplate(PromptKind::pointwise_rg, Task::passage, "{{passage}}"), ConfigError);
}

// match() inverts render() for every template, and render is injective in
// its items.
TEST(TemplateProperty, MatchInvertsRenderAndRenderIsInjective) {
    std::mt19937_64 rng(3);
    const auto& set = TemplateSet::builtin();
    for (Task task : {Task::passage, Task::movie}) {
        for (PromptKind kind : {PromptKind::pointwise_rg, PromptKind::pointwise_qg, PromptKind::pairwise,
                                PromptKind::listwise}) {
            const auto& t = set.get(kind, task);
            for (int trial = 0; trial < 100; ++trial) {
                std::size_t n = t.arity() == 0 ? std::uniform_int_distribution<std::size_t>(2, 6)(rng) : t.arity();
                std::vector<std::string> items;
                for (std::size_t i = 0; i < n; ++i) items.push_back(random_text(rng, 12));
                const auto query = random_text(rng, 10);
                const auto prompt = t.render(query, items);
                auto m = t.match(prompt);
                ASSERT_TRUE(m) << prompt;
                // Re-rendering the match must give back the same prompt even
                // when the split is ambiguous.
                EXPECT_EQ(t.render(m->query, m->items), prompt);
                auto other = items;
                other[trial % n] += "!";
                EXPECT_NE(t.render(query, other), prompt);
            }
        }
    }
}

TEST(TemplateSet, IdentifiesEachKind) {
    const auto& set = TemplateSet::builtin();
    std::vector<std::string> items{"one", "two", "three"};
    auto id = set.identify(Task::passage, set.get(PromptKind::listwise, Task::passage).render("q", items));
    ASSERT_TRUE(id);
    EXPECT_EQ(id->kind, PromptKind::listwise);
    EXPECT_EQ(id->match.items, items);
    EXPECT_FALSE(set.identify(Task::passage, "unrelated text"));
}

TEST(ParseYesNo, Examples) {
    auto v = parse_yes_no("Yes", {{"Yes", 0.9}, {"No", 0.1}});
    EXPECT_EQ(v.label, YesNo::yes);
    EXPECT_DOUBLE_EQ(v.label_probability, 0.9);
    v = parse_yes_no(" no.", {{"Yes", 0.2}, {"No", 0.8}});
    EXPECT_EQ(v.label, YesNo::no);
    EXPECT_DOUBLE_EQ(v.label_probability, 0.8);
    v = parse_yes_no("maybe", {{"Yes", 0.5}, {"No", 0.5}});
    EXPECT_EQ(v.label, YesNo::other);
    EXPECT_DOUBLE_EQ(v.label_probability, 0.0);
}

TEST(ParseYesNo, MissingProbabilitiesDegradeToOne) {
    auto v = parse_yes_no("Y", {});
    EXPECT_EQ(v.label, YesNo::yes);
    EXPECT_DOUBLE_EQ(v.label_probability, 1.0);
    EXPECT_EQ(parse_yes_no("N", {{"y", 0.3}, {"n", 0.7}}).label_probability, 0.7);
}

TEST(ParsePairChoice, Examples) {
    EXPECT_EQ(parse_pair_choice("Passage A"), PairwiseChoice::first);
    EXPECT_EQ(parse_pair_choice("The answer is B"), PairwiseChoice::second);
    EXPECT_EQ(parse_pair_choice("both are relevant"), PairwiseChoice::neither);
    EXPECT_EQ(parse_pair_choice("B."), PairwiseChoice::second);
    EXPECT_EQ(parse_pair_choice(""), PairwiseChoice::neither);
}

TEST(ParsePermutation, Examples) {
    auto p = parse_permutation("[2] > [3] > [1]", 3);
    EXPECT_EQ(p.order, (std::vector<std::size_t>{2, 3, 1}));
    EXPECT_FALSE(p.repaired);
    p = parse_permutation("[2] > [2] > [1]", 3);
    EXPECT_EQ(p.order, (std::vector<std::size_t>{2, 1, 3}));
    EXPECT_TRUE(p.repaired);
    p = parse_permutation("garbage", 3);
    EXPECT_EQ(p.order, (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_TRUE(p.repaired);
    p = parse_permutation("[9] > 99999999999999999999999 > [1]", 2);
    EXPECT_EQ(p.order, (std::vector<std::size_t>{1, 2}));
    EXPECT_TRUE(p.repaired);
}

TEST(ParsePermutationProperty, FuzzedBytesAlwaysYieldPermutation) {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 64);
    std::uniform_int_distribution<std::size_t> size(1, 25);
    for (int trial = 0; trial < 10000; ++trial) {
        std::string s;
        for (int i = 0, n = len(rng); i < n; ++i) s += static_cast<char>(byte(rng));
        const auto n = size(rng);
        auto p = parse_permutation(s, n);
        ASSERT_EQ(p.order.size(), n);
        std::vector<std::size_t> sorted = p.order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(sorted[i], i + 1);
    }
}
