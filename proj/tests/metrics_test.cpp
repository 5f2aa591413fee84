#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tale/metrics.hpp"

using namespace tale::metrics;

namespace {

VerdictVector make_vector(const std::string& rater, const std::vector<bool>& labels) {
    VerdictVector v;
    v.rater_id = rater;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        v.set("item-" + std::to_string(i), labels[i]);
    }
    return v;
}

std::string random_answer(std::mt19937& gen) {
    static const std::vector<std::string> words = {"the",  "burj",   "khalifa", "dubai", "1969",
                                                   "an",   "apollo", "nixon",   "a",     "1,800",
                                                   "ft.",  "Saimaa", "gesture", "U.S.",  ""};
    std::uniform_int_distribution<int> count(0, 5);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::string out;
    const int n = count(gen);
    for (int i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += words[pick(gen)];
    }
    return out;
}

}  // namespace

TEST_CASE("normalization applies the four steps") {
    CHECK(normalize("The Burj Khalifa.").tokens == std::vector<std::string>{"burj", "khalifa"});
    CHECK(normalize("1,800 to 7,000 ft").tokens ==
          std::vector<std::string>{"1800", "to", "7000", "ft"});
    CHECK(normalize("").tokens.empty());
    CHECK(normalize("A the an").tokens.empty());
}

TEST_CASE("normalization is idempotent") {
    std::mt19937 gen(7);
    for (int i = 0; i < 200; ++i) {
        const auto once = normalize(random_answer(gen));
        CHECK(normalize(once.joined()) == once);
    }
}

TEST_CASE("exact match compares normalized token sequences") {
    CHECK(exact_match("Richard Nixon", {"Richard Nixon"}) == 1);
    CHECK(exact_match("Erica Campbell", {"Melonie Daniels"}) == 0);
    CHECK(exact_match("the Saimaa Gesture", {"Saimaa Gesture"}) == 1);
    CHECK_THROWS_AS(exact_match("x", {}), std::invalid_argument);
}

TEST_CASE("token f1 uses multiset overlap with the documented conventions") {
    CHECK(token_f1("same words", {"same words"}) == doctest::Approx(1.0));
    CHECK(token_f1("1957", {"1946"}) == doctest::Approx(0.0));
    CHECK(token_f1("burj khalifa dubai", {"burj khalifa"}) == doctest::Approx(0.8));
    CHECK(token_f1("", {""}) == doctest::Approx(1.0));
    CHECK(token_f1("something", {""}) == doctest::Approx(0.0));
    // Highest-scoring reference wins.
    CHECK(token_f1("burj khalifa", {"nothing shared", "burj khalifa"}) == doctest::Approx(1.0));
}

TEST_CASE("exact match implies full token overlap") {
    std::mt19937 gen(11);
    for (int i = 0; i < 300; ++i) {
        const std::string answer = random_answer(gen);
        const std::vector<std::string> refs = {random_answer(gen), random_answer(gen)};
        if (exact_match(answer, refs) == 1) {
            CHECK(token_f1(answer, refs) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("f1 binarization is strict at the threshold") {
    CHECK(binarize_f1(0.634) == 1);
    CHECK(binarize_f1(0.5) == 0);  // tie goes to 0
    CHECK(binarize_f1(0.0) == 0);
    CHECK(binarize_f1(0.51) == 1);
    CHECK_THROWS_AS(binarize_f1(0.4, 1.5), std::invalid_argument);
}

TEST_CASE("accuracy counts aligned agreement") {
    CHECK(accuracy(make_vector("a", {true, false}), make_vector("b", {true, false})) ==
          doctest::Approx(1.0));
    CHECK(accuracy(make_vector("a", {true, false}), make_vector("b", {false, true})) ==
          doctest::Approx(0.0));
    CHECK(accuracy(make_vector("a", {true, true, false, false}),
                   make_vector("b", {true, false, false, true})) == doctest::Approx(0.5));
    CHECK_THROWS_AS(accuracy(VerdictVector{}, VerdictVector{}), std::invalid_argument);
}

TEST_CASE("accuracy aligns by id, not by position") {
    VerdictVector a;
    a.set("x", true);
    a.set("y", false);
    VerdictVector b;
    b.set("y", false);
    b.set("x", true);
    b.set("z", true);  // ignored: not shared
    CHECK(accuracy(a, b) == doctest::Approx(1.0));
}

TEST_CASE("majority vote follows the strict-majority rule") {
    auto r1 = make_vector("r1", {true, true, false});
    auto r2 = make_vector("r2", {true, false, false});
    auto r3 = make_vector("r3", {false, true, false});
    auto majority = majority_vote({r1, r2, r3});
    CHECK(majority.labels.at("item-0"));   // votes (1,1,0)
    CHECK(majority.labels.at("item-1"));   // votes (1,0,1)
    CHECK_FALSE(majority.labels.at("item-2"));  // unanimous 0

    // n=2 split: sum 1 is not > 1.
    auto even = majority_vote({make_vector("a", {true}), make_vector("b", {false})});
    CHECK_FALSE(even.labels.at("item-0"));

    CHECK_THROWS_AS(majority_vote({r1}), std::invalid_argument);
    VerdictVector misaligned;
    misaligned.rater_id = "m";
    misaligned.set("other", true);
    misaligned.set("ids", false);
    misaligned.set("here", true);
    CHECK_THROWS_AS(majority_vote({r1, misaligned}), std::invalid_argument);
}

TEST_CASE("majority vote is invariant under rater order") {
    std::mt19937 gen(13);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<VerdictVector> raters;
        for (int r = 0; r < 5; ++r) {
            std::vector<bool> labels;
            for (int i = 0; i < 7; ++i) labels.push_back(coin(gen) == 1);
            raters.push_back(make_vector("r" + std::to_string(r), labels));
        }
        auto forward = majority_vote(raters);
        std::shuffle(raters.begin(), raters.end(), gen);
        auto shuffled = majority_vote(raters);
        CHECK(forward.labels == shuffled.labels);
    }
}

TEST_CASE("cohen kappa matches hand-computed values and conventions") {
    CHECK(cohen_kappa(make_vector("a", {true, true, false, false}),
                      make_vector("b", {true, false, false, true})) == doctest::Approx(0.0));
    CHECK(cohen_kappa(make_vector("a", {true, false, true}),
                      make_vector("b", {true, false, true})) == doctest::Approx(1.0));
    // Degenerate conventions.
    CHECK(cohen_kappa(make_vector("a", {true, true}), make_vector("b", {true, true})) == 1.0);
    CHECK(cohen_kappa(make_vector("a", {true, true}), make_vector("b", {false, false})) == -1.0);
    CHECK_THROWS_AS(cohen_kappa(VerdictVector{}, VerdictVector{}), std::invalid_argument);
}

TEST_CASE("cohen kappa is symmetric") {
    std::mt19937 gen(17);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<bool> a, b;
        for (int i = 0; i < 9; ++i) {
            a.push_back(coin(gen) == 1);
            b.push_back(coin(gen) == 1);
        }
        auto va = make_vector("a", a);
        auto vb = make_vector("b", b);
        CHECK(cohen_kappa(va, vb) == doctest::Approx(cohen_kappa(vb, va)));
    }
}

TEST_CASE("fleiss kappa matches the worked examples") {
    CHECK(fleiss_kappa({{3, 0}, {0, 3}}) == doctest::Approx(1.0));
    CHECK(fleiss_kappa({{2, 1}, {1, 2}}) == doctest::Approx(-1.0 / 3.0));
    CHECK(fleiss_kappa({{5, 0}, {5, 0}, {5, 0}}) == 1.0);  // single-category degenerate
    CHECK_THROWS_AS(fleiss_kappa({{1, 0}, {0, 1}}), std::invalid_argument);   // n < 2
    CHECK_THROWS_AS(fleiss_kappa({{2, 1}, {1, 1}}), std::invalid_argument);   // ragged
    CHECK_THROWS_AS(fleiss_kappa({}), std::invalid_argument);
}

TEST_CASE("macro f1 averages per-class scores") {
    CHECK(macro_f1(make_vector("p", {true, false, true}), make_vector("g", {true, false, true})) ==
          doctest::Approx(1.0));
    CHECK(macro_f1(make_vector("p", {true, true, true, true}),
                   make_vector("g", {true, true, false, false})) == doctest::Approx(1.0 / 3.0));
    // Absent-class convention: all-true on both sides.
    CHECK(macro_f1(make_vector("p", {true, true}), make_vector("g", {true, true})) ==
          doctest::Approx(1.0));
}

TEST_CASE("percent agreement counts pairwise matches") {
    CHECK(percent_agreement({make_vector("a", {true, false}), make_vector("b", {true, false})}) ==
          doctest::Approx(100.0));
    CHECK(percent_agreement({make_vector("a", {true}), make_vector("b", {true}),
                             make_vector("c", {false})}) == doctest::Approx(100.0 / 3.0));
    CHECK_THROWS_AS(percent_agreement({make_vector("a", {true})}), std::invalid_argument);
}

TEST_CASE("statistics agree with brute-force oracles on random instances") {
    std::mt19937 gen(20240902);
    std::uniform_int_distribution<int> item_count(1, 20);
    std::uniform_int_distribution<int> rater_count(2, 5);
    std::uniform_int_distribution<int> coin(0, 1);

    for (int trial = 0; trial < 300; ++trial) {
        const int n = item_count(gen);
        std::vector<bool> a, b;
        for (int i = 0; i < n; ++i) {
            a.push_back(coin(gen) == 1);
            b.push_back(coin(gen) == 1);
        }
        CHECK(cohen_kappa(make_vector("a", a), make_vector("b", b)) ==
              doctest::Approx(tale::test::oracle::cohen_kappa(a, b)).epsilon(1e-12));
        CHECK(macro_f1(make_vector("a", a), make_vector("b", b)) ==
              doctest::Approx(tale::test::oracle::macro_f1(a, b)).epsilon(1e-12));

        const int raters = rater_count(gen);
        std::vector<std::vector<int>> matrix;
        std::vector<std::vector<bool>> by_item;
        for (int i = 0; i < n; ++i) {
            std::vector<bool> labels;
            int positives = 0;
            for (int r = 0; r < raters; ++r) {
                labels.push_back(coin(gen) == 1);
                if (labels.back()) ++positives;
            }
            matrix.push_back({raters - positives, positives});
            by_item.push_back(labels);
        }
        CHECK(fleiss_kappa(matrix) ==
              doctest::Approx(tale::test::oracle::fleiss_kappa(matrix)).epsilon(1e-12));

        std::vector<VerdictVector> rater_vectors;
        for (int r = 0; r < raters; ++r) {
            std::vector<bool> labels;
            for (int i = 0; i < n; ++i) labels.push_back(by_item[i][r]);
            rater_vectors.push_back(make_vector("r" + std::to_string(r), labels));
        }
        CHECK(percent_agreement(rater_vectors) ==
              doctest::Approx(tale::test::oracle::percent_agreement(by_item)).epsilon(1e-12));
    }
}

TEST_CASE("reference metrics agree with the oracle implementations") {
    std::mt19937 gen(20240903);
    for (int trial = 0; trial < 500; ++trial) {
        const std::string answer = random_answer(gen);
        std::vector<std::string> refs{random_answer(gen)};
        if (trial % 2 == 0) refs.push_back(random_answer(gen));
        CHECK(exact_match(answer, refs) == tale::test::oracle::exact_match(answer, refs));
        CHECK(token_f1(answer, refs) ==
              doctest::Approx(tale::test::oracle::token_f1(answer, refs)).epsilon(1e-12));
    }
}

TEST_CASE("statistics are invariant under item reordering") {
    VerdictVector forward = make_vector("a", {true, false, true, true});
    VerdictVector reversed;
    reversed.rater_id = "a2";
    reversed.set("item-3", true);
    reversed.set("item-2", true);
    reversed.set("item-1", false);
    reversed.set("item-0", true);
    VerdictVector gold = make_vector("g", {true, true, false, true});
    CHECK(cohen_kappa(forward, gold) == doctest::Approx(cohen_kappa(reversed, gold)));
    CHECK(macro_f1(forward, gold) == doctest::Approx(macro_f1(reversed, gold)));
    CHECK(accuracy(forward, gold) == doctest::Approx(accuracy(reversed, gold)));
}
