#include "threatgraph/features.hpp"
#include "threatgraph/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace threatgraph;
using namespace threatgraph::features;

namespace {

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("tokenize keeps lowercased alphanumeric runs of length >= 2") {
    CHECK(tokenize("Data Poisoning!") == std::vector<std::string>{"data", "poisoning"});
    CHECK(tokenize("a b c") == std::vector<std::string>{});
    CHECK(tokenize("CVE-2024-3099") == std::vector<std::string>{"cve", "2024", "3099"});
    CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("fit_tfidf counts document frequencies") {
    const auto model = fit_tfidf({"data poisoning", "data theft"});
    CHECK(model.doc_count == 2);
    CHECK(model.doc_freq[model.vocabulary.at("data")] == 2);
    CHECK(model.doc_freq[model.vocabulary.at("poisoning")] == 1);
    CHECK(model.doc_freq[model.vocabulary.at("theft")] == 1);
    CHECK(model.idf(model.vocabulary.at("data")) ==
          doctest::Approx(std::log(2.0 / 3.0) + 1.0).epsilon(1e-12));
    CHECK(model.idf(model.vocabulary.at("poisoning")) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_tfidf({}), Error);
}

TEST_CASE("single-document corpus gives a uniform idf") {
    const auto model = fit_tfidf({"model extraction attack"});
    const double expected = std::log(1.0 / 2.0) + 1.0;
    for (const auto& [term, index] : model.vocabulary) {
        CHECK(model.idf(index) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("identical documents share one idf value") {
    const auto model = fit_tfidf({"poisoned weights", "poisoned weights", "poisoned weights"});
    const double idf0 = model.idf(0);
    for (std::size_t i = 1; i < model.doc_freq.size(); ++i) {
        CHECK(model.idf(i) == doctest::Approx(idf0).epsilon(1e-12));
    }
}

TEST_CASE("vectorize normalizes after truncation") {
    const auto model = fit_tfidf({"data poisoning", "data theft"});

    SUBCASE("unknown terms give the zero vector") {
        const auto v = vectorize(model, "quantum blockchain", 8);
        CHECK(l2(v) == 0.0);
        CHECK(v.size() == 8);
    }
    SUBCASE("training document has unit norm") {
        const auto v = vectorize(model, "data poisoning", 8);
        CHECK(l2(v) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("weights match the hand-computed tf-idf ratio") {
        // vocabulary order: data(0), poisoning(1), theft(2)
        const auto v = vectorize(model, "data poisoning", 8);
        const double idf_data = std::log(2.0 / 3.0) + 1.0;
        CHECK(v[0] / v[1] == doctest::Approx(idf_data / 1.0).epsilon(1e-12));
        CHECK(v[2] == 0.0);
    }
    SUBCASE("truncation drops high-index terms, norm stays 1") {
        const auto v = vectorize(model, "data poisoning theft", 2);
        CHECK(v.size() == 2);
        CHECK(l2(v) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("dims must be positive") {
        CHECK_THROWS_AS(vectorize(model, "data", 0), Error);
    }
}

TEST_CASE("weighted_jaccard") {
    CHECK(weighted_jaccard({1, 1, 0}, {0, 1, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(weighted_jaccard({0.4, 0.2}, {0.4, 0.2}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(weighted_jaccard({1, 0}, {0, 1}) == 0.0);
    CHECK(weighted_jaccard({0, 0}, {0, 0}) == 0.0);
    CHECK_THROWS_AS(weighted_jaccard({1}, {1, 2}), Error);
    CHECK_THROWS_AS(weighted_jaccard({-1, 0}, {1, 0}), Error);
}

TEST_CASE("weighted_jaccard properties") {
    const std::vector<std::vector<double>> pool = {
        {0.2, 0.0, 0.8}, {0.5, 0.5, 0.0}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {0.3, 0.9, 0.1}};
    for (const auto& u : pool) {
        for (const auto& v : pool) {
            const double j = weighted_jaccard(u, v);
            CHECK(j >= 0.0);
            CHECK(j <= 1.0);
            CHECK(j == doctest::Approx(weighted_jaccard(v, u)).epsilon(1e-12));
            if (u == v && l2(u) > 0.0) CHECK(j == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("z_normalize") {
    const auto z = z_normalize({1, 2, 3});
    CHECK(z[0] == doctest::Approx(-1.224744871391589).epsilon(1e-9));
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK(z[2] == doctest::Approx(1.224744871391589).epsilon(1e-9));
    CHECK(z_normalize({5, 5, 5}) == std::vector<double>{0, 0, 0});
    CHECK(z_normalize({7}) == std::vector<double>{0});
}

TEST_CASE("z_normalize has zero mean and unit population std") {
    const std::vector<double> xs = {3.5, -2.0, 9.1, 0.4, 7.7, 7.7};
    const auto z = z_normalize(xs);
    double mean = 0.0, var = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(z.size());
    for (double v : z) var += (v - mean) * (v - mean);
    var /= static_cast<double>(z.size());
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("min_max_scale") {
    const auto s = min_max_scale({0, 1}, 1e-4);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == doctest::Approx(1.0 / 1.0001).epsilon(1e-12));
    CHECK(min_max_scale({4, 4, 4}, 1e-4) == std::vector<double>{0, 0, 0});
    CHECK(min_max_scale({9}, 1e-4) == std::vector<double>{0});
    CHECK_THROWS_AS(min_max_scale({1, 2}, 0.0), Error);

    for (double v : min_max_scale({-3, 0, 2, 2, 11}, 1e-4)) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("feature matrix CSV header") {
    FeatureMatrix m;
    m.ids = {"a", "b"};
    m.dims = 2;
    m.values = {1.0, 0.25, 0.0, 3.5};
    const std::string csv = m.to_csv();
    CHECK(csv.rfind("id,dim_0,dim_1\n", 0) == 0);
    CHECK(csv.find("a,1,0.25\n") != std::string::npos);
    CHECK(csv.find("b,0,3.5\n") != std::string::npos);
}
