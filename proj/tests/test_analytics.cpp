#include "threatgraph/analytics.hpp"
#include "threatgraph/error.hpp"
#include "threatgraph/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace threatgraph;
using namespace threatgraph::analytics;

namespace {

DeploymentProxies proxies(const std::string& name, double a, double b, double c, double d) {
    DeploymentProxies p;
    p.model_family = name;
    p.pkg_installs = a;
    p.ckpt_pulls = b;
    p.docker_pulls = c;
    p.citation_momentum = d;
    return p;
}

} // namespace

TEST_CASE("deployment_weights") {
    SUBCASE("single model degenerates to zero") {
        const auto w = deployment_weights({proxies("only", 5, 5, 5, 5)});
        CHECK(w.at("only") == 0.0);
    }
    SUBCASE("two models: hand-computed z and min-max") {
        const auto w = deployment_weights(
            {proxies("low", 1, 1, 1, 1), proxies("high", 3, 3, 3, 3)});
        CHECK(w.at("low") == 0.0);
        // mean z-scores are -1 and 1; (1 - (-1)) / (2 + 1e-4)
        CHECK(w.at("high") == doctest::Approx(2.0 / 2.0001).epsilon(1e-12));
    }
    SUBCASE("row order does not matter") {
        const std::vector<DeploymentProxies> rows = {
            proxies("a", 10, 4, 7, 1), proxies("b", 2, 9, 3, 8), proxies("c", 5, 5, 5, 5)};
        auto shuffled = rows;
        std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
        CHECK(deployment_weights(rows) == deployment_weights(shuffled));
    }
    SUBCASE("outputs live in [0,1) and ignore affine proxy rescaling") {
        std::vector<DeploymentProxies> rows = {
            proxies("a", 10, 4, 7, 1), proxies("b", 2, 9, 3, 8), proxies("c", 5, 5, 5, 5)};
        const auto base = deployment_weights(rows);
        for (const auto& [name, w] : base) {
            CHECK(w >= 0.0);
            CHECK(w < 1.0);
        }
        for (auto& r : rows) r.pkg_installs = r.pkg_installs * 1000.0 + 77.0;
        const auto scaled = deployment_weights(rows);
        for (const auto& [name, w] : base) {
            CHECK(scaled.at(name) == doctest::Approx(w).epsilon(1e-9));
        }
    }
}

TEST_CASE("normalized_frequency reproduces the published table") {
    // (f, w) -> rounded f_hat
    const std::vector<std::tuple<long, double, long>> rows = {
        {218, 0.92, 237}, {144, 0.77, 187}, {89, 0.61, 146}, {51, 0.34, 150},
        {37, 0.19, 195},  {31, 0.55, 56},   {29, 0.48, 60},  {27, 0.41, 66},
        {22, 0.63, 35},   {20, 0.57, 35},
    };
    for (const auto& [f, w, expected] : rows) {
        CHECK(rounded_frequency(f, w) == expected);
    }
    CHECK(normalized_frequency(0, 0.5) == 0.0);
    CHECK_THROWS_AS(normalized_frequency(-1, 0.5), Error);
    CHECK_THROWS_AS(normalized_frequency(1, 1.5), Error);
}

TEST_CASE("cvs_rank") {
    const std::array<double, 3> equal = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    SUBCASE("equal weights on the flagship profile") {
        CvsRow row;
        row.model = "GPT-4o";
        row.prompt_asr = 0.95;
        row.backdoor_asr = 0.985;
        row.training_risk = 0.9;
        const auto ranked = cvs_rank({row}, equal);
        CHECK(ranked[0].cvs == doctest::Approx(0.945).epsilon(1e-12));
    }
    SUBCASE("zero inputs give zero score") {
        CvsRow row;
        row.model = "null";
        const auto ranked = cvs_rank({row}, equal);
        CHECK(ranked[0].cvs == 0.0);
    }
    SUBCASE("degenerate weights reduce to the prompt ranking") {
        std::vector<CvsRow> rows(3);
        rows[0] = {"alpha", 0.2, 0.9, 0.9, 0.0};
        rows[1] = {"beta", 0.8, 0.1, 0.1, 0.0};
        rows[2] = {"gamma", 0.5, 0.5, 0.5, 0.0};
        const auto ranked = cvs_rank(rows, {1.0, 0.0, 0.0});
        CHECK(ranked[0].model == "beta");
        CHECK(ranked[1].model == "gamma");
        CHECK(ranked[2].model == "alpha");
    }
    SUBCASE("weights must sum to one") {
        CHECK_THROWS_AS(cvs_rank({}, {0.5, 0.5, 0.5}), Error);
        CHECK_THROWS_AS(cvs_rank({}, {-0.5, 1.0, 0.5}), Error);
    }
    SUBCASE("ties break by model name") {
        std::vector<CvsRow> rows(2);
        rows[0] = {"zeta", 0.5, 0.5, 0.5, 0.0};
        rows[1] = {"alpha", 0.5, 0.5, 0.5, 0.0};
        const auto ranked = cvs_rank(rows, equal);
        CHECK(ranked[0].model == "alpha");
    }
}

TEST_CASE("loo_sensitivity") {
    SUBCASE("identical proxies per model shift nothing") {
        const std::vector<DeploymentProxies> rows = {
            proxies("a", 9, 9, 9, 9), proxies("b", 5, 5, 5, 5), proxies("c", 1, 1, 1, 1)};
        const std::map<std::string, long> f = {{"a", 10}, {"b", 30}, {"c", 20}};
        for (const auto& shift : loo_sensitivity(rows, f, 2)) {
            CHECK(shift.max_shift == 0);
            CHECK(shift.topk_shift == 0);
        }
    }
    SUBCASE("a single divergent proxy reorders two models") {
        // pkg_installs alone separates a and b; the other proxies tie.
        const std::vector<DeploymentProxies> rows = {
            proxies("a", 100, 5, 5, 5), proxies("b", 1, 5, 5, 5), proxies("c", 50, 9, 9, 9)};
        const std::map<std::string, long> f = {{"a", 10}, {"b", 10}, {"c", 10}};
        const auto shifts = loo_sensitivity(rows, f, 3);
        const auto pkg = std::find_if(shifts.begin(), shifts.end(), [](const LooShift& s) {
            return s.omitted_proxy == "pkg_installs";
        });
        REQUIRE(pkg != shifts.end());
        CHECK(pkg->max_shift >= 1);
    }
    SUBCASE("k equal to the model count makes both shifts agree") {
        const std::vector<DeploymentProxies> rows = {
            proxies("a", 10, 1, 9, 2), proxies("b", 2, 8, 1, 9), proxies("c", 6, 6, 6, 6)};
        const std::map<std::string, long> f = {{"a", 7}, {"b", 9}, {"c", 11}};
        for (const auto& shift : loo_sensitivity(rows, f, 3)) {
            CHECK(shift.topk_shift == shift.max_shift);
        }
    }
    SUBCASE("needs at least k models") {
        CHECK_THROWS_AS(loo_sensitivity({proxies("a", 1, 1, 1, 1)}, {{"a", 1}}, 2), Error);
    }
}

TEST_CASE("pareto") {
    SUBCASE("dominant head") {
        const auto r = pareto({{"a", 80}, {"b", 10}, {"c", 10}}, 0.8);
        CHECK(r.prefix_size == 1);
        CHECK(r.prefix_share == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("uniform counts need ceil(t*n) entries") {
        const auto r = pareto({{"a", 5}, {"b", 5}, {"c", 5}, {"d", 5}, {"e", 5}}, 0.8);
        CHECK(r.prefix_size == 4);
    }
    SUBCASE("single entity") {
        const auto r = pareto({{"only", 42}}, 0.8);
        CHECK(r.prefix_size == 1);
        CHECK(r.prefix_share == doctest::Approx(1.0));
    }
    SUBCASE("curve is monotone and ends at one") {
        const auto r = pareto({{"a", 13}, {"b", 7}, {"c", 29}, {"d", 1}, {"e", 3}}, 0.5);
        double prev = 0.0;
        for (const auto& [name, count, share] : r.curve) {
            CHECK(share >= prev);
            prev = share;
        }
        CHECK(prev == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(pareto({}, 0.8), Error);
        CHECK_THROWS_AS(pareto({{"a", 1}}, 0.0), Error);
        CHECK_THROWS_AS(pareto({{"a", 1}}, 1.5), Error);
    }
}

TEST_CASE("ols_fit") {
    SUBCASE("exact line recovers slope, intercept and r=1") {
        std::vector<std::pair<double, double>> points;
        for (double x : {1.0, 2.0, 5.0, 9.0, 14.0}) points.emplace_back(x, 0.3 * x + 3.01);
        const auto fit = ols_fit(points);
        CHECK(fit.slope == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(fit.intercept == doctest::Approx(3.01).epsilon(1e-12));
        CHECK(fit.r == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant y gives slope 0 and r 0 by convention") {
        const auto fit = ols_fit({{1, 4}, {2, 4}, {3, 4}});
        CHECK(fit.slope == 0.0);
        CHECK(fit.r == 0.0);
    }
    SUBCASE("two points define the line") {
        const auto fit = ols_fit({{0, 1}, {2, 5}});
        CHECK(fit.slope == doctest::Approx(2.0));
        CHECK(fit.intercept == doctest::Approx(1.0));
    }
    SUBCASE("residuals are orthogonal to x") {
        const std::vector<std::pair<double, double>> points = {
            {1, 2.3}, {2, 2.9}, {3, 4.4}, {4, 3.9}, {5, 6.1}, {6, 5.8}};
        const auto fit = ols_fit(points);
        double dot = 0.0, scale = 0.0;
        for (const auto& [x, y] : points) {
            const double resid = y - (fit.slope * x + fit.intercept);
            dot += resid * x;
            scale += std::abs(x * y);
        }
        CHECK(std::abs(dot) / scale < 1e-8);
    }
    SUBCASE("constant x is degenerate") {
        CHECK_THROWS_AS(ols_fit({{1, 2}, {1, 3}}), Error);
        CHECK_THROWS_AS(ols_fit({{1, 2}}), Error);
    }
}

TEST_CASE("fixture CSVs load") {
    const std::string dir = THREATGRAPH_FIXTURE_DIR;
    const auto proxies_rows = load_proxies_csv(pipeline::read_file(dir + "/deployment_proxies.csv"));
    CHECK(proxies_rows.size() == 10);
    const auto counts = load_attack_counts_csv(pipeline::read_file(dir + "/attack_counts.csv"));
    REQUIRE(counts.size() == 10);
    CHECK(counts[0].model_family == "GPT-3.5/4 (API)");
    CHECK(counts[0].attack_count == 218);
    CHECK(counts[0].weight == doctest::Approx(0.92));
    const auto cvs = load_cvs_inputs_csv(pipeline::read_file(dir + "/cvs_inputs.csv"));
    CHECK(cvs.size() == 5);

    // published weights load alongside computed normalization
    for (const auto& row : counts) {
        CHECK(row.normalized == doctest::Approx(normalized_frequency(row.attack_count, row.weight)));
    }
}
