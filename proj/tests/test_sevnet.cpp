#include "threatgraph/sevnet.hpp"
#include "threatgraph/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace threatgraph;
using namespace threatgraph::graph;
using namespace threatgraph::sevnet;

namespace {

ThreatGraph chain_graph() {
    // CVE a --AFFECTS--> CPE p --AFFECTS(rev)--> CVE b
    ThreatGraph g;
    g.add_node("a", NodeKind::CVE, "a", {1.0});
    g.add_node("p", NodeKind::CPE, "p", {2.0});
    g.add_node("b", NodeKind::CVE, "b", {3.0});
    g.add_edge("a", EdgeKind::AFFECTS, "p", false);
    g.add_edge("p", EdgeKind::AFFECTS, "b", true);
    g.finalize();
    return g;
}

ThreatGraph star_graph() {
    // CVE a linked to two CPEs and one issue, with reverse twins.
    ThreatGraph g;
    g.add_node("CVE-1", NodeKind::CVE, "", {1.0, 0.5});
    g.add_node("cpe:p", NodeKind::CPE, "", {0.2, 0.9});
    g.add_node("cpe:q", NodeKind::CPE, "", {0.7, 0.1});
    g.add_node("iss:1", NodeKind::ISSUE, "", {0.4, 0.4});
    g.add_edge_pair("CVE-1", EdgeKind::AFFECTS, "cpe:p");
    g.add_edge_pair("CVE-1", EdgeKind::AFFECTS, "cpe:q");
    g.add_edge_pair("CVE-1", EdgeKind::REPORTED_IN, "iss:1");
    g.finalize();
    return g;
}

SevNetConfig tiny_config(std::size_t hidden = 1, std::size_t layers = 2) {
    SevNetConfig cfg;
    cfg.layers = layers;
    cfg.hidden_dims = hidden;
    cfg.learning_rate = 0.05;
    cfg.epochs = 40;
    cfg.seed = 99;
    return cfg;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Test-side chain enumeration: forward walks from every node, kept only
// when they terminate at the target. Intentionally different from the
// backward search inside evidence_paths.
void grow_chains(const ThreatGraph& g, std::vector<Edge> chain, const std::string& target,
                 std::size_t max_len, std::vector<std::vector<Edge>>& out) {
    const Edge& last = chain.back();
    if (last.dst == target) out.push_back(chain);
    if (chain.size() == max_len) return;
    for (const auto& e : g.edges()) {
        if (e.src != last.dst) continue;
        if (std::find(chain.begin(), chain.end(), e) != chain.end()) continue;
        auto next = chain;
        next.push_back(e);
        grow_chains(g, next, target, max_len, out);
    }
}

std::vector<std::vector<Edge>> oracle_chains(const ThreatGraph& g, const std::string& target,
                                             std::size_t max_len) {
    std::vector<std::vector<Edge>> out;
    for (const auto& e : g.edges()) grow_chains(g, {e}, target, max_len, out);
    return out;
}

} // namespace

TEST_CASE("all-zero parameters score every node at 0.5") {
    const auto g = star_graph();
    auto model = init_model(g.feature_dims(), tiny_config(3));
    std::fill(model.params.begin(), model.params.end(), 0.0);
    for (const auto& [id, s] : forward(model, g)) {
        CHECK(s == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("isolated node output depends only on the self weights") {
    ThreatGraph g;
    g.add_node("CVE-1", NodeKind::CVE, "", {0.7, 0.2});
    g.finalize();

    auto cfg = tiny_config(2, 1);
    auto model = init_model(g.feature_dims(), cfg);
    const double base = forward(model, g).at("CVE-1");

    // perturb every relation weight; the self path must be unaffected
    auto perturbed = model;
    for (std::size_t r = 0; r < kRelationCount; ++r) {
        const std::size_t off = perturbed.relation_weight_offset(0, r);
        const std::size_t count = cfg.hidden_dims * perturbed.layer_in_dims(0);
        for (std::size_t i = 0; i < count; ++i) perturbed.params[off + i] += 3.7;
    }
    CHECK(forward(perturbed, g).at("CVE-1") == doctest::Approx(base).epsilon(1e-15));

    // perturbing the self weight does change it
    perturbed.params[perturbed.self_weight_offset(0)] += 1.0;
    CHECK(forward(perturbed, g).at("CVE-1") != doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("three-node chain matches a symbolic evaluation of the layer rule") {
    const auto g = chain_graph();
    SevNetConfig cfg = tiny_config(1, 2);
    SevNetModel model = init_model(1, cfg);

    const std::size_t rf = relation_index(EdgeKind::AFFECTS, false);
    const std::size_t rr = relation_index(EdgeKind::AFFECTS, true);
    std::fill(model.params.begin(), model.params.end(), 0.0);
    // layer 0
    model.params[model.relation_weight_offset(0, rf)] = 0.3;
    model.params[model.relation_weight_offset(0, rr)] = -0.2;
    model.params[model.self_weight_offset(0)] = 0.5;
    // layer 1
    model.params[model.relation_weight_offset(1, rf)] = 0.7;
    model.params[model.relation_weight_offset(1, rr)] = 0.4;
    model.params[model.self_weight_offset(1)] = -0.1;
    // head
    model.params[model.head_w1_offset()] = 1.3;
    model.params[model.head_b1_offset()] = 0.05;
    model.params[model.head_w2_offset()] = 0.9;
    model.params[model.head_b2_offset()] = -0.2;

    auto relu = [](double x) { return x > 0.0 ? x : 0.0; };
    // layer 0: h0(a)=1, h0(p)=2, h0(b)=3
    const double h1_a = relu(0.5 * 1.0);
    const double h1_p = relu(0.3 * 1.0 + 0.5 * 2.0);
    const double h1_b = relu(-0.2 * 2.0 + 0.5 * 3.0);
    // layer 1
    const double h2_a = relu(-0.1 * h1_a);
    const double h2_p = relu(0.7 * h1_a + -0.1 * h1_p);
    const double h2_b = relu(0.4 * h1_p + -0.1 * h1_b);
    auto head = [&](double h) { return sigmoid(0.9 * relu(1.3 * h + 0.05) - 0.2); };

    const auto scores = forward(model, g);
    CHECK(scores.at("a") == doctest::Approx(head(h2_a)).epsilon(1e-12));
    CHECK(scores.at("p") == doctest::Approx(head(h2_p)).epsilon(1e-12));
    CHECK(scores.at("b") == doctest::Approx(head(h2_b)).epsilon(1e-12));
}

TEST_CASE("forward rejects mismatched feature dims") {
    const auto g = star_graph();
    const auto model = init_model(g.feature_dims() + 1, tiny_config());
    CHECK_THROWS_AS(forward(model, g), Error);
}

TEST_CASE("analytic gradient matches central finite differences") {
    const auto g = star_graph();
    SevNetConfig cfg = tiny_config(3, 2);
    auto model = init_model(g.feature_dims(), cfg);
    const std::map<std::string, double> targets = {{"CVE-1", 0.9}};

    const auto grad = gradient(model, g, targets);
    const double h = 1e-5;
    double max_rel_err = 0.0;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        auto plus = model;
        plus.params[i] += h;
        auto minus = model;
        minus.params[i] -= h;
        const double fd = (loss(plus, g, targets) - loss(minus, g, targets)) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
        max_rel_err = std::max(max_rel_err, std::abs(fd - grad[i]) / denom);
    }
    CHECK(max_rel_err < 1e-4);
}

TEST_CASE("with L layers the score ignores changes beyond L hops") {
    // chain: CVE c0 <- CPE p1 <- CVE c2 <- CPE p3  (messages flow left)
    auto build = [](double far_feature) {
        ThreatGraph g;
        g.add_node("c0", NodeKind::CVE, "", {1.0});
        g.add_node("p1", NodeKind::CPE, "", {2.0});
        g.add_node("c2", NodeKind::CVE, "", {3.0});
        g.add_node("p3", NodeKind::CPE, "", {far_feature});
        g.add_edge("p1", EdgeKind::AFFECTS, "c0", true);
        g.add_edge("c2", EdgeKind::AFFECTS, "p1", false);
        g.add_edge("p3", EdgeKind::AFFECTS, "c2", true);
        g.finalize();
        return g;
    };
    const auto model = init_model(1, tiny_config(2, 2));
    const double near = forward(model, build(4.0)).at("c0");
    const double far = forward(model, build(400.0)).at("c0");
    CHECK(near == doctest::Approx(far).epsilon(1e-15));
    // but a 2-hop node does reach it
    CHECK(forward(model, build(4.0)).at("p1") !=
          doctest::Approx(forward(model, build(400.0)).at("p1")).epsilon(1e-12));
}

TEST_CASE("duplicating a neighbor leaves the mean aggregation unchanged") {
    auto build = [](bool duplicate) {
        ThreatGraph g;
        g.add_node("CVE-1", NodeKind::CVE, "", {1.0, 2.0});
        g.add_node("cpe:p", NodeKind::CPE, "", {0.4, 0.6});
        g.add_edge("cpe:p", EdgeKind::AFFECTS, "CVE-1", true);
        if (duplicate) {
            g.add_node("cpe:q", NodeKind::CPE, "", {0.4, 0.6});  // same features
            g.add_edge("cpe:q", EdgeKind::AFFECTS, "CVE-1", true);
        }
        g.finalize();
        return g;
    };
    const auto model = init_model(2, tiny_config(2, 1));
    const double single = forward(model, build(false)).at("CVE-1");
    const double doubled = forward(model, build(true)).at("CVE-1");
    CHECK(single == doctest::Approx(doubled).epsilon(1e-12));
}

TEST_CASE("training reduces loss on constant targets") {
    const auto g = star_graph();
    ThreatGraph g2;  // a second CVE so the 2-label minimum holds
    g2.add_node("CVE-1", NodeKind::CVE, "", {1.0, 0.5});
    g2.add_node("CVE-2", NodeKind::CVE, "", {0.3, 0.8});
    g2.add_node("cpe:p", NodeKind::CPE, "", {0.2, 0.9});
    g2.add_edge_pair("CVE-1", EdgeKind::AFFECTS, "cpe:p");
    g2.add_edge_pair("CVE-2", EdgeKind::AFFECTS, "cpe:p");
    g2.finalize();

    SevNetConfig cfg = tiny_config(4, 2);
    cfg.high_sev_weight_alpha = 0.0;
    cfg.epochs = 200;
    const std::map<std::string, double> targets = {{"CVE-1", 0.5}, {"CVE-2", 0.5}};
    const auto result = train(g2, targets, cfg);
    CHECK(result.loss_trace.back() < result.loss_trace.front());
    CHECK(result.loss_trace.back() < 1e-3);
}

TEST_CASE("loss trace is non-increasing at a small learning rate") {
    ThreatGraph g;
    g.add_node("CVE-1", NodeKind::CVE, "", {1.0});
    g.add_node("CVE-2", NodeKind::CVE, "", {2.0});
    g.add_node("CVE-3", NodeKind::CVE, "", {3.0});
    g.add_node("cpe:p", NodeKind::CPE, "", {0.5});
    g.add_node("iss:1", NodeKind::ISSUE, "", {0.25});
    g.add_edge_pair("CVE-1", EdgeKind::AFFECTS, "cpe:p");
    g.add_edge_pair("CVE-2", EdgeKind::AFFECTS, "cpe:p");
    g.add_edge_pair("CVE-3", EdgeKind::REPORTED_IN, "iss:1");
    g.finalize();

    SevNetConfig cfg = tiny_config(3, 2);
    cfg.learning_rate = 1e-3;
    cfg.epochs = 120;
    const std::map<std::string, double> targets = {
        {"CVE-1", 0.2}, {"CVE-2", 0.6}, {"CVE-3", 0.9}};
    const auto result = train(g, targets, cfg);
    for (std::size_t i = 1; i < result.loss_trace.size(); ++i) {
        CHECK(result.loss_trace[i] <= result.loss_trace[i - 1] + 1e-12);
    }
}

TEST_CASE("training is deterministic bit-for-bit") {
    const auto g = star_graph();
    ThreatGraph g2 = star_graph();
    SevNetConfig cfg = tiny_config(3, 2);
    cfg.epochs = 25;
    std::map<std::string, double> targets = {{"CVE-1", 0.7}};
    // a single label is rejected
    CHECK_THROWS_AS(train(g, targets, cfg), Error);

    ThreatGraph g3;
    g3.add_node("CVE-1", NodeKind::CVE, "", {1.0, 0.5});
    g3.add_node("CVE-2", NodeKind::CVE, "", {0.2, 0.4});
    g3.finalize();
    targets["CVE-2"] = 0.3;
    const auto a = train(g3, targets, cfg);
    const auto b = train(g3, targets, cfg);
    CHECK(a.model.params == b.model.params);
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("scores stay strictly inside (0,1)") {
    const auto g = star_graph();
    auto model = init_model(g.feature_dims(), tiny_config(3));
    for (double scale : {1.0, 10.0, -10.0}) {
        auto m = model;
        for (double& p : m.params) p *= scale;
        for (const auto& [id, s] : forward(m, g)) {
            CHECK(s > 0.0);
            CHECK(s < 1.0);
        }
    }
}

TEST_CASE("evaluate on hand-ranked fixtures") {
    SUBCASE("identical maps") {
        const std::map<std::string, double> x = {{"a", 0.1}, {"b", 0.4}, {"c", 0.9}};
        const auto m = evaluate(x, x, 3);
        CHECK(m.spearman_rho == doctest::Approx(1.0));
        CHECK(m.kendall_tau == doctest::Approx(1.0));
        CHECK(m.precision_at_k == doctest::Approx(1.0));
    }
    SUBCASE("reversed ranking") {
        const std::map<std::string, double> pred = {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}};
        const std::map<std::string, double> truth = {{"a", -1.0}, {"b", -2.0}, {"c", -3.0}};
        const auto m = evaluate(pred, truth, 1);
        CHECK(m.spearman_rho == doctest::Approx(-1.0));
        CHECK(m.kendall_tau == doctest::Approx(-1.0));
    }
    SUBCASE("five-point fixture against brute-force ranks") {
        const std::map<std::string, double> pred = {
            {"a", 0.1}, {"b", 0.9}, {"c", 0.5}, {"d", 0.7}, {"e", 0.3}};
        const std::map<std::string, double> truth = {
            {"a", 1.0}, {"b", 5.0}, {"c", 2.0}, {"d", 4.0}, {"e", 3.0}};
        // rank vectors: pred a1 e2 c3 d4 b5; truth a1 c2 e3 d4 b5
        // sum d^2 = 2 -> rho = 1 - 12/120 = 0.9; one discordant pair -> tau = 0.8
        const auto m = evaluate(pred, truth, 3);
        CHECK(m.spearman_rho == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(m.kendall_tau == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(m.precision_at_k == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("errors") {
        const std::map<std::string, double> one = {{"a", 1.0}};
        CHECK_THROWS_AS(evaluate(one, one, 1), Error);
        const std::map<std::string, double> two = {{"a", 1.0}, {"b", 2.0}};
        CHECK_THROWS_AS(evaluate(two, two, 3), Error);
    }
}

TEST_CASE("evidence paths") {
    SUBCASE("isolated target yields no paths") {
        ThreatGraph g;
        g.add_node("CVE-1", NodeKind::CVE, "", {1.0});
        g.finalize();
        const auto model = init_model(1, tiny_config(1, 1));
        CHECK(evidence_paths(model, g, "CVE-1", 3, 5).empty());
        CHECK_THROWS_AS(evidence_paths(model, g, "CVE-404", 3, 5), Error);
    }
    SUBCASE("a single incoming edge carries contribution 1") {
        ThreatGraph g;
        g.add_node("CVE-1", NodeKind::CVE, "", {1.0});
        g.add_node("cpe:p", NodeKind::CPE, "", {1.0});
        g.add_edge("cpe:p", EdgeKind::AFFECTS, "CVE-1", true);
        g.finalize();
        auto model = init_model(1, tiny_config(1, 1));
        std::fill(model.params.begin(), model.params.end(), 0.25);
        const auto paths = evidence_paths(model, g, "CVE-1", 3, 5);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0].contribution == doctest::Approx(1.0));
        CHECK(paths[0].path.size() == 1);
    }
    SUBCASE("ranking equals the exhaustive leave-out oracle") {
        const auto g = star_graph();
        const auto model = init_model(g.feature_dims(), tiny_config(3, 2));
        const auto got = evidence_paths(model, g, "CVE-1", 3, 1000);

        const auto chains = oracle_chains(g, "CVE-1", 3);
        CHECK(got.size() == chains.size());
        const double base = forward(model, g).at("CVE-1");
        std::vector<std::pair<double, std::vector<Edge>>> expected;
        for (const auto& chain : chains) {
            const double s = forward(model, g.remove_edges(chain)).at("CVE-1");
            expected.emplace_back(std::max(0.0, base - s), chain);
        }
        double max_c = 0.0;
        for (auto& [c, chain] : expected) max_c = std::max(max_c, c);
        if (max_c > 0.0) {
            for (auto& [c, chain] : expected) c /= max_c;
        }
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].contribution == doctest::Approx(expected[i].first).epsilon(1e-12));
            CHECK(got[i].path == expected[i].second);
            CHECK(got[i].contribution >= 0.0);
            CHECK(got[i].contribution <= 1.0);
        }
        CHECK(got.front().contribution == doctest::Approx(1.0));
    }
}

TEST_CASE("ablating an absent edge family changes nothing") {
    ThreatGraph g;
    for (int i = 0; i < 5; ++i) {
        g.add_node("CVE-" + std::to_string(i), NodeKind::CVE, "",
                   {0.1 * i, 1.0 - 0.1 * i});
    }
    g.add_node("cpe:p", NodeKind::CPE, "", {0.5, 0.5});
    for (int i = 0; i < 3; ++i) {
        g.add_edge_pair("CVE-" + std::to_string(i), EdgeKind::AFFECTS, "cpe:p");
    }
    g.finalize();

    SevNetConfig cfg = tiny_config(3, 2);
    cfg.epochs = 60;
    cfg.train_fraction = 0.6;
    std::map<std::string, double> targets;
    for (int i = 0; i < 5; ++i) targets["CVE-" + std::to_string(i)] = 0.2 * i;

    // no COST_SIM edges exist, so the reduced graph is identical and the
    // seeded runs coincide exactly
    const double delta = ablate_edge_family(g, targets, cfg, EdgeKind::COST_SIM);
    CHECK(delta == 0.0);
}

TEST_CASE("checkpoints round-trip exactly") {
    const auto g = star_graph();
    SevNetConfig cfg = tiny_config(3, 2);
    cfg.epochs = 10;
    const std::map<std::string, double> targets = {{"CVE-1", 0.7}};
    auto model = init_model(g.feature_dims(), cfg);
    const auto text = save_checkpoint(model);
    const auto loaded = load_checkpoint(text);
    CHECK(loaded.params == model.params);
    CHECK(loaded.input_dims == model.input_dims);
    CHECK(forward(loaded, g) == forward(model, g));
    CHECK_THROWS_AS(load_checkpoint("bogus v9\n"), Error);
}
