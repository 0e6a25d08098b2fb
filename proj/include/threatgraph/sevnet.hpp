#pragma once

#include "threatgraph/graph.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace threatgraph::sevnet {

struct SevNetConfig {
    std::size_t layers = 2;
    std::size_t hidden_dims = 16;
    double learning_rate = 0.05;
    std::size_t epochs = 500;
    std::uint64_t seed = 42;
    double high_sev_weight_alpha = 2.0;  // loss weight w_v = 1 + alpha * s_v
    double train_fraction = 0.8;         // seeded-shuffle split for validation
};

// Relational message-passing severity model. All parameters live in one
// flat vector so training and finite-difference checks share the same
// view; the offset helpers map (layer, relation) blocks into it.
struct SevNetModel {
    SevNetConfig config;
    std::size_t input_dims = 0;
    std::vector<double> params;

    std::size_t layer_in_dims(std::size_t layer) const;
    std::size_t relation_weight_offset(std::size_t layer, std::size_t relation) const;
    std::size_t self_weight_offset(std::size_t layer) const;
    std::size_t head_w1_offset() const;
    std::size_t head_b1_offset() const;
    std::size_t head_w2_offset() const;
    std::size_t head_b2_offset() const;
    std::size_t param_count() const;
};

// Uniform(-0.1, 0.1) initialization from the config seed.
SevNetModel init_model(std::size_t input_dims, const SevNetConfig& config);

// h^{(l+1)}_v = ReLU(sum_r (1/|N_r(v)|) W_r sum_{u in N_r(v)} h_u + W_0 h_v)
// with empty neighborhoods contributing zero; s_v = sigmoid(head(h_v)).
std::map<std::string, double> forward(const SevNetModel& model, const graph::ThreatGraph& g);

// Weighted squared error over labeled nodes: sum_v w_v (s_v - t_v)^2.
double loss(const SevNetModel& model, const graph::ThreatGraph& g,
            const std::map<std::string, double>& targets);

// Analytic gradient of `loss` w.r.t. every parameter, same layout as
// model.params.
std::vector<double> gradient(const SevNetModel& model, const graph::ThreatGraph& g,
                             const std::map<std::string, double>& targets);

struct TrainResult {
    SevNetModel model;
    std::vector<double> loss_trace;  // loss per epoch plus the final value
};

// Full-batch gradient descent for config.epochs. Fewer than two labeled
// nodes is a NUMERIC error; a non-finite loss aborts with the epoch in
// the message.
TrainResult train(const graph::ThreatGraph& g, const std::map<std::string, double>& targets,
                  const SevNetConfig& config);

struct RankMetrics {
    double spearman_rho = 0.0;
    double kendall_tau = 0.0;
    double precision_at_k = 0.0;
};

// Spearman rho on average ranks, Kendall tau-b, and top-k precision with
// ties broken by ascending id. Needs >= 2 shared ids and k <= #shared.
RankMetrics evaluate(const std::map<std::string, double>& pred,
                     const std::map<std::string, double>& truth, std::size_t k);

// Seeded-shuffle split of the labeled nodes, training on the first
// train_fraction and reporting rank metrics on the held-out remainder.
struct ValidationResult {
    SevNetModel model;
    RankMetrics metrics;
    std::vector<std::string> holdout_ids;
};
ValidationResult train_and_validate(const graph::ThreatGraph& g,
                                    const std::map<std::string, double>& targets,
                                    const SevNetConfig& config);

// rho(full graph) - rho(graph without the family), same seed and split.
double ablate_edge_family(const graph::ThreatGraph& g,
                          const std::map<std::string, double>& targets,
                          const SevNetConfig& config, graph::EdgeKind family);

struct EvidencePath {
    std::string target;
    std::vector<graph::Edge> path;  // chain ending at target
    double contribution = 0.0;      // normalized to [0,1], max exactly 1
};

// Perturbation surrogate for subgraph attribution: every chain of at most
// max_len distinct directed edges ending at the target is scored by the
// severity drop after removing its edges; drops are clamped at zero and
// normalized by the largest one. Ties order by path lexicographically.
std::vector<EvidencePath> evidence_paths(const SevNetModel& model, const graph::ThreatGraph& g,
                                         const std::string& target, std::size_t max_len,
                                         std::size_t top_n);

// Versioned plain-text checkpoint; parameters round-trip exactly.
std::string save_checkpoint(const SevNetModel& model);
SevNetModel load_checkpoint(const std::string& text);

} // namespace threatgraph::sevnet
