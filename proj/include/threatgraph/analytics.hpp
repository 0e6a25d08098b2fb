#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace threatgraph::analytics {

inline constexpr double kNormalizationEpsilon = 1e-4;

// Usage proxies for one model family: package installs, checkpoint pulls,
// container pulls and citation momentum. All four must be present.
struct DeploymentProxies {
    std::string model_family;
    double pkg_installs = 0.0;
    double ckpt_pulls = 0.0;
    double docker_pulls = 0.0;
    double citation_momentum = 0.0;

    std::array<double, 4> values() const {
        return {pkg_installs, ckpt_pulls, docker_pulls, citation_momentum};
    }
};

inline constexpr std::array<const char*, 4> kProxyNames = {
    "pkg_installs", "ckpt_pulls", "docker_pulls", "citation_momentum"};

struct ModelRiskRow {
    std::string model_family;
    long attack_count = 0;  // f
    double weight = 0.0;    // w in [0,1]
    double normalized = 0.0;  // f_hat = f / (w + eps)
};

struct CvsRow {
    std::string model;
    double prompt_asr = 0.0;
    double backdoor_asr = 0.0;
    double training_risk = 0.0;
    double cvs = 0.0;
};

// Per-proxy z-scores across models, per-model mean of the four z-scores,
// min-max scaled with eps = 1e-4. Order-independent.
std::map<std::string, double> deployment_weights(const std::vector<DeploymentProxies>& rows);

// f_hat = f / (w + 1e-4).
double normalized_frequency(long attack_count, double weight);

// Round-half-up to integer, matching the published normalized table.
long rounded_frequency(long attack_count, double weight);

// cvs = w1*prompt + w2*backdoor + w3*training, sorted descending with
// model-name tie-break. Weights must be non-negative and sum to 1 (1e-9).
std::vector<CvsRow> cvs_rank(const std::vector<CvsRow>& rows, const std::array<double, 3>& weights);

struct LooShift {
    std::string omitted_proxy;
    long max_shift = 0;   // over all models
    long topk_shift = 0;  // among the baseline top-k
};

// Recomputes weights and the f_hat ranking with each proxy omitted in
// turn and reports rank displacements (dense ranks, name tie-break).
std::vector<LooShift> loo_sensitivity(const std::vector<DeploymentProxies>& rows,
                                      const std::map<std::string, long>& attack_counts,
                                      std::size_t k);

struct ParetoResult {
    std::size_t prefix_size = 0;
    double prefix_share = 0.0;
    // (name, count, cumulative share), sorted by count descending then name.
    std::vector<std::tuple<std::string, long, double>> curve;
};

// Smallest prefix of count-descending entities whose share reaches the
// threshold. Empty input is a NUMERIC error.
ParetoResult pareto(const std::map<std::string, long>& counts, double threshold);

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;  // Pearson; 0 by convention when y is constant
};

// Least squares on >= 2 points; constant x is a NUMERIC error.
OlsFit ols_fit(const std::vector<std::pair<double, double>>& points);

// CSV loaders for the shipped fixture formats.
std::vector<DeploymentProxies> load_proxies_csv(const std::string& text);
std::vector<CvsRow> load_cvs_inputs_csv(const std::string& text);
// model_family,f[,w] rows; the optional w column carries published weights.
std::vector<ModelRiskRow> load_attack_counts_csv(const std::string& text);

} // namespace threatgraph::analytics
