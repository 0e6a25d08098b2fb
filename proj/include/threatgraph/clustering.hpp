#pragma once

#include "threatgraph/features.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace threatgraph::clustering {

enum class Method { KMEANS, AGGLOMERATIVE, GMM };

struct GmmMixture {
    std::vector<double> weights;                 // k, sums to 1
    std::vector<std::vector<double>> variances;  // k x dims, diagonal, floored
};

struct ClusterModel {
    Method method = Method::KMEANS;
    std::size_t k = 1;
    std::vector<std::vector<double>> centroids;       // k x dims (means)
    std::map<std::string, std::size_t> assignments;   // entity id -> cluster
    std::optional<GmmMixture> mixture;                // GMM only

    // Diagnostic traces used by the invariant checks.
    std::vector<double> sse_trace;      // KMEANS: per-Lloyd-iteration SSE
    std::vector<double> loglik_trace;   // GMM: per-EM-iteration log-likelihood
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
        merge_trace;                    // AGGLOMERATIVE: merged member sets
};

enum class Linkage { AVERAGE, SINGLE, COMPLETE };

// Lloyd iterations from k-means++ seeding until the assignment fixpoint or
// 300 iterations. Nearest-centroid ties break toward the lowest cluster
// index. Deterministic given (points, k, seed).
ClusterModel kmeans(const features::FeatureMatrix& points, std::size_t k, std::uint64_t seed);

// Bottom-up merging under the given linkage with Euclidean distance until
// k clusters remain; merge ties break by the smallest (i,j) pair in
// smallest-member order. Centroids are cluster means.
ClusterModel agglomerative(const features::FeatureMatrix& points, std::size_t k,
                           Linkage linkage = Linkage::AVERAGE);

// EM with diagonal covariances (variance floor 1e-6), initialized from
// kmeans(seed); stops when log-likelihood improves by < 1e-8 or after 200
// iterations. Assignments are argmax responsibility.
ClusterModel gmm_fit(const features::FeatureMatrix& points, std::size_t k, std::uint64_t seed);

// ASR ~ 1 - exp(-lambda * Q); lambda must be > 0 and Q >= 0.
double asr_curve(double lambda, std::int64_t query_budget);

// One row of the empirical attack-success-rate fixture. asr_percent is
// absent for rows whose published value is "Varies"/"Guaranteed"; printed
// ranges like "63-69" load as their midpoint.
struct AsrStudyRow {
    std::string attack_type;
    std::string target_model;
    std::string dataset;
    std::optional<double> asr_percent;
    std::string source;
};

// CSV columns: attack_type,target_model,dataset,asr_percent,source.
std::vector<AsrStudyRow> load_asr_fixture(const std::string& csv_text);

} // namespace threatgraph::clustering
