#include "threatgraph/clustering.hpp"
#include "threatgraph/csv.hpp"
#include "threatgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace threatgraph::clustering {

namespace {

// mt19937_64 output mapped to [0,1) with 53-bit resolution. The engine is
// fully specified by the standard, so streams are identical across
// platforms (std distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::size_t next_index(std::size_t n) {
        return std::min(static_cast<std::size_t>(next_double() * static_cast<double>(n)), n - 1);
    }

private:
    std::mt19937_64 engine_;
};

double sq_dist(const double* a, const double* b, std::size_t dims) {
    double d = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

void require_k(const features::FeatureMatrix& points, std::size_t k) {
    if (k == 0) throw domain_error("k must be >= 1");
    if (k > points.rows()) {
        throw domain_error("k exceeds point count: k=" + std::to_string(k) +
                           ", points=" + std::to_string(points.rows()));
    }
}

std::vector<std::vector<double>> kmeanspp_init(const features::FeatureMatrix& points,
                                               std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    const std::size_t dims = points.dims;
    std::vector<std::vector<double>> centers;
    centers.reserve(k);

    std::size_t first = rng.next_index(n);
    centers.emplace_back(points.row(first), points.row(first) + dims);

    std::vector<double> d2(n, 0.0);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) {
                best = std::min(best, sq_dist(points.row(i), c.data(), dims));
            }
            d2[i] = best;
            total += best;
        }
        std::size_t chosen;
        if (total == 0.0) {
            chosen = rng.next_index(n);
        } else {
            const double r = rng.next_double() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.emplace_back(points.row(chosen), points.row(chosen) + dims);
    }
    return centers;
}

std::size_t nearest_center(const double* p, const std::vector<std::vector<double>>& centers,
                           std::size_t dims) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = sq_dist(p, centers[c].data(), dims);
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

ClusterModel kmeans(const features::FeatureMatrix& points, std::size_t k, std::uint64_t seed) {
    require_k(points, k);
    const std::size_t n = points.rows();
    const std::size_t dims = points.dims;

    Rng rng(seed);
    auto centers = kmeanspp_init(points, k, rng);
    std::vector<std::size_t> assign(n, 0);

    ClusterModel model;
    model.method = Method::KMEANS;
    model.k = k;

    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_center(points.row(i), centers, dims);
            sse += sq_dist(points.row(i), centers[c].data(), dims);
            if (c != assign[i]) {
                assign[i] = c;
                changed = true;
            }
        }
        model.sse_trace.push_back(sse);
        if (!changed && iter > 0) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(dims, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            const double* p = points.row(i);
            for (std::size_t d = 0; d < dims; ++d) sums[assign[i]][d] += p[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centroid
            for (std::size_t d = 0; d < dims; ++d) {
                centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }

    model.centroids = std::move(centers);
    for (std::size_t i = 0; i < n; ++i) model.assignments[points.ids[i]] = assign[i];
    return model;
}

ClusterModel agglomerative(const features::FeatureMatrix& points, std::size_t k, Linkage linkage) {
    require_k(points, k);
    const std::size_t n = points.rows();
    const std::size_t dims = points.dims;

    // Pairwise point distances, computed once.
    std::vector<double> pd(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::sqrt(sq_dist(points.row(i), points.row(j), dims));
            pd[i * n + j] = d;
            pd[j * n + i] = d;
        }
    }

    // Active clusters as member lists, kept sorted by smallest member so
    // the (i,j) tie-break is well defined.
    std::vector<std::vector<std::size_t>> clusters(n);
    for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

    ClusterModel model;
    model.method = Method::AGGLOMERATIVE;
    model.k = k;

    auto cluster_dist = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double acc = linkage == Linkage::SINGLE ? std::numeric_limits<double>::infinity() : 0.0;
        for (std::size_t i : a) {
            for (std::size_t j : b) {
                const double d = pd[i * n + j];
                switch (linkage) {
                    case Linkage::AVERAGE:  acc += d; break;
                    case Linkage::SINGLE:   acc = std::min(acc, d); break;
                    case Linkage::COMPLETE: acc = std::max(acc, d); break;
                }
            }
        }
        if (linkage == Linkage::AVERAGE) {
            acc /= static_cast<double>(a.size() * b.size());
        }
        return acc;
    };

    while (clusters.size() > k) {
        std::size_t best_i = 0, best_j = 1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double d = cluster_dist(clusters[i], clusters[j]);
                if (d < best_d) {
                    best_d = d;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        model.merge_trace.emplace_back(clusters[best_i], clusters[best_j]);
        auto merged = clusters[best_i];
        merged.insert(merged.end(), clusters[best_j].begin(), clusters[best_j].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_j));
        clusters[best_i] = std::move(merged);
        std::sort(clusters.begin(), clusters.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }

    model.centroids.assign(clusters.size(), std::vector<double>(dims, 0.0));
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (std::size_t i : clusters[c]) {
            const double* p = points.row(i);
            for (std::size_t d = 0; d < dims; ++d) model.centroids[c][d] += p[d];
            model.assignments[points.ids[i]] = c;
        }
        for (std::size_t d = 0; d < dims; ++d) {
            model.centroids[c][d] /= static_cast<double>(clusters[c].size());
        }
    }
    return model;
}

ClusterModel gmm_fit(const features::FeatureMatrix& points, std::size_t k, std::uint64_t seed) {
    require_k(points, k);
    constexpr double kVarianceFloor = 1e-6;
    constexpr double kTolerance = 1e-8;
    constexpr int kMaxIterations = 200;
    const std::size_t n = points.rows();
    const std::size_t dims = points.dims;

    ClusterModel init = kmeans(points, k, seed);
    std::vector<std::vector<double>> means = init.centroids;
    std::vector<std::vector<double>> vars(k, std::vector<double>(dims, kVarianceFloor));
    std::vector<double> weights(k, 0.0);
    {
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[init.assignments.at(points.ids[i])];
        }
        for (std::size_t c = 0; c < k; ++c) {
            weights[c] = counts[c] > 0 ? static_cast<double>(counts[c]) / static_cast<double>(n)
                                       : 1.0 / static_cast<double>(n);
        }
        const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (double& w : weights) w /= wsum;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = init.assignments.at(points.ids[i]);
            const double* p = points.row(i);
            for (std::size_t d = 0; d < dims; ++d) {
                const double diff = p[d] - means[c][d];
                vars[c][d] += diff * diff / static_cast<double>(std::max<std::size_t>(counts[c], 1));
            }
        }
        for (auto& vc : vars)
            for (double& v : vc) v = std::max(v, kVarianceFloor);
    }

    ClusterModel model;
    model.method = Method::GMM;
    model.k = k;

    std::vector<double> resp(n * k, 0.0);
    std::vector<double> logp(k, 0.0);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        // E-step with log-sum-exp.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = points.row(i);
            double max_lp = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                double lp = std::log(weights[c]);
                for (std::size_t d = 0; d < dims; ++d) {
                    const double diff = p[d] - means[c][d];
                    lp += -0.5 * (std::log(2.0 * M_PI * vars[c][d]) + diff * diff / vars[c][d]);
                }
                logp[c] = lp;
                max_lp = std::max(max_lp, lp);
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) sum += std::exp(logp[c] - max_lp);
            const double log_norm = max_lp + std::log(sum);
            ll += log_norm;
            for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(logp[c] - log_norm);
        }
        model.loglik_trace.push_back(ll);
        if (iter > 0 && ll - prev_ll < kTolerance) break;
        prev_ll = ll;

        // M-step.
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            for (std::size_t i = 0; i < n; ++i) nk += resp[i * k + c];
            if (nk <= 0.0) continue;  // degenerate component keeps its params
            weights[c] = nk / static_cast<double>(n);
            for (std::size_t d = 0; d < dims; ++d) {
                double m = 0.0;
                for (std::size_t i = 0; i < n; ++i) m += resp[i * k + c] * points.row(i)[d];
                means[c][d] = m / nk;
            }
            for (std::size_t d = 0; d < dims; ++d) {
                double v = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double diff = points.row(i)[d] - means[c][d];
                    v += resp[i * k + c] * diff * diff;
                }
                vars[c][d] = std::max(v / nk, kVarianceFloor);
            }
        }
        const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (double& w : weights) w /= wsum;
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (resp[i * k + c] > resp[i * k + best]) best = c;
        }
        model.assignments[points.ids[i]] = best;
    }
    model.centroids = std::move(means);
    GmmMixture mixture;
    mixture.weights = std::move(weights);
    mixture.variances = std::move(vars);
    model.mixture = std::move(mixture);
    return model;
}

double asr_curve(double lambda, std::int64_t query_budget) {
    if (!(lambda > 0.0)) {
        throw domain_error("asr_curve lambda must be > 0");
    }
    if (query_budget < 0) {
        throw domain_error("asr_curve query budget must be >= 0");
    }
    return 1.0 - std::exp(-lambda * static_cast<double>(query_budget));
}

std::vector<AsrStudyRow> load_asr_fixture(const std::string& csv_text) {
    auto rows = csv::parse(csv_text);
    if (rows.empty()) {
        throw schema_error("ASR fixture is empty");
    }
    std::vector<AsrStudyRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {  // skip header
        const auto& f = rows[r];
        if (f.size() < 5) {
            throw schema_error("ASR fixture row " + std::to_string(r) + " needs 5 columns");
        }
        AsrStudyRow row;
        row.attack_type = f[0];
        row.target_model = f[1];
        row.dataset = f[2];
        row.source = f[4];
        const std::string& asr = f[3];
        if (!asr.empty()) {
            const auto dash = asr.find('-', 1);
            try {
                if (dash != std::string::npos) {
                    const double lo = std::stod(asr.substr(0, dash));
                    const double hi = std::stod(asr.substr(dash + 1));
                    row.asr_percent = (lo + hi) / 2.0;
                } else {
                    row.asr_percent = std::stod(asr);
                }
            } catch (const std::exception&) {
                throw schema_error("ASR fixture row " + std::to_string(r) +
                                   " has unparsable asr_percent: " + asr);
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace threatgraph::clustering
