#include "threatgraph/analytics.hpp"
#include "threatgraph/csv.hpp"
#include "threatgraph/error.hpp"
#include "threatgraph/features.hpp"

#include <algorithm>
#include <cmath>

namespace threatgraph::analytics {

namespace {

// Weights from an arbitrary subset of proxy columns.
std::map<std::string, double> weights_from_columns(const std::vector<DeploymentProxies>& rows,
                                                   const std::vector<std::size_t>& columns) {
    std::vector<double> mean_z(rows.size(), 0.0);
    for (std::size_t c : columns) {
        std::vector<double> column(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i].values()[c];
        const auto z = features::z_normalize(column);
        for (std::size_t i = 0; i < rows.size(); ++i) mean_z[i] += z[i];
    }
    for (double& v : mean_z) v /= static_cast<double>(columns.size());
    const auto scaled = features::min_max_scale(mean_z, kNormalizationEpsilon);
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i].model_family] = scaled[i];
    return out;
}

// Rank positions after sorting by value descending, name ascending.
std::map<std::string, long> rank_by_value(const std::map<std::string, double>& values) {
    std::vector<std::pair<std::string, double>> order(values.begin(), values.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::map<std::string, long> ranks;
    for (std::size_t i = 0; i < order.size(); ++i) ranks[order[i].first] = static_cast<long>(i) + 1;
    return ranks;
}

double parse_number(const std::string& field, const std::string& context) {
    try {
        return std::stod(field);
    } catch (const std::exception&) {
        throw schema_error("unparsable number '" + field + "' in " + context);
    }
}

} // namespace

std::map<std::string, double> deployment_weights(const std::vector<DeploymentProxies>& rows) {
    if (rows.empty()) return {};
    return weights_from_columns(rows, {0, 1, 2, 3});
}

double normalized_frequency(long attack_count, double weight) {
    if (attack_count < 0) throw domain_error("attack count must be >= 0");
    if (!(weight >= 0.0 && weight <= 1.0)) throw domain_error("weight must lie in [0,1]");
    return static_cast<double>(attack_count) / (weight + kNormalizationEpsilon);
}

long rounded_frequency(long attack_count, double weight) {
    return static_cast<long>(std::floor(normalized_frequency(attack_count, weight) + 0.5));
}

std::vector<CvsRow> cvs_rank(const std::vector<CvsRow>& rows, const std::array<double, 3>& weights) {
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw config_error("CVS weights must be non-negative");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw config_error("CVS weights must sum to 1");
    }
    std::vector<CvsRow> out = rows;
    for (auto& row : out) {
        for (double v : {row.prompt_asr, row.backdoor_asr, row.training_risk}) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw domain_error("CVS inputs must lie in [0,1] (model " + row.model + ")");
            }
        }
        row.cvs = weights[0] * row.prompt_asr + weights[1] * row.backdoor_asr +
                  weights[2] * row.training_risk;
    }
    std::sort(out.begin(), out.end(), [](const CvsRow& a, const CvsRow& b) {
        if (a.cvs != b.cvs) return a.cvs > b.cvs;
        return a.model < b.model;
    });
    return out;
}

std::vector<LooShift> loo_sensitivity(const std::vector<DeploymentProxies>& rows,
                                      const std::map<std::string, long>& attack_counts,
                                      std::size_t k) {
    if (rows.size() < k) {
        throw domain_error("loo_sensitivity needs at least k models");
    }
    auto ranking_for = [&](const std::vector<std::size_t>& columns) {
        const auto weights = weights_from_columns(rows, columns);
        std::map<std::string, double> f_hat;
        for (const auto& row : rows) {
            auto it = attack_counts.find(row.model_family);
            const long f = it == attack_counts.end() ? 0 : it->second;
            f_hat[row.model_family] = normalized_frequency(f, weights.at(row.model_family));
        }
        return rank_by_value(f_hat);
    };

    const auto baseline = ranking_for({0, 1, 2, 3});
    std::vector<std::string> topk;
    for (const auto& [model, rank] : baseline) {
        if (rank <= static_cast<long>(k)) topk.push_back(model);
    }

    std::vector<LooShift> out;
    for (std::size_t omit = 0; omit < 4; ++omit) {
        std::vector<std::size_t> columns;
        for (std::size_t c = 0; c < 4; ++c) {
            if (c != omit) columns.push_back(c);
        }
        const auto ranks = ranking_for(columns);
        LooShift shift;
        shift.omitted_proxy = kProxyNames[omit];
        for (const auto& [model, rank] : baseline) {
            const long d = std::abs(rank - ranks.at(model));
            shift.max_shift = std::max(shift.max_shift, d);
        }
        for (const auto& model : topk) {
            const long d = std::abs(baseline.at(model) - ranks.at(model));
            shift.topk_shift = std::max(shift.topk_shift, d);
        }
        out.push_back(std::move(shift));
    }
    return out;
}

ParetoResult pareto(const std::map<std::string, long>& counts, double threshold) {
    if (counts.empty()) throw domain_error("pareto needs a non-empty count map");
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw domain_error("pareto threshold must lie in (0,1]");
    }
    std::vector<std::pair<std::string, long>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    double total = 0.0;
    for (const auto& [name, count] : order) {
        if (count < 0) throw domain_error("pareto counts must be >= 0");
        total += static_cast<double>(count);
    }
    if (total == 0.0) throw domain_error("pareto needs a positive total count");

    ParetoResult result;
    double acc = 0.0;
    for (const auto& [name, count] : order) {
        acc += static_cast<double>(count);
        const double share = acc / total;
        result.curve.emplace_back(name, count, share);
        if (result.prefix_size == 0 && share >= threshold) {
            result.prefix_size = result.curve.size();
            result.prefix_share = share;
        }
    }
    if (result.prefix_size == 0) {  // guard against residual float error
        result.prefix_size = result.curve.size();
        result.prefix_share = std::get<2>(result.curve.back());
    }
    return result;
}

OlsFit ols_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw domain_error("ols_fit needs at least 2 points");
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) throw domain_error("ols_fit requires non-constant x");
    OlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
    return fit;
}

std::vector<DeploymentProxies> load_proxies_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.size() < 2) throw schema_error("proxies CSV needs a header and rows");
    std::vector<DeploymentProxies> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() < 5) {
            throw schema_error("proxies CSV row " + std::to_string(r) + " needs 5 columns");
        }
        DeploymentProxies p;
        p.model_family = f[0];
        p.pkg_installs = parse_number(f[1], "proxies CSV");
        p.ckpt_pulls = parse_number(f[2], "proxies CSV");
        p.docker_pulls = parse_number(f[3], "proxies CSV");
        p.citation_momentum = parse_number(f[4], "proxies CSV");
        for (double v : p.values()) {
            if (v < 0.0) throw schema_error("proxies must be >= 0 (" + p.model_family + ")");
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<CvsRow> load_cvs_inputs_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.size() < 2) throw schema_error("CVS CSV needs a header and rows");
    std::vector<CvsRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() < 4) {
            throw schema_error("CVS CSV row " + std::to_string(r) + " needs 4 columns");
        }
        CvsRow row;
        row.model = f[0];
        row.prompt_asr = parse_number(f[1], "CVS CSV");
        row.backdoor_asr = parse_number(f[2], "CVS CSV");
        row.training_risk = parse_number(f[3], "CVS CSV");
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<ModelRiskRow> load_attack_counts_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.size() < 2) throw schema_error("attack counts CSV needs a header and rows");
    std::vector<ModelRiskRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() < 2) {
            throw schema_error("attack counts CSV row " + std::to_string(r) + " needs 2+ columns");
        }
        ModelRiskRow row;
        row.model_family = f[0];
        row.attack_count = static_cast<long>(parse_number(f[1], "attack counts CSV"));
        if (f.size() >= 3 && !f[2].empty()) {
            row.weight = parse_number(f[2], "attack counts CSV");
            row.normalized = normalized_frequency(row.attack_count, row.weight);
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace threatgraph::analytics
