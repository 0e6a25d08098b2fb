#include "threatgraph/sevnet.hpp"
#include "threatgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace threatgraph::sevnet {

using graph::kRelationCount;
using graph::ThreatGraph;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// y = W x (+= into y), W row-major [rows x cols]
void mat_vec(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

// y += W^T d, W row-major [rows x cols], d length rows, y length cols
void mat_tvec(const double* w, const double* d, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) y[c] += wr[c] * d[r];
    }
}

// W += d (x)^T outer product
void outer_acc(double* w, const double* d, const double* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) wr[c] += d[r] * x[c];
    }
}

struct ForwardState {
    // h[l] holds node embeddings entering layer l; h[layers] is the final
    // embedding. z[l] holds pre-activations of layer l.
    std::vector<std::vector<double>> h;
    std::vector<std::vector<double>> z;
    // Per-relation mean aggregates entering each layer, kept for backprop.
    std::vector<std::vector<double>> agg;  // [layer][node*relations*in_dims]
    std::vector<double> head_a1;           // hidden activations of the head
    std::vector<double> head_z1;
    std::vector<double> s;                 // sigmoid outputs per node
};

void check_dims(const SevNetModel& model, const ThreatGraph& g) {
    if (g.feature_dims() != model.input_dims) {
        throw config_error("graph feature dims " + std::to_string(g.feature_dims()) +
                           " do not match model input dims " + std::to_string(model.input_dims));
    }
}

ForwardState run_forward(const SevNetModel& model, const ThreatGraph& g) {
    check_dims(model, g);
    const std::size_t n = g.node_count();
    const std::size_t layers = model.config.layers;
    const std::size_t hidden = model.config.hidden_dims;

    ForwardState st;
    st.h.resize(layers + 1);
    st.z.resize(layers);
    st.agg.resize(layers);

    st.h[0].resize(n * model.input_dims);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& f = g.nodes()[v].features;
        std::copy(f.begin(), f.end(), st.h[0].begin() + v * model.input_dims);
    }

    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in_dims = model.layer_in_dims(l);
        st.z[l].assign(n * hidden, 0.0);
        st.h[l + 1].assign(n * hidden, 0.0);
        st.agg[l].assign(n * kRelationCount * in_dims, 0.0);
        const double* w0 = model.params.data() + model.self_weight_offset(l);
        for (std::size_t v = 0; v < n; ++v) {
            double* zv = st.z[l].data() + v * hidden;
            for (std::size_t r = 0; r < kRelationCount; ++r) {
                const auto& nbrs = g.in_neighbors_indexed(v, r);
                if (nbrs.empty()) continue;
                double* a = st.agg[l].data() + (v * kRelationCount + r) * in_dims;
                for (std::size_t u : nbrs) {
                    const double* hu = st.h[l].data() + u * in_dims;
                    for (std::size_t d = 0; d < in_dims; ++d) a[d] += hu[d];
                }
                const double inv = 1.0 / static_cast<double>(nbrs.size());
                for (std::size_t d = 0; d < in_dims; ++d) a[d] *= inv;
                mat_vec(model.params.data() + model.relation_weight_offset(l, r), a, zv,
                        hidden, in_dims);
            }
            mat_vec(w0, st.h[l].data() + v * in_dims, zv, hidden, in_dims);
            double* hv = st.h[l + 1].data() + v * hidden;
            for (std::size_t d = 0; d < hidden; ++d) hv[d] = zv[d] > 0.0 ? zv[d] : 0.0;
        }
    }

    const double* w1 = model.params.data() + model.head_w1_offset();
    const double* b1 = model.params.data() + model.head_b1_offset();
    const double* w2 = model.params.data() + model.head_w2_offset();
    const double b2 = model.params[model.head_b2_offset()];
    st.head_z1.assign(n * hidden, 0.0);
    st.head_a1.assign(n * hidden, 0.0);
    st.s.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        double* z1 = st.head_z1.data() + v * hidden;
        std::copy(b1, b1 + hidden, z1);
        mat_vec(w1, st.h[layers].data() + v * hidden, z1, hidden, hidden);
        double* a1 = st.head_a1.data() + v * hidden;
        double z2 = b2;
        for (std::size_t d = 0; d < hidden; ++d) {
            a1[d] = z1[d] > 0.0 ? z1[d] : 0.0;
            z2 += w2[d] * a1[d];
        }
        st.s[v] = sigmoid(z2);
    }
    return st;
}

double loss_from_state(const ForwardState& st, const ThreatGraph& g,
                       const std::map<std::string, double>& targets, double alpha) {
    double total = 0.0;
    for (const auto& [id, t] : targets) {
        const std::size_t v = g.index_of(id);
        const double e = st.s[v] - t;
        total += (1.0 + alpha * t) * e * e;
    }
    return total;
}

} // namespace

std::size_t SevNetModel::layer_in_dims(std::size_t layer) const {
    return layer == 0 ? input_dims : config.hidden_dims;
}

std::size_t SevNetModel::relation_weight_offset(std::size_t layer, std::size_t relation) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        off += (kRelationCount + 1) * config.hidden_dims * layer_in_dims(l);
    }
    return off + relation * config.hidden_dims * layer_in_dims(layer);
}

std::size_t SevNetModel::self_weight_offset(std::size_t layer) const {
    return relation_weight_offset(layer, kRelationCount);
}

std::size_t SevNetModel::head_w1_offset() const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < config.layers; ++l) {
        off += (kRelationCount + 1) * config.hidden_dims * layer_in_dims(l);
    }
    return off;
}

std::size_t SevNetModel::head_b1_offset() const {
    return head_w1_offset() + config.hidden_dims * config.hidden_dims;
}

std::size_t SevNetModel::head_w2_offset() const { return head_b1_offset() + config.hidden_dims; }

std::size_t SevNetModel::head_b2_offset() const { return head_w2_offset() + config.hidden_dims; }

std::size_t SevNetModel::param_count() const { return head_b2_offset() + 1; }

SevNetModel init_model(std::size_t input_dims, const SevNetConfig& config) {
    if (config.layers < 1) throw config_error("sevnet needs at least one layer");
    if (!(config.learning_rate > 0.0)) throw config_error("learning rate must be > 0");
    SevNetModel model;
    model.config = config;
    model.input_dims = input_dims;
    model.params.resize(model.param_count());
    std::mt19937_64 engine(config.seed);
    for (double& p : model.params) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        p = -0.1 + 0.2 * u;
    }
    return model;
}

std::map<std::string, double> forward(const SevNetModel& model, const ThreatGraph& g) {
    ForwardState st = run_forward(model, g);
    std::map<std::string, double> out;
    for (std::size_t v = 0; v < g.node_count(); ++v) out[g.nodes()[v].id] = st.s[v];
    return out;
}

double loss(const SevNetModel& model, const ThreatGraph& g,
            const std::map<std::string, double>& targets) {
    ForwardState st = run_forward(model, g);
    return loss_from_state(st, g, targets, model.config.high_sev_weight_alpha);
}

std::vector<double> gradient(const SevNetModel& model, const ThreatGraph& g,
                             const std::map<std::string, double>& targets) {
    ForwardState st = run_forward(model, g);
    const std::size_t n = g.node_count();
    const std::size_t layers = model.config.layers;
    const std::size_t hidden = model.config.hidden_dims;
    const double alpha = model.config.high_sev_weight_alpha;

    std::vector<double> grad(model.params.size(), 0.0);
    // Gradient w.r.t. final embeddings h^{(L)}.
    std::vector<double> dh(n * hidden, 0.0);

    const double* w1 = model.params.data() + model.head_w1_offset();
    const double* w2 = model.params.data() + model.head_w2_offset();
    double* g_w1 = grad.data() + model.head_w1_offset();
    double* g_b1 = grad.data() + model.head_b1_offset();
    double* g_w2 = grad.data() + model.head_w2_offset();
    double* g_b2 = grad.data() + model.head_b2_offset();

    std::vector<double> d1(hidden);
    for (const auto& [id, t] : targets) {
        const std::size_t v = g.index_of(id);
        const double s = st.s[v];
        const double d_out = 2.0 * (1.0 + alpha * t) * (s - t) * s * (1.0 - s);
        const double* a1 = st.head_a1.data() + v * hidden;
        const double* z1 = st.head_z1.data() + v * hidden;
        *g_b2 += d_out;
        for (std::size_t d = 0; d < hidden; ++d) {
            g_w2[d] += d_out * a1[d];
            d1[d] = z1[d] > 0.0 ? d_out * w2[d] : 0.0;
            g_b1[d] += d1[d];
        }
        outer_acc(g_w1, d1.data(), st.h[layers].data() + v * hidden, hidden, hidden);
        mat_tvec(w1, d1.data(), dh.data() + v * hidden, hidden, hidden);
    }

    std::vector<double> dz(hidden);
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in_dims = model.layer_in_dims(l);
        std::vector<double> dh_prev(n * in_dims, 0.0);
        const double* w0 = model.params.data() + model.self_weight_offset(l);
        double* g_w0 = grad.data() + model.self_weight_offset(l);
        for (std::size_t v = 0; v < n; ++v) {
            const double* zv = st.z[l].data() + v * hidden;
            const double* dhv = dh.data() + v * hidden;
            bool live = false;
            for (std::size_t d = 0; d < hidden; ++d) {
                dz[d] = zv[d] > 0.0 ? dhv[d] : 0.0;
                live = live || dz[d] != 0.0;
            }
            if (!live) continue;
            for (std::size_t r = 0; r < kRelationCount; ++r) {
                const auto& nbrs = g.in_neighbors_indexed(v, r);
                if (nbrs.empty()) continue;
                const double* a = st.agg[l].data() + (v * kRelationCount + r) * in_dims;
                double* g_wr = grad.data() + model.relation_weight_offset(l, r);
                outer_acc(g_wr, dz.data(), a, hidden, in_dims);
                const double* wr = model.params.data() + model.relation_weight_offset(l, r);
                const double inv = 1.0 / static_cast<double>(nbrs.size());
                std::vector<double> back(in_dims, 0.0);
                mat_tvec(wr, dz.data(), back.data(), hidden, in_dims);
                for (std::size_t u : nbrs) {
                    double* target_row = dh_prev.data() + u * in_dims;
                    for (std::size_t d = 0; d < in_dims; ++d) target_row[d] += inv * back[d];
                }
            }
            outer_acc(g_w0, dz.data(), st.h[l].data() + v * in_dims, hidden, in_dims);
            mat_tvec(w0, dz.data(), dh_prev.data() + v * in_dims, hidden, in_dims);
        }
        dh = std::move(dh_prev);
    }
    return grad;
}

TrainResult train(const ThreatGraph& g, const std::map<std::string, double>& targets,
                  const SevNetConfig& config) {
    if (targets.size() < 2) {
        throw domain_error("training needs at least 2 labeled nodes");
    }
    for (const auto& [id, t] : targets) {
        const auto& node = g.nodes()[g.index_of(id)];
        if (node.kind != graph::NodeKind::CVE) {
            throw domain_error("training target " + id + " is not a CVE node");
        }
        if (!(t >= 0.0 && t <= 1.0)) {
            throw domain_error("training target for " + id + " outside [0,1]");
        }
    }

    TrainResult result;
    result.model = init_model(g.feature_dims(), config);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double l = loss(result.model, g, targets);
        if (!std::isfinite(l)) {
            throw domain_error("non-finite training loss at epoch " + std::to_string(epoch));
        }
        result.loss_trace.push_back(l);
        const auto grad = gradient(result.model, g, targets);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            result.model.params[i] -= config.learning_rate * grad[i];
        }
    }
    result.loss_trace.push_back(loss(result.model, g, targets));
    return result;
}

namespace {

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::string> top_k_ids(const std::vector<std::string>& ids,
                                   const std::vector<double>& values, std::size_t k) {
    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return ids[a] < ids[b];
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(ids[order[i]]);
    return out;
}

} // namespace

RankMetrics evaluate(const std::map<std::string, double>& pred,
                     const std::map<std::string, double>& truth, std::size_t k) {
    std::vector<std::string> ids;
    std::vector<double> p, t;
    for (const auto& [id, value] : pred) {
        auto it = truth.find(id);
        if (it == truth.end()) continue;
        ids.push_back(id);
        p.push_back(value);
        t.push_back(it->second);
    }
    if (ids.size() < 2) {
        throw domain_error("evaluate needs at least 2 shared ids");
    }
    if (k > ids.size()) {
        throw domain_error("evaluate k exceeds shared id count");
    }

    RankMetrics m;
    m.spearman_rho = pearson(average_ranks(p), average_ranks(t));

    // Kendall tau-b.
    long long concordant = 0, discordant = 0, ties_p = 0, ties_t = 0;
    const std::size_t n = ids.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dp = p[i] - p[j];
            const double dt = t[i] - t[j];
            if (dp == 0.0 && dt == 0.0) continue;
            if (dp == 0.0) ++ties_p;
            else if (dt == 0.0) ++ties_t;
            else if ((dp > 0.0) == (dt > 0.0)) ++concordant;
            else ++discordant;
        }
    }
    const double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
    double tie_adjust_p = 0.0, tie_adjust_t = 0.0;
    {
        // Tie group sizes per variable.
        auto tie_sum = [](std::vector<double> vals) {
            std::sort(vals.begin(), vals.end());
            double total = 0.0;
            std::size_t i = 0;
            while (i < vals.size()) {
                std::size_t j = i;
                while (j + 1 < vals.size() && vals[j + 1] == vals[i]) ++j;
                const double tcount = static_cast<double>(j - i + 1);
                total += tcount * (tcount - 1.0) / 2.0;
                i = j + 1;
            }
            return total;
        };
        tie_adjust_p = tie_sum(p);
        tie_adjust_t = tie_sum(t);
    }
    const double denom = std::sqrt((n0 - tie_adjust_p) * (n0 - tie_adjust_t));
    m.kendall_tau = denom == 0.0
                        ? 0.0
                        : (static_cast<double>(concordant) - static_cast<double>(discordant)) / denom;

    if (k > 0) {
        const auto top_p = top_k_ids(ids, p, k);
        const auto top_t = top_k_ids(ids, t, k);
        std::size_t overlap = 0;
        for (const auto& id : top_p) {
            if (std::find(top_t.begin(), top_t.end(), id) != top_t.end()) ++overlap;
        }
        m.precision_at_k = static_cast<double>(overlap) / static_cast<double>(k);
    }
    return m;
}

ValidationResult train_and_validate(const ThreatGraph& g,
                                    const std::map<std::string, double>& targets,
                                    const SevNetConfig& config) {
    std::vector<std::string> ids;
    ids.reserve(targets.size());
    for (const auto& [id, t] : targets) ids.push_back(id);

    if (ids.size() < 4) {
        throw domain_error("train_and_validate needs at least 4 labeled nodes");
    }

    // Deterministic Fisher-Yates from the config seed.
    std::mt19937_64 engine(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(
            (static_cast<double>(engine() >> 11) * 0x1.0p-53) * static_cast<double>(i));
        std::swap(ids[i - 1], ids[std::min(j, i - 1)]);
    }

    std::size_t train_count = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<double>(ids.size())));
    train_count = std::clamp<std::size_t>(train_count, 2, ids.size() - 2);

    std::map<std::string, double> train_targets, holdout_targets;
    ValidationResult result;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double t = targets.at(ids[i]);
        if (i < train_count) {
            train_targets[ids[i]] = t;
        } else {
            holdout_targets[ids[i]] = t;
            result.holdout_ids.push_back(ids[i]);
        }
    }

    TrainResult trained = train(g, train_targets, config);
    const auto pred = forward(trained.model, g);
    std::map<std::string, double> holdout_pred;
    for (const auto& [id, t] : holdout_targets) holdout_pred[id] = pred.at(id);
    const std::size_t k = std::min<std::size_t>(10, holdout_targets.size());
    result.metrics = evaluate(holdout_pred, holdout_targets, k);
    result.model = std::move(trained.model);
    return result;
}

double ablate_edge_family(const ThreatGraph& g, const std::map<std::string, double>& targets,
                          const SevNetConfig& config, graph::EdgeKind family) {
    const double rho_full = train_and_validate(g, targets, config).metrics.spearman_rho;
    const ThreatGraph reduced = g.remove_edge_family(family);
    const double rho_reduced = train_and_validate(reduced, targets, config).metrics.spearman_rho;
    return rho_full - rho_reduced;
}

namespace {

void enumerate_chains(const ThreatGraph& g, const std::string& node, std::size_t remaining,
                      std::vector<graph::Edge>& current, std::vector<std::vector<graph::Edge>>& out) {
    if (remaining == 0) return;
    for (const auto& e : g.edges()) {
        if (e.dst != node) continue;
        if (std::find(current.begin(), current.end(), e) != current.end()) continue;
        current.insert(current.begin(), e);
        out.push_back(current);
        enumerate_chains(g, e.src, remaining - 1, current, out);
        current.erase(current.begin());
    }
}

} // namespace

std::vector<EvidencePath> evidence_paths(const SevNetModel& model, const ThreatGraph& g,
                                         const std::string& target, std::size_t max_len,
                                         std::size_t top_n) {
    g.index_of(target);  // throws on unknown target

    std::vector<std::vector<graph::Edge>> chains;
    std::vector<graph::Edge> current;
    enumerate_chains(g, target, max_len, current, chains);
    if (chains.empty()) return {};

    const double base = forward(model, g).at(target);
    std::vector<EvidencePath> paths;
    paths.reserve(chains.size());
    for (auto& chain : chains) {
        const ThreatGraph reduced = g.remove_edges(chain);
        const double perturbed = forward(model, reduced).at(target);
        EvidencePath p;
        p.target = target;
        p.path = std::move(chain);
        p.contribution = std::max(0.0, base - perturbed);
        paths.push_back(std::move(p));
    }
    double max_contribution = 0.0;
    for (const auto& p : paths) max_contribution = std::max(max_contribution, p.contribution);
    if (max_contribution > 0.0) {
        for (auto& p : paths) p.contribution /= max_contribution;
    }
    std::sort(paths.begin(), paths.end(), [](const EvidencePath& a, const EvidencePath& b) {
        if (a.contribution != b.contribution) return a.contribution > b.contribution;
        return a.path < b.path;
    });
    if (paths.size() > top_n) paths.resize(top_n);
    return paths;
}

std::string save_checkpoint(const SevNetModel& model) {
    std::string out = "threatgraph-sevnet v1\n";
    out += "layers " + std::to_string(model.config.layers) + "\n";
    out += "input_dims " + std::to_string(model.input_dims) + "\n";
    out += "hidden_dims " + std::to_string(model.config.hidden_dims) + "\n";
    out += "relations " + std::to_string(kRelationCount) + "\n";
    out += "params " + std::to_string(model.params.size()) + "\n";
    char buf[40];
    for (double p : model.params) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", p);
        out += buf;
    }
    return out;
}

SevNetModel load_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "threatgraph-sevnet" || version != "v1") {
        throw schema_error("unrecognized checkpoint header");
    }
    SevNetModel model;
    std::string key;
    std::size_t relations = 0, count = 0;
    while (in >> key) {
        if (key == "layers") in >> model.config.layers;
        else if (key == "input_dims") in >> model.input_dims;
        else if (key == "hidden_dims") in >> model.config.hidden_dims;
        else if (key == "relations") in >> relations;
        else if (key == "params") {
            in >> count;
            break;
        } else {
            throw schema_error("unexpected checkpoint key: " + key);
        }
    }
    if (relations != kRelationCount) {
        throw schema_error("checkpoint relation count mismatch");
    }
    model.params.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> model.params[i])) {
            throw schema_error("checkpoint truncated at parameter " + std::to_string(i));
        }
    }
    if (model.param_count() != count) {
        throw schema_error("checkpoint parameter count inconsistent with dims");
    }
    return model;
}

} // namespace threatgraph::sevnet
