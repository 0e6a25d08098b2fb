#include "threatgraph/graph.hpp"
#include "threatgraph/csv.hpp"
#include "threatgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace threatgraph::graph {

namespace {

struct KindPair {
    NodeKind src;
    NodeKind dst;
};

KindPair forward_kinds(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::AFFECTS:       return {NodeKind::CVE, NodeKind::CPE};
        case EdgeKind::REPORTED_IN:   return {NodeKind::CVE, NodeKind::ISSUE};
        case EdgeKind::REFERENCES:    return {NodeKind::ISSUE, NodeKind::TECHNIQUE};
        case EdgeKind::SHARES_VECTOR: return {NodeKind::CVE, NodeKind::TECHNIQUE};
        case EdgeKind::MEMBER_OF:     return {NodeKind::CVE, NodeKind::ASR_CENTROID};
        case EdgeKind::STEALTH_SIM:   return {NodeKind::CVE, NodeKind::STEALTH_CENTROID};
        case EdgeKind::COST_SIM:      return {NodeKind::CVE, NodeKind::COST_CENTROID};
    }
    return {NodeKind::CVE, NodeKind::CPE};
}

} // namespace

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::CVE:              return "CVE";
        case NodeKind::CPE:              return "CPE";
        case NodeKind::ISSUE:            return "ISSUE";
        case NodeKind::TECHNIQUE:        return "TECHNIQUE";
        case NodeKind::ASR_CENTROID:     return "ASR_CENTROID";
        case NodeKind::STEALTH_CENTROID: return "STEALTH_CENTROID";
        case NodeKind::COST_CENTROID:    return "COST_CENTROID";
    }
    return "CVE";
}

const char* edge_kind_name(EdgeKind k) {
    switch (k) {
        case EdgeKind::AFFECTS:       return "AFFECTS";
        case EdgeKind::REPORTED_IN:   return "REPORTED_IN";
        case EdgeKind::REFERENCES:    return "REFERENCES";
        case EdgeKind::SHARES_VECTOR: return "SHARES_VECTOR";
        case EdgeKind::MEMBER_OF:     return "MEMBER_OF";
        case EdgeKind::STEALTH_SIM:   return "STEALTH_SIM";
        case EdgeKind::COST_SIM:      return "COST_SIM";
    }
    return "AFFECTS";
}

NodeKind node_kind_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kNodeKindCount; ++i) {
        const auto k = static_cast<NodeKind>(i);
        if (name == node_kind_name(k)) return k;
    }
    throw schema_error("unknown node kind: " + name);
}

EdgeKind edge_kind_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kEdgeKindCount; ++i) {
        const auto k = static_cast<EdgeKind>(i);
        if (name == edge_kind_name(k)) return k;
    }
    throw schema_error("unknown edge kind: " + name);
}

void ThreatGraph::add_node(std::string id, NodeKind kind, std::string source_ref,
                           std::vector<double> features) {
    if (finalized_) throw schema_error("graph is immutable after finalize");
    if (index_.count(id)) throw schema_error("duplicate node id: " + id);
    index_.emplace(id, nodes_.size());
    nodes_.push_back({std::move(id), kind, std::move(source_ref), std::move(features)});
}

void ThreatGraph::add_edge(const std::string& src, EdgeKind kind, const std::string& dst,
                           bool reverse) {
    if (finalized_) throw schema_error("graph is immutable after finalize");
    edges_.push_back({src, kind, reverse, dst});
}

void ThreatGraph::add_edge_pair(const std::string& src, EdgeKind kind, const std::string& dst) {
    add_edge(src, kind, dst, false);
    add_edge(dst, kind, src, true);
}

void ThreatGraph::finalize() {
    if (finalized_) throw schema_error("finalize called twice");

    std::sort(nodes_.begin(), nodes_.end(),
              [](const Node& a, const Node& b) { return a.id < b.id; });
    index_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i].id, i);

    feature_dims_ = nodes_.empty() ? 0 : nodes_.front().features.size();
    for (const auto& n : nodes_) {
        if (n.features.size() != feature_dims_) {
            throw schema_error("non-uniform feature dims at node " + n.id);
        }
        for (double v : n.features) {
            if (!std::isfinite(v)) throw schema_error("non-finite feature at node " + n.id);
        }
    }

    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    for (const auto& e : edges_) {
        auto si = index_.find(e.src);
        auto di = index_.find(e.dst);
        if (si == index_.end() || di == index_.end()) {
            throw schema_error("dangling edge endpoint: " + e.src + " -> " + e.dst);
        }
        const KindPair expected = forward_kinds(e.kind);
        const NodeKind want_src = e.reverse ? expected.dst : expected.src;
        const NodeKind want_dst = e.reverse ? expected.src : expected.dst;
        if (nodes_[si->second].kind != want_src || nodes_[di->second].kind != want_dst) {
            throw schema_error(std::string("edge endpoint kinds do not match catalog for ") +
                               edge_kind_name(e.kind) + ": " + e.src + " -> " + e.dst);
        }
    }

    adjacency_.assign(nodes_.size() * kRelationCount, {});
    for (const auto& e : edges_) {
        const std::size_t dst = index_.at(e.dst);
        const std::size_t rel = relation_index(e.kind, e.reverse);
        adjacency_[dst * kRelationCount + rel].push_back(index_.at(e.src));
    }
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());

    finalized_ = true;
}

bool ThreatGraph::has_node(const std::string& id) const { return index_.count(id) > 0; }

const Node& ThreatGraph::node(const std::string& id) const {
    return nodes_[index_of(id)];
}

std::size_t ThreatGraph::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw schema_error("unknown node: " + id);
    return it->second;
}

std::vector<std::string> ThreatGraph::neighbors(const std::string& v, EdgeKind kind,
                                                bool reverse) const {
    const std::size_t vi = index_of(v);
    const auto& list = adjacency_[vi * kRelationCount + relation_index(kind, reverse)];
    std::vector<std::string> out;
    out.reserve(list.size());
    for (std::size_t u : list) out.push_back(nodes_[u].id);
    return out;
}

const std::vector<std::size_t>& ThreatGraph::in_neighbors_indexed(std::size_t node_index,
                                                                  std::size_t relation) const {
    return adjacency_[node_index * kRelationCount + relation];
}

std::pair<std::size_t, std::size_t> ThreatGraph::degree_profile(const std::string& v) const {
    const Node& n = node(v);
    if (n.kind != NodeKind::CVE) {
        throw schema_error("degree_profile requires a CVE node, got " +
                           std::string(node_kind_name(n.kind)) + " " + v);
    }
    std::size_t cpe_degree = 0, issue_degree = 0;
    for (const auto& e : edges_) {
        if (e.reverse || e.src != v) continue;
        if (e.kind == EdgeKind::AFFECTS) ++cpe_degree;
        if (e.kind == EdgeKind::REPORTED_IN) ++issue_degree;
    }
    return {cpe_degree, issue_degree};
}

ThreatGraph ThreatGraph::remove_edge_family(EdgeKind kind) const {
    ThreatGraph out;
    for (const auto& n : nodes_) out.add_node(n.id, n.kind, n.source_ref, n.features);
    for (const auto& e : edges_) {
        if (e.kind != kind) out.add_edge(e.src, e.kind, e.dst, e.reverse);
    }
    out.finalize();
    return out;
}

ThreatGraph ThreatGraph::remove_edges(const std::vector<Edge>& removed) const {
    std::set<Edge> drop(removed.begin(), removed.end());
    ThreatGraph out;
    for (const auto& n : nodes_) out.add_node(n.id, n.kind, n.source_ref, n.features);
    for (const auto& e : edges_) {
        if (!drop.count(e)) out.add_edge(e.src, e.kind, e.dst, e.reverse);
    }
    out.finalize();
    return out;
}

std::string ThreatGraph::nodes_csv() const {
    std::string out = "id,kind,source_ref\n";
    for (const auto& n : nodes_) {
        out += csv::quote(n.id);
        out += ",";
        out += node_kind_name(n.kind);
        out += ",";
        out += csv::quote(n.source_ref);
        out += "\n";
    }
    return out;
}

std::string ThreatGraph::edges_csv() const {
    std::string out = "src,kind,dst,is_reverse\n";
    for (const auto& e : edges_) {
        out += csv::quote(e.src);
        out += ",";
        out += edge_kind_name(e.kind);
        out += ",";
        out += csv::quote(e.dst);
        out += e.reverse ? ",1\n" : ",0\n";
    }
    return out;
}

std::string ThreatGraph::features_csv() const {
    std::string out = "id";
    for (std::size_t d = 0; d < feature_dims_; ++d) out += ",dim_" + std::to_string(d);
    out += "\n";
    char buf[64];
    for (const auto& n : nodes_) {
        out += csv::quote(n.id);
        for (double v : n.features) {
            std::snprintf(buf, sizeof(buf), ",%.9g", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

namespace {

std::vector<double> node_features(const features::TfidfModel& tfidf, const std::string& text,
                                  std::size_t dims, NodeKind kind) {
    std::vector<double> f = text.empty() ? std::vector<double>(dims, 0.0)
                                         : features::vectorize(tfidf, text, dims);
    f.resize(dims + kNodeKindCount, 0.0);
    f[dims + static_cast<std::size_t>(kind)] = 1.0;
    return f;
}

// Matches the technique id either verbatim or in URL form (dots become
// slashes) behind one of the configured catalog prefixes.
bool references_technique(const std::string& body, const ingest::TechniqueRecord& tech,
                          const std::vector<std::string>& prefixes) {
    if (body.find(tech.technique_id) != std::string::npos) return true;
    std::string slashed = tech.technique_id;
    std::replace(slashed.begin(), slashed.end(), '.', '/');
    for (const auto& prefix : prefixes) {
        if (body.find(prefix + slashed) != std::string::npos) return true;
    }
    return false;
}

void add_centroid_family(ThreatGraph& g, const std::optional<clustering::ClusterModel>& model,
                         const std::string& prefix, NodeKind kind, EdgeKind edge,
                         const std::set<std::string>& cve_ids, std::size_t tfidf_dims) {
    if (!model) return;
    for (std::size_t c = 0; c < model->k; ++c) {
        const std::string id = prefix + ":c" + std::to_string(c);
        std::vector<double> f(tfidf_dims + kNodeKindCount, 0.0);
        f[tfidf_dims + static_cast<std::size_t>(kind)] = 1.0;
        g.add_node(id, kind, prefix + " centroid " + std::to_string(c), std::move(f));
    }
    for (const auto& [cve, cluster] : model->assignments) {
        if (!cve_ids.count(cve)) {
            throw schema_error(prefix + " cluster assignment references unknown CVE " + cve);
        }
        g.add_edge_pair(cve, edge, prefix + ":c" + std::to_string(cluster));
    }
}

} // namespace

ThreatGraph build_graph(const std::vector<ingest::VulnRecord>& vulns,
                        const std::vector<ingest::IssueRecord>& issues,
                        const std::vector<ingest::TechniqueRecord>& techniques,
                        const ClusterInputs& clusters,
                        const features::TfidfModel& tfidf,
                        const GraphConfig& config) {
    ThreatGraph g;
    const std::size_t dims = config.tfidf_dims;

    std::set<std::string> cve_ids;
    for (const auto& v : vulns) {
        if (cve_ids.count(v.cve_id)) continue;
        cve_ids.insert(v.cve_id);
        g.add_node(v.cve_id, NodeKind::CVE, v.cve_id,
                   node_features(tfidf, v.description, dims, NodeKind::CVE));
    }

    std::set<std::string> cpe_ids;
    for (const auto& v : vulns) {
        for (const auto& cpe : v.cpes) {
            const std::string id = cpe.to_string();
            if (cpe_ids.insert(id).second) {
                g.add_node(id, NodeKind::CPE, id, node_features(tfidf, id, dims, NodeKind::CPE));
            }
            g.add_edge_pair(v.cve_id, EdgeKind::AFFECTS, id);
        }
    }

    for (const auto& issue : issues) {
        const std::string id = issue.repo + "#" + std::to_string(issue.issue_id);
        g.add_node(id, NodeKind::ISSUE, id, node_features(tfidf, issue.title, dims, NodeKind::ISSUE));
        for (const auto& cve : issue.extracted_cves) {
            if (cve_ids.count(cve)) g.add_edge_pair(cve, EdgeKind::REPORTED_IN, id);
        }
    }

    for (const auto& tech : techniques) {
        g.add_node(tech.technique_id, NodeKind::TECHNIQUE, tech.technique_id,
                   node_features(tfidf, tech.description, dims, NodeKind::TECHNIQUE));
    }

    for (const auto& issue : issues) {
        const std::string id = issue.repo + "#" + std::to_string(issue.issue_id);
        for (const auto& tech : techniques) {
            if (references_technique(issue.body, tech, config.technique_url_prefixes)) {
                g.add_edge_pair(id, EdgeKind::REFERENCES, tech.technique_id);
            }
        }
    }

    for (const auto& v : vulns) {
        const auto cve_vec = features::vectorize(tfidf, v.description, dims);
        for (const auto& tech : techniques) {
            const auto tech_vec = features::vectorize(tfidf, tech.description, dims);
            if (features::weighted_jaccard(cve_vec, tech_vec) > config.jaccard_threshold) {
                g.add_edge_pair(v.cve_id, EdgeKind::SHARES_VECTOR, tech.technique_id);
            }
        }
    }

    add_centroid_family(g, clusters.asr, "asr", NodeKind::ASR_CENTROID, EdgeKind::MEMBER_OF,
                        cve_ids, dims);
    add_centroid_family(g, clusters.stealth, "stealth", NodeKind::STEALTH_CENTROID,
                        EdgeKind::STEALTH_SIM, cve_ids, dims);
    add_centroid_family(g, clusters.cost, "cost", NodeKind::COST_CENTROID, EdgeKind::COST_SIM,
                        cve_ids, dims);

    g.finalize();
    return g;
}

} // namespace threatgraph::graph
