#pragma once

#include "threatgraph/clustering.hpp"
#include "threatgraph/features.hpp"
#include "threatgraph/ingest.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace threatgraph::graph {

enum class NodeKind {
    CVE,
    CPE,
    ISSUE,
    TECHNIQUE,
    ASR_CENTROID,
    STEALTH_CENTROID,
    COST_CENTROID,
};
inline constexpr std::size_t kNodeKindCount = 7;

enum class EdgeKind {
    AFFECTS,        // CVE -> CPE
    REPORTED_IN,    // CVE -> ISSUE
    REFERENCES,     // ISSUE -> TECHNIQUE
    SHARES_VECTOR,  // CVE -> TECHNIQUE
    MEMBER_OF,      // CVE -> ASR centroid
    STEALTH_SIM,    // CVE -> stealth centroid
    COST_SIM,       // CVE -> cost centroid
};
inline constexpr std::size_t kEdgeKindCount = 7;

// Forward and reverse directions of each family are distinct relations
// for message passing; 14 in total.
inline constexpr std::size_t kRelationCount = kEdgeKindCount * 2;

inline std::size_t relation_index(EdgeKind kind, bool reverse) {
    return static_cast<std::size_t>(kind) * 2 + (reverse ? 1 : 0);
}

const char* node_kind_name(NodeKind k);
const char* edge_kind_name(EdgeKind k);
NodeKind node_kind_from_name(const std::string& name);
EdgeKind edge_kind_from_name(const std::string& name);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::CVE;
    std::string source_ref;
    std::vector<double> features;
};

struct Edge {
    std::string src;
    EdgeKind kind = EdgeKind::AFFECTS;
    bool reverse = false;
    std::string dst;

    auto operator<=>(const Edge&) const = default;
};

// Immutable once finalized. Nodes are ordered by id; adjacency stores
// in-neighbor index lists per (node, relation), sorted by node id.
class ThreatGraph {
public:
    void add_node(std::string id, NodeKind kind, std::string source_ref,
                  std::vector<double> features);
    // Adds one directed edge. Duplicates collapse at finalize.
    void add_edge(const std::string& src, EdgeKind kind, const std::string& dst,
                  bool reverse = false);
    // Adds the forward edge and its reverse twin.
    void add_edge_pair(const std::string& src, EdgeKind kind, const std::string& dst);

    // Sorts, deduplicates, checks endpoint kinds against the catalog and
    // builds the adjacency index. Must be called exactly once.
    void finalize();
    bool finalized() const { return finalized_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t feature_dims() const { return feature_dims_; }

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_node(const std::string& id) const;
    const Node& node(const std::string& id) const;
    std::size_t index_of(const std::string& id) const;

    // In-neighbors of v under the relation, sorted by node id.
    std::vector<std::string> neighbors(const std::string& v, EdgeKind kind,
                                       bool reverse = false) const;
    const std::vector<std::size_t>& in_neighbors_indexed(std::size_t node_index,
                                                         std::size_t relation) const;

    // (AFFECTS out-degree, REPORTED_IN out-degree) of a CVE node.
    std::pair<std::size_t, std::size_t> degree_profile(const std::string& v) const;

    // New graph without the family's forward and reverse edges.
    ThreatGraph remove_edge_family(EdgeKind kind) const;

    // New graph without the listed directed edges.
    ThreatGraph remove_edges(const std::vector<Edge>& removed) const;

    // nodes.csv / edges.csv / features.csv, stable order, LF endings.
    std::string nodes_csv() const;
    std::string edges_csv() const;
    std::string features_csv() const;

private:
    std::vector<Node> nodes_;                     // sorted by id after finalize
    std::map<std::string, std::size_t> index_;    // id -> position in nodes_
    std::vector<Edge> edges_;                     // sorted after finalize
    // adjacency_[node * kRelationCount + relation] = in-neighbor indices
    std::vector<std::vector<std::size_t>> adjacency_;
    std::size_t feature_dims_ = 0;
    bool finalized_ = false;
};

struct GraphConfig {
    std::size_t tfidf_dims = 64;
    double jaccard_threshold = 0.15;  // strict: edge only when J > threshold
    std::vector<std::string> technique_url_prefixes = {
        "atlas.mitre.org/techniques/",
        "attack.mitre.org/techniques/",
    };
};

struct ClusterInputs {
    std::optional<clustering::ClusterModel> asr;
    std::optional<clustering::ClusterModel> stealth;
    std::optional<clustering::ClusterModel> cost;
};

// Applies the seven construction rules and adds a reverse edge for every
// forward edge. Node features are the TF-IDF vector of the node's text
// (CVE description, issue title, technique description, CPE textual form,
// empty for centroids) concatenated with a one-hot node-kind block.
// Cluster assignments naming unknown CVE ids are a SCHEMA error.
ThreatGraph build_graph(const std::vector<ingest::VulnRecord>& vulns,
                        const std::vector<ingest::IssueRecord>& issues,
                        const std::vector<ingest::TechniqueRecord>& techniques,
                        const ClusterInputs& clusters,
                        const features::TfidfModel& tfidf,
                        const GraphConfig& config);

} // namespace threatgraph::graph
