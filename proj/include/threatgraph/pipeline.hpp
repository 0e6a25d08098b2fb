#pragma once

#include "threatgraph/analytics.hpp"
#include "threatgraph/clustering.hpp"
#include "threatgraph/graph.hpp"
#include "threatgraph/ingest.hpp"
#include "threatgraph/sevnet.hpp"
#include "threatgraph/taxonomy.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace threatgraph::pipeline {

struct PipelinePaths {
    std::string nvd_feed;
    std::string issues;
    std::string techniques;
    std::string cve_metrics;
    std::string asr_studies;
    std::string proxies;
    std::string attack_counts;
    std::string cvs_inputs;
    std::string scenarios;
    std::string tactic_phase;
    std::string cross_level;
    std::string mitigations;
};

struct PipelineConfig {
    PipelinePaths paths;
    std::size_t tfidf_dims = 64;
    double jaccard_threshold = 0.15;
    std::size_t asr_k = 15;      // capped at the point count at desk scale
    std::size_t stealth_k = 10;
    std::size_t cost_k = 8;
    clustering::Linkage stealth_linkage = clustering::Linkage::AVERAGE;
    sevnet::SevNetConfig sevnet;
    double watch_poll_seconds = 1.0;
    double alert_threshold = 0.8;    // HIGH queue: s_hat > threshold
    double medium_threshold = 0.5;   // MEDIUM queue: medium < s_hat <= alert
    std::array<double, 3> cvs_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double pareto_threshold = 0.8;
    std::string checkpoint;          // optional model for predict/watch
};

// Reads the JSON config; relative paths resolve against the config file's
// directory. Threshold or dimension violations are CONFIG errors.
PipelineConfig load_config(const std::string& config_path);

enum class AlertQueue { HIGH, MEDIUM, WATCH };

struct Alert {
    std::string cve_id;
    double s_hat = 0.0;
    AlertQueue queue = AlertQueue::WATCH;
    std::int64_t emitted_at = 0;
};

AlertQueue route_alert(double s_hat, double alert_threshold, double medium_threshold);
const char* alert_queue_name(AlertQueue q);

// Per-CVE scalar columns feeding the three clusterings: attack success
// rate, the two stealth metrics and the three cost metrics.
struct CveMetricsRow {
    std::string cve_id;
    std::optional<double> asr;
    double stealth_evasion = 0.0;
    double stealth_detectability = 0.0;
    double cost_flops = 0.0;
    double cost_gpu_hours = 0.0;
    double cost_usd = 0.0;
};
std::vector<CveMetricsRow> load_cve_metrics(const std::string& csv_text);

// In-memory corpus shared by the pipeline commands.
struct Corpus {
    std::vector<ingest::VulnRecord> vulns;
    std::vector<ingest::IssueRecord> issues;
    std::vector<ingest::TechniqueRecord> techniques;
    std::vector<CveMetricsRow> metrics;
    features::TfidfModel tfidf;
};
Corpus load_corpus(const PipelineConfig& config);

graph::ClusterInputs fit_clusters(const Corpus& corpus, const PipelineConfig& config,
                                  std::uint64_t seed);
graph::ThreatGraph build_pipeline_graph(const Corpus& corpus, const PipelineConfig& config,
                                        std::uint64_t seed);

// Model targets: composite risk / 10 from the feed CVSS fields, with
// absent fields filled as 0 for targets only.
std::map<std::string, double> training_targets(const std::vector<ingest::VulnRecord>& vulns);

// Commands. Each writes its artifacts under out_dir and is idempotent
// given identical inputs and seeds.
void run_ingest(const PipelineConfig& config, const std::string& out_dir);
void run_build(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed);
void run_score(const PipelineConfig& config, const std::string& out_dir);
void run_cluster(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed);
void run_train(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed);
void run_predict(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed);
void run_report(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed);

struct WatchOptions {
    std::string drop_dir;
    std::string out_dir;
    // 0 = poll until interrupted; tests bound the sweep count.
    std::size_t max_polls = 0;
    // When set, alerts carry this timestamp instead of wall-clock time.
    std::optional<std::int64_t> fixed_time;
};

// Polls the drop directory for NVD-format files, scores unseen CVEs
// (formula-based, plus model-based when a checkpoint is configured) and
// appends alerts to alerts.jsonl. A cve_id is never alerted twice; the
// seen set persists in watch_seen.txt.
void run_watch(const PipelineConfig& config, const WatchOptions& options);

// Filesystem helpers shared with the tests.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace threatgraph::pipeline
