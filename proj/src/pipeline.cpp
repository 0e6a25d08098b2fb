#include "threatgraph/pipeline.hpp"
#include "threatgraph/csv.hpp"
#include "threatgraph/error.hpp"
#include "threatgraph/scoring.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

namespace threatgraph::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out << content;
}

namespace {

bool log_enabled() {
    const char* level = std::getenv("THREATGRAPH_LOG");
    return level != nullptr && *level != '\0' && std::string(level) != "quiet";
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::fprintf(stderr, "threatgraph: %s\n", msg.c_str());
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string resolve(const fs::path& base, const std::string& value) {
    if (value.empty()) return value;
    fs::path p(value);
    if (p.is_absolute()) return p.string();
    return (base / p).lexically_normal().string();
}

} // namespace

PipelineConfig load_config(const std::string& config_path) {
    json doc;
    try {
        doc = json::parse(read_file(config_path));
    } catch (const json::parse_error& e) {
        throw config_error("malformed config: " + std::string(e.what()));
    }
    const fs::path base = fs::path(config_path).parent_path();

    PipelineConfig cfg;
    const json paths = doc.value("paths", json::object());
    auto path_of = [&](const char* key) { return resolve(base, paths.value(key, "")); };
    cfg.paths.nvd_feed = path_of("nvd_feed");
    cfg.paths.issues = path_of("issues");
    cfg.paths.techniques = path_of("techniques");
    cfg.paths.cve_metrics = path_of("cve_metrics");
    cfg.paths.asr_studies = path_of("asr_studies");
    cfg.paths.proxies = path_of("proxies");
    cfg.paths.attack_counts = path_of("attack_counts");
    cfg.paths.cvs_inputs = path_of("cvs_inputs");
    cfg.paths.scenarios = path_of("scenarios");
    cfg.paths.tactic_phase = path_of("tactic_phase");
    cfg.paths.cross_level = path_of("cross_level");
    cfg.paths.mitigations = path_of("mitigations");

    cfg.tfidf_dims = doc.value("tfidf_dims", cfg.tfidf_dims);
    cfg.jaccard_threshold = doc.value("jaccard_threshold", cfg.jaccard_threshold);
    if (doc.contains("cluster_k")) {
        cfg.asr_k = doc["cluster_k"].value("asr", cfg.asr_k);
        cfg.stealth_k = doc["cluster_k"].value("stealth", cfg.stealth_k);
        cfg.cost_k = doc["cluster_k"].value("cost", cfg.cost_k);
    }
    if (doc.contains("stealth_linkage")) {
        const std::string linkage = doc["stealth_linkage"].get<std::string>();
        if (linkage == "average") cfg.stealth_linkage = clustering::Linkage::AVERAGE;
        else if (linkage == "single") cfg.stealth_linkage = clustering::Linkage::SINGLE;
        else if (linkage == "complete") cfg.stealth_linkage = clustering::Linkage::COMPLETE;
        else throw config_error("stealth_linkage must be average, single or complete");
    }
    if (doc.contains("sevnet")) {
        const json& s = doc["sevnet"];
        cfg.sevnet.layers = s.value("layers", cfg.sevnet.layers);
        cfg.sevnet.hidden_dims = s.value("hidden_dims", cfg.sevnet.hidden_dims);
        cfg.sevnet.learning_rate = s.value("learning_rate", cfg.sevnet.learning_rate);
        cfg.sevnet.epochs = s.value("epochs", cfg.sevnet.epochs);
        cfg.sevnet.seed = s.value("seed", cfg.sevnet.seed);
        cfg.sevnet.high_sev_weight_alpha =
            s.value("high_sev_weight_alpha", cfg.sevnet.high_sev_weight_alpha);
        cfg.sevnet.train_fraction = s.value("train_fraction", cfg.sevnet.train_fraction);
    }
    if (doc.contains("watch")) {
        const json& w = doc["watch"];
        cfg.watch_poll_seconds = w.value("poll_seconds", cfg.watch_poll_seconds);
        cfg.alert_threshold = w.value("alert_threshold", cfg.alert_threshold);
        cfg.medium_threshold = w.value("medium_threshold", cfg.medium_threshold);
    }
    if (doc.contains("cvs_weights")) {
        const auto& w = doc["cvs_weights"];
        if (!w.is_array() || w.size() != 3) {
            throw config_error("cvs_weights must hold exactly 3 values");
        }
        for (std::size_t i = 0; i < 3; ++i) cfg.cvs_weights[i] = w[i].get<double>();
    }
    cfg.pareto_threshold = doc.value("pareto_threshold", cfg.pareto_threshold);
    cfg.checkpoint = resolve(base, doc.value("checkpoint", ""));

    if (cfg.tfidf_dims < 1) throw config_error("tfidf_dims must be >= 1");
    if (!(cfg.jaccard_threshold > 0.0 && cfg.jaccard_threshold <= 1.0)) {
        throw config_error("jaccard_threshold must lie in (0,1]");
    }
    if (!(cfg.alert_threshold > 0.0 && cfg.alert_threshold <= 1.0) ||
        !(cfg.medium_threshold > 0.0 && cfg.medium_threshold <= 1.0) ||
        cfg.medium_threshold > cfg.alert_threshold) {
        throw config_error("watch thresholds must lie in (0,1] with medium <= alert");
    }
    return cfg;
}

AlertQueue route_alert(double s_hat, double alert_threshold, double medium_threshold) {
    if (s_hat > alert_threshold) return AlertQueue::HIGH;
    if (s_hat > medium_threshold) return AlertQueue::MEDIUM;
    return AlertQueue::WATCH;
}

const char* alert_queue_name(AlertQueue q) {
    switch (q) {
        case AlertQueue::HIGH:   return "HIGH";
        case AlertQueue::MEDIUM: return "MEDIUM";
        case AlertQueue::WATCH:  return "WATCH";
    }
    return "WATCH";
}

std::vector<CveMetricsRow> load_cve_metrics(const std::string& csv_text) {
    const auto rows = csv::parse(csv_text);
    if (rows.empty()) throw schema_error("cve metrics CSV is empty");
    std::vector<CveMetricsRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() < 7) {
            throw schema_error("cve metrics row " + std::to_string(r) + " needs 7 columns");
        }
        CveMetricsRow row;
        row.cve_id = f[0];
        if (!f[1].empty()) row.asr = std::stod(f[1]);
        row.stealth_evasion = std::stod(f[2]);
        row.stealth_detectability = std::stod(f[3]);
        row.cost_flops = std::stod(f[4]);
        row.cost_gpu_hours = std::stod(f[5]);
        row.cost_usd = std::stod(f[6]);
        out.push_back(std::move(row));
    }
    return out;
}

Corpus load_corpus(const PipelineConfig& config) {
    Corpus corpus;
    auto feed = ingest::parse_nvd_feed(read_file(config.paths.nvd_feed));
    for (const auto& e : feed.errors) {
        log_line("feed entry " + std::to_string(e.index) + " skipped: " + e.message);
    }
    corpus.vulns = std::move(feed.records);

    auto issues = ingest::load_issue_dump(read_file(config.paths.issues));
    for (const auto& e : issues.errors) {
        log_line("issue line " + std::to_string(e.index) + " skipped: " + e.message);
    }
    corpus.issues = std::move(issues.records);
    corpus.techniques = ingest::load_technique_catalog(read_file(config.paths.techniques));
    if (!config.paths.cve_metrics.empty()) {
        corpus.metrics = load_cve_metrics(read_file(config.paths.cve_metrics));
    }

    std::vector<std::string> texts;
    for (const auto& v : corpus.vulns) texts.push_back(v.description);
    for (const auto& v : corpus.vulns) {
        for (const auto& cpe : v.cpes) texts.push_back(cpe.to_string());
    }
    for (const auto& i : corpus.issues) texts.push_back(i.title);
    for (const auto& t : corpus.techniques) texts.push_back(t.description);
    corpus.tfidf = features::fit_tfidf(texts);
    return corpus;
}

namespace {

struct MetricMatrices {
    features::FeatureMatrix asr;      // 1 column, rows with a numeric ASR only
    features::FeatureMatrix stealth;  // evasion, detectability
    features::FeatureMatrix cost;     // flops, gpu hours, usd
};

MetricMatrices metric_matrices(const Corpus& corpus) {
    std::set<std::string> known;
    for (const auto& v : corpus.vulns) known.insert(v.cve_id);

    MetricMatrices m;
    m.asr.dims = 1;
    m.stealth.dims = 2;
    m.cost.dims = 3;
    for (const auto& row : corpus.metrics) {
        if (!known.count(row.cve_id)) {
            throw schema_error("cve metrics reference unknown CVE " + row.cve_id);
        }
        if (row.asr) {
            m.asr.ids.push_back(row.cve_id);
            m.asr.values.push_back(*row.asr);
        }
        m.stealth.ids.push_back(row.cve_id);
        m.stealth.values.push_back(row.stealth_evasion);
        m.stealth.values.push_back(row.stealth_detectability);
        m.cost.ids.push_back(row.cve_id);
        m.cost.values.push_back(row.cost_flops);
        m.cost.values.push_back(row.cost_gpu_hours);
        m.cost.values.push_back(row.cost_usd);
    }
    return m;
}

} // namespace

graph::ClusterInputs fit_clusters(const Corpus& corpus, const PipelineConfig& config,
                                  std::uint64_t seed) {
    const MetricMatrices matrices = metric_matrices(corpus);
    const features::FeatureMatrix& asr_points = matrices.asr;
    const features::FeatureMatrix& stealth_points = matrices.stealth;
    const features::FeatureMatrix& cost_points = matrices.cost;

    graph::ClusterInputs clusters;
    if (!asr_points.ids.empty()) {
        clusters.asr = clustering::kmeans(
            asr_points, std::min(config.asr_k, asr_points.ids.size()), seed);
    }
    if (!stealth_points.ids.empty()) {
        clusters.stealth = clustering::agglomerative(
            stealth_points, std::min(config.stealth_k, stealth_points.ids.size()),
            config.stealth_linkage);
    }
    if (!cost_points.ids.empty()) {
        clusters.cost = clustering::gmm_fit(
            cost_points, std::min(config.cost_k, cost_points.ids.size()), seed);
    }
    return clusters;
}

graph::ThreatGraph build_pipeline_graph(const Corpus& corpus, const PipelineConfig& config,
                                        std::uint64_t seed) {
    graph::GraphConfig gc;
    gc.tfidf_dims = config.tfidf_dims;
    gc.jaccard_threshold = config.jaccard_threshold;
    return graph::build_graph(corpus.vulns, corpus.issues, corpus.techniques,
                              fit_clusters(corpus, config, seed), corpus.tfidf, gc);
}

std::map<std::string, double> training_targets(const std::vector<ingest::VulnRecord>& vulns) {
    std::map<std::string, double> targets;
    for (const auto& v : vulns) {
        const double base = v.cvss_base.value_or(0.0);
        const double es = v.cvss_exploitability.value_or(0.0);
        const double is = v.cvss_impact.value_or(0.0);
        targets[v.cve_id] = scoring::composite_risk(base, es, is) / 10.0;
    }
    return targets;
}

void run_ingest(const PipelineConfig& config, const std::string& out_dir) {
    Corpus corpus = load_corpus(config);
    write_file(out_dir + "/canonical_feed.json", ingest::serialize_nvd_feed(corpus.vulns));

    std::string issues;
    for (const auto& i : corpus.issues) {
        json obj;
        obj["repo"] = i.repo;
        obj["issue_id"] = i.issue_id;
        obj["title"] = i.title;
        obj["body"] = i.body;
        obj["timestamp"] = i.timestamp;
        obj["extracted_cves"] = i.extracted_cves;
        issues += obj.dump() + "\n";
    }
    write_file(out_dir + "/issues_canonical.jsonl", issues);

    std::string summary;
    summary += "vulns " + std::to_string(corpus.vulns.size()) + "\n";
    summary += "issues " + std::to_string(corpus.issues.size()) + "\n";
    summary += "techniques " + std::to_string(corpus.techniques.size()) + "\n";
    summary += "vocabulary " + std::to_string(corpus.tfidf.vocabulary.size()) + "\n";
    write_file(out_dir + "/ingest_summary.txt", summary);
    log_line("ingest wrote " + std::to_string(corpus.vulns.size()) + " vulns");
}

void run_build(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed) {
    Corpus corpus = load_corpus(config);
    const auto g = build_pipeline_graph(corpus, config, seed);
    write_file(out_dir + "/graph/nodes.csv", g.nodes_csv());
    write_file(out_dir + "/graph/edges.csv", g.edges_csv());
    write_file(out_dir + "/graph/features.csv", g.features_csv());
    log_line("graph: " + std::to_string(g.node_count()) + " nodes, " +
             std::to_string(g.edge_count()) + " edges");
}

void run_score(const PipelineConfig& config, const std::string& out_dir) {
    Corpus corpus = load_corpus(config);
    std::map<std::string, const ingest::VulnRecord*> sorted;
    for (const auto& v : corpus.vulns) sorted[v.cve_id] = &v;

    std::string out = "cve_id,base,impact,exploitability,composite,severity,priority\n";
    for (const auto& [id, v] : sorted) {
        out += id + ",";
        out += v->cvss_base ? fmt(*v->cvss_base, "%.3f") : "";
        out += ",";
        out += v->cvss_impact ? fmt(*v->cvss_impact, "%.3f") : "";
        out += ",";
        out += v->cvss_exploitability ? fmt(*v->cvss_exploitability, "%.3f") : "";
        out += ",";
        if (v->cvss_base && v->cvss_impact && v->cvss_exploitability) {
            const double composite =
                scoring::composite_risk(*v->cvss_base, *v->cvss_exploitability, *v->cvss_impact);
            out += fmt(composite, "%.3f");
            out += ",";
            out += scoring::severity_name(scoring::severity_bucket(*v->cvss_base));
            out += ",";
            out += scoring::priority_name(
                scoring::priority_bucket(std::clamp(composite / 10.0, 0.0, 1.0)));
        } else {
            out += ",,";
        }
        out += "\n";
    }
    write_file(out_dir + "/scores.csv", out);
}

namespace {

std::string assignments_csv(const clustering::ClusterModel& model) {
    std::string out = "cve_id,cluster\n";
    for (const auto& [id, cluster] : model.assignments) {
        out += id + "," + std::to_string(cluster) + "\n";
    }
    return out;
}

} // namespace

void run_cluster(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed) {
    Corpus corpus = load_corpus(config);
    const auto matrices = metric_matrices(corpus);
    write_file(out_dir + "/features_asr.csv", matrices.asr.to_csv());
    write_file(out_dir + "/features_stealth.csv", matrices.stealth.to_csv());
    write_file(out_dir + "/features_cost.csv", matrices.cost.to_csv());

    const auto clusters = fit_clusters(corpus, config, seed);
    if (clusters.asr) write_file(out_dir + "/clusters_asr.csv", assignments_csv(*clusters.asr));
    if (clusters.stealth) {
        write_file(out_dir + "/clusters_stealth.csv", assignments_csv(*clusters.stealth));
    }
    if (clusters.cost) write_file(out_dir + "/clusters_cost.csv", assignments_csv(*clusters.cost));
}

void run_train(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed) {
    Corpus corpus = load_corpus(config);
    const auto g = build_pipeline_graph(corpus, config, seed);
    auto cfg = config.sevnet;
    cfg.seed = seed;
    const auto result = sevnet::train(g, training_targets(corpus.vulns), cfg);
    write_file(out_dir + "/sevnet_checkpoint.txt", sevnet::save_checkpoint(result.model));
    std::string trace = "epoch,loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
        trace += std::to_string(i) + "," + fmt(result.loss_trace[i], "%.9g") + "\n";
    }
    write_file(out_dir + "/loss_trace.csv", trace);
    log_line("train: final loss " + fmt(result.loss_trace.back(), "%.6g"));
}

namespace {

std::string checkpoint_path_for(const PipelineConfig& config, const std::string& out_dir) {
    if (!config.checkpoint.empty()) return config.checkpoint;
    return out_dir + "/sevnet_checkpoint.txt";
}

std::string predictions_csv(const graph::ThreatGraph& g, const sevnet::SevNetModel& model) {
    const auto scores = sevnet::forward(model, g);
    std::string out = "id,s_hat,priority\n";
    for (const auto& [id, s] : scores) {
        if (g.node(id).kind != graph::NodeKind::CVE) continue;
        out += id + "," + fmt(s, "%.6f") + "," +
               scoring::priority_name(scoring::priority_bucket(s)) + "\n";
    }
    return out;
}

} // namespace

void run_predict(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed) {
    Corpus corpus = load_corpus(config);
    const auto g = build_pipeline_graph(corpus, config, seed);
    const auto model = sevnet::load_checkpoint(read_file(checkpoint_path_for(config, out_dir)));
    write_file(out_dir + "/predictions.csv", predictions_csv(g, model));
}

void run_report(const PipelineConfig& config, const std::string& out_dir, std::uint64_t seed) {
    Corpus corpus = load_corpus(config);

    // Pareto over CPE -> distinct CVE counts.
    std::map<std::string, std::set<std::string>> cves_per_cpe;
    for (const auto& v : corpus.vulns) {
        for (const auto& cpe : v.cpes) cves_per_cpe[cpe.to_string()].insert(v.cve_id);
    }
    if (!cves_per_cpe.empty()) {
        std::map<std::string, long> counts;
        for (const auto& [cpe, cves] : cves_per_cpe) counts[cpe] = static_cast<long>(cves.size());
        const auto result = analytics::pareto(counts, config.pareto_threshold);
        std::string out = "cpe,count,cumulative_share\n";
        for (const auto& [name, count, share] : result.curve) {
            out += csv::quote(name) + "," + std::to_string(count) + "," + fmt(share) + "\n";
        }
        out += "# prefix " + std::to_string(result.prefix_size) + " of " +
               std::to_string(result.curve.size()) + " CPEs reaches share " +
               fmt(result.prefix_share) + " at threshold " + fmt(config.pareto_threshold) + "\n";
        write_file(out_dir + "/pareto.csv", out);

        // CVE count vs. issue count per CPE, with the linear fit.
        std::vector<std::pair<double, double>> points;
        for (const auto& [cpe, cves] : cves_per_cpe) {
            std::set<std::string> issues;
            for (const auto& issue : corpus.issues) {
                for (const auto& cve : issue.extracted_cves) {
                    if (cves.count(cve)) {
                        issues.insert(issue.repo + "#" + std::to_string(issue.issue_id));
                    }
                }
            }
            points.emplace_back(static_cast<double>(cves.size()),
                                static_cast<double>(issues.size()));
        }
        std::string ols = "";
        try {
            const auto fit = analytics::ols_fit(points);
            ols = "slope " + fmt(fit.slope) + "\nintercept " + fmt(fit.intercept) + "\nr " +
                  fmt(fit.r) + "\n";
        } catch (const Error& e) {
            ols = std::string("degenerate fit: ") + e.what() + "\n";
        }
        write_file(out_dir + "/ols_fit.txt", ols);
    }

    // Deployment-normalized attack frequency table.
    if (!config.paths.attack_counts.empty()) {
        auto rows = analytics::load_attack_counts_csv(read_file(config.paths.attack_counts));
        std::map<std::string, double> weights;
        if (!config.paths.proxies.empty()) {
            weights = analytics::deployment_weights(
                analytics::load_proxies_csv(read_file(config.paths.proxies)));
        }
        std::string out = "model_family,f,w,f_hat,f_hat_rounded\n";
        for (auto& row : rows) {
            double w = row.weight;
            if (w == 0.0 && weights.count(row.model_family)) w = weights.at(row.model_family);
            const double f_hat = analytics::normalized_frequency(row.attack_count, w);
            out += csv::quote(row.model_family) + "," + std::to_string(row.attack_count) + "," +
                   fmt(w, "%.4f") + "," + fmt(f_hat, "%.2f") + "," +
                   std::to_string(analytics::rounded_frequency(row.attack_count, w)) + "\n";
        }
        write_file(out_dir + "/fhat_table.csv", out);
    }

    if (!config.paths.proxies.empty() && !config.paths.attack_counts.empty()) {
        const auto proxies = analytics::load_proxies_csv(read_file(config.paths.proxies));
        const auto counts = analytics::load_attack_counts_csv(read_file(config.paths.attack_counts));
        std::map<std::string, long> f;
        for (const auto& row : counts) f[row.model_family] = row.attack_count;
        const std::size_t k = std::min<std::size_t>(5, proxies.size());
        const auto shifts = analytics::loo_sensitivity(proxies, f, k);
        std::string out = "omitted_proxy,max_shift,top" + std::to_string(k) + "_shift\n";
        for (const auto& s : shifts) {
            out += s.omitted_proxy + "," + std::to_string(s.max_shift) + "," +
                   std::to_string(s.topk_shift) + "\n";
        }
        write_file(out_dir + "/loo_shifts.csv", out);
    }

    if (!config.paths.cvs_inputs.empty()) {
        const auto rows = analytics::load_cvs_inputs_csv(read_file(config.paths.cvs_inputs));
        const auto ranked = analytics::cvs_rank(rows, config.cvs_weights);
        std::string out = "model,prompt_asr,backdoor_asr,training_risk,cvs\n";
        for (const auto& r : ranked) {
            out += csv::quote(r.model) + "," + fmt(r.prompt_asr, "%.4f") + "," +
                   fmt(r.backdoor_asr, "%.4f") + "," + fmt(r.training_risk, "%.4f") + "," +
                   fmt(r.cvs, "%.4f") + "\n";
        }
        write_file(out_dir + "/cvs_ranking.csv", out);
    }

    if (!config.paths.scenarios.empty()) {
        const auto scenarios = taxonomy::load_scenarios(read_file(config.paths.scenarios));
        std::string tactics = "tactic,count\n";
        for (const auto& [tactic, count] : taxonomy::prominent_tactics(scenarios)) {
            tactics += csv::quote(tactic) + "," + std::to_string(count) + "\n";
        }
        write_file(out_dir + "/ccm_tactics.csv", tactics);

        std::string entries = "tactic,count\n";
        for (const auto& [tactic, count] : taxonomy::entry_points(scenarios)) {
            entries += csv::quote(tactic) + "," + std::to_string(count) + "\n";
        }
        write_file(out_dir + "/ccm_entry_points.csv", entries);

        std::string sequences = "sequence,support\n";
        for (const auto& [sequence, support] : taxonomy::ttp_sequences(scenarios, 2)) {
            std::string joined;
            for (const auto& tactic : sequence) {
                if (!joined.empty()) joined += " -> ";
                joined += tactic;
            }
            sequences += csv::quote(joined) + "," + std::to_string(support) + "\n";
        }
        write_file(out_dir + "/ccm_sequences.csv", sequences);
    }

    if (!config.paths.tactic_phase.empty()) {
        const auto matrix = taxonomy::load_tactic_phase_csv(read_file(config.paths.tactic_phase));
        std::string out = "tactic,phases\n";
        for (const auto& tactic : taxonomy::kMatrixTactics) {
            std::string joined;
            for (const auto& phase : taxonomy::phases_for_tactic(matrix, tactic)) {
                if (!joined.empty()) joined += ";";
                joined += phase;
            }
            out += csv::quote(tactic) + "," + csv::quote(joined) + "\n";
        }
        write_file(out_dir + "/ccm_tactic_phases.csv", out);
    }

    const std::string ckpt = checkpoint_path_for(config, out_dir);
    if (fs::exists(ckpt)) {
        const auto g = build_pipeline_graph(corpus, config, seed);
        const auto model = sevnet::load_checkpoint(read_file(ckpt));
        write_file(out_dir + "/predictions.csv", predictions_csv(g, model));
    }
}

namespace {

// Bounded single-producer single-consumer handoff between the poller and
// the scorer.
class WorkQueue {
public:
    explicit WorkQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(std::string item) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
        if (closed_) return;
        items_.push(std::move(item));
        not_empty_.notify_one();
    }

    bool pop(std::string& item) {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return false;
        item = std::move(items_.front());
        items_.pop();
        not_full_.notify_one();
        return true;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::queue<std::string> items_;
    std::size_t capacity_;
    bool closed_ = false;
};

double formula_score(const ingest::VulnRecord& rec) {
    const double composite = scoring::composite_risk(rec.cvss_base.value_or(0.0),
                                                     rec.cvss_exploitability.value_or(0.0),
                                                     rec.cvss_impact.value_or(0.0));
    return std::clamp(composite / 10.0, 0.0, 1.0);
}

} // namespace

void run_watch(const PipelineConfig& config, const WatchOptions& options) {
    if (options.drop_dir.empty()) throw config_error("watch requires a drop directory");
    fs::create_directories(options.out_dir);
    fs::create_directories(options.drop_dir);

    // Optional model scoring: new CVEs enter the graph unlinked, so the
    // model sees a single fresh node with its text features.
    std::optional<sevnet::SevNetModel> model;
    std::optional<features::TfidfModel> tfidf;
    if (!config.checkpoint.empty()) {
        model = sevnet::load_checkpoint(read_file(config.checkpoint));
        tfidf = load_corpus(config).tfidf;
        if (model->input_dims != config.tfidf_dims + graph::kNodeKindCount) {
            throw config_error("checkpoint dims do not match configured tfidf_dims");
        }
    }

    const std::string seen_path = options.out_dir + "/watch_seen.txt";
    std::set<std::string> seen;
    if (fs::exists(seen_path)) {
        std::istringstream in(read_file(seen_path));
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) seen.insert(line);
        }
    }

    WorkQueue queue(16);
    std::atomic<bool> done{false};

    std::thread poller([&] {
        std::set<std::string> queued;
        std::size_t polls = 0;
        while (!done.load()) {
            std::vector<std::string> files;
            if (fs::exists(options.drop_dir)) {
                for (const auto& entry : fs::directory_iterator(options.drop_dir)) {
                    if (entry.is_regular_file() && entry.path().extension() == ".json") {
                        files.push_back(entry.path().string());
                    }
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                if (queued.insert(f).second) queue.push(f);
            }
            ++polls;
            if (options.max_polls > 0 && polls >= options.max_polls) break;
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(config.watch_poll_seconds * 1000)));
        }
        queue.close();
    });

    std::ofstream alerts(options.out_dir + "/alerts.jsonl", std::ios::app | std::ios::binary);
    std::ofstream seen_out(seen_path, std::ios::app | std::ios::binary);
    if (!alerts || !seen_out) throw io_error("cannot open watch output files");

    std::string file;
    while (queue.pop(file)) {
        ingest::NvdParseResult feed;
        try {
            feed = ingest::parse_nvd_feed(read_file(file));
        } catch (const Error& e) {
            log_line("watch: skipping " + file + ": " + e.what());
            continue;
        }
        for (const auto& rec : feed.records) {
            if (!seen.insert(rec.cve_id).second) continue;

            double s_hat = formula_score(rec);
            if (model) {
                graph::ThreatGraph g;
                auto f = features::vectorize(*tfidf, rec.description, config.tfidf_dims);
                f.resize(config.tfidf_dims + graph::kNodeKindCount, 0.0);
                f[config.tfidf_dims + static_cast<std::size_t>(graph::NodeKind::CVE)] = 1.0;
                g.add_node(rec.cve_id, graph::NodeKind::CVE, rec.cve_id, std::move(f));
                g.finalize();
                s_hat = sevnet::forward(*model, g).at(rec.cve_id);
            }

            Alert alert;
            alert.cve_id = rec.cve_id;
            alert.s_hat = s_hat;
            alert.queue = route_alert(s_hat, config.alert_threshold, config.medium_threshold);
            alert.emitted_at = options.fixed_time ? *options.fixed_time
                                                  : static_cast<std::int64_t>(std::time(nullptr));
            json line;
            line["cve_id"] = alert.cve_id;
            line["s_hat"] = alert.s_hat;
            line["queue"] = alert_queue_name(alert.queue);
            line["emitted_at"] = alert.emitted_at;
            alerts << line.dump() << "\n";
            alerts.flush();
            seen_out << alert.cve_id << "\n";
            seen_out.flush();
            log_line("watch: " + alert.cve_id + " s_hat=" + fmt(s_hat, "%.3f") + " queue=" +
                     alert_queue_name(alert.queue));
        }
    }

    done.store(true);
    poller.join();
}

} // namespace threatgraph::pipeline
