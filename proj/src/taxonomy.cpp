#include "threatgraph/taxonomy.hpp"
#include "threatgraph/csv.hpp"
#include "threatgraph/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace threatgraph::taxonomy {

using nlohmann::json;

const std::array<std::string, 12> kScenarioTactics = {
    "Reconnaissance", "Resource Development", "Initial Access", "ML Model Access",
    "Execution",      "Persistence",          "Defense Evasion", "Discovery",
    "Collection",     "ML Attack Staging",    "Exfiltration",    "Impact",
};

const std::array<std::string, 13> kMatrixTactics = {
    "Reconnaissance", "Resource Development", "Initial Access",  "ML Model Access",
    "Execution",      "Persistence",          "Defense Evasion", "Discovery",
    "Collection",     "ML Attack Staging",    "Exfiltration",    "Impact",
    "Credential Access",
};

const std::array<std::string, 7> kMlPhases = {
    "Data Collection", "Preprocessing", "Feature Engineering", "Training",
    "Testing",         "Inference",     "Monitoring",
};

std::vector<std::string> ScenarioRecord::tactic_sequence() const {
    std::vector<std::string> out;
    out.reserve(stages.size());
    for (const auto& [stage, tactic] : stages) out.push_back(tactic);
    return out;
}

namespace {

template <typename T, std::size_t N>
T enum_from_name(const std::string& name, const std::array<const char*, N>& names,
                 const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (name == names[i]) return static_cast<T>(i);
    }
    throw schema_error(std::string("unknown ") + what + ": " + name);
}

constexpr std::array<const char*, 3> kSourceNames = {"ATLAS", "AI_DB", "LITERATURE"};
constexpr std::array<const char*, 4> kGoalNames = {"CONFIDENTIALITY", "INTEGRITY", "AVAILABILITY",
                                                   "HUMAN_LIFE"};
constexpr std::array<const char*, 4> kKnowledgeNames = {"BLACK_BOX", "GRAY_BOX", "WHITE_BOX", "NA"};
constexpr std::array<const char*, 4> kSpecificityNames = {"ADV_TARGETED", "ADV_UNTARGETED",
                                                          "TRAD_TARGETED", "TRAD_UNTARGETED"};
constexpr std::array<const char*, 3> kSoftwareLayerNames = {"DATA", "MODEL", "ORCHESTRATION"};
constexpr std::array<const char*, 6> kMitigationLayerNames = {"DATA", "SOFTWARE", "STORAGE",
                                                              "SYSTEM", "NETWORK", "CLOUD"};
constexpr std::array<const char*, 4> kMitigationStageNames = {"HARDEN", "DETECT", "ISOLATE",
                                                              "EVICT"};

std::size_t tactic_row(const std::string& tactic) {
    for (std::size_t i = 0; i < kMatrixTactics.size(); ++i) {
        if (kMatrixTactics[i] == tactic) return i;
    }
    throw schema_error("unknown tactic: " + tactic);
}

std::size_t phase_column(const std::string& phase) {
    for (std::size_t i = 0; i < kMlPhases.size(); ++i) {
        if (kMlPhases[i] == phase) return i;
    }
    throw schema_error("unknown ML phase: " + phase);
}

void validate_stages(const ScenarioRecord& rec) {
    if (rec.stages.empty()) return;
    int expected = 0;
    int previous = -1;
    for (const auto& [stage, tactic] : rec.stages) {
        if (std::find(kScenarioTactics.begin(), kScenarioTactics.end(), tactic) ==
            kScenarioTactics.end()) {
            throw schema_error("scenario " + rec.scenario_id + " uses unknown tactic " + tactic);
        }
        if (stage != previous) {
            if (stage != expected) {
                throw schema_error("scenario " + rec.scenario_id +
                                   " stage indices must start at 0 and be contiguous");
            }
            previous = stage;
            ++expected;
        }
    }
}

} // namespace

std::vector<std::pair<std::string, std::size_t>> prominent_tactics(
    const std::vector<ScenarioRecord>& scenarios) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : scenarios) {
        std::set<std::string> unique;
        for (const auto& [stage, tactic] : s.stages) unique.insert(tactic);
        for (const auto& tactic : unique) ++counts[tactic];
    }
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

std::vector<std::pair<std::string, std::size_t>> entry_points(
    const std::vector<ScenarioRecord>& scenarios) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : scenarios) {
        for (const auto& [stage, tactic] : s.stages) {
            if (stage == 0) ++counts[tactic];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

std::vector<std::pair<std::vector<std::string>, std::size_t>> ttp_sequences(
    const std::vector<ScenarioRecord>& scenarios, std::size_t min_support) {
    if (min_support < 1) throw domain_error("min_support must be >= 1");
    std::map<std::vector<std::string>, std::size_t> groups;
    for (const auto& s : scenarios) {
        if (s.stages.empty()) continue;
        ++groups[s.tactic_sequence()];
    }
    std::vector<std::pair<std::vector<std::string>, std::size_t>> out;
    for (const auto& [sequence, support] : groups) {
        if (support >= min_support) out.emplace_back(sequence, support);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

std::vector<std::string> phases_for_tactic(const TacticPhaseMatrix& m, const std::string& tactic) {
    const std::size_t row = tactic_row(tactic);
    std::vector<std::string> out;
    for (std::size_t p = 0; p < kMlPhases.size(); ++p) {
        if (m.cells[row][p]) out.push_back(kMlPhases[p]);
    }
    return out;
}

std::vector<std::string> tactics_for_phase(const TacticPhaseMatrix& m, const std::string& phase) {
    const std::size_t col = phase_column(phase);
    std::vector<std::string> out;
    for (std::size_t t = 0; t < kMatrixTactics.size(); ++t) {
        if (m.cells[t][col]) out.push_back(kMatrixTactics[t]);
    }
    return out;
}

std::tuple<std::string, std::string, std::string> trace_vulnerability(
    const std::vector<CrossLevelEntry>& entries, const std::string& vul_id) {
    for (const auto& e : entries) {
        if (e.vul_id == vul_id) return {e.ml_phase, e.software_surface, e.system_surface};
    }
    throw schema_error("unknown vulnerability id: " + vul_id);
}

std::vector<MitigationEntry> mitigations_for_threat(const std::vector<MitigationEntry>& catalog,
                                                    const std::string& threat_id) {
    std::vector<MitigationEntry> out;
    for (const auto& m : catalog) {
        if (std::find(m.counters.begin(), m.counters.end(), threat_id) != m.counters.end()) {
            out.push_back(m);
        }
    }
    std::sort(out.begin(), out.end(), [](const MitigationEntry& a, const MitigationEntry& b) {
        return a.mitigation_id < b.mitigation_id;
    });
    return out;
}

std::vector<MitigationEntry> mitigations_for_layer(const std::vector<MitigationEntry>& catalog,
                                                   MitigationLayer layer) {
    std::vector<MitigationEntry> out;
    for (const auto& m : catalog) {
        if (m.layer == layer) out.push_back(m);
    }
    std::sort(out.begin(), out.end(), [](const MitigationEntry& a, const MitigationEntry& b) {
        return a.mitigation_id < b.mitigation_id;
    });
    return out;
}

std::vector<ScenarioRecord> load_scenarios(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw schema_error(std::string("malformed scenario file: ") + e.what());
    }
    const json* array = &doc;
    if (doc.is_object()) {
        if (!doc.contains("scenarios")) throw schema_error("scenario file missing scenarios key");
        array = &doc["scenarios"];
    }
    std::vector<ScenarioRecord> out;
    std::set<std::string> seen;
    for (const auto& item : *array) {
        ScenarioRecord rec;
        rec.scenario_id = item.value("scenario_id", "");
        if (rec.scenario_id.empty()) throw schema_error("scenario missing scenario_id");
        if (!seen.insert(rec.scenario_id).second) {
            throw schema_error("duplicate scenario_id: " + rec.scenario_id);
        }
        rec.source = enum_from_name<Source>(item.value("source", ""), kSourceNames, "source");
        for (const auto& g : item.value("goal", json::array())) {
            rec.goal.insert(enum_from_name<Goal>(g.get<std::string>(), kGoalNames, "goal"));
        }
        for (const auto& k : item.value("knowledge", json::array())) {
            rec.knowledge.insert(
                enum_from_name<Knowledge>(k.get<std::string>(), kKnowledgeNames, "knowledge"));
        }
        for (const auto& s : item.value("specificity", json::array())) {
            rec.specificity.insert(enum_from_name<Specificity>(s.get<std::string>(),
                                                               kSpecificityNames, "specificity"));
        }
        for (const auto& st : item.value("stages", json::array())) {
            rec.stages.emplace_back(st.at("stage").get<int>(), st.at("tactic").get<std::string>());
        }
        std::sort(rec.stages.begin(), rec.stages.end());
        if (item.contains("target_model") && item["target_model"].is_string()) {
            rec.target_model = item["target_model"].get<std::string>();
        }
        validate_stages(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

std::string scenarios_to_json(const std::vector<ScenarioRecord>& scenarios) {
    json array = json::array();
    for (const auto& rec : scenarios) {
        json item;
        item["source"] = kSourceNames[static_cast<std::size_t>(rec.source)];
        item["scenario_id"] = rec.scenario_id;
        json goals = json::array();
        for (Goal g : rec.goal) goals.push_back(kGoalNames[static_cast<std::size_t>(g)]);
        item["goal"] = goals;
        json knowledge = json::array();
        for (Knowledge k : rec.knowledge) {
            knowledge.push_back(kKnowledgeNames[static_cast<std::size_t>(k)]);
        }
        item["knowledge"] = knowledge;
        json specificity = json::array();
        for (Specificity s : rec.specificity) {
            specificity.push_back(kSpecificityNames[static_cast<std::size_t>(s)]);
        }
        item["specificity"] = specificity;
        json stages = json::array();
        for (const auto& [stage, tactic] : rec.stages) {
            stages.push_back(json{{"stage", stage}, {"tactic", tactic}});
        }
        item["stages"] = stages;
        if (rec.target_model) item["target_model"] = *rec.target_model;
        array.push_back(item);
    }
    json doc;
    doc["schema_version"] = 1;
    doc["scenarios"] = array;
    return doc.dump(2) + "\n";
}

TacticPhaseMatrix load_tactic_phase_csv(const std::string& csv_text) {
    const auto rows = csv::parse(csv_text);
    if (rows.size() != kMatrixTactics.size() + 1) {
        throw schema_error("tactic-phase matrix must have 13 tactic rows");
    }
    const auto& header = rows[0];
    if (header.size() != kMlPhases.size() + 1) {
        throw schema_error("tactic-phase matrix must have 7 phase columns");
    }
    for (std::size_t p = 0; p < kMlPhases.size(); ++p) {
        if (header[p + 1] != kMlPhases[p]) {
            throw schema_error("unexpected phase column: " + header[p + 1]);
        }
    }
    TacticPhaseMatrix m;
    for (std::size_t t = 0; t < kMatrixTactics.size(); ++t) {
        const auto& row = rows[t + 1];
        if (row.size() != kMlPhases.size() + 1 || row[0] != kMatrixTactics[t]) {
            throw schema_error("unexpected tactic row: " + (row.empty() ? "" : row[0]));
        }
        for (std::size_t p = 0; p < kMlPhases.size(); ++p) {
            if (row[p + 1] != "0" && row[p + 1] != "1") {
                throw schema_error("tactic-phase cells must be 0 or 1");
            }
            m.cells[t][p] = row[p + 1] == "1";
        }
    }
    return m;
}

std::vector<CrossLevelEntry> load_cross_level(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw schema_error(std::string("malformed cross-level map: ") + e.what());
    }
    const json& array = doc.is_object() ? doc.at("entries") : doc;
    std::vector<CrossLevelEntry> out;
    std::set<std::string> ids;
    for (const auto& item : array) {
        CrossLevelEntry e;
        e.vul_id = item.at("vul_id").get<std::string>();
        if (!ids.insert(e.vul_id).second) throw schema_error("duplicate vul_id: " + e.vul_id);
        e.cve_or_ttp = item.value("cve_or_ttp", "");
        e.ml_phase = item.at("ml_phase").get<std::string>();
        e.software_surface = item.at("software_surface").get<std::string>();
        e.software_layer = enum_from_name<SoftwareLayer>(item.value("software_layer", "MODEL"),
                                                         kSoftwareLayerNames, "software layer");
        e.system_surface = item.at("system_surface").get<std::string>();
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<MitigationEntry> load_mitigations(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw schema_error(std::string("malformed mitigation catalog: ") + e.what());
    }
    const json& array = doc.is_object() ? doc.at("mitigations") : doc;
    std::vector<MitigationEntry> out;
    std::set<std::string> ids;
    for (const auto& item : array) {
        MitigationEntry m;
        m.mitigation_id = item.at("mitigation_id").get<std::string>();
        if (!ids.insert(m.mitigation_id).second) {
            throw schema_error("duplicate mitigation_id: " + m.mitigation_id);
        }
        m.layer = enum_from_name<MitigationLayer>(item.at("layer").get<std::string>(),
                                                  kMitigationLayerNames, "mitigation layer");
        m.stage = enum_from_name<MitigationStage>(item.at("stage").get<std::string>(),
                                                  kMitigationStageNames, "mitigation stage");
        m.description = item.value("description", "");
        for (const auto& c : item.value("counters", json::array())) {
            m.counters.push_back(c.get<std::string>());
        }
        out.push_back(std::move(m));
    }
    return out;
}

const char* source_name(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }
const char* goal_name(Goal g) { return kGoalNames[static_cast<std::size_t>(g)]; }
const char* knowledge_name(Knowledge k) { return kKnowledgeNames[static_cast<std::size_t>(k)]; }
const char* specificity_name(Specificity s) {
    return kSpecificityNames[static_cast<std::size_t>(s)];
}
const char* software_layer_name(SoftwareLayer l) {
    return kSoftwareLayerNames[static_cast<std::size_t>(l)];
}
const char* mitigation_layer_name(MitigationLayer l) {
    return kMitigationLayerNames[static_cast<std::size_t>(l)];
}
const char* mitigation_stage_name(MitigationStage s) {
    return kMitigationStageNames[static_cast<std::size_t>(s)];
}

} // namespace threatgraph::taxonomy
