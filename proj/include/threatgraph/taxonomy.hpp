#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace threatgraph::taxonomy {

enum class Source { ATLAS, AI_DB, LITERATURE };
enum class Goal { CONFIDENTIALITY, INTEGRITY, AVAILABILITY, HUMAN_LIFE };
enum class Knowledge { BLACK_BOX, GRAY_BOX, WHITE_BOX, NA };
enum class Specificity { ADV_TARGETED, ADV_UNTARGETED, TRAD_TARGETED, TRAD_UNTARGETED };

// The 12 scenario tactics; the tactic-phase matrix adds Credential Access.
extern const std::array<std::string, 12> kScenarioTactics;
extern const std::array<std::string, 13> kMatrixTactics;
extern const std::array<std::string, 7> kMlPhases;

struct ScenarioRecord {
    Source source = Source::ATLAS;
    std::string scenario_id;
    std::set<Goal> goal;
    std::set<Knowledge> knowledge;
    std::set<Specificity> specificity;
    // (stage index, tactic) sorted by stage then tactic; indices start at
    // 0 and are contiguous. One stage may carry several tactics.
    std::vector<std::pair<int, std::string>> stages;
    std::optional<std::string> target_model;

    // Tactic names ordered by stage (the grouping key for sequences).
    std::vector<std::string> tactic_sequence() const;
};

struct TacticPhaseMatrix {
    // cells[t][p] over kMatrixTactics x kMlPhases.
    std::array<std::array<bool, 7>, 13> cells{};
};

enum class SoftwareLayer { DATA, MODEL, ORCHESTRATION };

struct CrossLevelEntry {
    std::string vul_id;
    std::string cve_or_ttp;
    std::string ml_phase;
    std::string software_surface;  // the component abused, e.g. "Model-repo API"
    SoftwareLayer software_layer = SoftwareLayer::MODEL;
    std::string system_surface;
};

enum class MitigationLayer { DATA, SOFTWARE, STORAGE, SYSTEM, NETWORK, CLOUD };
enum class MitigationStage { HARDEN, DETECT, ISOLATE, EVICT };

struct MitigationEntry {
    std::string mitigation_id;
    MitigationLayer layer = MitigationLayer::DATA;
    MitigationStage stage = MitigationStage::HARDEN;
    std::string description;
    std::vector<std::string> counters;  // technique/threat ids
};

// (tactic, scenario count) descending, ties alphabetical. A scenario
// counts once per tactic regardless of how many stages carry it.
std::vector<std::pair<std::string, std::size_t>> prominent_tactics(
    const std::vector<ScenarioRecord>& scenarios);

// Same ranking restricted to stage-0 tactics.
std::vector<std::pair<std::string, std::size_t>> entry_points(
    const std::vector<ScenarioRecord>& scenarios);

// Exact stage sequences grouped by equality with support >= min_support,
// descending support, ties by lexicographic sequence.
std::vector<std::pair<std::vector<std::string>, std::size_t>> ttp_sequences(
    const std::vector<ScenarioRecord>& scenarios, std::size_t min_support);

std::vector<std::string> phases_for_tactic(const TacticPhaseMatrix& m, const std::string& tactic);
std::vector<std::string> tactics_for_phase(const TacticPhaseMatrix& m, const std::string& phase);

// (ml_phase, software_surface, system_surface) for a vul id.
std::tuple<std::string, std::string, std::string> trace_vulnerability(
    const std::vector<CrossLevelEntry>& entries, const std::string& vul_id);

// Entries whose counters contain the threat id, ordered by mitigation_id.
std::vector<MitigationEntry> mitigations_for_threat(const std::vector<MitigationEntry>& catalog,
                                                    const std::string& threat_id);
std::vector<MitigationEntry> mitigations_for_layer(const std::vector<MitigationEntry>& catalog,
                                                   MitigationLayer layer);

// Fixture loaders. All validate vocabulary and carry a schema_version.
std::vector<ScenarioRecord> load_scenarios(const std::string& json_text);
std::string scenarios_to_json(const std::vector<ScenarioRecord>& scenarios);
TacticPhaseMatrix load_tactic_phase_csv(const std::string& csv_text);
std::vector<CrossLevelEntry> load_cross_level(const std::string& json_text);
std::vector<MitigationEntry> load_mitigations(const std::string& json_text);

const char* source_name(Source s);
const char* goal_name(Goal g);
const char* knowledge_name(Knowledge k);
const char* specificity_name(Specificity s);
const char* software_layer_name(SoftwareLayer l);
const char* mitigation_layer_name(MitigationLayer l);
const char* mitigation_stage_name(MitigationStage s);

} // namespace threatgraph::taxonomy
