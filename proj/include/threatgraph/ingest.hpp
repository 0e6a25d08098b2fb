#pragma once

#include "threatgraph/scoring.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace threatgraph::ingest {

// Structured vendor:product:version triple. A wildcard version is stored
// as std::nullopt and renders as the two-segment short form.
struct CpeId {
    std::string vendor;
    std::string product;
    std::optional<std::string> version;  // nullopt = wildcard

    std::string to_string() const;
    bool operator==(const CpeId&) const = default;
};

struct VulnRecord {
    std::string cve_id;
    std::string description;
    std::optional<double> cvss_base;
    std::optional<double> cvss_impact;
    std::optional<double> cvss_exploitability;
    std::optional<scoring::Severity> severity_label;
    bool patch_available = false;
    std::vector<CpeId> cpes;
    std::vector<std::string> references;

    bool operator==(const VulnRecord&) const = default;
};

struct IssueRecord {
    std::string repo;
    std::int64_t issue_id = 0;
    std::string title;
    std::string body;
    std::int64_t timestamp = 0;  // seconds since epoch
    std::vector<std::string> extracted_cves;

    bool operator==(const IssueRecord&) const = default;
};

struct TechniqueRecord {
    std::string technique_id;
    std::string name;
    std::string tactic;
    std::string description;
};

// Per-entry problem collected while the rest of a feed keeps parsing.
struct EntryError {
    std::size_t index = 0;  // entry index or line number
    std::string message;
};

struct NvdParseResult {
    std::vector<VulnRecord> records;
    std::vector<EntryError> errors;
};

struct IssueParseResult {
    std::vector<IssueRecord> records;
    std::vector<EntryError> errors;
};

// Parses the NVD feed subset: top-level "CVE_Items" array; per item
// cve.CVE_data_meta.ID, cve.description.description_data[].value,
// impact.baseMetricV2.cvssV2.{baseScore,impactScore,exploitabilityScore},
// impact.baseMetricV2.severity, configurations CPE uris, reference urls
// and an optional item-level patch_available flag. Unknown keys are
// ignored. Missing impact blocks yield absent score fields, never zeros.
//
// A malformed document throws a SCHEMA error carrying the byte offset;
// an entry without a cve id is collected in `errors` and skipped.
NvdParseResult parse_nvd_feed(const std::string& document);

// Emits the same subset schema; parse(serialize(parse(x))) == parse(x).
std::string serialize_nvd_feed(const std::vector<VulnRecord>& records);

// All non-overlapping matches of CVE-\d{4}-\d{4,7} (case-insensitive),
// uppercased, deduplicated preserving first appearance.
std::vector<std::string> extract_cve_ids(const std::string& text);

// Accepts "cpe:2.3:part:vendor:product:version:..." URIs and the
// "vendor:product[:version]" short form. "*"/"-"/missing version maps to
// wildcard. Fewer than two populated segments is a SCHEMA error.
CpeId parse_cpe(const std::string& uri);

// One JSON object per line: {repo, issue_id, title, body, timestamp}.
// extracted_cves is populated from title + body. Bad lines are collected
// with their 1-based line number and parsing continues.
IssueParseResult load_issue_dump(const std::string& document);

// JSON array of {technique_id, name, tactic, description}; duplicate ids
// are a SCHEMA error.
std::vector<TechniqueRecord> load_technique_catalog(const std::string& document);

} // namespace threatgraph::ingest
