#include "threatgraph/ingest.hpp"
#include "threatgraph/error.hpp"

#include <json.hpp>

#include <cctype>
#include <set>
#include <sstream>

namespace threatgraph::ingest {

using nlohmann::json;

std::string CpeId::to_string() const {
    std::string out = vendor + ":" + product;
    if (version) out += ":" + *version;
    return out;
}

std::vector<std::string> extract_cve_ids(const std::string& text) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    const std::size_t n = text.size();
    std::size_t i = 0;
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    while (i < n) {
        // Literal "CVE-" match, any case.
        if (i + 4 <= n &&
            (text[i] == 'C' || text[i] == 'c') &&
            (text[i + 1] == 'V' || text[i + 1] == 'v') &&
            (text[i + 2] == 'E' || text[i + 2] == 'e') &&
            text[i + 3] == '-') {
            std::size_t p = i + 4;
            std::size_t year_end = p;
            while (year_end < n && year_end - p < 4 && is_digit(text[year_end])) ++year_end;
            if (year_end - p == 4 && year_end < n && text[year_end] == '-') {
                std::size_t q = year_end + 1;
                std::size_t num_end = q;
                while (num_end < n && num_end - q < 7 && is_digit(text[num_end])) ++num_end;
                if (num_end - q >= 4) {
                    std::string id = "CVE-" + text.substr(p, 4) + "-" + text.substr(q, num_end - q);
                    if (seen.insert(id).second) out.push_back(id);
                    i = num_end;  // non-overlapping: resume past the match
                    continue;
                }
            }
        }
        ++i;
    }
    return out;
}

CpeId parse_cpe(const std::string& uri) {
    std::vector<std::string> segments;
    std::string cur;
    for (char c : uri) {
        if (c == ':') {
            segments.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    segments.push_back(cur);

    std::string vendor, product, version;
    if (segments.size() >= 2 && segments[0] == "cpe") {
        // cpe:2.3:part:vendor:product:version:update:...
        if (segments.size() < 5) {
            throw schema_error("cpe uri has too few segments: " + uri);
        }
        vendor = segments[3];
        product = segments[4];
        if (segments.size() > 5) version = segments[5];
    } else {
        if (segments.size() < 2) {
            throw schema_error("cpe needs at least vendor:product: " + uri);
        }
        vendor = segments[0];
        product = segments[1];
        if (segments.size() > 2) version = segments[2];
    }
    if (vendor.empty() || product.empty()) {
        throw schema_error("cpe vendor and product must be non-empty: " + uri);
    }
    CpeId id;
    id.vendor = vendor;
    id.product = product;
    if (!version.empty() && version != "*" && version != "-") {
        id.version = version;
    }
    return id;
}

namespace {

std::optional<double> read_score(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) return std::nullopt;
    double v = it->get<double>();
    if (v < 0.0 || v > 10.0) {
        throw schema_error(std::string(key) + " outside [0,10]");
    }
    return v;
}

VulnRecord parse_nvd_item(const json& item) {
    VulnRecord rec;
    const json& cve = item.value("cve", json::object());
    const json& meta = cve.value("CVE_data_meta", json::object());
    auto id_it = meta.find("ID");
    if (id_it == meta.end() || !id_it->is_string() || id_it->get<std::string>().empty()) {
        throw schema_error("entry missing cve.CVE_data_meta.ID");
    }
    rec.cve_id = id_it->get<std::string>();
    const auto ids = extract_cve_ids(rec.cve_id);
    if (ids.size() != 1 || ids[0].size() != rec.cve_id.size()) {
        throw schema_error("cve id does not match the canonical pattern: " + rec.cve_id);
    }
    rec.cve_id = ids[0];  // canonical uppercase form

    if (cve.contains("description")) {
        const json& desc = cve["description"];
        if (desc.is_string()) {
            rec.description = desc.get<std::string>();
        } else if (desc.is_object() && desc.contains("description_data")) {
            for (const auto& d : desc["description_data"]) {
                if (d.contains("value") && d["value"].is_string()) {
                    if (!rec.description.empty()) rec.description += " ";
                    rec.description += d["value"].get<std::string>();
                }
            }
        }
    }

    if (item.contains("impact") && item["impact"].contains("baseMetricV2")) {
        const json& metric = item["impact"]["baseMetricV2"];
        if (metric.contains("cvssV2")) {
            const json& cvss = metric["cvssV2"];
            rec.cvss_base = read_score(cvss, "baseScore");
            rec.cvss_impact = read_score(cvss, "impactScore");
            rec.cvss_exploitability = read_score(cvss, "exploitabilityScore");
        }
        if (metric.contains("severity") && metric["severity"].is_string()) {
            rec.severity_label = scoring::severity_from_name(metric["severity"].get<std::string>());
        }
    }

    if (item.contains("configurations")) {
        const json& conf = item["configurations"];
        auto add_uri = [&rec](const std::string& uri) { rec.cpes.push_back(parse_cpe(uri)); };
        if (conf.is_array()) {
            for (const auto& u : conf)
                if (u.is_string()) add_uri(u.get<std::string>());
        } else if (conf.is_object() && conf.contains("nodes")) {
            for (const auto& node : conf["nodes"]) {
                for (const auto& m : node.value("cpe_match", json::array())) {
                    if (m.contains("cpe23Uri") && m["cpe23Uri"].is_string()) {
                        add_uri(m["cpe23Uri"].get<std::string>());
                    }
                }
            }
        }
    }

    if (item.contains("references")) {
        const json& refs = item["references"];
        if (refs.is_array()) {
            for (const auto& r : refs)
                if (r.is_string()) rec.references.push_back(r.get<std::string>());
        } else if (refs.is_object() && refs.contains("reference_data")) {
            for (const auto& r : refs["reference_data"]) {
                if (r.contains("url") && r["url"].is_string()) {
                    rec.references.push_back(r["url"].get<std::string>());
                }
            }
        }
    }

    rec.patch_available = item.value("patch_available", false);
    return rec;
}

} // namespace

NvdParseResult parse_nvd_feed(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw schema_error("malformed NVD feed at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("CVE_Items") || !doc["CVE_Items"].is_array()) {
        throw schema_error("NVD feed must be an object with a CVE_Items array");
    }
    NvdParseResult result;
    std::size_t index = 0;
    for (const auto& item : doc["CVE_Items"]) {
        try {
            result.records.push_back(parse_nvd_item(item));
        } catch (const Error& e) {
            result.errors.push_back({index, e.what()});
        }
        ++index;
    }
    return result;
}

std::string serialize_nvd_feed(const std::vector<VulnRecord>& records) {
    json items = json::array();
    for (const auto& rec : records) {
        json item;
        item["cve"]["CVE_data_meta"]["ID"] = rec.cve_id;
        item["cve"]["description"]["description_data"] =
            json::array({json{{"lang", "en"}, {"value", rec.description}}});
        if (rec.cvss_base || rec.cvss_impact || rec.cvss_exploitability || rec.severity_label) {
            json cvss = json::object();
            if (rec.cvss_base) cvss["baseScore"] = *rec.cvss_base;
            if (rec.cvss_impact) cvss["impactScore"] = *rec.cvss_impact;
            if (rec.cvss_exploitability) cvss["exploitabilityScore"] = *rec.cvss_exploitability;
            item["impact"]["baseMetricV2"]["cvssV2"] = cvss;
            if (rec.severity_label) {
                item["impact"]["baseMetricV2"]["severity"] = scoring::severity_name(*rec.severity_label);
            }
        }
        json uris = json::array();
        for (const auto& cpe : rec.cpes) uris.push_back(cpe.to_string());
        item["configurations"] = uris;
        item["references"] = rec.references;
        item["patch_available"] = rec.patch_available;
        items.push_back(item);
    }
    json doc;
    doc["CVE_data_type"] = "CVE";
    doc["CVE_Items"] = items;
    return doc.dump(2) + "\n";
}

IssueParseResult load_issue_dump(const std::string& document) {
    IssueParseResult result;
    std::istringstream in(document);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json obj = json::parse(line);
            IssueRecord rec;
            if (!obj.contains("repo") || !obj["repo"].is_string()) {
                throw schema_error("issue line missing repo");
            }
            rec.repo = obj["repo"].get<std::string>();
            if (!obj.contains("issue_id") || !obj["issue_id"].is_number_integer()) {
                throw schema_error("issue line missing issue_id");
            }
            rec.issue_id = obj["issue_id"].get<std::int64_t>();
            rec.title = obj.value("title", "");
            rec.body = obj.value("body", "");
            rec.timestamp = obj.value("timestamp", std::int64_t{0});
            rec.extracted_cves = extract_cve_ids(rec.title + " " + rec.body);
            result.records.push_back(std::move(rec));
        } catch (const json::parse_error& e) {
            result.errors.push_back({lineno, std::string("bad issue line: ") + e.what()});
        } catch (const Error& e) {
            result.errors.push_back({lineno, e.what()});
        }
    }
    return result;
}

std::vector<TechniqueRecord> load_technique_catalog(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw schema_error(std::string("malformed technique catalog: ") + e.what());
    }
    if (!doc.is_array()) {
        throw schema_error("technique catalog must be a JSON array");
    }
    std::vector<TechniqueRecord> out;
    std::set<std::string> ids;
    for (const auto& item : doc) {
        TechniqueRecord rec;
        rec.technique_id = item.value("technique_id", "");
        rec.name = item.value("name", "");
        rec.tactic = item.value("tactic", "");
        rec.description = item.value("description", "");
        if (rec.technique_id.empty()) {
            throw schema_error("technique entry missing technique_id");
        }
        if (!ids.insert(rec.technique_id).second) {
            throw schema_error("duplicate technique_id: " + rec.technique_id);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace threatgraph::ingest
