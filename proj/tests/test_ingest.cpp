#include "threatgraph/ingest.hpp"
#include "threatgraph/error.hpp"

#include <doctest.h>

using namespace threatgraph;
using namespace threatgraph::ingest;

namespace {

// One entry in the feed subset shape, mirroring the NVD excerpt.
const char* kListingEntry = R"({
  "CVE_data_type": "CVE",
  "CVE_data_format": "MITRE",
  "CVE_Items": [
    {
      "cve": {
        "CVE_data_meta": {"ID": "CVE-2020-15208"},
        "description": {"description_data": [{"lang": "en", "value": "out of bounds read"}]}
      },
      "impact": {
        "baseMetricV2": {
          "cvssV2": {"baseScore": 7.5, "impactScore": 6.4, "exploitabilityScore": 8.6},
          "severity": "HIGH"
        }
      },
      "configurations": ["google:tensorflow"],
      "references": ["https://nvd.nist.gov/vuln/detail/CVE-2020-15208"],
      "patch_available": true
    }
  ]
})";

} // namespace

TEST_CASE("parse_nvd_feed reads the listing-shaped entry") {
    const auto result = parse_nvd_feed(kListingEntry);
    REQUIRE(result.records.size() == 1);
    REQUIRE(result.errors.empty());
    const VulnRecord& rec = result.records[0];
    CHECK(rec.cve_id == "CVE-2020-15208");
    CHECK(rec.cvss_base == 7.5);
    CHECK(rec.cvss_impact == 6.4);
    CHECK(rec.cvss_exploitability == 8.6);
    CHECK(rec.severity_label == scoring::Severity::HIGH);
    CHECK(rec.patch_available);
    REQUIRE(rec.cpes.size() == 1);
    CHECK(rec.cpes[0].vendor == "google");
    CHECK(rec.cpes[0].product == "tensorflow");
    CHECK(!rec.cpes[0].version.has_value());
}

TEST_CASE("parse_nvd_feed empty feed") {
    const auto result = parse_nvd_feed(R"({"CVE_Items": []})");
    CHECK(result.records.empty());
    CHECK(result.errors.empty());
}

TEST_CASE("missing impact block yields absent scores, never zeros") {
    const std::string feed = R"({"CVE_Items": [
        {"cve": {"CVE_data_meta": {"ID": "CVE-2024-0001"}, "description": "first"},
         "impact": {"baseMetricV2": {"cvssV2": {"baseScore": 5.0, "impactScore": 2.9,
                    "exploitabilityScore": 10.0}, "severity": "MEDIUM"}}},
        {"cve": {"CVE_data_meta": {"ID": "CVE-2024-0002"}, "description": "second"}},
        {"cve": {"CVE_data_meta": {"ID": "CVE-2024-0003"}, "description": "third"},
         "impact": {"baseMetricV2": {"cvssV2": {"baseScore": 9.3, "impactScore": 10.0,
                    "exploitabilityScore": 8.6}, "severity": "CRITICAL"}}}
    ]})";
    const auto result = parse_nvd_feed(feed);
    REQUIRE(result.records.size() == 3);
    CHECK(result.records[0].cvss_base.has_value());
    CHECK(!result.records[1].cvss_base.has_value());
    CHECK(!result.records[1].cvss_impact.has_value());
    CHECK(!result.records[1].cvss_exploitability.has_value());
    CHECK(!result.records[1].severity_label.has_value());
    CHECK(result.records[2].cvss_base == 9.3);
}

TEST_CASE("malformed document reports the byte offset") {
    try {
        parse_nvd_feed("{\"CVE_Items\": [");
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(e.error_class() == ErrorClass::SCHEMA);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("entry without an id is collected, parsing continues") {
    const std::string feed = R"({"CVE_Items": [
        {"cve": {"CVE_data_meta": {}}},
        {"cve": {"CVE_data_meta": {"ID": "CVE-2023-1234"}, "description": "ok"}}
    ]})";
    const auto result = parse_nvd_feed(feed);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].cve_id == "CVE-2023-1234");
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].index == 0);
}

TEST_CASE("feed ids are canonicalized and malformed ones collected") {
    const std::string feed = R"({"CVE_Items": [
        {"cve": {"CVE_data_meta": {"ID": "cve-2023-7777"}, "description": "lowercase"}},
        {"cve": {"CVE_data_meta": {"ID": "CVE-23-7777"}, "description": "short year"}}
    ]})";
    const auto result = parse_nvd_feed(feed);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].cve_id == "CVE-2023-7777");
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].index == 1);
}

TEST_CASE("feed round-trips through the subset schema") {
    const auto first = parse_nvd_feed(kListingEntry);
    const auto second = parse_nvd_feed(serialize_nvd_feed(first.records));
    REQUIRE(second.errors.empty());
    CHECK(first.records == second.records);
}

TEST_CASE("extract_cve_ids") {
    CHECK(extract_cve_ids("fixes CVE-2024-3099 and cve-2024-3099") ==
          std::vector<std::string>{"CVE-2024-3099"});
    CHECK(extract_cve_ids("CVE-24-3099 is malformed") == std::vector<std::string>{});
    CHECK(extract_cve_ids("CVE-2021-44228, CVE-2020-15208") ==
          std::vector<std::string>{"CVE-2021-44228", "CVE-2020-15208"});
    CHECK(extract_cve_ids("") == std::vector<std::string>{});
    CHECK(extract_cve_ids("CVE-2024-123 too short") == std::vector<std::string>{});
    // 7-digit cap: the match stops after seven digits
    CHECK(extract_cve_ids("CVE-2024-12345678") == std::vector<std::string>{"CVE-2024-1234567"});
}

TEST_CASE("extract_cve_ids is idempotent on its own output") {
    const std::vector<std::string> samples = {
        "fixes CVE-2024-3099 and cve-2024-3099 plus CVE-2021-44228",
        "nothing here",
        "cve-2020-15208 CVE-2020-15208 Cve-2018-18074",
    };
    for (const auto& text : samples) {
        const auto ids = extract_cve_ids(text);
        std::string joined;
        for (const auto& id : ids) joined += id + " ";
        CHECK(extract_cve_ids(joined) == ids);
        for (const auto& id : ids) {
            CHECK(extract_cve_ids(id) == std::vector<std::string>{id});
        }
    }
}

TEST_CASE("parse_cpe") {
    const CpeId short_form = parse_cpe("google:tensorflow");
    CHECK(short_form.vendor == "google");
    CHECK(short_form.product == "tensorflow");
    CHECK(!short_form.version.has_value());

    const CpeId full = parse_cpe("cpe:2.3:a:haxx:curl:7.1:*:*:*:*:*:*:*");
    CHECK(full.vendor == "haxx");
    CHECK(full.product == "curl");
    CHECK(full.version == "7.1");

    CHECK(!parse_cpe("cpe:2.3:a:google:tensorflow:*:*:*").version.has_value());
    CHECK_THROWS_AS(parse_cpe("curl"), Error);
    CHECK_THROWS_AS(parse_cpe("cpe:2.3:a"), Error);
    CHECK_THROWS_AS(parse_cpe(":product"), Error);
}

TEST_CASE("CpeId round-trips through its textual form") {
    for (const char* uri : {"google:tensorflow", "haxx:curl:7.1", "python:pillow:8.1.0"}) {
        const CpeId id = parse_cpe(uri);
        CHECK(parse_cpe(id.to_string()) == id);
        CHECK(id.to_string() == uri);
    }
}

TEST_CASE("load_issue_dump") {
    SUBCASE("two valid lines") {
        const std::string dump =
            R"({"repo": "a/b", "issue_id": 1, "title": "t", "body": "b", "timestamp": 10})"
            "\n"
            R"({"repo": "c/d", "issue_id": 2, "title": "u", "body": "c", "timestamp": 20})"
            "\n";
        const auto result = load_issue_dump(dump);
        CHECK(result.records.size() == 2);
        CHECK(result.errors.empty());
    }
    SUBCASE("empty file") {
        CHECK(load_issue_dump("").records.empty());
    }
    SUBCASE("body CVE is extracted") {
        const auto result = load_issue_dump(
            R"({"repo": "tf/tf", "issue_id": 9, "title": "patch", "body": "see CVE-2020-15208", "timestamp": 0})"
            "\n");
        REQUIRE(result.records.size() == 1);
        CHECK(result.records[0].extracted_cves == std::vector<std::string>{"CVE-2020-15208"});
    }
    SUBCASE("bad line is collected with its number") {
        const std::string dump =
            R"({"repo": "a/b", "issue_id": 1, "title": "", "body": "", "timestamp": 0})"
            "\nnot json\n"
            R"({"repo": "c/d", "issue_id": 2, "title": "", "body": "", "timestamp": 0})"
            "\n";
        const auto result = load_issue_dump(dump);
        CHECK(result.records.size() == 2);
        REQUIRE(result.errors.size() == 1);
        CHECK(result.errors[0].index == 2);
    }
}

TEST_CASE("load_technique_catalog validates unique ids") {
    const char* catalog = R"([
        {"technique_id": "EXF-T1041", "name": "Model Extraction", "tactic": "Exfiltration",
         "description": "query the api"},
        {"technique_id": "AML.T0043", "name": "Craft Adversarial Data",
         "tactic": "ML Attack Staging", "description": "craft data"}
    ])";
    const auto records = load_technique_catalog(catalog);
    REQUIRE(records.size() == 2);
    CHECK(records[0].technique_id == "EXF-T1041");

    const char* dup = R"([
        {"technique_id": "X", "name": "a", "tactic": "t", "description": "d"},
        {"technique_id": "X", "name": "b", "tactic": "t", "description": "d"}
    ])";
    CHECK_THROWS_AS(load_technique_catalog(dup), Error);
}
