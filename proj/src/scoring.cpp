#include "threatgraph/scoring.hpp"
#include "threatgraph/error.hpp"

#include <algorithm>
#include <cmath>

namespace threatgraph::scoring {

namespace {

void require_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw domain_error(std::string(name) + " must lie in [0,1]");
    }
}

void require_non_negative(double v, const char* name) {
    if (!(v >= 0.0)) {
        throw domain_error(std::string(name) + " must be >= 0");
    }
}

} // namespace

double round_tenths(double x) {
    return std::floor(x * 10.0 + 0.5) / 10.0;
}

double impact_score(double c, double i, double a) {
    require_unit(c, "confidentiality");
    require_unit(i, "integrity");
    require_unit(a, "availability");
    return 10.41 * (1.0 - (1.0 - c) * (1.0 - i) * (1.0 - a));
}

double exploitability_score(double av, double ac, double au) {
    require_unit(av, "access_vector");
    require_unit(ac, "access_complexity");
    require_unit(au, "authentication");
    return 20.0 * av * ac * au;
}

double base_score(double impact, double exploitability) {
    require_non_negative(impact, "impact");
    require_non_negative(exploitability, "exploitability");
    const double f = impact == 0.0 ? 0.0 : 1.176;
    const double raw = (0.6 * impact + 0.4 * exploitability - 1.5) * f;
    return std::clamp(round_tenths(raw), 0.0, 10.0);
}

double composite_risk(double base, double exploitability, double impact) {
    require_non_negative(base, "base");
    require_non_negative(exploitability, "exploitability");
    require_non_negative(impact, "impact");
    return 0.5 * base + 0.3 * exploitability + 0.2 * impact;
}

Severity severity_bucket(double base) {
    if (!(base >= 0.0 && base <= 10.0)) {
        throw domain_error("base score must lie in [0,10]");
    }
    const long tenths = std::lround(round_tenths(base) * 10.0);
    if (tenths <= 39) return Severity::LOW;
    if (tenths <= 69) return Severity::MEDIUM;
    if (tenths <= 89) return Severity::HIGH;
    return Severity::CRITICAL;
}

Priority priority_bucket(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw domain_error("predicted risk must lie in [0,1]");
    }
    if (p > 0.8) return Priority::CRITICAL_RESPONSE;
    if (p >= 0.4) return Priority::MEDIUM_PRIORITY;
    return Priority::LOW_PRIORITY;
}

RiskScore score_from_components(double impact, double exploitability) {
    RiskScore out;
    out.impact = impact;
    out.exploitability = exploitability;
    out.base = base_score(impact, exploitability);
    out.composite = composite_risk(out.base, exploitability, impact);
    out.severity = severity_bucket(out.base);
    out.priority = priority_bucket(std::clamp(out.composite / 10.0, 0.0, 1.0));
    return out;
}

RiskScore score_from_inputs(const CvssInputs& in) {
    const double is = impact_score(in.confidentiality, in.integrity, in.availability);
    const double es = exploitability_score(in.access_vector, in.access_complexity, in.authentication);
    return score_from_components(is, es);
}

const char* severity_name(Severity s) {
    switch (s) {
        case Severity::LOW:      return "LOW";
        case Severity::MEDIUM:   return "MEDIUM";
        case Severity::HIGH:     return "HIGH";
        case Severity::CRITICAL: return "CRITICAL";
    }
    return "LOW";
}

const char* priority_name(Priority p) {
    switch (p) {
        case Priority::CRITICAL_RESPONSE: return "CRITICAL_RESPONSE";
        case Priority::MEDIUM_PRIORITY:   return "MEDIUM_PRIORITY";
        case Priority::LOW_PRIORITY:      return "LOW_PRIORITY";
    }
    return "LOW_PRIORITY";
}

Severity severity_from_name(const std::string& name) {
    if (name == "LOW") return Severity::LOW;
    if (name == "MEDIUM") return Severity::MEDIUM;
    if (name == "HIGH") return Severity::HIGH;
    if (name == "CRITICAL") return Severity::CRITICAL;
    throw schema_error("unknown severity label: " + name);
}

} // namespace threatgraph::scoring
