#pragma once

#include <string>

namespace threatgraph::scoring {

// CVSS v2 impact factors (C, I, A) and access factors (AV, AC, Au),
// all expected in [0,1].
struct CvssInputs {
    double confidentiality = 0.0;
    double integrity = 0.0;
    double availability = 0.0;
    double access_vector = 0.0;
    double access_complexity = 0.0;
    double authentication = 0.0;
};

enum class Severity { LOW, MEDIUM, HIGH, CRITICAL };

// Queues for formula-based predicted risk in [0,1].
enum class Priority { CRITICAL_RESPONSE, MEDIUM_PRIORITY, LOW_PRIORITY };

struct RiskScore {
    double impact = 0.0;          // [0, 10.41]
    double exploitability = 0.0;  // [0, 20]
    double base = 0.0;            // [0, 10], one-decimal rounded
    double composite = 0.0;       // [0, 10]
    Severity severity = Severity::LOW;
    Priority priority = Priority::LOW_PRIORITY;
};

// IS = 10.41 * (1 - (1-C)(1-I)(1-A)); inputs must be in [0,1].
double impact_score(double c, double i, double a);

// ES = 20 * AV * AC * Au; inputs must be in [0,1].
double exploitability_score(double av, double ac, double au);

// Base = roundup((0.6*IS + 0.4*ES - 1.5) * f(IS)), f(0)=0, f(IS>0)=1.176.
// "roundup" is round-half-up to one decimal (integer-tenths arithmetic);
// the result is clamped to [0,10].
double base_score(double impact, double exploitability);

// Risk = 0.5*base + 0.3*exploitability + 0.2*impact. Inputs must be >= 0.
double composite_risk(double base, double exploitability, double impact);

// Buckets evaluated on the one-decimal rounded base score:
// [0,3.9] LOW, [4.0,6.9] MEDIUM, [7.0,8.9] HIGH, [9.0,10.0] CRITICAL.
Severity severity_bucket(double base);

// p > 0.8 -> CRITICAL_RESPONSE; 0.4 <= p <= 0.8 -> MEDIUM_PRIORITY;
// p < 0.4 -> LOW_PRIORITY. Both boundaries belong to MEDIUM.
Priority priority_bucket(double p);

// Derives every RiskScore field from the CVSS factor block. The priority
// bucket is computed on composite/10 so that formula scores and learned
// scores share one [0,1] scale.
RiskScore score_from_inputs(const CvssInputs& in);

// Same derivation starting from already-known IS/ES values.
RiskScore score_from_components(double impact, double exploitability);

const char* severity_name(Severity s);
const char* priority_name(Priority p);
Severity severity_from_name(const std::string& name);

// Round-half-up to one decimal place, computed in integer tenths so the
// result is identical across platforms.
double round_tenths(double x);

} // namespace threatgraph::scoring
