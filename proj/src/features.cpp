#include "threatgraph/features.hpp"
#include "threatgraph/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

namespace threatgraph::features {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            if (cur.size() >= 2) tokens.push_back(cur);
            cur.clear();
        }
    }
    if (cur.size() >= 2) tokens.push_back(cur);
    return tokens;
}

double TfidfModel::idf(std::size_t term_index) const {
    return std::log(static_cast<double>(doc_count) /
                    (1.0 + static_cast<double>(doc_freq[term_index]))) + 1.0;
}

TfidfModel fit_tfidf(const std::vector<std::string>& corpus) {
    if (corpus.empty()) {
        throw domain_error("tf-idf corpus must be non-empty");
    }
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
        std::set<std::string> unique;
        for (auto& tok : tokenize(doc)) unique.insert(std::move(tok));
        for (const auto& tok : unique) ++df[tok];
    }
    TfidfModel model;
    model.doc_count = corpus.size();
    model.doc_freq.reserve(df.size());
    std::size_t index = 0;
    for (const auto& [term, count] : df) {
        model.vocabulary.emplace(term, index++);
        model.doc_freq.push_back(count);
    }
    return model;
}

std::vector<double> vectorize(const TfidfModel& model, const std::string& doc, std::size_t dims) {
    if (dims == 0) {
        throw domain_error("vectorize dims must be >= 1");
    }
    std::unordered_map<std::size_t, double> tf;
    for (const auto& tok : tokenize(doc)) {
        auto it = model.vocabulary.find(tok);
        if (it != model.vocabulary.end()) tf[it->second] += 1.0;
    }
    std::vector<double> out(dims, 0.0);
    for (const auto& [index, count] : tf) {
        if (index < dims) out[index] = count * model.idf(index);
    }
    double norm_sq = 0.0;
    for (double v : out) norm_sq += v * v;
    if (norm_sq > 0.0) {
        const double norm = std::sqrt(norm_sq);
        for (double& v : out) v /= norm;
    }
    return out;
}

double weighted_jaccard(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) {
        throw domain_error("weighted_jaccard requires equal dims");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] < 0.0 || v[i] < 0.0) {
            throw domain_error("weighted_jaccard requires non-negative entries");
        }
        num += std::min(u[i], v[i]);
        den += std::max(u[i], v[i]);
    }
    return den == 0.0 ? 0.0 : num / den;
}

std::vector<double> z_normalize(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    std::vector<double> out(xs.size(), 0.0);
    if (var > 0.0) {
        const double sd = std::sqrt(var);
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mean) / sd;
    }
    return out;
}

std::vector<double> min_max_scale(const std::vector<double>& xs, double eps) {
    if (xs.empty()) return {};
    if (!(eps > 0.0)) {
        throw domain_error("min_max_scale eps must be > 0");
    }
    double lo = xs[0], hi = xs[0];
    for (double x : xs) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - lo) / (hi - lo + eps);
    return out;
}

std::string FeatureMatrix::to_csv() const {
    std::string out = "id";
    for (std::size_t d = 0; d < dims; ++d) out += ",dim_" + std::to_string(d);
    out += "\n";
    char buf[64];
    for (std::size_t r = 0; r < rows(); ++r) {
        out += ids[r];
        for (std::size_t d = 0; d < dims; ++d) {
            std::snprintf(buf, sizeof(buf), ",%.9g", values[r * dims + d]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace threatgraph::features
