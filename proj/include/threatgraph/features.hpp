#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace threatgraph::features {

// Fitted TF-IDF statistics. Vocabulary indices are dense 0..|V|-1 in
// lexicographic term order, so vector layout is independent of corpus
// document order.
struct TfidfModel {
    std::map<std::string, std::size_t> vocabulary;
    std::size_t doc_count = 0;
    std::vector<std::size_t> doc_freq;  // indexed by vocabulary index

    double idf(std::size_t term_index) const;
};

// Dense row-major matrix keyed by entity id.
struct FeatureMatrix {
    std::vector<std::string> ids;
    std::size_t dims = 0;
    std::vector<double> values;  // ids.size() * dims

    std::size_t rows() const { return ids.size(); }
    const double* row(std::size_t r) const { return values.data() + r * dims; }
    double* row(std::size_t r) { return values.data() + r * dims; }

    // Header "id,dim_0..dim_{k-1}", LF line endings.
    std::string to_csv() const;
};

// Lowercased maximal alphanumeric runs of length >= 2.
std::vector<std::string> tokenize(const std::string& text);

// idf(t) = ln(N / (1 + df(t))) + 1. Empty corpus is a NUMERIC error.
TfidfModel fit_tfidf(const std::vector<std::string>& corpus);

// tf*idf weights laid out by vocabulary index, truncated/zero-padded to
// dims, then L2-normalized (zero vectors stay zero). Unseen terms are
// ignored.
std::vector<double> vectorize(const TfidfModel& model, const std::string& doc, std::size_t dims);

// sum_i min(u_i,v_i) / sum_i max(u_i,v_i); 0 when both vectors are zero.
// Entries must be non-negative and dims equal.
double weighted_jaccard(const std::vector<double>& u, const std::vector<double>& v);

// (x - mean) / population std; all-equal input maps to all zeros.
std::vector<double> z_normalize(const std::vector<double>& xs);

// (x - min) / (max - min + eps); outputs lie in [0,1).
std::vector<double> min_max_scale(const std::vector<double>& xs, double eps);

} // namespace threatgraph::features
