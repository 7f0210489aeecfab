#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace histowas {

/// Observations x features with explicit NaN missing markers. Each
/// observation (slide) maps to exactly one subject; a subject-level matrix
/// has observation_ids == subject_ids.
struct FeatureMatrix {
    std::vector<std::string> observation_ids;
    std::vector<std::string> subject_ids;
    std::vector<std::string> feature_names;
    std::vector<std::string> feature_categories;
    std::vector<double> values;  // row-major

    std::size_t rows() const { return observation_ids.size(); }
    std::size_t cols() const { return feature_names.size(); }
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
};

/// One scalar phenotype value per subject.
struct PhenotypeVector {
    std::vector<std::string> subject_ids;
    std::vector<double> values;
};

struct AssociationResult {
    std::string feature;
    std::string category;
    double beta = 0.0;       // per-SD effect
    double intercept = 0.0;  // fitted, not serialized
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p = 1.0;
    double neg_log10_p = 0.0;
    bool sig_bonferroni = false;
    bool sig_fdr = false;
    std::size_t n_used = 0;
};

enum class Aggregation { Mean, Median };

struct StudyConfig {
    double alpha = 0.05;
    double fdr_q = 0.05;
    Aggregation aggregation = Aggregation::Mean;
    std::size_t min_subjects = 3;
};

/// Collapses multiple observations per subject into one row, aggregating
/// each feature over that subject's non-missing values. Subjects keep their
/// first-appearance order.
FeatureMatrix aggregate_to_subjects(const FeatureMatrix& matrix, Aggregation method);

/// (x - mean) / sd over non-missing entries, sample sd (n-1); missing stays
/// missing. Throws Error for fewer than 2 values or a constant column.
std::vector<double> zscore(const std::vector<double>& column);

/// Ordinary least squares of y on a single standardized regressor with
/// intercept. Drops pairs where either side is missing; two-sided p from the
/// t distribution with n-2 df, 95% CI. Throws Error with fewer than 3
/// complete pairs or a degenerate x. A constant y yields beta = 0, p = 1.
AssociationResult fit_univariate(const std::vector<double>& x, const std::vector<double>& y);

/// alpha / n_tests.
double bonferroni_threshold(double alpha, std::size_t n_tests);

struct BhResult {
    std::vector<bool> reject;
    double critical_p = 0.0;  // largest p(i) <= i q / m, 0 when none
};

/// Benjamini-Hochberg step-up procedure at level q.
BhResult benjamini_hochberg(const std::vector<double>& p_values, double q);

struct SkippedFeature {
    std::string feature;
    std::string reason;
};

struct StudyResult {
    std::vector<AssociationResult> results;  // sorted by (p, feature)
    std::vector<SkippedFeature> skipped;
    std::size_t n_tests = 0;
    std::size_t n_subjects = 0;
    double bonferroni = 0.0;
    double bh_critical_p = 0.0;
};

/// Aggregate to subjects, standardize, fit one model per feature, apply
/// Bonferroni and Benjamini-Hochberg, and sort by ascending p (ties by
/// name). Subject ID sets of matrix and phenotype must match exactly.
StudyResult run_study(const FeatureMatrix& matrix, const PhenotypeVector& phenotype,
                      const StudyConfig& config);

/// Column-wise merge of matrices covering the same observations. Observation
/// ID sets must match; duplicate feature names are an error.
FeatureMatrix merge_feature_matrices(const FeatureMatrix& base, const FeatureMatrix& extra);

}  // namespace histowas
