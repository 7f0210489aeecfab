#include "histowas/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "histowas/errors.hpp"

namespace histowas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPFloor = 1e-300;

double aggregate_values(std::vector<double>& vals, Aggregation method) {
    if (vals.empty()) return kNaN;
    if (method == Aggregation::Mean) {
        double acc = 0.0;
        for (double v : vals) acc += v;
        return acc / static_cast<double>(vals.size());
    }
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    if (n % 2 == 1) return vals[n / 2];
    return 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

std::string join_ids(const std::set<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ", ";
        out += id;
    }
    return out;
}

}  // namespace

FeatureMatrix aggregate_to_subjects(const FeatureMatrix& matrix, Aggregation method) {
    std::vector<std::string> subjects;
    std::map<std::string, std::size_t> subject_row;
    for (const auto& s : matrix.subject_ids) {
        if (subject_row.emplace(s, subjects.size()).second) subjects.push_back(s);
    }

    FeatureMatrix out;
    out.observation_ids = subjects;
    out.subject_ids = subjects;
    out.feature_names = matrix.feature_names;
    out.feature_categories = matrix.feature_categories;
    out.values.assign(subjects.size() * matrix.cols(), kNaN);

    std::vector<std::size_t> row_subject(matrix.rows());
    for (std::size_t r = 0; r < matrix.rows(); ++r) row_subject[r] = subject_row.at(matrix.subject_ids[r]);

    std::vector<std::vector<double>> buckets(subjects.size());
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        for (auto& b : buckets) b.clear();
        for (std::size_t r = 0; r < matrix.rows(); ++r) {
            const double v = matrix.at(r, c);
            if (!std::isnan(v)) buckets[row_subject[r]].push_back(v);
        }
        for (std::size_t s = 0; s < subjects.size(); ++s) {
            out.at(s, c) = aggregate_values(buckets[s], method);
        }
    }
    return out;
}

std::vector<double> zscore(const std::vector<double>& column) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : column) {
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
    }
    if (n < 2) throw Error("zscore: fewer than 2 non-missing values");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : column) {
        if (std::isnan(v)) continue;
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw Error("zscore: constant column");

    std::vector<double> out(column.size(), kNaN);
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (!std::isnan(column[i])) out[i] = (column[i] - mean) / sd;
    }
    return out;
}

AssociationResult fit_univariate(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_univariate: length mismatch");

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(x[i]) || std::isnan(y[i])) continue;
        xs.push_back(x[i]);
        ys.push_back(y[i]);
    }
    const std::size_t n = xs.size();
    if (n < 3) throw Error("fit_univariate: fewer than 3 complete pairs");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error("fit_univariate: regressor has no variance");

    AssociationResult res;
    res.n_used = n;

    if (!(syy > 0.0)) {
        // Constant response: slope 0 by convention, nothing to test.
        res.beta = 0.0;
        res.intercept = my;
        res.se = 0.0;
        res.ci_low = 0.0;
        res.ci_high = 0.0;
        res.p = 1.0;
        res.neg_log10_p = 0.0;
        return res;
    }

    const double beta = sxy / sxx;
    const double intercept = my - beta * mx;
    res.intercept = intercept;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - intercept - beta * xs[i];
        rss += e * e;
    }
    const double df = static_cast<double>(n - 2);

    res.beta = beta;
    if (rss <= 0.0) {
        // Exact fit: zero residual variance, p collapses to the floor.
        res.se = 0.0;
        res.ci_low = beta;
        res.ci_high = beta;
        res.p = kPFloor;
    } else {
        const double sigma2 = rss / df;
        res.se = std::sqrt(sigma2 / sxx);
        const boost::math::students_t dist(df);
        const double t = beta / res.se;
        res.p = std::max(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), kPFloor);
        const double tcrit = boost::math::quantile(dist, 0.975);
        res.ci_low = beta - tcrit * res.se;
        res.ci_high = beta + tcrit * res.se;
    }
    res.neg_log10_p = -std::log10(res.p);
    return res;
}

double bonferroni_threshold(double alpha, std::size_t n_tests) {
    if (n_tests < 1) throw std::invalid_argument("bonferroni_threshold: n_tests must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bonferroni_threshold: alpha in (0,1)");
    return alpha / static_cast<double>(n_tests);
}

BhResult benjamini_hochberg(const std::vector<double>& p_values, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("benjamini_hochberg: q in (0,1)");
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("benjamini_hochberg: p values in (0,1]");
    }

    std::vector<double> sorted = p_values;
    std::sort(sorted.begin(), sorted.end());
    double critical = 0.0;
    for (std::size_t i = m; i >= 1; --i) {
        if (sorted[i - 1] <= static_cast<double>(i) * q / static_cast<double>(m)) {
            critical = sorted[i - 1];
            break;
        }
    }

    BhResult out;
    out.critical_p = critical;
    out.reject.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.reject[i] = critical > 0.0 && p_values[i] <= critical;
    return out;
}

StudyResult run_study(const FeatureMatrix& matrix, const PhenotypeVector& phenotype,
                      const StudyConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ConfigError("run_study: alpha in (0,1)");
    if (!(config.fdr_q > 0.0 && config.fdr_q < 1.0)) throw ConfigError("run_study: fdr_q in (0,1)");

    const FeatureMatrix subj = aggregate_to_subjects(matrix, config.aggregation);

    std::map<std::string, double> pheno;
    for (std::size_t i = 0; i < phenotype.subject_ids.size(); ++i) {
        if (!pheno.emplace(phenotype.subject_ids[i], phenotype.values[i]).second) {
            throw Error("run_study: duplicate phenotype subject '" + phenotype.subject_ids[i] + "'");
        }
    }

    std::set<std::string> matrix_only(subj.subject_ids.begin(), subj.subject_ids.end());
    std::set<std::string> pheno_only;
    for (const auto& [id, v] : pheno) {
        if (matrix_only.erase(id) == 0) pheno_only.insert(id);
    }
    if (!matrix_only.empty() || !pheno_only.empty()) {
        std::string msg = "run_study: subject IDs do not match.";
        if (!matrix_only.empty()) msg += " Only in feature matrix: " + join_ids(matrix_only) + ".";
        if (!pheno_only.empty()) msg += " Only in phenotype: " + join_ids(pheno_only) + ".";
        throw Error(msg);
    }
    if (subj.rows() < config.min_subjects) {
        throw Error("run_study: only " + std::to_string(subj.rows()) + " subjects, needs >= " +
                    std::to_string(config.min_subjects));
    }

    std::vector<double> y(subj.rows());
    for (std::size_t r = 0; r < subj.rows(); ++r) y[r] = pheno.at(subj.subject_ids[r]);

    StudyResult study;
    study.n_subjects = subj.rows();
    std::vector<double> column(subj.rows());
    for (std::size_t c = 0; c < subj.cols(); ++c) {
        for (std::size_t r = 0; r < subj.rows(); ++r) column[r] = subj.at(r, c);
        try {
            const std::vector<double> z = zscore(column);
            AssociationResult res = fit_univariate(z, y);
            res.feature = subj.feature_names[c];
            res.category = c < subj.feature_categories.size() ? subj.feature_categories[c] : "";
            study.results.push_back(std::move(res));
        } catch (const Error& e) {
            study.skipped.push_back({subj.feature_names[c], e.what()});
        }
    }
    if (study.results.empty()) throw Error("run_study: no testable features");

    study.n_tests = study.results.size();
    study.bonferroni = bonferroni_threshold(config.alpha, study.n_tests);

    std::vector<double> ps(study.n_tests);
    for (std::size_t i = 0; i < study.n_tests; ++i) ps[i] = study.results[i].p;
    const BhResult bh = benjamini_hochberg(ps, config.fdr_q);
    study.bh_critical_p = bh.critical_p;
    for (std::size_t i = 0; i < study.n_tests; ++i) {
        study.results[i].sig_bonferroni = study.results[i].p < study.bonferroni;
        study.results[i].sig_fdr = bh.reject[i];
    }

    std::sort(study.results.begin(), study.results.end(),
              [](const AssociationResult& a, const AssociationResult& b) {
                  if (a.p != b.p) return a.p < b.p;
                  return a.feature < b.feature;
              });
    return study;
}

FeatureMatrix merge_feature_matrices(const FeatureMatrix& base, const FeatureMatrix& extra) {
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < base.rows(); ++r) row_of[base.observation_ids[r]] = r;
    if (row_of.size() != base.rows()) throw Error("merge: duplicate observation IDs");

    std::set<std::string> extra_ids(extra.observation_ids.begin(), extra.observation_ids.end());
    std::set<std::string> base_only, extra_only;
    for (const auto& id : base.observation_ids) {
        if (extra_ids.find(id) == extra_ids.end()) base_only.insert(id);
    }
    for (const auto& id : extra.observation_ids) {
        if (row_of.find(id) == row_of.end()) extra_only.insert(id);
    }
    if (!base_only.empty() || !extra_only.empty()) {
        std::string msg = "merge: observation IDs do not match.";
        if (!base_only.empty()) msg += " Missing from extra file: " + join_ids(base_only) + ".";
        if (!extra_only.empty()) msg += " Unknown observations: " + join_ids(extra_only) + ".";
        throw Error(msg);
    }

    std::set<std::string> names(base.feature_names.begin(), base.feature_names.end());
    for (const auto& name : extra.feature_names) {
        if (!names.insert(name).second) throw Error("merge: duplicate feature column '" + name + "'");
    }

    FeatureMatrix out = base;
    out.feature_names.insert(out.feature_names.end(), extra.feature_names.begin(),
                             extra.feature_names.end());
    out.feature_categories.insert(out.feature_categories.end(), extra.feature_categories.begin(),
                                  extra.feature_categories.end());
    out.values.assign(out.rows() * out.feature_names.size(), kNaN);
    for (std::size_t r = 0; r < base.rows(); ++r) {
        for (std::size_t c = 0; c < base.cols(); ++c) out.at(r, c) = base.at(r, c);
    }
    for (std::size_t r = 0; r < extra.rows(); ++r) {
        const std::size_t br = row_of.at(extra.observation_ids[r]);
        for (std::size_t c = 0; c < extra.cols(); ++c) out.at(br, base.cols() + c) = extra.at(r, c);
    }

    for (std::size_t r = 0; r < extra.rows(); ++r) {
        const std::size_t br = row_of.at(extra.observation_ids[r]);
        if (!extra.subject_ids.empty() && !base.subject_ids[br].empty() &&
            !extra.subject_ids[r].empty() && extra.subject_ids[r] != base.subject_ids[br]) {
            throw Error("merge: subject mismatch for observation '" + extra.observation_ids[r] + "'");
        }
    }
    return out;
}

}  // namespace histowas
