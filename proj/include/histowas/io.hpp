#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "histowas/assoc.hpp"
#include "histowas/geometry.hpp"
#include "histowas/simulate.hpp"

namespace histowas {

/// All file formats are UTF-8 text with LF line endings. Reals are written
/// with 17 significant digits so values round-trip exactly; `NA` is the only
/// missing-value token and empty cells are format errors.

struct CentroidReadResult {
    std::vector<PointPattern> patterns;  // grouped by (slide_id, object_type)
    std::vector<std::string> warnings;
};

/// Reads a centroid table (CSV with header columns slide_id, object_type,
/// x_um, y_um in any order). One pattern per (slide, type) group, first
/// appearance order, row order preserved within groups. Unknown columns are
/// ignored with a warning; malformed rows raise IoError with line numbers.
CentroidReadResult read_centroids(const std::string& path);

/// Feature matrix CSV: observation_id, subject_id, then one column per
/// feature. The companion metadata CSV maps feature -> category (+ source);
/// `sources`, when non-empty, must parallel the feature columns.
void write_feature_matrix(const FeatureMatrix& matrix, const std::string& data_path,
                          const std::string& meta_path,
                          const std::vector<std::string>& sources = {});

/// meta_path may be empty; features then get `default_category`.
FeatureMatrix read_feature_matrix(const std::string& data_path, const std::string& meta_path,
                                  const std::string& default_category = "ObjectLevel");

void write_phenotype(const PhenotypeVector& phenotype, const std::string& path);
PhenotypeVector read_phenotype(const std::string& path);

/// Association results as tab-separated text, one row per feature.
void write_results(const std::vector<AssociationResult>& results, const std::string& path);
std::vector<AssociationResult> read_results(const std::string& path);

/// Manhattan plot data: every feature with p below the Bonferroni display
/// threshold plus the `top_below` next-most-significant ones. x is the
/// significance rank over all results.
nlohmann::json emit_manhattan_data(std::vector<AssociationResult> results, double alpha,
                                   std::size_t n_tests, std::size_t top_below = 25);

/// Effect-size plot data: Bonferroni-significant features only, with beta
/// and the 95% CI bounds.
nlohmann::json emit_effect_size_data(std::vector<AssociationResult> results);

/// Envelope plot data for the CSR validation: per function (L, g, G, F) the
/// band, the theoretical curve, coverage, and every per-sample curve.
nlohmann::json emit_envelope_data(const ValidationReport& report);

void write_plot_data(const nlohmann::json& data, const std::string& path);
nlohmann::json read_plot_data(const std::string& path);

/// 17-significant-digit representation that parses back bit-equal.
std::string format_real(double v);

}  // namespace histowas
