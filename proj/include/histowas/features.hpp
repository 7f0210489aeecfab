#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "histowas/geometry.hpp"
#include "histowas/ppstats.hpp"

namespace histowas {

/// Analytical categories of the spatial feature dictionary.
enum class FeatureCategory { Density, Spacing, Correlation };

std::string category_name(FeatureCategory c);

/// Scalar reductions of a centered curve, or the scalar estimators.
enum class SummaryKind { Value, Auc, Max, Min, DistAtMax, DistAtMin, Mean, Std };

std::string summary_name(SummaryKind k);

/// Where a feature's number comes from.
enum class FeatureSource { Density, Ann, L, Pcf, G, F, J };

std::string source_name(FeatureSource s);

struct FeatureDescriptor {
    std::string name;
    FeatureCategory category = FeatureCategory::Density;
    FeatureSource source = FeatureSource::Density;
    SummaryKind summary = SummaryKind::Value;
};

/// The default 30-feature roster: GlobalDensity and ANN (Density), five
/// summaries each of the centered L and g curves (Correlation), six each of
/// the centered G, F and J curves (Spacing).
std::vector<FeatureDescriptor> default_dictionary();

/// Shape summaries of a centered curve over its defined grid points.
struct CurveSummary {
    double auc = 0.0;
    double max = 0.0;
    double min = 0.0;
    double dist_at_max = 0.0;
    double dist_at_min = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

/// One observation's feature values aligned with a dictionary; NaN marks a
/// value that could not be computed (never silently zero).
struct FeatureVector {
    std::string observation_id;
    std::vector<double> values;
    std::vector<std::string> diagnostics;
};

struct FeatureConfig {
    DistanceGrid grid;  // empty radii = derive from window area
    EdgeCorrection second_order_correction = EdgeCorrection::RipleyIsotropic;
    EdgeCorrection spacing_correction = EdgeCorrection::KaplanMeier;
    double g_bandwidth = 0.0;     // <= 0 = Stoyan default
    std::size_t n_quadrats = 0;   // 0 = max(n, 1000)
    std::uint64_t seed = 1;
    std::vector<FeatureDescriptor> dictionary = default_dictionary();
};

/// Subtracts the CSR-theoretical curve at the pattern's intensity: L is
/// already centered, g and J shift by 1, G and F by 1 - exp(-lambda pi r^2).
CurveEstimate center_curve(const CurveEstimate& curve);

/// Summaries over defined values; AUC is the signed trapezoid integral over
/// the defined sub-grid, extremum ties resolve to the smallest radius, std
/// uses the n-1 denominator. nullopt when fewer than 2 points are defined.
std::optional<CurveSummary> summarize_curve(const CurveEstimate& centered);

/// Computes density, ANN and the five curves for the pattern restricted to
/// the window, then assembles the configured dictionary. Throws
/// InsufficientPointsError when fewer than 2 points fall inside the window.
FeatureVector extract_spatial_features(const PointPattern& pattern, const ObservationWindow& window,
                                       const FeatureConfig& config);

}  // namespace histowas
