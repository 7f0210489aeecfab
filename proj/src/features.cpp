#include "histowas/features.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "histowas/errors.hpp"

namespace histowas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pick_summary(const CurveSummary& s, SummaryKind k) {
    switch (k) {
        case SummaryKind::Auc: return s.auc;
        case SummaryKind::Max: return s.max;
        case SummaryKind::Min: return s.min;
        case SummaryKind::DistAtMax: return s.dist_at_max;
        case SummaryKind::DistAtMin: return s.dist_at_min;
        case SummaryKind::Mean: return s.mean;
        case SummaryKind::Std: return s.std;
        case SummaryKind::Value: break;
    }
    throw std::invalid_argument("Value is not a curve summary");
}

void push_curve_features(std::vector<FeatureDescriptor>& dict, FeatureSource src,
                         FeatureCategory cat, bool with_mean) {
    const std::string prefix = source_name(src) + ".";
    const SummaryKind base[] = {SummaryKind::Auc, SummaryKind::Max, SummaryKind::Min,
                                SummaryKind::DistAtMax, SummaryKind::DistAtMin};
    for (SummaryKind k : base) dict.push_back({prefix + summary_name(k), cat, src, k});
    if (with_mean) dict.push_back({prefix + summary_name(SummaryKind::Mean), cat, src, SummaryKind::Mean});
}

}  // namespace

std::string category_name(FeatureCategory c) {
    switch (c) {
        case FeatureCategory::Density: return "Density";
        case FeatureCategory::Spacing: return "Spacing";
        case FeatureCategory::Correlation: return "Correlation";
    }
    return "?";
}

std::string summary_name(SummaryKind k) {
    switch (k) {
        case SummaryKind::Value: return "value";
        case SummaryKind::Auc: return "auc";
        case SummaryKind::Max: return "max";
        case SummaryKind::Min: return "min";
        case SummaryKind::DistAtMax: return "dist_at_max";
        case SummaryKind::DistAtMin: return "dist_at_min";
        case SummaryKind::Mean: return "mean";
        case SummaryKind::Std: return "std";
    }
    return "?";
}

std::string source_name(FeatureSource s) {
    switch (s) {
        case FeatureSource::Density: return "density";
        case FeatureSource::Ann: return "ANN";
        case FeatureSource::L: return "L";
        case FeatureSource::Pcf: return "g";
        case FeatureSource::G: return "G";
        case FeatureSource::F: return "F";
        case FeatureSource::J: return "J";
    }
    return "?";
}

std::vector<FeatureDescriptor> default_dictionary() {
    std::vector<FeatureDescriptor> dict;
    dict.reserve(30);
    dict.push_back({"GlobalDensity", FeatureCategory::Density, FeatureSource::Density, SummaryKind::Value});
    dict.push_back({"ANN", FeatureCategory::Density, FeatureSource::Ann, SummaryKind::Value});
    push_curve_features(dict, FeatureSource::L, FeatureCategory::Correlation, false);
    push_curve_features(dict, FeatureSource::Pcf, FeatureCategory::Correlation, false);
    push_curve_features(dict, FeatureSource::G, FeatureCategory::Spacing, true);
    push_curve_features(dict, FeatureSource::F, FeatureCategory::Spacing, true);
    push_curve_features(dict, FeatureSource::J, FeatureCategory::Spacing, true);
    return dict;
}

CurveEstimate center_curve(const CurveEstimate& curve) {
    if (curve.function_id == FunctionId::L) return curve;
    CurveEstimate centered = curve;
    for (std::size_t g = 0; g < centered.values.size(); ++g) {
        if (std::isnan(centered.values[g])) continue;
        centered.values[g] -= theoretical_value(curve.function_id, curve.intensity, curve.radii[g]);
    }
    return centered;
}

std::optional<CurveSummary> summarize_curve(const CurveEstimate& centered) {
    std::vector<double> r, v;
    r.reserve(centered.radii.size());
    v.reserve(centered.values.size());
    for (std::size_t g = 0; g < centered.values.size(); ++g) {
        if (std::isnan(centered.values[g])) continue;
        r.push_back(centered.radii[g]);
        v.push_back(centered.values[g]);
    }
    const std::size_t n = v.size();
    if (n < 2) return std::nullopt;

    CurveSummary s;
    s.max = v[0];
    s.min = v[0];
    s.dist_at_max = r[0];
    s.dist_at_min = r[0];
    double sum = v[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (v[i] > s.max) {
            s.max = v[i];
            s.dist_at_max = r[i];
        }
        if (v[i] < s.min) {
            s.min = v[i];
            s.dist_at_min = r[i];
        }
        sum += v[i];
        s.auc += 0.5 * (v[i] + v[i - 1]) * (r[i] - r[i - 1]);
    }
    s.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(n - 1));
    return s;
}

FeatureVector extract_spatial_features(const PointPattern& pattern, const ObservationWindow& window,
                                       const FeatureConfig& config) {
    validate_pattern(pattern);
    if (!(window.total_area > 0.0)) throw NoWindowError("extract: window has zero area");

    // Estimators operate on the in-window pattern; DBSCAN noise and any
    // centroids outside the hulls do not take part.
    PointPattern inside;
    inside.slide_id = pattern.slide_id;
    inside.object_type = pattern.object_type;
    for (const auto& p : pattern.points) {
        if (contains(window, p)) inside.points.push_back(p);
    }

    FeatureVector out;
    out.observation_id = pattern.slide_id;
    if (inside.size() < pattern.size()) {
        out.diagnostics.push_back(std::to_string(pattern.size() - inside.size()) +
                                  " point(s) outside the window were dropped");
    }
    const std::size_t dup = count_duplicate_points(inside);
    if (dup > 0) out.diagnostics.push_back(std::to_string(dup) + " duplicate coordinate(s) kept");

    const std::size_t n = inside.size();
    if (n < 2) throw InsufficientPointsError("extract: fewer than 2 in-window points");

    const double lambda = static_cast<double>(n) / window.total_area;
    const DistanceGrid grid =
        config.grid.radii.empty() ? default_distance_grid(window.total_area) : config.grid;
    const double bandwidth = config.g_bandwidth > 0.0 ? config.g_bandwidth : stoyan_bandwidth(lambda);
    const std::size_t quadrats =
        config.n_quadrats > 0 ? config.n_quadrats : default_quadrat_count(n);

    const SecondOrderCurves so =
        second_order_curves(inside, window, grid, config.second_order_correction, bandwidth);
    const CurveEstimate l_curve = l_function(so.k);
    const CurveEstimate g_curve = nearest_neighbor_cdf(inside, window, grid, config.spacing_correction);
    const CurveEstimate f_curve =
        empty_space_cdf(inside, window, grid, config.spacing_correction, quadrats, config.seed);
    const CurveEstimate j_curve = j_function(g_curve, f_curve);
    const double ann = average_nearest_neighbor(inside);

    const auto summary_of = [](const CurveEstimate& c) { return summarize_curve(center_curve(c)); };
    const CurveEstimate* curves[] = {&l_curve, &so.pcf, &g_curve, &f_curve, &j_curve};
    std::optional<CurveSummary> summaries[5];
    for (int c = 0; c < 5; ++c) {
        summaries[c] = summary_of(*curves[c]);
        if (!summaries[c]) {
            out.diagnostics.push_back(function_name(curves[c]->function_id) +
                                      " summary undefined (fewer than 2 defined radii)");
        }
    }
    const auto summary_for = [&](FeatureSource src) -> const std::optional<CurveSummary>& {
        switch (src) {
            case FeatureSource::L: return summaries[0];
            case FeatureSource::Pcf: return summaries[1];
            case FeatureSource::G: return summaries[2];
            case FeatureSource::F: return summaries[3];
            default: return summaries[4];
        }
    };

    out.values.reserve(config.dictionary.size());
    for (const auto& desc : config.dictionary) {
        double value = kNaN;
        if (desc.source == FeatureSource::Density) {
            value = lambda;
        } else if (desc.source == FeatureSource::Ann) {
            value = ann;
        } else {
            const auto& s = summary_for(desc.source);
            if (s) value = pick_summary(*s, desc.summary);
        }
        out.values.push_back(value);
    }
    return out;
}

}  // namespace histowas
