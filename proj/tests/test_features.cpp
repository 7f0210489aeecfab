#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "histowas/errors.hpp"
#include "histowas/features.hpp"
#include "histowas/random.hpp"
#include "histowas/simulate.hpp"

using namespace histowas;

namespace {

CurveEstimate curve_with(FunctionId id, std::vector<double> radii, std::vector<double> values,
                         double intensity = 1.0) {
    CurveEstimate c;
    c.function_id = id;
    c.radii = std::move(radii);
    c.values = std::move(values);
    c.intensity = intensity;
    return c;
}

PointPattern pattern_of(std::vector<Point2D> pts) {
    PointPattern p;
    p.points = std::move(pts);
    p.slide_id = "s";
    p.object_type = "t";
    return p;
}

std::map<std::string, double> named_values(const FeatureVector& fv,
                                           const std::vector<FeatureDescriptor>& dict) {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < dict.size(); ++i) out[dict[i].name] = fv.values[i];
    return out;
}

}  // namespace

TEST_CASE("center_curve leaves L alone and zeroes exact CSR curves") {
    const auto l = curve_with(FunctionId::L, {1, 2, 3}, {0.4, -0.1, 0.2});
    const auto lc = center_curve(l);
    CHECK(lc.values == l.values);

    const auto g = curve_with(FunctionId::Pcf, {1, 2, 3}, {1.0, 1.0, 1.0});
    for (double v : center_curve(g).values) CHECK(v == doctest::Approx(0.0));

    const double lambda = 0.02;
    std::vector<double> radii{1, 2, 5};
    std::vector<double> gvals;
    for (double r : radii) gvals.push_back(1.0 - std::exp(-lambda * 3.14159265358979323846 * r * r));
    auto gcurve = curve_with(FunctionId::G, radii, gvals, lambda);
    for (double v : center_curve(gcurve).values) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    const auto j = curve_with(FunctionId::J, {1, 2}, {1.5, 0.5});
    const auto jc = center_curve(j);
    CHECK(jc.values[0] == doctest::Approx(0.5));
    CHECK(jc.values[1] == doctest::Approx(-0.5));
}

TEST_CASE("summarize_curve hand-checked example") {
    const auto c = curve_with(FunctionId::L, {1, 2, 3}, {0.0, 0.5, -0.2});
    const auto s = summarize_curve(c);
    REQUIRE(s.has_value());
    CHECK(s->max == doctest::Approx(0.5));
    CHECK(s->dist_at_max == doctest::Approx(2.0));
    CHECK(s->min == doctest::Approx(-0.2));
    CHECK(s->dist_at_min == doctest::Approx(3.0));
    CHECK(s->auc == doctest::Approx(0.4));
    CHECK(s->mean == doctest::Approx(0.1));
    CHECK(s->std == doctest::Approx(std::sqrt(0.13)));
}

TEST_CASE("summarize_curve degenerate shapes") {
    const auto zero = summarize_curve(curve_with(FunctionId::L, {2, 4, 6}, {0, 0, 0}));
    REQUIRE(zero.has_value());
    CHECK(zero->max == 0.0);
    CHECK(zero->min == 0.0);
    CHECK(zero->auc == 0.0);
    CHECK(zero->dist_at_max == 2.0);  // first grid radius
    CHECK(zero->dist_at_min == 2.0);
    CHECK(zero->std == 0.0);

    const auto constant = summarize_curve(curve_with(FunctionId::L, {1, 3, 7}, {2.5, 2.5, 2.5}));
    REQUIRE(constant.has_value());
    CHECK(constant->auc == doctest::Approx(2.5 * 6.0));
    CHECK(constant->std == 0.0);

    // Extremum ties resolve to the smallest radius.
    const auto tied = summarize_curve(curve_with(FunctionId::L, {1, 2, 3, 4}, {1, 5, 5, 1}));
    CHECK(tied->dist_at_max == 2.0);

    // Undefined points drop out; fewer than two leaves no summary.
    const double nan = std::nan("");
    CHECK(summarize_curve(curve_with(FunctionId::J, {1, 2, 3}, {nan, nan, 1.0})) == std::nullopt);
    const auto partial = summarize_curve(curve_with(FunctionId::J, {1, 2, 3}, {nan, 2.0, 4.0}));
    REQUIRE(partial.has_value());
    CHECK(partial->auc == doctest::Approx(3.0));  // trapezoid over the two defined points
}

TEST_CASE("default dictionary has 30 uniquely named features in 2/10/18 categories") {
    const auto dict = default_dictionary();
    REQUIRE(dict.size() == 30);
    std::set<std::string> names;
    std::map<FeatureCategory, int> counts;
    for (const auto& d : dict) {
        names.insert(d.name);
        counts[d.category]++;
    }
    CHECK(names.size() == 30);
    CHECK(counts[FeatureCategory::Density] == 2);
    CHECK(counts[FeatureCategory::Correlation] == 10);
    CHECK(counts[FeatureCategory::Spacing] == 18);
}

TEST_CASE("extraction on a CSR pattern: centered summaries hover near zero") {
    const PointPattern p = generate_csr(2e-3, Rect{800, 800}, 31);
    const auto window = rectangle_window(0, 0, 800, 800);
    FeatureConfig config;
    config.seed = 4;
    const auto fv = extract_spatial_features(p, window, config);
    REQUIRE(fv.values.size() == 30);
    const auto v = named_values(fv, config.dictionary);

    CHECK(v.at("GlobalDensity") == doctest::Approx(p.size() / (800.0 * 800.0)));
    // CSR ANN expectation is 1/(2 sqrt(lambda)); generous tolerance.
    CHECK(v.at("ANN") ==
          doctest::Approx(0.5 / std::sqrt(v.at("GlobalDensity"))).epsilon(0.1));
    CHECK(std::abs(v.at("L.max")) < 8.0);
    CHECK(std::abs(v.at("g.max")) < 1.0);
    CHECK(std::abs(v.at("G.mean")) < 0.3);
    CHECK(std::abs(v.at("J.mean")) < 0.3);
}

TEST_CASE("extraction flags a clustered pattern through the L curve") {
    // Tight blobs of radius ~4 spaced 120 apart.
    Rng rng(17);
    std::vector<Point2D> pts;
    for (int bx = 0; bx < 5; ++bx) {
        for (int by = 0; by < 5; ++by) {
            for (int k = 0; k < 12; ++k) {
                pts.push_back({60.0 + bx * 120.0 + rng.uniform(-4, 4),
                               60.0 + by * 120.0 + rng.uniform(-4, 4)});
            }
        }
    }
    const auto window = rectangle_window(0, 0, 600, 600);
    FeatureConfig config;
    config.seed = 9;
    const auto fv = extract_spatial_features(pattern_of(pts), window, config);
    const auto v = named_values(fv, config.dictionary);
    CHECK(v.at("L.max") > 5.0);
    CHECK(v.at("L.dist_at_max") < 40.0);  // clustering scale, not the blob spacing
    CHECK(v.at("g.max") > 1.0);
}

TEST_CASE("coordinate scaling moves lengths and density as expected") {
    Rng rng(23);
    std::vector<Point2D> pts;
    for (int bx = 0; bx < 4; ++bx) {
        for (int by = 0; by < 4; ++by) {
            for (int k = 0; k < 8; ++k) {
                pts.push_back({30.0 + bx * 50.0 + rng.uniform(-3, 3),
                               30.0 + by * 50.0 + rng.uniform(-3, 3)});
            }
        }
    }
    const double s = 3.0;
    std::vector<Point2D> scaled;
    for (const auto& p : pts) scaled.push_back({p.x * s, p.y * s});

    std::vector<double> radii, scaled_radii;
    for (int r = 4; r <= 60; r += 4) {
        radii.push_back(r);
        scaled_radii.push_back(r * s);
    }

    FeatureConfig config;
    config.grid = make_distance_grid(radii);
    config.seed = 12;
    const auto base =
        named_values(extract_spatial_features(pattern_of(pts), rectangle_window(0, 0, 220, 220), config),
                     config.dictionary);

    FeatureConfig scaled_config = config;
    scaled_config.grid = make_distance_grid(scaled_radii);
    const auto big = named_values(
        extract_spatial_features(pattern_of(scaled), rectangle_window(0, 0, 220 * s, 220 * s),
                                 scaled_config),
        scaled_config.dictionary);

    CHECK(big.at("ANN") == doctest::Approx(s * base.at("ANN")).epsilon(1e-9));
    CHECK(big.at("GlobalDensity") == doctest::Approx(base.at("GlobalDensity") / (s * s)).epsilon(1e-9));
    CHECK(big.at("L.dist_at_max") == doctest::Approx(s * base.at("L.dist_at_max")).epsilon(1e-9));
    CHECK(big.at("L.dist_at_min") == doctest::Approx(s * base.at("L.dist_at_min")).epsilon(1e-9));
    CHECK(big.at("g.dist_at_max") == doctest::Approx(s * base.at("g.dist_at_max")).epsilon(1e-9));
}

TEST_CASE("missing summaries surface as NaN, never zero") {
    // A grid of radii where F saturates at 1 everywhere makes every J value
    // undefined; the J features must come back NaN with a diagnostic.
    Rng rng(41);
    std::vector<Point2D> pts;
    for (int i = 0; i < 400; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
    const auto window = rectangle_window(0, 0, 100, 100);
    FeatureConfig config;
    config.grid = make_distance_grid({60.0, 80.0});  // far beyond saturation
    config.spacing_correction = EdgeCorrection::None;
    config.seed = 3;
    const auto fv = extract_spatial_features(pattern_of(pts), window, config);
    const auto v = named_values(fv, config.dictionary);
    CHECK(std::isnan(v.at("J.auc")));
    CHECK(std::isnan(v.at("J.mean")));
    CHECK_FALSE(std::isnan(v.at("G.auc")));
    CHECK_FALSE(fv.diagnostics.empty());
}

TEST_CASE("extraction preconditions") {
    const auto window = rectangle_window(0, 0, 10, 10);
    FeatureConfig config;
    CHECK_THROWS_AS(extract_spatial_features(pattern_of({{1, 1}}), window, config),
                    InsufficientPointsError);
    // Points outside the window are dropped before the check.
    CHECK_THROWS_AS(extract_spatial_features(pattern_of({{1, 1}, {50, 50}, {60, 60}}), window, config),
                    InsufficientPointsError);
}
