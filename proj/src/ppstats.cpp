#include "histowas/ppstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "histowas/errors.hpp"
#include "histowas/grid_index.hpp"
#include "histowas/random.hpp"

namespace histowas {

namespace {

constexpr int kArcCount = 256;
constexpr double kWeightCap = 16.0;
constexpr double kJUndefinedEps = 1e-9;

const double* arc_cos_table() {
    static const auto table = [] {
        auto t = new double[kArcCount];
        for (int k = 0; k < kArcCount; ++k) {
            t[k] = std::cos(2.0 * std::numbers::pi * (k + 0.5) / kArcCount);
        }
        return t;
    }();
    return table;
}

const double* arc_sin_table() {
    static const auto table = [] {
        auto t = new double[kArcCount];
        for (int k = 0; k < kArcCount; ++k) {
            t[k] = std::sin(2.0 * std::numbers::pi * (k + 0.5) / kArcCount);
        }
        return t;
    }();
    return table;
}

double pattern_boundary_distance(const ObservationWindow& window, const Point2D& p,
                                 const char* what) {
    if (!contains(window, p)) {
        throw Error(std::string(what) + ": point outside the observation window");
    }
    return distance_to_boundary(window, p);
}

void check_grid(const DistanceGrid& grid) {
    if (grid.radii.empty()) throw std::invalid_argument("distance grid is empty");
}

void check_pair_correction(EdgeCorrection c, const char* what) {
    if (c == EdgeCorrection::KaplanMeier) {
        throw std::invalid_argument(std::string(what) + ": Kaplan-Meier applies to G/F/J only");
    }
}

void check_cdf_correction(EdgeCorrection c, const char* what) {
    if (c == EdgeCorrection::RipleyIsotropic) {
        throw std::invalid_argument(std::string(what) + ": isotropic correction applies to K/L/g only");
    }
}

/// A censored observation: time = min(distance, boundary distance).
struct CensoredObs {
    double t;
    bool event;
};

/// Product-limit CDF evaluated at grid radii. While no censoring has been
/// processed the value is emitted as events/n directly, which keeps the
/// uncensored case bit-identical to the empirical CDF.
std::vector<double> kaplan_meier_cdf(std::vector<CensoredObs> obs, const DistanceGrid& grid) {
    std::sort(obs.begin(), obs.end(), [](const CensoredObs& a, const CensoredObs& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.event && !b.event;  // events precede censorings at ties
    });
    const std::size_t n = obs.size();

    std::vector<double> values(grid.size(), 0.0);
    std::size_t i = 0;
    std::size_t events = 0;
    bool censoring_seen = false;
    double survival = 1.0;
    double cdf = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double r = grid.radii[g];
        while (i < n && obs[i].t <= r) {
            // Process the whole tie group in one multiplicative step.
            const double t = obs[i].t;
            const std::size_t at_risk = n - i;
            std::size_t d = 0, c = 0;
            while (i < n && obs[i].t == t) {
                obs[i].event ? ++d : ++c;
                ++i;
            }
            if (!censoring_seen) {
                events += d;
                cdf = static_cast<double>(events) / static_cast<double>(n);
                survival = 1.0 - cdf;
                if (c > 0) censoring_seen = true;
            } else if (d > 0) {
                survival *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
                cdf = 1.0 - survival;
            }
        }
        values[g] = cdf;
    }
    return values;
}

std::vector<double> empirical_cdf(std::vector<double> distances, const DistanceGrid& grid) {
    std::sort(distances.begin(), distances.end());
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto it = std::upper_bound(distances.begin(), distances.end(), grid.radii[g]);
        values[g] = static_cast<double>(it - distances.begin()) / static_cast<double>(distances.size());
    }
    return values;
}

double heuristic_cell_size(const PointPattern& pattern) {
    double min_x = pattern.points[0].x, max_x = min_x;
    double min_y = pattern.points[0].y, max_y = min_y;
    for (const auto& p : pattern.points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double extent = std::max(max_x - min_x, max_y - min_y);
    const double by_count = extent / std::sqrt(static_cast<double>(pattern.size()) + 1.0);
    return std::max(by_count, extent / 512.0) + 1e-12;
}

std::vector<double> nearest_neighbor_distances(const PointPattern& pattern) {
    GridIndex index(pattern.points, heuristic_cell_size(pattern));
    std::vector<double> d(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        d[i] = index.nearest_distance(pattern.points[i], i);
    }
    return d;
}

/// Enumerates unordered point pairs with d <= r_max in a fixed order and
/// hands each to `visit(d, w)` where w is the summed pair weight for both
/// orientations (2 when uncorrected).
template <typename Visitor>
void for_each_weighted_pair(const PointPattern& pattern, const ObservationWindow& window,
                            double r_max, bool isotropic, Visitor&& visit) {
    const std::size_t n = pattern.size();
    std::vector<double> boundary_dist;
    if (isotropic) {
        boundary_dist.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            boundary_dist[i] = pattern_boundary_distance(window, pattern.points[i], "edge correction");
        }
    }
    GridIndex index(pattern.points, std::max(r_max, heuristic_cell_size(pattern)));
    std::vector<std::size_t> neighbors;
    for (std::size_t i = 0; i < n; ++i) {
        index.query_radius(pattern.points[i], r_max, neighbors);
        for (std::size_t j : neighbors) {
            if (j <= i) continue;
            const double dx = pattern.points[i].x - pattern.points[j].x;
            const double dy = pattern.points[i].y - pattern.points[j].y;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d > r_max) continue;
            double w = 2.0;
            if (isotropic) {
                w = detail::isotropic_weight_fast(window, pattern.points[i], d, boundary_dist[i]) +
                    detail::isotropic_weight_fast(window, pattern.points[j], d, boundary_dist[j]);
            }
            visit(d, w);
        }
    }
}

CurveEstimate curve_shell(FunctionId id, const PointPattern& pattern, const ObservationWindow& window,
                          const DistanceGrid& grid, EdgeCorrection correction) {
    CurveEstimate curve;
    curve.function_id = id;
    curve.radii = grid.radii;
    curve.correction = correction;
    curve.n_points = pattern.size();
    curve.intensity =
        window.total_area > 0.0 ? static_cast<double>(pattern.size()) / window.total_area : 0.0;
    curve.values.assign(grid.size(), 0.0);
    return curve;
}

}  // namespace

std::string function_name(FunctionId id) {
    switch (id) {
        case FunctionId::K: return "K";
        case FunctionId::L: return "L";
        case FunctionId::Pcf: return "g";
        case FunctionId::G: return "G";
        case FunctionId::F: return "F";
        case FunctionId::J: return "J";
    }
    return "?";
}

std::string correction_name(EdgeCorrection c) {
    switch (c) {
        case EdgeCorrection::None: return "none";
        case EdgeCorrection::RipleyIsotropic: return "isotropic";
        case EdgeCorrection::KaplanMeier: return "km";
    }
    return "?";
}

DistanceGrid make_distance_grid(std::vector<double> radii) {
    if (radii.empty()) throw std::invalid_argument("distance grid: no radii");
    double prev = 0.0;
    for (double r : radii) {
        if (!std::isfinite(r) || r <= prev) {
            throw std::invalid_argument("distance grid: radii must be finite, positive, strictly increasing");
        }
        prev = r;
    }
    return DistanceGrid{std::move(radii)};
}

DistanceGrid default_distance_grid(double total_area) {
    if (!(total_area > 0.0)) throw std::invalid_argument("default_distance_grid: area must be positive");
    const double r_max = 0.25 * std::sqrt(total_area);
    std::vector<double> radii(64);
    for (int k = 1; k <= 64; ++k) radii[k - 1] = r_max * k / 64.0;
    return DistanceGrid{std::move(radii)};
}

Intensity global_density(const PointPattern& pattern, const ObservationWindow& window) {
    if (pattern.size() == 0) throw Error("global_density: empty pattern");
    if (!(window.total_area > 0.0)) throw Error("global_density: window area is zero");
    return Intensity{static_cast<double>(pattern.size()) / window.total_area};
}

namespace detail {

double isotropic_weight_fast(const ObservationWindow& window, const Point2D& center, double r,
                             double boundary_distance) {
    if (r <= boundary_distance) return 1.0;
    const double* ct = arc_cos_table();
    const double* st = arc_sin_table();
    int inside = 0;
    for (int k = 0; k < kArcCount; ++k) {
        const Point2D q{center.x + r * ct[k], center.y + r * st[k]};
        for (const auto& hull : window.hulls) {
            if (point_in_convex_polygon(q, hull)) {
                ++inside;
                break;
            }
        }
    }
    if (inside == 0) return kWeightCap;
    return std::min(static_cast<double>(kArcCount) / static_cast<double>(inside), kWeightCap);
}

}  // namespace detail

double isotropic_weight(const ObservationWindow& window, const Point2D& center, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("isotropic_weight: r must be positive");
    const double bd = pattern_boundary_distance(window, center, "isotropic_weight");
    return detail::isotropic_weight_fast(window, center, r, bd);
}

CurveEstimate k_function(const PointPattern& pattern, const ObservationWindow& window,
                         const DistanceGrid& grid, EdgeCorrection correction) {
    check_grid(grid);
    check_pair_correction(correction, "k_function");
    const std::size_t n = pattern.size();
    if (n < 2) throw InsufficientPointsError("k_function: need at least 2 points");
    if (!(window.total_area > 0.0)) throw Error("k_function: window area is zero");

    std::vector<double> bin(grid.size(), 0.0);
    const bool isotropic = correction == EdgeCorrection::RipleyIsotropic;
    for_each_weighted_pair(pattern, window, grid.max_radius(), isotropic, [&](double d, double w) {
        const auto it = std::lower_bound(grid.radii.begin(), grid.radii.end(), d);
        if (it != grid.radii.end()) bin[static_cast<std::size_t>(it - grid.radii.begin())] += w;
    });

    CurveEstimate curve = curve_shell(FunctionId::K, pattern, window, grid, correction);
    const double scale = window.total_area / (static_cast<double>(n) * static_cast<double>(n));
    double acc = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        acc += bin[g];
        curve.values[g] = scale * acc;
    }
    return curve;
}

CurveEstimate l_function(const CurveEstimate& k) {
    if (k.function_id != FunctionId::K) throw std::invalid_argument("l_function: input is not a K curve");
    CurveEstimate curve = k;
    curve.function_id = FunctionId::L;
    for (std::size_t g = 0; g < curve.values.size(); ++g) {
        curve.values[g] = std::sqrt(k.values[g] / std::numbers::pi) - k.radii[g];
    }
    return curve;
}

double stoyan_bandwidth(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("stoyan_bandwidth: lambda must be positive");
    return 0.15 / std::sqrt(lambda);
}

CurveEstimate pair_correlation(const PointPattern& pattern, const ObservationWindow& window,
                               const DistanceGrid& grid, EdgeCorrection correction, double bandwidth) {
    return second_order_curves(pattern, window, grid, correction, bandwidth).pcf;
}

SecondOrderCurves second_order_curves(const PointPattern& pattern, const ObservationWindow& window,
                                      const DistanceGrid& grid, EdgeCorrection correction,
                                      double bandwidth) {
    check_grid(grid);
    check_pair_correction(correction, "pair_correlation");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("pair_correlation: bandwidth must be positive");
    const std::size_t n = pattern.size();
    if (n < 2) throw InsufficientPointsError("pair_correlation: need at least 2 points");
    if (!(window.total_area > 0.0)) throw Error("pair_correlation: window area is zero");

    // Epanechnikov kernel, unit mass on [-b, b].
    const double b = bandwidth;
    const auto kernel = [b](double u) { return 0.75 * (1.0 - (u / b) * (u / b)) / b; };

    const double k_max = grid.max_radius();
    std::vector<double> bin(grid.size(), 0.0);
    std::vector<double> smoothed(grid.size(), 0.0);
    const bool isotropic = correction == EdgeCorrection::RipleyIsotropic;
    for_each_weighted_pair(pattern, window, k_max + b, isotropic, [&](double d, double w) {
        if (d <= k_max) {
            const auto it = std::lower_bound(grid.radii.begin(), grid.radii.end(), d);
            if (it != grid.radii.end()) bin[static_cast<std::size_t>(it - grid.radii.begin())] += w;
        }
        for (auto it = std::lower_bound(grid.radii.begin(), grid.radii.end(), d - b);
             it != grid.radii.end() && *it < d + b; ++it) {
            smoothed[static_cast<std::size_t>(it - grid.radii.begin())] += w * kernel(*it - d);
        }
    });

    SecondOrderCurves out;
    out.k = curve_shell(FunctionId::K, pattern, window, grid, correction);
    out.pcf = curve_shell(FunctionId::Pcf, pattern, window, grid, correction);
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    const double scale = window.total_area / n2;
    double acc = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        acc += bin[g];
        out.k.values[g] = scale * acc;
        out.pcf.values[g] = smoothed[g] * window.total_area / (2.0 * std::numbers::pi * grid.radii[g] * n2);
    }
    return out;
}

CurveEstimate nearest_neighbor_cdf(const PointPattern& pattern, const ObservationWindow& window,
                                   const DistanceGrid& grid, EdgeCorrection correction) {
    check_grid(grid);
    check_cdf_correction(correction, "nearest_neighbor_cdf");
    const std::size_t n = pattern.size();
    if (n < 2) throw InsufficientPointsError("nearest_neighbor_cdf: need at least 2 points");

    const std::vector<double> nn = nearest_neighbor_distances(pattern);

    CurveEstimate curve;
    curve.function_id = FunctionId::G;
    curve.radii = grid.radii;
    curve.correction = correction;
    curve.n_points = n;
    curve.intensity = window.total_area > 0.0 ? static_cast<double>(n) / window.total_area : 0.0;
    if (correction == EdgeCorrection::None) {
        curve.values = empirical_cdf(nn, grid);
    } else {
        std::vector<CensoredObs> obs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double c = pattern_boundary_distance(window, pattern.points[i], "nearest_neighbor_cdf");
            obs[i] = CensoredObs{std::min(nn[i], c), nn[i] <= c};
        }
        curve.values = kaplan_meier_cdf(std::move(obs), grid);
    }
    return curve;
}

std::size_t default_quadrat_count(std::size_t n_points) { return std::max<std::size_t>(n_points, 1000); }

CurveEstimate empty_space_cdf_at(const PointPattern& pattern, const ObservationWindow& window,
                                 const DistanceGrid& grid, EdgeCorrection correction,
                                 const std::vector<Point2D>& quadrats) {
    check_grid(grid);
    check_cdf_correction(correction, "empty_space_cdf");
    if (pattern.size() == 0) throw InsufficientPointsError("empty_space_cdf: empty pattern");
    if (quadrats.empty()) throw std::invalid_argument("empty_space_cdf: no quadrats");

    GridIndex index(pattern.points, heuristic_cell_size(pattern));
    std::vector<double> dist(quadrats.size());
    for (std::size_t q = 0; q < quadrats.size(); ++q) {
        dist[q] = index.nearest_distance(quadrats[q]);
    }

    CurveEstimate curve;
    curve.function_id = FunctionId::F;
    curve.radii = grid.radii;
    curve.correction = correction;
    curve.n_points = pattern.size();
    curve.intensity = window.total_area > 0.0 ? static_cast<double>(pattern.size()) / window.total_area : 0.0;
    if (correction == EdgeCorrection::None) {
        curve.values = empirical_cdf(std::move(dist), grid);
    } else {
        std::vector<CensoredObs> obs(quadrats.size());
        for (std::size_t q = 0; q < quadrats.size(); ++q) {
            const double c = pattern_boundary_distance(window, quadrats[q], "empty_space_cdf");
            obs[q] = CensoredObs{std::min(dist[q], c), dist[q] <= c};
        }
        curve.values = kaplan_meier_cdf(std::move(obs), grid);
    }
    return curve;
}

CurveEstimate empty_space_cdf(const PointPattern& pattern, const ObservationWindow& window,
                              const DistanceGrid& grid, EdgeCorrection correction,
                              std::size_t n_quadrats, std::uint64_t seed) {
    if (n_quadrats < 1) throw std::invalid_argument("empty_space_cdf: n_quadrats must be >= 1");
    if (!(window.total_area > 0.0)) throw Error("empty_space_cdf: window area is zero");

    // Apportion quadrats to hulls by area share (largest remainder), then
    // place them uniformly per hull by rejection from the hull's bbox.
    const std::size_t h_count = window.hulls.size();
    std::vector<std::size_t> alloc(h_count, 0);
    std::vector<std::pair<double, std::size_t>> remainder(h_count);
    std::size_t assigned = 0;
    for (std::size_t h = 0; h < h_count; ++h) {
        const double share = polygon_area(window.hulls[h]) / window.total_area *
                             static_cast<double>(n_quadrats);
        alloc[h] = static_cast<std::size_t>(share);
        remainder[h] = {share - static_cast<double>(alloc[h]), h};
        assigned += alloc[h];
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; assigned < n_quadrats; ++k, ++assigned) alloc[remainder[k % h_count].second]++;

    Rng rng(seed);
    std::vector<Point2D> quadrats;
    quadrats.reserve(n_quadrats);
    for (std::size_t h = 0; h < h_count; ++h) {
        const Polygon& hull = window.hulls[h];
        double min_x = hull[0].x, max_x = min_x, min_y = hull[0].y, max_y = min_y;
        for (const auto& v : hull) {
            min_x = std::min(min_x, v.x);
            max_x = std::max(max_x, v.x);
            min_y = std::min(min_y, v.y);
            max_y = std::max(max_y, v.y);
        }
        for (std::size_t k = 0; k < alloc[h]; ++k) {
            Point2D p;
            do {
                p = Point2D{rng.uniform(min_x, max_x), rng.uniform(min_y, max_y)};
            } while (!point_in_convex_polygon(p, hull));
            quadrats.push_back(p);
        }
    }
    return empty_space_cdf_at(pattern, window, grid, correction, quadrats);
}

CurveEstimate j_function(const CurveEstimate& g_curve, const CurveEstimate& f_curve) {
    if (g_curve.function_id != FunctionId::G || f_curve.function_id != FunctionId::F) {
        throw std::invalid_argument("j_function: expects a G curve and an F curve");
    }
    if (g_curve.radii != f_curve.radii) throw Error("j_function: G and F grids differ");

    CurveEstimate curve;
    curve.function_id = FunctionId::J;
    curve.radii = g_curve.radii;
    curve.correction = f_curve.correction;
    curve.n_points = g_curve.n_points;
    curve.intensity = g_curve.intensity;
    curve.values.resize(g_curve.values.size());
    for (std::size_t g = 0; g < curve.values.size(); ++g) {
        const double fv = f_curve.values[g];
        if (fv > 1.0 - kJUndefinedEps) {
            curve.values[g] = std::numeric_limits<double>::quiet_NaN();
        } else {
            curve.values[g] = (1.0 - g_curve.values[g]) / (1.0 - fv);
        }
    }
    return curve;
}

double average_nearest_neighbor(const PointPattern& pattern) {
    if (pattern.size() < 2) throw InsufficientPointsError("average_nearest_neighbor: need at least 2 points");
    const std::vector<double> nn = nearest_neighbor_distances(pattern);
    double acc = 0.0;
    for (double d : nn) acc += d;
    return acc / static_cast<double>(nn.size());
}

double theoretical_value(FunctionId id, double lambda, double r) {
    switch (id) {
        case FunctionId::K: return std::numbers::pi * r * r;
        case FunctionId::L: return 0.0;
        case FunctionId::Pcf: return 1.0;
        case FunctionId::J: return 1.0;
        case FunctionId::G:
        case FunctionId::F:
            if (!(lambda > 0.0)) throw std::invalid_argument("theoretical_value: lambda must be positive");
            return 1.0 - std::exp(-lambda * std::numbers::pi * r * r);
    }
    throw std::invalid_argument("theoretical_value: unknown function");
}

CurveEstimate theoretical_curve(FunctionId id, double lambda, const DistanceGrid& grid) {
    check_grid(grid);
    CurveEstimate curve;
    curve.function_id = id;
    curve.radii = grid.radii;
    curve.correction = EdgeCorrection::None;
    curve.intensity = lambda;
    curve.values.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        curve.values[g] = theoretical_value(id, lambda, grid.radii[g]);
    }
    return curve;
}

}  // namespace histowas
