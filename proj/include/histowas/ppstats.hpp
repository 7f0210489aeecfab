#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "histowas/geometry.hpp"

namespace histowas {

/// Distance-based summary functions of a point pattern.
enum class FunctionId { K, L, Pcf, G, F, J };

std::string function_name(FunctionId id);

/// Edge-effect handling. RipleyIsotropic applies to the pair-counting
/// functions (K, L, g); KaplanMeier to the distance CDFs (G, F, J).
enum class EdgeCorrection { None, RipleyIsotropic, KaplanMeier };

std::string correction_name(EdgeCorrection c);

/// Strictly increasing positive radii at which curves are evaluated.
struct DistanceGrid {
    std::vector<double> radii;

    double max_radius() const { return radii.empty() ? 0.0 : radii.back(); }
    std::size_t size() const { return radii.size(); }
};

/// Validates radii: finite, positive, strictly increasing.
DistanceGrid make_distance_grid(std::vector<double> radii);

/// 64 equally spaced radii from r_max/64 to r_max with r_max = sqrt(area)/4.
DistanceGrid default_distance_grid(double total_area);

/// A sampled summary function plus the context it was computed in.
/// NaN entries mark radii where the estimator is undefined (J where F ~ 1).
struct CurveEstimate {
    FunctionId function_id = FunctionId::K;
    std::vector<double> radii;
    std::vector<double> values;
    EdgeCorrection correction = EdgeCorrection::None;
    std::size_t n_points = 0;
    double intensity = 0.0;
};

struct Intensity {
    double lambda = 0.0;  // points per unit area
};

/// n / total_area. Throws Error for an empty pattern or zero-area window.
Intensity global_density(const PointPattern& pattern, const ObservationWindow& window);

/// Inverse of the fraction of the circle of radius r around `center` whose
/// circumference lies inside the window. The fraction is measured by testing
/// the midpoints of 256 equal arcs; weights are capped at 16 to bound the
/// variance contributed by extreme boundary positions.
double isotropic_weight(const ObservationWindow& window, const Point2D& center, double r);

/// Ripley's K: cumulative pair counts within r, scaled by area/n^2.
/// correction must be None or RipleyIsotropic.
CurveEstimate k_function(const PointPattern& pattern, const ObservationWindow& window,
                         const DistanceGrid& grid, EdgeCorrection correction);

/// Besag's variance-stabilized transform sqrt(K/pi) - r.
CurveEstimate l_function(const CurveEstimate& k);

/// Pair correlation estimated from Epanechnikov-smoothed pair counts;
/// bandwidth must be positive (see stoyan_bandwidth for the usual default).
CurveEstimate pair_correlation(const PointPattern& pattern, const ObservationWindow& window,
                               const DistanceGrid& grid, EdgeCorrection correction, double bandwidth);

/// Stoyan's rule of thumb, 0.15 / sqrt(lambda).
double stoyan_bandwidth(double lambda);

/// K and the pair correlation from a single weighted pair pass. Equivalent
/// to calling k_function and pair_correlation separately but computes each
/// edge-correction weight once.
struct SecondOrderCurves {
    CurveEstimate k;
    CurveEstimate pcf;
};
SecondOrderCurves second_order_curves(const PointPattern& pattern, const ObservationWindow& window,
                                      const DistanceGrid& grid, EdgeCorrection correction,
                                      double bandwidth);

/// G-function: CDF of point-to-nearest-neighbor distances. With KaplanMeier,
/// a neighbor distance is censored at the point's distance to the window
/// boundary and the CDF is the product-limit estimate.
CurveEstimate nearest_neighbor_cdf(const PointPattern& pattern, const ObservationWindow& window,
                                   const DistanceGrid& grid, EdgeCorrection correction);

/// F-function: CDF of distances from sampled in-window locations to the
/// nearest pattern point. Quadrats are apportioned to hulls by area and
/// placed uniformly inside each hull; deterministic given seed.
CurveEstimate empty_space_cdf(const PointPattern& pattern, const ObservationWindow& window,
                              const DistanceGrid& grid, EdgeCorrection correction,
                              std::size_t n_quadrats, std::uint64_t seed);

/// F-function over caller-supplied quadrat locations (all must be in-window).
CurveEstimate empty_space_cdf_at(const PointPattern& pattern, const ObservationWindow& window,
                                 const DistanceGrid& grid, EdgeCorrection correction,
                                 const std::vector<Point2D>& quadrats);

/// Default number of F-function quadrats: max(n, 1000).
std::size_t default_quadrat_count(std::size_t n_points);

/// J = (1 - G) / (1 - F); NaN where F exceeds 1 - 1e-9.
CurveEstimate j_function(const CurveEstimate& g_curve, const CurveEstimate& f_curve);

/// Mean nearest-neighbor distance (no edge correction applied).
double average_nearest_neighbor(const PointPattern& pattern);

/// Expected value under complete spatial randomness with intensity lambda:
/// K = pi r^2, L = 0, g = 1, J = 1, G = F = 1 - exp(-lambda pi r^2).
double theoretical_value(FunctionId id, double lambda, double r);

/// Sample the theoretical CSR curve on a grid.
CurveEstimate theoretical_curve(FunctionId id, double lambda, const DistanceGrid& grid);

namespace detail {
/// Weight with a precomputed distance-to-boundary for the center; r within
/// that distance short-circuits to exactly 1.
double isotropic_weight_fast(const ObservationWindow& window, const Point2D& center, double r,
                             double boundary_distance);
}  // namespace detail

}  // namespace histowas
