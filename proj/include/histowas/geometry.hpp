#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace histowas {

/// An object centroid in micrometers.
struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

/// A centroid cloud for one slide and one object type.
struct PointPattern {
    std::vector<Point2D> points;
    std::string slide_id;
    std::string object_type;

    std::size_t size() const { return points.size(); }
};

/// DBSCAN output; label -1 marks noise, labels 0..k-1 partition the rest.
struct ClusterLabeling {
    std::vector<int> labels;
    double eps = 0.0;
    std::size_t min_samples = 0;

    int cluster_count() const;
};

/// CCW-ordered vertex ring of a convex polygon.
using Polygon = std::vector<Point2D>;

/// Union of per-cluster convex hulls; the region where a pattern lives.
/// total_area is the plain sum of hull areas, matching how tissue area is
/// accumulated; hulls_overlap reports when that sum double-counts.
struct ObservationWindow {
    std::vector<Polygon> hulls;
    double total_area = 0.0;
    bool hulls_overlap = false;
};

// --- polygon primitives ---

/// Signed area (positive for CCW rings).
double polygon_signed_area(const Polygon& poly);
double polygon_area(const Polygon& poly);

/// Boundary counts as inside.
bool point_in_convex_polygon(const Point2D& p, const Polygon& poly);

/// Distance from any point to the polygon's boundary ring.
double distance_to_polygon_boundary(const Point2D& p, const Polygon& poly);

/// True when the interiors of two convex polygons intersect (touching
/// boundaries do not count).
bool convex_polygons_overlap(const Polygon& a, const Polygon& b);

// --- operations ---

/// Checks all coordinates are finite; throws Error otherwise.
void validate_pattern(const PointPattern& pattern);

/// Number of exactly coincident coordinate pairs (duplicates are kept by all
/// estimators; callers surface this count as a data warning).
std::size_t count_duplicate_points(const PointPattern& pattern);

/// Classic DBSCAN over Euclidean distance (d <= eps, neighborhood includes
/// the point itself). Labeling is deterministic for a fixed input order:
/// clusters are seeded in scan order and grown breadth-first with neighbor
/// indices processed in ascending order, so a border point reachable from
/// several clusters joins the cluster of the first core point that reaches
/// it.
ClusterLabeling dbscan(const PointPattern& pattern, double eps, std::size_t min_samples);

/// Convex hull as a CCW ring starting at the lexicographically smallest
/// vertex; nullopt when all points are collinear. Requires >= 3 points.
std::optional<Polygon> convex_hull(const std::vector<Point2D>& points);

/// DBSCAN + one convex hull per cluster with >= 3 points and positive area.
/// Throws NoWindowError when no cluster qualifies.
ObservationWindow estimate_window(const PointPattern& pattern, double eps, std::size_t min_samples);

/// Window made of a single axis-aligned rectangle [x0,x0+w] x [y0,y0+h].
ObservationWindow rectangle_window(double x0, double y0, double width, double height);

/// True iff p lies in any hull; boundary counts as inside.
bool contains(const ObservationWindow& window, const Point2D& p);

/// Distance from an in-window point to the nearest hull boundary. Each hull
/// contributes its own outer ring; the union's internal structure is not
/// resolved. Throws Error when p is outside the window.
double distance_to_boundary(const ObservationWindow& window, const Point2D& p);

}  // namespace histowas
