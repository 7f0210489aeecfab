#include "histowas/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

#include "histowas/errors.hpp"
#include "histowas/grid_index.hpp"

namespace histowas {

int ClusterLabeling::cluster_count() const {
    int max_label = -1;
    for (int l : labels) max_label = std::max(max_label, l);
    return max_label + 1;
}

double polygon_signed_area(const Polygon& poly) {
    double acc = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2D& a = poly[i];
        const Point2D& b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

double polygon_area(const Polygon& poly) { return std::abs(polygon_signed_area(poly)); }

namespace {

double cross(const Point2D& o, const Point2D& a, const Point2D& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double point_segment_distance(const Point2D& p, const Point2D& a, const Point2D& b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx);
    const double dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

// Separating-axis projection overlap with strict inequality, so shared
// boundaries do not count as overlap.
bool separated_on_axes(const Polygon& edges_of, const Polygon& a, const Polygon& b) {
    const std::size_t n = edges_of.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2D& p = edges_of[i];
        const Point2D& q = edges_of[(i + 1) % n];
        const double ax = -(q.y - p.y);
        const double ay = q.x - p.x;
        double amin = std::numeric_limits<double>::infinity(), amax = -amin;
        for (const auto& v : a) {
            const double s = ax * v.x + ay * v.y;
            amin = std::min(amin, s);
            amax = std::max(amax, s);
        }
        double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
        for (const auto& v : b) {
            const double s = ax * v.x + ay * v.y;
            bmin = std::min(bmin, s);
            bmax = std::max(bmax, s);
        }
        if (amax <= bmin || bmax <= amin) return true;
    }
    return false;
}

}  // namespace

bool point_in_convex_polygon(const Point2D& p, const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(poly[i], poly[(i + 1) % n], p) < 0.0) return false;
    }
    return true;
}

double distance_to_polygon_boundary(const Point2D& p, const Polygon& poly) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    return best;
}

bool convex_polygons_overlap(const Polygon& a, const Polygon& b) {
    if (a.size() < 3 || b.size() < 3) return false;
    if (separated_on_axes(a, a, b)) return false;
    if (separated_on_axes(b, a, b)) return false;
    return true;
}

void validate_pattern(const PointPattern& pattern) {
    for (const auto& p : pattern.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error("pattern '" + pattern.slide_id + "' contains a non-finite coordinate");
        }
    }
}

std::size_t count_duplicate_points(const PointPattern& pattern) {
    std::map<std::pair<double, double>, std::size_t> seen;
    for (const auto& p : pattern.points) ++seen[{p.x, p.y}];
    std::size_t dup = 0;
    for (const auto& [coord, count] : seen) {
        if (count > 1) dup += count - 1;
    }
    return dup;
}

ClusterLabeling dbscan(const PointPattern& pattern, double eps, std::size_t min_samples) {
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be positive");
    if (min_samples < 1) throw std::invalid_argument("dbscan: min_samples must be >= 1");
    validate_pattern(pattern);

    const std::size_t n = pattern.size();
    ClusterLabeling out;
    out.eps = eps;
    out.min_samples = min_samples;
    out.labels.assign(n, -1);
    if (n == 0) return out;

    GridIndex index(pattern.points, eps);
    std::vector<std::size_t> neighbors;

    // Core status is a property of the point alone; compute it up front so
    // reachability does not depend on visit order.
    std::vector<char> is_core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        index.query_radius(pattern.points[i], eps, neighbors);
        is_core[i] = neighbors.size() >= min_samples;
    }

    int next_label = 0;
    std::vector<char> visited(n, 0);
    std::deque<std::size_t> frontier;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (visited[seed] || !is_core[seed]) continue;
        const int label = next_label++;
        visited[seed] = 1;
        out.labels[seed] = label;
        frontier.clear();
        frontier.push_back(seed);
        while (!frontier.empty()) {
            const std::size_t cur = frontier.front();
            frontier.pop_front();
            index.query_radius(pattern.points[cur], eps, neighbors);
            for (std::size_t j : neighbors) {
                if (visited[j]) continue;
                visited[j] = 1;
                out.labels[j] = label;
                if (is_core[j]) frontier.push_back(j);
            }
        }
    }
    return out;
}

std::optional<Polygon> convex_hull(const std::vector<Point2D>& points) {
    if (points.size() < 3) throw std::invalid_argument("convex_hull: need at least 3 points");

    std::vector<Point2D> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Point2D& a, const Point2D& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point2D& a, const Point2D& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return std::nullopt;

    // Monotone chain; strict turns drop collinear interior vertices.
    Polygon hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0.0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) return std::nullopt;
    // Ring is CCW and starts at the lexicographically smallest vertex.
    if (polygon_signed_area(hull) <= 0.0) return std::nullopt;
    return hull;
}

ObservationWindow estimate_window(const PointPattern& pattern, double eps, std::size_t min_samples) {
    const ClusterLabeling labeling = dbscan(pattern, eps, min_samples);
    const int k = labeling.cluster_count();

    std::vector<std::vector<Point2D>> clusters(static_cast<std::size_t>(std::max(k, 0)));
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const int label = labeling.labels[i];
        if (label >= 0) clusters[static_cast<std::size_t>(label)].push_back(pattern.points[i]);
    }

    ObservationWindow window;
    for (const auto& members : clusters) {
        if (members.size() < 3) continue;
        auto hull = convex_hull(members);
        if (!hull) continue;
        const double area = polygon_area(*hull);
        if (!(area > 0.0)) continue;
        window.hulls.push_back(std::move(*hull));
        window.total_area += area;
    }
    if (window.hulls.empty()) {
        throw NoWindowError("no observable window: no cluster yields a non-degenerate hull");
    }
    for (std::size_t i = 0; i < window.hulls.size() && !window.hulls_overlap; ++i) {
        for (std::size_t j = i + 1; j < window.hulls.size(); ++j) {
            if (convex_polygons_overlap(window.hulls[i], window.hulls[j])) {
                window.hulls_overlap = true;
                break;
            }
        }
    }
    return window;
}

ObservationWindow rectangle_window(double x0, double y0, double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("rectangle_window: empty rectangle");
    ObservationWindow window;
    window.hulls.push_back(Polygon{{x0, y0}, {x0 + width, y0}, {x0 + width, y0 + height}, {x0, y0 + height}});
    window.total_area = width * height;
    return window;
}

bool contains(const ObservationWindow& window, const Point2D& p) {
    for (const auto& hull : window.hulls) {
        if (point_in_convex_polygon(p, hull)) return true;
    }
    return false;
}

double distance_to_boundary(const ObservationWindow& window, const Point2D& p) {
    if (!contains(window, p)) throw Error("distance_to_boundary: point lies outside the window");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& hull : window.hulls) {
        best = std::min(best, distance_to_polygon_boundary(p, hull));
    }
    return best;
}

}  // namespace histowas
