#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "histowas/geometry.hpp"

namespace histowas {

/// Uniform-grid spatial index over a point set. Supports fixed-radius
/// neighbor queries (DBSCAN, pair counting) and nearest-neighbor searches
/// (G- and F-function distances). Results are independent of construction
/// details: radius queries return indices in ascending order.
class GridIndex {
public:
    GridIndex(const std::vector<Point2D>& points, double cell_size);

    /// Indices of all points with distance(p, q) <= radius, ascending.
    void query_radius(const Point2D& p, double radius, std::vector<std::size_t>& out) const;

    /// Distance from q to the nearest indexed point, excluding index `skip`
    /// (pass npos to consider all). Returns +inf for an effectively empty set.
    double nearest_distance(const Point2D& q, std::size_t skip = npos) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t cell_of(double x, double y) const;

    const std::vector<Point2D>& points_;
    double cell_size_;
    double min_x_ = 0.0, min_y_ = 0.0;
    std::size_t nx_ = 1, ny_ = 1;
    // CSR-style layout: cell_start_[c]..cell_start_[c+1] indexes into order_.
    std::vector<std::size_t> cell_start_;
    std::vector<std::size_t> order_;
};

inline GridIndex::GridIndex(const std::vector<Point2D>& points, double cell_size)
    : points_(points), cell_size_(cell_size > 0 ? cell_size : 1.0) {
    if (points_.empty()) {
        cell_start_.assign(2, 0);
        return;
    }
    min_x_ = points_[0].x;
    min_y_ = points_[0].y;
    double max_x = min_x_, max_y = min_y_;
    for (const auto& p : points_) {
        min_x_ = std::min(min_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    // Cap the cell table; a cell size far below the data extent (tiny eps
    // on a wide cloud) must not translate into a huge allocation. Queries
    // stay correct with a coarser table, only scanning more candidates.
    const double extent = std::max(max_x - min_x_, max_y - min_y_);
    const double min_cell = extent / 1024.0;
    if (cell_size_ < min_cell) cell_size_ = min_cell;
    nx_ = static_cast<std::size_t>((max_x - min_x_) / cell_size_) + 1;
    ny_ = static_cast<std::size_t>((max_y - min_y_) / cell_size_) + 1;

    std::vector<std::size_t> counts(nx_ * ny_, 0);
    for (const auto& p : points_) ++counts[cell_of(p.x, p.y)];
    cell_start_.assign(nx_ * ny_ + 1, 0);
    for (std::size_t c = 0; c < counts.size(); ++c) cell_start_[c + 1] = cell_start_[c] + counts[c];
    order_.resize(points_.size());
    std::vector<std::size_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
    // Insertion in input order keeps indices ascending within each cell.
    for (std::size_t i = 0; i < points_.size(); ++i) order_[cursor[cell_of(points_[i].x, points_[i].y)]++] = i;
}

inline std::size_t GridIndex::cell_of(double x, double y) const {
    auto clamp = [](double v, std::size_t n) {
        if (v < 0) return std::size_t{0};
        std::size_t c = static_cast<std::size_t>(v);
        return c >= n ? n - 1 : c;
    };
    const std::size_t cx = clamp((x - min_x_) / cell_size_, nx_);
    const std::size_t cy = clamp((y - min_y_) / cell_size_, ny_);
    return cy * nx_ + cx;
}

inline void GridIndex::query_radius(const Point2D& p, double radius, std::vector<std::size_t>& out) const {
    out.clear();
    if (points_.empty()) return;
    const double r2 = radius * radius;
    const long cx = static_cast<long>(std::floor((p.x - min_x_) / cell_size_));
    const long cy = static_cast<long>(std::floor((p.y - min_y_) / cell_size_));
    const long reach = static_cast<long>(std::ceil(radius / cell_size_));
    for (long gy = cy - reach; gy <= cy + reach; ++gy) {
        if (gy < 0 || gy >= static_cast<long>(ny_)) continue;
        for (long gx = cx - reach; gx <= cx + reach; ++gx) {
            if (gx < 0 || gx >= static_cast<long>(nx_)) continue;
            const std::size_t c = static_cast<std::size_t>(gy) * nx_ + static_cast<std::size_t>(gx);
            for (std::size_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
                const std::size_t i = order_[k];
                const double dx = points_[i].x - p.x;
                const double dy = points_[i].y - p.y;
                if (dx * dx + dy * dy <= r2) out.push_back(i);
            }
        }
    }
    std::sort(out.begin(), out.end());
}

inline double GridIndex::nearest_distance(const Point2D& q, std::size_t skip) const {
    if (points_.empty()) return std::numeric_limits<double>::infinity();
    // Clamp the start cell into the grid; projecting onto the bounding box
    // only shrinks distances, so the ring termination bound stays valid.
    const long cx = std::clamp(static_cast<long>(std::floor((q.x - min_x_) / cell_size_)), 0L,
                               static_cast<long>(nx_) - 1);
    const long cy = std::clamp(static_cast<long>(std::floor((q.y - min_y_) / cell_size_)), 0L,
                               static_cast<long>(ny_) - 1);
    double best2 = std::numeric_limits<double>::infinity();
    // Expanding square rings; a ring at distance k cannot improve on a found
    // best once (k-1)*cell_size exceeds sqrt(best2).
    const long max_ring = static_cast<long>(std::max(nx_, ny_)) + 1;
    for (long ring = 0; ring <= max_ring; ++ring) {
        if (best2 < std::numeric_limits<double>::infinity()) {
            const double safe = (static_cast<double>(ring) - 1.0) * cell_size_;
            if (safe > 0 && safe * safe > best2) break;
        }
        for (long gy = cy - ring; gy <= cy + ring; ++gy) {
            if (gy < 0 || gy >= static_cast<long>(ny_)) continue;
            const bool edge_row = (gy == cy - ring || gy == cy + ring);
            const long step = edge_row ? 1 : 2 * ring;
            for (long gx = cx - ring; gx <= cx + ring; gx += (step > 0 ? step : 1)) {
                if (gx < 0 || gx >= static_cast<long>(nx_)) continue;
                const std::size_t c = static_cast<std::size_t>(gy) * nx_ + static_cast<std::size_t>(gx);
                for (std::size_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
                    const std::size_t i = order_[k];
                    if (i == skip) continue;
                    const double dx = points_[i].x - q.x;
                    const double dy = points_[i].y - q.y;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 < best2) best2 = d2;
                }
            }
        }
    }
    return std::sqrt(best2);
}

}  // namespace histowas
