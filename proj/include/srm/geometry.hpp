#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace srm {

using ObjectId = std::uint32_t;

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point& a, const Point& b) = default;
};

inline bool is_finite(const Point& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

// Closed axis-aligned rectangle. Degenerate (point or segment) cells are valid.
struct Cell {
    Point min_corner;
    Point max_corner;

    bool valid() const {
        return is_finite(min_corner) && is_finite(max_corner) &&
               min_corner.x <= max_corner.x && min_corner.y <= max_corner.y;
    }
    bool contains(const Point& p) const {
        return p.x >= min_corner.x && p.x <= max_corner.x &&
               p.y >= min_corner.y && p.y <= max_corner.y;
    }
    double width() const { return max_corner.x - min_corner.x; }
    double height() const { return max_corner.y - min_corner.y; }

    friend bool operator==(const Cell& a, const Cell& b) = default;
};

inline double dist(const Point& p, const Point& q) {
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    return std::sqrt(dx * dx + dy * dy);
}

// 0 when p lies inside or on the boundary of c.
inline double min_dist(const Point& p, const Cell& c) {
    const double dx = std::max({c.min_corner.x - p.x, 0.0, p.x - c.max_corner.x});
    const double dy = std::max({c.min_corner.y - p.y, 0.0, p.y - c.max_corner.y});
    return std::sqrt(dx * dx + dy * dy);
}

// Distance from p to the farthest corner of c.
inline double max_dist(const Point& p, const Cell& c) {
    const double dx = std::max(p.x - c.min_corner.x, c.max_corner.x - p.x);
    const double dy = std::max(p.y - c.min_corner.y, c.max_corner.y - p.y);
    return std::sqrt(dx * dx + dy * dy);
}

// 0 iff the rectangles intersect.
inline double min_dist_rect(const Cell& a, const Cell& b) {
    const double dx = std::max({b.min_corner.x - a.max_corner.x, 0.0, a.min_corner.x - b.max_corner.x});
    const double dy = std::max({b.min_corner.y - a.max_corner.y, 0.0, a.min_corner.y - b.max_corner.y});
    return std::sqrt(dx * dx + dy * dy);
}

inline double max_dist_rect(const Cell& a, const Cell& b) {
    const double dx = std::max(a.max_corner.x - b.min_corner.x, b.max_corner.x - a.min_corner.x);
    const double dy = std::max(a.max_corner.y - b.min_corner.y, b.max_corner.y - a.min_corner.y);
    return std::sqrt(dx * dx + dy * dy);
}

// Immutable set of N points with ids dense in [0, N).
class ObjectSet {
  public:
    ObjectSet() = default;

    explicit ObjectSet(std::vector<Point> locations) : locations_(std::move(locations)) {
        if (locations_.empty()) throw std::invalid_argument("ObjectSet: at least one object required");
        for (const Point& p : locations_) {
            if (!is_finite(p)) throw std::invalid_argument("ObjectSet: non-finite coordinate");
        }
    }

    // Accepts (id, point) pairs in any order; ids must be unique and dense in [0, N).
    static ObjectSet from_pairs(const std::vector<std::pair<ObjectId, Point>>& pairs) {
        if (pairs.empty()) throw std::invalid_argument("ObjectSet: at least one object required");
        std::vector<Point> locs(pairs.size());
        std::vector<char> seen(pairs.size(), 0);
        for (const auto& [id, p] : pairs) {
            if (id >= pairs.size())
                throw std::invalid_argument("ObjectSet: id " + std::to_string(id) + " not dense in [0,N)");
            if (seen[id])
                throw std::invalid_argument("ObjectSet: duplicate id " + std::to_string(id));
            seen[id] = 1;
            locs[id] = p;
        }
        return ObjectSet(std::move(locs));
    }

    std::uint32_t size() const { return static_cast<std::uint32_t>(locations_.size()); }
    const Point& location(ObjectId id) const { return locations_[id]; }
    const std::vector<Point>& locations() const { return locations_; }

    // Tight bounding box of all object locations.
    Cell bounding_box() const {
        Cell box{locations_[0], locations_[0]};
        for (const Point& p : locations_) {
            box.min_corner.x = std::min(box.min_corner.x, p.x);
            box.min_corner.y = std::min(box.min_corner.y, p.y);
            box.max_corner.x = std::max(box.max_corner.x, p.x);
            box.max_corner.y = std::max(box.max_corner.y, p.y);
        }
        return box;
    }

    friend bool operator==(const ObjectSet& a, const ObjectSet& b) = default;

  private:
    std::vector<Point> locations_;
};

}  // namespace srm
