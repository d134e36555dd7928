#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "srm/geometry.hpp"

namespace srm {

/// Lower/upper bound of the rank an object can take for any query inside a cell,
/// both 1-based. With coincident or equidistant objects the raw counts can yield
/// lower > upper; the constructor-side clamp keeps upper >= lower and sets a flag.
struct RankBounds {
    std::uint32_t lower = 1;
    std::uint32_t upper = 1;
    bool tie_clamped = false;
};

struct PartitionConfig {
    double epsilon = 3.0;
    int max_depth = 16;
    std::uint32_t block_size = 128;
    // When true, split decisions at every node consider all objects instead of
    // only the violating subset passed down the recursion.
    bool full_recheck = false;
    // Guard against materializing an index beyond desk-machine memory
    // (#leaves * N rank entries).
    std::uint64_t max_total_entries = 250'000'000ULL;

    void validate() const;
};

/// lower = 1 + |{o' != o : max_dist(o',c) <= min_dist(o,c)}|
std::uint32_t lower_rank_bound(ObjectId o, const Cell& c, const ObjectSet& objects);

/// upper = 1 + |{o' != o : min_dist(o',c) < max_dist(o,c)}|, clamped to >= lower.
std::uint32_t upper_rank_bound(ObjectId o, const Cell& c, const ObjectSet& objects);

RankBounds rank_bounds(ObjectId o, const Cell& c, const ObjectSet& objects);

/// Split rule: the cell must be partitioned further while upper - lower > epsilon * lower.
inline bool needs_split(const RankBounds& bounds, double epsilon) {
    return static_cast<double>(bounds.upper) - static_cast<double>(bounds.lower) >
           epsilon * static_cast<double>(bounds.lower);
}

struct BuildReport {
    std::uint32_t node_count = 0;
    std::uint32_t leaf_count = 0;
    std::uint32_t max_depth_leaves = 0;  // leaves terminated by the depth cap
    int deepest_leaf = 0;
};

/// Point-region quadtree over the padded bounding box of the object set.
/// Nodes are stored in a flat array; children of a split node are contiguous
/// in SW, SE, NW, NE order. The tree is immutable after build.
class Quadtree {
  public:
    struct Node {
        Cell cell;
        std::int32_t first_child = -1;  // -1 for leaves
        std::int32_t leaf_index = -1;   // dense index over leaves, -1 for internal nodes
        std::uint16_t depth = 0;
        bool is_leaf() const { return first_child < 0; }
    };

    const Node& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_[0]; }
    const Cell& root_cell() const { return nodes_[0].cell; }
    std::uint32_t leaf_count() const { return leaf_count_; }
    const BuildReport& report() const { return report_; }

    /// Index of the unique leaf containing p. On a split boundary the point
    /// belongs to the higher-coordinate quadrant. Throws std::out_of_range
    /// when p lies outside the root cell.
    std::uint32_t locate_leaf_node(const Point& p) const;

    const Cell& locate_leaf(const Point& p) const { return nodes_[locate_leaf_node(p)].cell; }

    std::vector<std::uint32_t> leaf_node_indices() const;

    friend bool operator==(const Quadtree& a, const Quadtree& b);

  private:
    friend Quadtree build_quadtree(const ObjectSet&, const PartitionConfig&);
    friend Quadtree rebuild_from_leaves(const Cell& root, const std::vector<std::pair<Cell, std::uint16_t>>& leaves);

    std::vector<Node> nodes_;
    std::uint32_t leaf_count_ = 0;
    BuildReport report_;
};

/// Recursive epsilon-driven partitioning. Each node is checked for the subset
/// of objects handed down by its parent (the violating subset), and split while
/// any of them fails the epsilon condition, up to config.max_depth.
/// Throws std::invalid_argument on a degenerate dataspace.
Quadtree build_quadtree(const ObjectSet& objects, const PartitionConfig& config);

/// Number of (object, leaf) pairs that violate the epsilon condition when
/// every object is checked against every leaf. Nonzero counts are possible
/// because the recursion only revisits the violating subset.
std::uint64_t count_posthoc_violations(const Quadtree& tree, const ObjectSet& objects, double epsilon);

/// Reconstructs the node structure from leaf cells + depths (used by index load).
Quadtree rebuild_from_leaves(const Cell& root, const std::vector<std::pair<Cell, std::uint16_t>>& leaves);

}  // namespace srm
