#include "srm/quadtree.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace srm {

void PartitionConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("PartitionConfig: epsilon must be finite and >= 0");
    if (max_depth < 1) throw std::invalid_argument("PartitionConfig: max_depth must be >= 1");
    if (block_size < 1) throw std::invalid_argument("PartitionConfig: block_size must be >= 1");
}

namespace {

struct RawCounts {
    std::uint32_t definitely_closer;  // l_n
    std::uint32_t possibly_closer;    // u_n
};

RawCounts raw_counts(ObjectId o, const Cell& c, const ObjectSet& objects) {
    const double dlo = min_dist(objects.location(o), c);
    const double dhi = max_dist(objects.location(o), c);
    std::uint32_t ln = 0, un = 0;
    for (ObjectId other = 0; other < objects.size(); ++other) {
        if (other == o) continue;
        const Point& p = objects.location(other);
        if (max_dist(p, c) <= dlo) ++ln;
        if (min_dist(p, c) < dhi) ++un;
    }
    return {ln, un};
}

RankBounds clamp_bounds(std::uint32_t ln, std::uint32_t un) {
    RankBounds b;
    b.lower = ln + 1;
    b.upper = un + 1;
    if (b.upper < b.lower) {
        b.upper = b.lower;
        b.tie_clamped = true;
    }
    return b;
}

}  // namespace

std::uint32_t lower_rank_bound(ObjectId o, const Cell& c, const ObjectSet& objects) {
    return raw_counts(o, c, objects).definitely_closer + 1;
}

std::uint32_t upper_rank_bound(ObjectId o, const Cell& c, const ObjectSet& objects) {
    const RawCounts rc = raw_counts(o, c, objects);
    return clamp_bounds(rc.definitely_closer, rc.possibly_closer).upper;
}

RankBounds rank_bounds(ObjectId o, const Cell& c, const ObjectSet& objects) {
    const RawCounts rc = raw_counts(o, c, objects);
    return clamp_bounds(rc.definitely_closer, rc.possibly_closer);
}

namespace {

// Recursion state for one node: the objects that still violate the epsilon
// condition, and the candidate objects that can influence their rank counts.
// An object o' outside the candidate set satisfies min_dist(o',cell) > reach,
// where reach bounds max_dist(o,cell) for every violator o, so it can affect
// neither count. Counts over candidates therefore equal counts over all N.
struct NodeWork {
    std::uint32_t node;
    std::vector<ObjectId> subset;
    std::vector<ObjectId> candidates;
};

class Builder {
  public:
    Builder(const ObjectSet& objects, const PartitionConfig& config)
        : objects_(objects), config_(config) {}

    std::vector<Quadtree::Node> run() {
        Cell root = padded_root();
        if (!(root.width() > 0.0) || !(root.height() > 0.0))
            throw std::invalid_argument("build_quadtree: degenerate dataspace");

        nodes_.push_back({root, -1, -1, 0});

        std::vector<ObjectId> all(objects_.size());
        for (ObjectId i = 0; i < objects_.size(); ++i) all[i] = i;

        std::vector<NodeWork> stack;
        stack.push_back({0, all, all});

        while (!stack.empty()) {
            NodeWork work = std::move(stack.back());
            stack.pop_back();
            process(std::move(work), stack);
        }
        return std::move(nodes_);
    }

  private:
    Cell padded_root() const {
        Cell box = objects_.bounding_box();
        double pad = 0.01 * std::max(box.width(), box.height());
        if (pad <= 0.0) pad = 1.0;  // all objects coincident
        return {{box.min_corner.x - pad, box.min_corner.y - pad},
                {box.max_corner.x + pad, box.max_corner.y + pad}};
    }

    void process(NodeWork work, std::vector<NodeWork>& stack) {
        const Cell cell = nodes_[work.node].cell;
        const std::uint16_t depth = nodes_[work.node].depth;

        const auto& checked = config_.full_recheck ? work.candidates : work.subset;

        // Sorted distance arrays over the candidate set; counting against them
        // is bit-identical to counting against all N objects.
        const std::size_t k = work.candidates.size();
        dmin_.resize(k);
        dmax_.resize(k);
#pragma omp parallel for schedule(static) if (k > 16384)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(k); ++i) {
            const Point& p = objects_.location(work.candidates[i]);
            dmin_[i] = min_dist(p, cell);
            dmax_[i] = max_dist(p, cell);
        }
        sorted_dmin_ = dmin_;
        sorted_dmax_ = dmax_;
        std::sort(sorted_dmin_.begin(), sorted_dmin_.end());
        std::sort(sorted_dmax_.begin(), sorted_dmax_.end());

        std::vector<ObjectId> violators;
        double reach = 0.0;
        for (ObjectId o : checked) {
            const std::size_t slot = slot_of(work.candidates, o);
            const double dlo = dmin_[slot];
            const double dhi = dmax_[slot];

            auto ln = static_cast<std::uint32_t>(
                std::upper_bound(sorted_dmax_.begin(), sorted_dmax_.end(), dlo) - sorted_dmax_.begin());
            if (dhi <= dlo) --ln;  // exclude o itself (point cells only)
            auto un = static_cast<std::uint32_t>(
                std::lower_bound(sorted_dmin_.begin(), sorted_dmin_.end(), dhi) - sorted_dmin_.begin());
            if (dlo < dhi) --un;  // exclude o itself

            const RankBounds b = clamp_bounds(ln, un);
            if (needs_split(b, config_.epsilon)) {
                violators.push_back(o);
                reach = std::max(reach, dhi);
            }
        }

        if (violators.empty() || depth >= config_.max_depth) return;
        if (!splittable(cell)) return;

        std::vector<ObjectId> next_candidates;
        next_candidates.reserve(work.candidates.size());
        for (std::size_t i = 0; i < k; ++i) {
            // Conservative: keep o' unless it is provably beyond every child's reach.
            // Child distances only grow, so filtering by the parent-cell distance is sound.
            if (dmin_[i] <= reach) next_candidates.push_back(work.candidates[i]);
        }

        const auto first = static_cast<std::int32_t>(nodes_.size());
        nodes_[work.node].first_child = first;
        const Point mid{(cell.min_corner.x + cell.max_corner.x) / 2.0,
                        (cell.min_corner.y + cell.max_corner.y) / 2.0};
        // SW, SE, NW, NE
        nodes_.push_back({{cell.min_corner, mid}, -1, -1, std::uint16_t(depth + 1)});
        nodes_.push_back({{{mid.x, cell.min_corner.y}, {cell.max_corner.x, mid.y}}, -1, -1, std::uint16_t(depth + 1)});
        nodes_.push_back({{{cell.min_corner.x, mid.y}, {mid.x, cell.max_corner.y}}, -1, -1, std::uint16_t(depth + 1)});
        nodes_.push_back({{mid, cell.max_corner}, -1, -1, std::uint16_t(depth + 1)});

        for (int child = 3; child >= 0; --child) {
            stack.push_back({static_cast<std::uint32_t>(first + child), violators, next_candidates});
        }
    }

    static bool splittable(const Cell& c) {
        const double mx = (c.min_corner.x + c.max_corner.x) / 2.0;
        const double my = (c.min_corner.y + c.max_corner.y) / 2.0;
        return mx > c.min_corner.x && mx < c.max_corner.x && my > c.min_corner.y && my < c.max_corner.y;
    }

    static std::size_t slot_of(const std::vector<ObjectId>& candidates, ObjectId o) {
        // Candidates keep ascending id order throughout the recursion.
        auto it = std::lower_bound(candidates.begin(), candidates.end(), o);
        assert(it != candidates.end() && *it == o);
        return static_cast<std::size_t>(it - candidates.begin());
    }

    const ObjectSet& objects_;
    const PartitionConfig& config_;
    std::vector<Quadtree::Node> nodes_;
    std::vector<double> dmin_, dmax_, sorted_dmin_, sorted_dmax_;
};

}  // namespace

Quadtree build_quadtree(const ObjectSet& objects, const PartitionConfig& config) {
    config.validate();
    Quadtree tree;
    tree.nodes_ = Builder(objects, config).run();
    std::uint32_t leaf = 0;
    for (auto& n : tree.nodes_) {
        if (n.is_leaf()) {
            n.leaf_index = static_cast<std::int32_t>(leaf++);
            tree.report_.max_depth_leaves += (n.depth >= config.max_depth) ? 1 : 0;
            tree.report_.deepest_leaf = std::max(tree.report_.deepest_leaf, int(n.depth));
        }
    }
    tree.leaf_count_ = leaf;
    tree.report_.node_count = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.report_.leaf_count = leaf;
    return tree;
}

std::uint32_t Quadtree::locate_leaf_node(const Point& p) const {
    if (!root_cell().contains(p)) throw std::out_of_range("locate_leaf: point outside dataspace");
    std::uint32_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const Cell& c = nodes_[i].cell;
        const double mx = (c.min_corner.x + c.max_corner.x) / 2.0;
        const double my = (c.min_corner.y + c.max_corner.y) / 2.0;
        const int quadrant = (p.x >= mx ? 1 : 0) + (p.y >= my ? 2 : 0);
        i = static_cast<std::uint32_t>(nodes_[i].first_child + quadrant);
    }
    return i;
}

std::vector<std::uint32_t> Quadtree::leaf_node_indices() const {
    std::vector<std::uint32_t> out(leaf_count_);
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_leaf()) out[static_cast<std::uint32_t>(nodes_[i].leaf_index)] = i;
    }
    return out;
}

// Shape-based comparison: node array layout is an implementation detail, so
// two trees are equal when recursive descent sees the same cells, depths,
// split decisions, and leaf numbering.
bool operator==(const Quadtree& a, const Quadtree& b) {
    if (a.nodes_.size() != b.nodes_.size() || a.leaf_count_ != b.leaf_count_) return false;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [ia, ib] = stack.back();
        stack.pop_back();
        const auto& x = a.nodes_[ia];
        const auto& y = b.nodes_[ib];
        if (x.cell != y.cell || x.depth != y.depth || x.is_leaf() != y.is_leaf() ||
            x.leaf_index != y.leaf_index)
            return false;
        if (!x.is_leaf()) {
            for (int q = 0; q < 4; ++q)
                stack.push_back({std::uint32_t(x.first_child + q), std::uint32_t(y.first_child + q)});
        }
    }
    return true;
}

std::uint64_t count_posthoc_violations(const Quadtree& tree, const ObjectSet& objects, double epsilon) {
    std::uint64_t violations = 0;
    for (const auto& node : tree.nodes()) {
        if (!node.is_leaf()) continue;
        for (ObjectId o = 0; o < objects.size(); ++o) {
            if (needs_split(rank_bounds(o, node.cell, objects), epsilon)) ++violations;
        }
    }
    return violations;
}

Quadtree rebuild_from_leaves(const Cell& root, const std::vector<std::pair<Cell, std::uint16_t>>& leaves) {
    Quadtree tree;
    tree.nodes_.push_back({root, -1, -1, 0});
    for (std::uint32_t li = 0; li < leaves.size(); ++li) {
        const auto& [cell, depth] = leaves[li];
        const Point center{(cell.min_corner.x + cell.max_corner.x) / 2.0,
                           (cell.min_corner.y + cell.max_corner.y) / 2.0};
        std::uint32_t i = 0;
        for (std::uint16_t d = 0; d < depth; ++d) {
            Cell& c = tree.nodes_[i].cell;
            const double mx = (c.min_corner.x + c.max_corner.x) / 2.0;
            const double my = (c.min_corner.y + c.max_corner.y) / 2.0;
            if (tree.nodes_[i].is_leaf()) {
                const auto first = static_cast<std::int32_t>(tree.nodes_.size());
                const Cell cc = c;  // c may dangle after push_back
                tree.nodes_[i].first_child = first;
                const std::uint16_t nd = tree.nodes_[i].depth + 1;
                tree.nodes_.push_back({{cc.min_corner, {mx, my}}, -1, -1, nd});
                tree.nodes_.push_back({{{mx, cc.min_corner.y}, {cc.max_corner.x, my}}, -1, -1, nd});
                tree.nodes_.push_back({{{cc.min_corner.x, my}, {mx, cc.max_corner.y}}, -1, -1, nd});
                tree.nodes_.push_back({{{mx, my}, cc.max_corner}, -1, -1, nd});
            }
            const int quadrant = (center.x >= mx ? 1 : 0) + (center.y >= my ? 2 : 0);
            i = static_cast<std::uint32_t>(tree.nodes_[i].first_child + quadrant);
        }
        tree.nodes_[i].leaf_index = static_cast<std::int32_t>(li);
    }
    std::uint32_t leaf = 0;
    for (auto& n : tree.nodes_) {
        if (n.is_leaf()) {
            ++leaf;
            tree.report_.deepest_leaf = std::max(tree.report_.deepest_leaf, int(n.depth));
        }
    }
    tree.leaf_count_ = leaf;
    tree.report_.node_count = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.report_.leaf_count = leaf;
    return tree;
}

}  // namespace srm
