#include "srm/irf.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace srm {

void assemble_blocks(RankList& list, const ObjectSet& objects, std::uint32_t block_size) {
    const auto n = static_cast<std::uint32_t>(list.entries.size());
    const std::uint32_t nblocks = (n + block_size - 1) / block_size;
    list.blocks.resize(nblocks);
    for (std::uint32_t bi = 0; bi < nblocks; ++bi) {
        RankBlock& b = list.blocks[bi];
        b.begin = bi * block_size;
        b.end = std::min(n, b.begin + block_size);
        const Point& p0 = objects.location(list.entries[b.begin].object_id);
        b.mbr = {p0, p0};
        b.block_min_dist = list.entries[b.begin].min_distance;
        b.block_max_dist = list.entries[b.begin].min_distance;
        for (std::uint32_t e = b.begin; e < b.end; ++e) {
            const RankEntry& entry = list.entries[e];
            const Point& p = objects.location(entry.object_id);
            b.mbr.min_corner.x = std::min(b.mbr.min_corner.x, p.x);
            b.mbr.min_corner.y = std::min(b.mbr.min_corner.y, p.y);
            b.mbr.max_corner.x = std::max(b.mbr.max_corner.x, p.x);
            b.mbr.max_corner.y = std::max(b.mbr.max_corner.y, p.y);
            b.block_min_dist = std::min(b.block_min_dist, entry.min_distance);
            b.block_max_dist = std::max(b.block_max_dist, entry.min_distance);
        }
    }
}

RankList build_rank_list(const ObjectSet& objects, const Cell& leaf_cell, std::uint32_t block_size) {
    const std::uint32_t n = objects.size();
    RankList list;
    list.cell = leaf_cell;
    list.entries.resize(n);

    // min/max distance of every object to this cell
    std::vector<double> dmin(n), dmax(n);
    for (ObjectId o = 0; o < n; ++o) {
        dmin[o] = min_dist(objects.location(o), leaf_cell);
        dmax[o] = max_dist(objects.location(o), leaf_cell);
    }
    std::vector<double> sorted_dmax(dmax);
    std::sort(sorted_dmax.begin(), sorted_dmax.end());

    for (ObjectId o = 0; o < n; ++o) {
        auto ln = static_cast<std::uint32_t>(
            std::upper_bound(sorted_dmax.begin(), sorted_dmax.end(), dmin[o]) - sorted_dmax.begin());
        if (dmax[o] <= dmin[o]) --ln;  // o itself (point cells only)
        list.entries[o] = {o, ln + 1, dmin[o]};
    }

    std::sort(list.entries.begin(), list.entries.end(), [](const RankEntry& a, const RankEntry& b) {
        return std::tie(a.lower_rank, a.min_distance, a.object_id) <
               std::tie(b.lower_rank, b.min_distance, b.object_id);
    });

    assemble_blocks(list, objects, block_size);
    return list;
}

namespace {

std::vector<Cell> leaf_cells_checked(const ObjectSet& objects, const Quadtree& tree,
                                     const PartitionConfig& config) {
    const std::uint64_t total =
        static_cast<std::uint64_t>(tree.leaf_count()) * static_cast<std::uint64_t>(objects.size());
    if (total > config.max_total_entries)
        throw std::length_error("build_index: " + std::to_string(tree.leaf_count()) + " leaves x " +
                                std::to_string(objects.size()) + " objects exceeds max_total_entries (" +
                                std::to_string(config.max_total_entries) +
                                "); raise the cap, raise epsilon, or lower max_depth");
    std::vector<Cell> cells(tree.leaf_count());
    for (const auto& node : tree.nodes()) {
        if (node.is_leaf()) cells[static_cast<std::uint32_t>(node.leaf_index)] = node.cell;
    }
    return cells;
}

}  // namespace

IrfIndex build_index(const ObjectSet& objects, const PartitionConfig& config) {
    Quadtree tree = build_quadtree(objects, config);
    const std::vector<Cell> cells = leaf_cells_checked(objects, tree, config);

    std::vector<RankList> lists(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(cells.size()); ++i) {
        lists[i] = build_rank_list(objects, cells[i], config.block_size);
    }

    IrfIndex index(objects, std::move(tree), std::move(lists), config);
    index.cache_leaf_depths();
    return index;
}

IrfIndex build_index_serial(const ObjectSet& objects, const PartitionConfig& config) {
    Quadtree tree = build_quadtree(objects, config);
    const std::vector<Cell> cells = leaf_cells_checked(objects, tree, config);

    std::vector<RankList> lists(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        lists[i] = build_rank_list(objects, cells[i], config.block_size);
    }

    IrfIndex index(objects, std::move(tree), std::move(lists), config);
    index.cache_leaf_depths();
    return index;
}

void IrfIndex::cache_leaf_depths() {
    leaf_depths_.assign(tree_.leaf_count(), 0);
    for (const auto& node : tree_.nodes()) {
        if (node.is_leaf()) leaf_depths_[static_cast<std::uint32_t>(node.leaf_index)] = node.depth;
    }
}

LocateResult locate_object(const RankList& list, ObjectId o, const Point& o_location) {
    LocateResult res;
    const double d = min_dist(o_location, list.cell);

    // First block whose min-distance range can contain d. block_max_dist is
    // non-decreasing across blocks because the entry min-distances are.
    std::uint32_t lo = 0, hi = static_cast<std::uint32_t>(list.blocks.size());
    while (lo < hi) {
        const std::uint32_t mid = lo + (hi - lo) / 2;
        ++res.comparisons;
        if (list.blocks[mid].block_max_dist < d)
            lo = mid + 1;
        else
            hi = mid;
    }

    for (std::uint32_t bi = lo; bi < list.blocks.size(); ++bi) {
        const RankBlock& b = list.blocks[bi];
        if (b.block_min_dist > d) break;
        for (std::uint32_t e = b.begin; e < b.end; ++e) {
            ++res.comparisons;
            if (list.entries[e].object_id == o) {
                res.block_index = bi;
                res.entry_index = e;
                res.entry = list.entries[e];
                return res;
            }
        }
    }
    throw std::logic_error("locate_object: object not found (corrupt list?)");
}

std::uint32_t block_upper_rank(const RankBlock& b, const RankList& other_list) {
    const double limit = max_dist_rect(b.mbr, other_list.cell);
    std::uint32_t lo = 0, hi = static_cast<std::uint32_t>(other_list.blocks.size());
    while (lo < hi) {
        const std::uint32_t mid = lo + (hi - lo) / 2;
        if (other_list.blocks[mid].block_min_dist < limit)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == other_list.blocks.size())
        return static_cast<std::uint32_t>(other_list.entries.size()) + 1;
    return other_list.entries[other_list.blocks[lo].begin].lower_rank;
}

}  // namespace srm
