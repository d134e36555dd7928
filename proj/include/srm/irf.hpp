#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srm/geometry.hpp"
#include "srm/quadtree.hpp"

namespace srm {

/// One rank-list tuple: an object, its lower-bound rank for the list's cell,
/// and its minimum distance to the cell (cached for locating).
struct RankEntry {
    ObjectId object_id = 0;
    std::uint32_t lower_rank = 1;
    double min_distance = 0.0;

    friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

/// Fixed-size run of consecutive rank-list entries. Carries the MBR of the
/// member object locations and the min/max of the members' min-distances.
/// Only the final block of a list may hold fewer than B entries.
struct RankBlock {
    std::uint32_t begin = 0;  // entry range [begin, end) in the owning list
    std::uint32_t end = 0;
    Cell mbr;
    double block_min_dist = 0.0;
    double block_max_dist = 0.0;

    std::uint32_t size() const { return end - begin; }
    friend bool operator==(const RankBlock&, const RankBlock&) = default;
};

/// Per-leaf rank list: every object exactly once, sorted ascending by
/// (lower_rank, min_distance, object_id), grouped into blocks of size B.
struct RankList {
    Cell cell;
    std::vector<RankEntry> entries;
    std::vector<RankBlock> blocks;

    friend bool operator==(const RankList&, const RankList&) = default;
};

struct LocateResult {
    std::uint32_t block_index = 0;
    std::uint32_t entry_index = 0;  // absolute index into list.entries
    RankEntry entry;
    std::uint32_t comparisons = 0;
};

/// Finds the entry of object o in a rank list: compute min_dist(o, cell),
/// binary search over block min-distances, then scan the candidate blocks.
LocateResult locate_object(const RankList& list, ObjectId o, const Point& o_location);

/// Upper bound on the lower-bound rank (w.r.t. other_list's cell) of every
/// object in block b: the lower rank of the first entry of the first block
/// b' of other_list with max_dist_rect(b.mbr, other.cell) <= block_min_dist(b').
/// Returns N+1 when no such block exists.
std::uint32_t block_upper_rank(const RankBlock& b, const RankList& other_list);

/// The Inverted Rank File: the quadtree plus one full rank list per leaf.
/// Immutable after build; concurrent readers are safe.
class IrfIndex {
  public:
    IrfIndex() = default;
    IrfIndex(ObjectSet objects, Quadtree tree, std::vector<RankList> lists, PartitionConfig config)
        : objects_(std::move(objects)), tree_(std::move(tree)), lists_(std::move(lists)),
          config_(std::move(config)) {}

    const ObjectSet& objects() const { return objects_; }
    const Quadtree& tree() const { return tree_; }
    const PartitionConfig& config() const { return config_; }
    std::uint32_t object_count() const { return objects_.size(); }

    const std::vector<RankList>& lists() const { return lists_; }
    const RankList& list(std::uint32_t leaf_index) const { return lists_[leaf_index]; }

    /// Rank list of the leaf containing p. Throws std::out_of_range outside the dataspace.
    std::uint32_t leaf_index_of(const Point& p) const {
        return static_cast<std::uint32_t>(tree_.node(tree_.locate_leaf_node(p)).leaf_index);
    }
    const RankList& list_at(const Point& p) const { return lists_[leaf_index_of(p)]; }

    /// Depth-capped leaves can violate the epsilon condition (needed by callers
    /// that must exclude them from error-bound guarantees).
    bool leaf_at_depth_cap(std::uint32_t leaf_index) const {
        return leaf_depths_[leaf_index] >= config_.max_depth;
    }
    void cache_leaf_depths();

    friend bool operator==(const IrfIndex& a, const IrfIndex& b) {
        return a.objects_ == b.objects_ && a.tree_ == b.tree_ && a.lists_ == b.lists_;
    }

  private:
    ObjectSet objects_;
    Quadtree tree_;
    std::vector<RankList> lists_;
    PartitionConfig config_;
    std::vector<std::uint16_t> leaf_depths_;
};

/// Builds the quadtree and materializes every leaf's rank list.
/// Leaf lists are built by the OpenMP-parallel driver.
/// Throws std::length_error when #leaves * N exceeds config.max_total_entries.
IrfIndex build_index(const ObjectSet& objects, const PartitionConfig& config);

/// Serial reference driver over the same per-leaf kernel; used by tests and
/// the build benchmark to cross-check the parallel build.
IrfIndex build_index_serial(const ObjectSet& objects, const PartitionConfig& config);

/// Builds the rank list for one leaf cell (the kernel both drivers share).
RankList build_rank_list(const ObjectSet& objects, const Cell& leaf_cell, std::uint32_t block_size);

/// Regroups sorted entries into blocks and recomputes block metadata.
void assemble_blocks(RankList& list, const ObjectSet& objects, std::uint32_t block_size);

/// Little-endian binary format "IRF1" with a trailing CRC32.
/// Errors: I/O failure, magic/version mismatch, checksum failure.
void save_index(const IrfIndex& index, const std::string& path);
IrfIndex load_index(const std::string& path);

}  // namespace srm
