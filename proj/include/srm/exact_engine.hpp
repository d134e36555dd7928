#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "srm/geometry.hpp"

namespace srm {

struct RangeQuery {
    Point location;
    double radius = 0.0;
    std::uint64_t sequence_no = 0;

    bool covers(const Point& p) const { return dist(location, p) <= radius; }
};

/// Count-based ring of the |W| most recent queries.
class SlidingWindow {
  public:
    explicit SlidingWindow(std::uint32_t capacity) : capacity_(capacity) {}

    /// Appends q; returns the evicted query when the window was full.
    std::optional<RangeQuery> push(const RangeQuery& q) {
        std::optional<RangeQuery> evicted;
        if (queries_.size() == capacity_) {
            evicted = queries_.front();
            queries_.pop_front();
        }
        queries_.push_back(q);
        return evicted;
    }

    std::uint32_t capacity() const { return capacity_; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(queries_.size()); }
    bool full() const { return size() == capacity_; }
    auto begin() const { return queries_.begin(); }
    auto end() const { return queries_.end(); }

  private:
    std::uint32_t capacity_;
    std::deque<RangeQuery> queries_;
};

/// 1-based position of o among the objects satisfying q, ordered by distance
/// with ties broken by object id. Empty when o is outside the radius.
std::optional<std::uint32_t> rank_in_query(ObjectId o, const RangeQuery& q, const ObjectSet& objects);

/// rho(o, W) = sum over q in W of (N - r(o,q) + 1, or 0 outside the radius),
/// divided by |W|.
double popularity(ObjectId o, const SlidingWindow& window, const ObjectSet& objects);

struct TopEntry {
    ObjectId id = 0;
    double score = 0.0;
    friend bool operator==(const TopEntry&, const TopEntry&) = default;
};

struct ExactStepResult {
    std::vector<TopEntry> top;  // descending score, ties by smaller id
    std::uint64_t opq = 0;      // |O+_qn| + |O+_qo|
};

/// Baseline engine: exact per-query ranks, incremental popularity over the
/// sliding window, exact top-m per shift. Results are emitted from the first
/// query onward with |W| equal to the current fill. One engine per stream.
class ExactEngine {
  public:
    ExactEngine(const ObjectSet& objects, std::uint32_t window_capacity);

    ExactStepResult step(const RangeQuery& qn, std::uint32_t m);

    std::uint32_t window_fill() const { return static_cast<std::uint32_t>(window_.size()); }
    /// Signed popularity numerator of o (sum of integer contributions).
    std::int64_t score_numerator(ObjectId o) const { return scores_[o]; }
    double popularity_of(ObjectId o) const {
        return window_.empty() ? 0.0 : static_cast<double>(scores_[o]) / static_cast<double>(window_.size());
    }

  private:
    struct Slot {
        RangeQuery query;
        std::vector<std::pair<ObjectId, std::uint32_t>> ranked;  // (id, rank), rank ascending
    };

    const ObjectSet& objects_;
    std::uint32_t capacity_;
    std::deque<Slot> window_;
    std::vector<std::int64_t> scores_;  // dense numerators; zero when untouched
};

}  // namespace srm
