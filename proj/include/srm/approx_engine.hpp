#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "srm/exact_engine.hpp"
#include "srm/geometry.hpp"
#include "srm/irf.hpp"

namespace srm {

/// r_hat(o,q) = (1 + eps/2) * lower_rank(o, leaf(q)); empty when o is outside
/// the query radius. Membership uses the true Euclidean distance.
std::optional<double> approx_rank(ObjectId o, const RangeQuery& q, const IrfIndex& index);

/// Popularity contribution of one query. Ranks past N would make N - r_hat + 1
/// negative; contributions are floored at zero so popularity stays in [0, N].
inline double zeta_contribution(std::uint32_t n, double rank_factor, bool member, std::uint32_t lower_rank) {
    if (!member) return 0.0;
    return std::max(0.0, static_cast<double>(n) + 1.0 - rank_factor * static_cast<double>(lower_rank));
}

/// Approximate popularity of o over an arbitrary window, recomputed from scratch.
double approx_popularity(ObjectId o, const SlidingWindow& window, const IrfIndex& index);

/// Popularity computations from window W_{i-y} are reused only when the shared
/// query count Y covers at least two thirds of the window.
inline bool reusable(std::uint32_t shared_y, std::uint32_t window_size) {
    return 3.0 * static_cast<double>(shared_y) >= 2.0 * static_cast<double>(window_size);
}

/// Largest integer rank SR with updated_m + (N - SR + 1) >= pop_m1 + gain,
/// everything in numerator units (popularities times |W|), clamped to [1, N+1].
/// A result object ranking at or better than SR for the incoming query keeps
/// a popularity no outsider can exceed.
inline std::uint32_t safe_rank_threshold(std::uint32_t n, double pop_m1, double gain, double updated_m) {
    const double x = static_cast<double>(n) + 1.0 - (pop_m1 + gain - updated_m);
    if (x >= static_cast<double>(n) + 1.0) return n + 1;
    if (x < 1.0) return 1;
    return static_cast<std::uint32_t>(std::floor(x));
}

/// Shifts a cached popularity numerator by the incoming and outgoing query sets.
/// Returns the numerator of the current window (divide by |W| for rho_hat).
double reuse_numerator(ObjectId o, double cached_numerator, std::span<const RangeQuery> incoming,
                       std::span<const RangeQuery> outgoing, const IrfIndex& index);

enum class StepTier : std::uint8_t { Warmup, BsrSafe, OsrSafe, VoEmpty, VoUpdate };

const char* to_string(StepTier tier);

struct StepStats {
    StepTier tier = StepTier::Warmup;
    std::uint64_t opq = 0;            // distinct objects whose popularity was (re)computed
    std::uint32_t bsr = 0;            // block safe rank (0 when the stage did not run)
    std::uint32_t osr = 0;            // object safe rank (0 when the stage did not run)
    std::uint32_t blocks_scanned = 0;
    std::uint32_t blocks_expanded = 0;
    std::uint32_t vo_candidates = 0;  // validation objects collected
    std::uint32_t vo_computed = 0;    // validation objects whose popularity was computed
    std::uint32_t reuse_hits = 0;
};

struct ApproxStepResult {
    std::vector<TopEntry> top;  // descending rho_hat, ties by smaller id
    StepStats stats;
};

/// Best-first gain search shared by the three pruning stages of one shift
/// (block safe rank -> object safe rank -> validation objects). The queue
/// holds blocks of qn's rank list and expanded objects keyed by popularity
/// gain; unscanned blocks are represented by a cursor so that later stages
/// can keep consuming past the block stage's stopping point.
///
/// Gains are kept in numerator units (times |W|). A block's key is a proven
/// upper bound on the gain of every object inside it: the qn side assumes the
/// best lower rank in the block, and the qo side is credited only when the
/// whole block provably lies inside qo's radius.
class GainSearch {
  public:
    GainSearch(const IrfIndex& index, const RangeQuery& qn, std::uint32_t qn_leaf,
               const RangeQuery& qo, std::uint32_t qo_leaf);

    /// Scans the prefix of qn's rank list until no later block can beat the
    /// best block gain seen so far; returns that gain (numerator units).
    double block_stage(StepStats& stats);

    /// Expands queue blocks best-first until an object surfaces on top; its
    /// exact gain is the maximum object gain. The object stays in the queue
    /// for the validation stage. Falls back to the pessimistic gain N when
    /// the queue is exhausted.
    double object_stage(StepStats& stats);

    struct Validation {
        std::vector<std::pair<ObjectId, double>> objects;  // (id, gain) in dequeue order
        double max_rejected_gain;                          // highest gain proven below the threshold
        bool has_rejected = false;
    };

    /// Consumes the queue while optimistic popularity pop_m1 + gain can still
    /// reach threshold_t; collects every object satisfying that condition.
    Validation validation_stage(double pop_m1, double threshold_t, StepStats& stats);

    /// Exact gain of one object (numerator units); exposed for property tests.
    double object_gain(ObjectId o) const;
    /// Gain bound of block `bi` of qn's rank list; exposed for property tests.
    double block_gain_bound(std::uint32_t bi) const;

  private:
    struct QueueEntry {
        double gain;
        std::uint8_t kind;  // 0 object, 1 block
        std::uint32_t ref;  // object id or block index
    };
    struct Less {
        bool operator()(const QueueEntry& a, const QueueEntry& b) const {
            if (a.gain != b.gain) return a.gain < b.gain;
            if (a.kind != b.kind) return a.kind > b.kind;  // objects outrank blocks
            return a.ref > b.ref;
        }
    };

    double cursor_bound() const;
    void pull_cursor(StepStats& stats);
    void expand_block(std::uint32_t bi, StepStats& stats);
    bool top_available(StepStats& stats);  // pulls cursor blocks while they may lead

    const IrfIndex& index_;
    const RankList& qn_list_;
    const RankList& qo_list_;
    RangeQuery qn_, qo_;
    double factor_;
    std::uint32_t n_;
    std::uint32_t cursor_ = 0;
    std::vector<QueueEntry> heap_;
};

/// Incremental approximate top-m engine over a shared immutable IRF index.
/// Single-threaded per stream.
class ApproxEngine {
  public:
    ApproxEngine(const IrfIndex& index, std::uint32_t window_capacity, std::uint32_t m);

    ApproxStepResult step(const RangeQuery& qn);

    std::uint32_t window_fill() const { return static_cast<std::uint32_t>(window_.size()); }
    std::uint32_t result_size() const { return static_cast<std::uint32_t>(result_.size()); }
    /// Upper bound kept for the (m+1)-th best popularity numerator.
    double pop_m1_numerator() const { return pop_m1_; }

  private:
    struct Slot {
        RangeQuery query;
        std::uint32_t leaf;
    };
    struct ResultEntry {
        ObjectId id;
        double numerator;
    };
    struct CacheEntry {
        std::uint64_t shift;
        double numerator;
    };

    double zeta(ObjectId o, const Slot& slot) const;
    double compute_numerator(ObjectId o, StepStats& stats);  // lookup table / reuse / scratch
    ApproxStepResult warmup_step(const Slot& slot);
    void remember(ObjectId id, double numerator);
    void sweep_cache();

    const IrfIndex& index_;
    const ObjectSet& objects_;
    std::uint32_t n_;
    std::uint32_t capacity_;
    std::uint32_t m_;
    std::uint32_t want_;  // min(m, N)
    double factor_;       // 1 + eps/2

    std::deque<Slot> window_;
    std::deque<Slot> evicted_;
    std::uint64_t shift_count_ = 0;
    std::vector<ResultEntry> result_;  // sorted by (numerator desc, id asc)
    double pop_m1_ = 0.0;
    std::vector<double> warm_scores_;  // full table, only until the window fills
    std::unordered_map<ObjectId, CacheEntry> cache_;
    std::uint32_t cache_age_limit_;
};

}  // namespace srm
