#include "srm/approx_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace srm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

const char* to_string(StepTier tier) {
    switch (tier) {
        case StepTier::Warmup: return "warmup";
        case StepTier::BsrSafe: return "bsr";
        case StepTier::OsrSafe: return "osr";
        case StepTier::VoEmpty: return "vo_empty";
        case StepTier::VoUpdate: return "vo_update";
    }
    return "?";
}

std::optional<double> approx_rank(ObjectId o, const RangeQuery& q, const IrfIndex& index) {
    const Point& loc = index.objects().location(o);
    if (!q.covers(loc)) return std::nullopt;
    const RankList& list = index.list_at(q.location);
    const LocateResult found = locate_object(list, o, loc);
    return (1.0 + index.config().epsilon / 2.0) * static_cast<double>(found.entry.lower_rank);
}

double approx_popularity(ObjectId o, const SlidingWindow& window, const IrfIndex& index) {
    const double factor = 1.0 + index.config().epsilon / 2.0;
    const Point& loc = index.objects().location(o);
    double numerator = 0.0;
    std::uint32_t fill = 0;
    for (const RangeQuery& q : window) {
        ++fill;
        if (!q.covers(loc)) continue;
        const RankList& list = index.list_at(q.location);
        const std::uint32_t rank = locate_object(list, o, loc).entry.lower_rank;
        numerator += zeta_contribution(index.object_count(), factor, true, rank);
    }
    return fill == 0 ? 0.0 : numerator / static_cast<double>(fill);
}

double reuse_numerator(ObjectId o, double cached_numerator, std::span<const RangeQuery> incoming,
                       std::span<const RangeQuery> outgoing, const IrfIndex& index) {
    const double factor = 1.0 + index.config().epsilon / 2.0;
    const Point& loc = index.objects().location(o);
    const std::uint32_t n = index.object_count();
    double numerator = cached_numerator;
    for (const RangeQuery& q : incoming) {
        if (!q.covers(loc)) continue;
        numerator += zeta_contribution(n, factor, true, locate_object(index.list_at(q.location), o, loc).entry.lower_rank);
    }
    for (const RangeQuery& q : outgoing) {
        if (!q.covers(loc)) continue;
        numerator -= zeta_contribution(n, factor, true, locate_object(index.list_at(q.location), o, loc).entry.lower_rank);
    }
    return numerator;
}

// ---------------------------------------------------------------------------
// GainSearch
// ---------------------------------------------------------------------------

GainSearch::GainSearch(const IrfIndex& index, const RangeQuery& qn, std::uint32_t qn_leaf,
                       const RangeQuery& qo, std::uint32_t qo_leaf)
    : index_(index), qn_list_(index.list(qn_leaf)), qo_list_(index.list(qo_leaf)), qn_(qn), qo_(qo),
      factor_(1.0 + index.config().epsilon / 2.0), n_(index.object_count()) {}

double GainSearch::block_gain_bound(std::uint32_t bi) const {
    const RankBlock& b = qn_list_.blocks[bi];
    const double qn_side = zeta_contribution(n_, factor_, true, qn_list_.entries[b.begin].lower_rank);

    // Credit the outgoing query only when every object of the block provably
    // satisfies its constraint; otherwise some member may contribute zero.
    double credit = 0.0;
    if (max_dist(qo_.location, b.mbr) <= qo_.radius) {
        const double limit = max_dist_rect(b.mbr, qo_list_.cell);
        // strict search: on exact distance ties an object could sort into b',
        // so only blocks strictly past the limit give a valid rank cap
        std::uint32_t lo = 0, hi = static_cast<std::uint32_t>(qo_list_.blocks.size());
        while (lo < hi) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            if (qo_list_.blocks[mid].block_min_dist <= limit)
                lo = mid + 1;
            else
                hi = mid;
        }
        const std::uint32_t rank_cap =
            lo == qo_list_.blocks.size() ? n_ + 1 : qo_list_.entries[qo_list_.blocks[lo].begin].lower_rank;
        credit = zeta_contribution(n_, factor_, true, rank_cap);
    }
    return qn_side - credit;
}

double GainSearch::object_gain(ObjectId o) const {
    const Point& loc = index_.objects().location(o);
    double zn = 0.0;
    if (qn_.covers(loc)) zn = zeta_contribution(n_, factor_, true, locate_object(qn_list_, o, loc).entry.lower_rank);
    double zo = 0.0;
    if (qo_.covers(loc)) zo = zeta_contribution(n_, factor_, true, locate_object(qo_list_, o, loc).entry.lower_rank);
    return zn - zo;
}

double GainSearch::cursor_bound() const {
    if (cursor_ >= qn_list_.blocks.size()) return kNegInf;
    const RankBlock& b = qn_list_.blocks[cursor_];
    return zeta_contribution(n_, factor_, true, qn_list_.entries[b.begin].lower_rank);
}

void GainSearch::pull_cursor(StepStats& stats) {
    heap_.push_back({block_gain_bound(cursor_), 1, cursor_});
    std::push_heap(heap_.begin(), heap_.end(), Less{});
    ++cursor_;
    ++stats.blocks_scanned;
}

void GainSearch::expand_block(std::uint32_t bi, StepStats& stats) {
    const RankBlock& b = qn_list_.blocks[bi];
    for (std::uint32_t e = b.begin; e < b.end; ++e) {
        const RankEntry& entry = qn_list_.entries[e];
        const Point& loc = index_.objects().location(entry.object_id);
        const double zn = zeta_contribution(n_, factor_, qn_.covers(loc), entry.lower_rank);
        double zo = 0.0;
        if (qo_.covers(loc))
            zo = zeta_contribution(n_, factor_, true,
                                   locate_object(qo_list_, entry.object_id, loc).entry.lower_rank);
        heap_.push_back({zn - zo, 0, entry.object_id});
        std::push_heap(heap_.begin(), heap_.end(), Less{});
    }
    ++stats.blocks_expanded;
}

bool GainSearch::top_available(StepStats& stats) {
    while (cursor_ < qn_list_.blocks.size() &&
           (heap_.empty() || cursor_bound() >= heap_.front().gain)) {
        pull_cursor(stats);
    }
    return !heap_.empty();
}

double GainSearch::block_stage(StepStats& stats) {
    pull_cursor(stats);  // the scan always visits the first block
    while (cursor_ < qn_list_.blocks.size() && cursor_bound() >= heap_.front().gain) {
        pull_cursor(stats);
    }
    return heap_.front().gain;
}

double GainSearch::object_stage(StepStats& stats) {
    while (top_available(stats)) {
        const QueueEntry top = heap_.front();
        if (top.kind == 0) return top.gain;  // stays queued for the validation stage
        std::pop_heap(heap_.begin(), heap_.end(), Less{});
        heap_.pop_back();
        expand_block(top.ref, stats);
    }
    return static_cast<double>(n_);  // pessimistic: best rank for qn, no qo membership
}

GainSearch::Validation GainSearch::validation_stage(double pop_m1, double threshold_t, StepStats& stats) {
    Validation out;
    out.max_rejected_gain = kNegInf;
    while (top_available(stats)) {
        const QueueEntry top = heap_.front();
        if (pop_m1 + top.gain < threshold_t) {
            out.max_rejected_gain = top.gain;
            out.has_rejected = true;
            return out;
        }
        std::pop_heap(heap_.begin(), heap_.end(), Less{});
        heap_.pop_back();
        if (top.kind == 1) {
            expand_block(top.ref, stats);
        } else {
            out.objects.emplace_back(top.ref, top.gain);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ApproxEngine
// ---------------------------------------------------------------------------

ApproxEngine::ApproxEngine(const IrfIndex& index, std::uint32_t window_capacity, std::uint32_t m)
    : index_(index), objects_(index.objects()), n_(index.object_count()), capacity_(window_capacity),
      m_(m), want_(std::min(m, index.object_count())),
      factor_(1.0 + index.config().epsilon / 2.0), warm_scores_(index.object_count(), 0.0),
      cache_age_limit_(2 * window_capacity / 3) {
    if (window_capacity == 0) throw std::invalid_argument("ApproxEngine: window capacity must be >= 1");
    if (m == 0) throw std::invalid_argument("ApproxEngine: m must be >= 1");
}

double ApproxEngine::zeta(ObjectId o, const Slot& slot) const {
    const Point& loc = objects_.location(o);
    if (!slot.query.covers(loc)) return 0.0;
    const std::uint32_t rank = locate_object(index_.list(slot.leaf), o, loc).entry.lower_rank;
    return zeta_contribution(n_, factor_, true, rank);
}

void ApproxEngine::remember(ObjectId id, double numerator) {
    cache_[id] = {shift_count_, numerator};
}

void ApproxEngine::sweep_cache() {
    for (auto it = cache_.begin(); it != cache_.end();) {
        if (shift_count_ - it->second.shift > cache_age_limit_)
            it = cache_.erase(it);
        else
            ++it;
    }
}

double ApproxEngine::compute_numerator(ObjectId o, StepStats& stats) {
    const auto it = cache_.find(o);
    if (it != cache_.end() && it->second.shift >= capacity_) {
        const std::uint64_t y = shift_count_ - it->second.shift;
        if (y == 0) return it->second.numerator;
        if (reusable(static_cast<std::uint32_t>(capacity_ - y), capacity_) && y <= evicted_.size()) {
            double numerator = it->second.numerator;
            const std::size_t wsize = window_.size();
            for (std::size_t i = wsize - y; i < wsize; ++i) numerator += zeta(o, window_[i]);
            const std::size_t esize = evicted_.size();
            for (std::size_t i = esize - y; i < esize; ++i) numerator -= zeta(o, evicted_[i]);
            ++stats.reuse_hits;
            return numerator;
        }
    }
    double numerator = 0.0;
    for (const Slot& slot : window_) numerator += zeta(o, slot);
    return numerator;
}

ApproxStepResult ApproxEngine::warmup_step(const Slot& slot) {
    window_.push_back(slot);
    const RankList& list = index_.list(slot.leaf);
    for (const RankEntry& e : list.entries) {
        const Point& loc = objects_.location(e.object_id);
        if (slot.query.covers(loc))
            warm_scores_[e.object_id] += zeta_contribution(n_, factor_, true, e.lower_rank);
    }

    // top want+1 by (numerator desc, id asc); heap keeps the current worst on top
    const std::uint32_t keep = std::min(want_ + 1, n_);
    auto better = [&](ObjectId a, ObjectId b) {
        return warm_scores_[a] > warm_scores_[b] || (warm_scores_[a] == warm_scores_[b] && a < b);
    };
    std::priority_queue<ObjectId, std::vector<ObjectId>, decltype(better)> heap(better);
    for (ObjectId o = 0; o < n_; ++o) {
        if (heap.size() < keep) {
            heap.push(o);
        } else if (better(o, heap.top())) {
            heap.pop();
            heap.push(o);
        }
    }
    std::vector<ObjectId> ordered(heap.size());
    for (auto i = static_cast<std::int64_t>(heap.size()) - 1; i >= 0; --i) {
        ordered[static_cast<std::size_t>(i)] = heap.top();
        heap.pop();
    }

    pop_m1_ = ordered.size() > want_ ? warm_scores_[ordered[want_]] : 0.0;
    result_.clear();
    for (std::uint32_t i = 0; i < std::min<std::uint32_t>(want_, static_cast<std::uint32_t>(ordered.size())); ++i) {
        result_.push_back({ordered[i], warm_scores_[ordered[i]]});
        remember(ordered[i], warm_scores_[ordered[i]]);
    }

    ApproxStepResult res;
    res.stats.tier = StepTier::Warmup;
    res.stats.opq = n_;
    const auto fill = static_cast<double>(window_.size());
    for (const ResultEntry& re : result_) res.top.push_back({re.id, re.numerator / fill});

    if (window_.size() == capacity_) std::vector<double>().swap(warm_scores_);
    return res;
}

ApproxStepResult ApproxEngine::step(const RangeQuery& qn) {
    ++shift_count_;
    const Slot slot{qn, index_.leaf_index_of(qn.location)};
    if (window_.size() < capacity_) return warmup_step(slot);

    ApproxStepResult res;
    StepStats& stats = res.stats;

    const Slot qo = window_.front();
    window_.pop_front();
    window_.push_back(slot);
    evicted_.push_back(qo);
    while (evicted_.size() > cache_age_limit_ + 1) evicted_.pop_front();

    const double w = static_cast<double>(capacity_);
    const std::size_t k = result_.size();

    // update the previous result objects for qo removal and qn arrival
    std::vector<double> s_wo(k), s_new(k), rhat_n(k);
    std::vector<char> member_n(k), safe(k, 0);
    double s_m_upd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const ObjectId id = result_[i].id;
        s_wo[i] = result_[i].numerator - zeta(id, qo);
        s_m_upd = std::min(s_m_upd, s_wo[i]);
        const Point& loc = objects_.location(id);
        member_n[i] = slot.query.covers(loc) ? 1 : 0;
        double zn = 0.0;
        if (member_n[i]) {
            const std::uint32_t rank = locate_object(index_.list(slot.leaf), id, loc).entry.lower_rank;
            rhat_n[i] = factor_ * static_cast<double>(rank);
            zn = zeta_contribution(n_, factor_, true, rank);
        } else {
            rhat_n[i] = std::numeric_limits<double>::infinity();
        }
        s_new[i] = s_wo[i] + zn;
    }
    stats.opq = k;

    GainSearch gs(index_, qn, slot.leaf, qo.query, qo.leaf);

    const double gain_b = gs.block_stage(stats);
    stats.bsr = safe_rank_threshold(n_, pop_m1_, gain_b, s_m_upd);

    std::size_t safe_count = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (member_n[i] && rhat_n[i] <= static_cast<double>(stats.bsr) && s_new[i] > pop_m1_ + gain_b) {
            safe[i] = 1;
            ++safe_count;
        }
    }

    auto finish_safe = [&](StepTier tier, double gain_cap) {
        stats.tier = tier;
        std::vector<ResultEntry> updated(k);
        for (std::size_t i = 0; i < k; ++i) updated[i] = {result_[i].id, s_new[i]};
        std::sort(updated.begin(), updated.end(), [](const ResultEntry& a, const ResultEntry& b) {
            return a.numerator > b.numerator || (a.numerator == b.numerator && a.id < b.id);
        });
        result_ = std::move(updated);
        pop_m1_ = std::min(pop_m1_ + std::max(0.0, gain_cap), result_.back().numerator);
        for (const ResultEntry& re : result_) remember(re.id, re.numerator);
        for (const ResultEntry& re : result_) res.top.push_back({re.id, re.numerator / w});
    };

    if (safe_count == k) {
        finish_safe(StepTier::BsrSafe, gain_b);
        if (shift_count_ % capacity_ == 0) sweep_cache();
        return res;
    }

    double s_m_wi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) s_m_wi = std::min(s_m_wi, s_new[i]);

    const double gain_o = gs.object_stage(stats);
    stats.osr = safe_rank_threshold(n_, pop_m1_, gain_o, s_m_upd);
    for (std::size_t i = 0; i < k; ++i) {
        if (!safe[i] && member_n[i] && rhat_n[i] <= static_cast<double>(stats.osr) &&
            s_new[i] > pop_m1_ + gain_o) {
            safe[i] = 1;
            ++safe_count;
        }
    }
    if (safe_count == k) {
        finish_safe(StepTier::OsrSafe, gain_o);
        if (shift_count_ % capacity_ == 0) sweep_cache();
        return res;
    }

    // validation-object path
    GainSearch::Validation val = gs.validation_stage(pop_m1_, s_m_wi, stats);

    std::vector<ResultEntry> candidates(k);
    for (std::size_t i = 0; i < k; ++i) candidates[i] = {result_[i].id, s_new[i]};

    auto is_result = [&](ObjectId id) {
        for (std::size_t i = 0; i < k; ++i)
            if (result_[i].id == id) return true;
        return false;
    };

    std::vector<std::pair<ObjectId, double>> outsiders;
    outsiders.reserve(val.objects.size());
    for (const auto& [id, gain] : val.objects) {
        if (!is_result(id)) outsiders.emplace_back(id, gain);
    }
    stats.vo_candidates = static_cast<std::uint32_t>(outsiders.size());

    double rejected_max = val.has_rejected ? pop_m1_ + val.max_rejected_gain : kNegInf;

    if (outsiders.empty()) {
        stats.tier = StepTier::VoEmpty;
    } else {
        stats.tier = StepTier::VoUpdate;

        // working m-th best; discarding below it is safe because it only grows
        auto entry_better = [](const ResultEntry& a, const ResultEntry& b) {
            return a.numerator > b.numerator || (a.numerator == b.numerator && a.id < b.id);
        };
        std::priority_queue<ResultEntry, std::vector<ResultEntry>, decltype(entry_better)> working(entry_better);
        for (const ResultEntry& c : candidates) {
            if (working.size() < want_)
                working.push(c);
            else if (entry_better(c, working.top())) {
                working.pop();
                working.push(c);
            }
        }
        for (const auto& [id, gain] : outsiders) {
            const double optimistic = pop_m1_ + gain;
            if (optimistic < working.top().numerator) {
                rejected_max = std::max(rejected_max, optimistic);
                break;  // gains are descending, the rest are rejected too
            }
            const double numerator = compute_numerator(id, stats);
            ++stats.vo_computed;
            candidates.push_back({id, numerator});
            remember(id, numerator);
            const ResultEntry c{id, numerator};
            if (working.size() < want_)
                working.push(c);
            else if (entry_better(c, working.top())) {
                working.pop();
                working.push(c);
            }
        }
        stats.opq += stats.vo_computed;
    }

    std::sort(candidates.begin(), candidates.end(), [](const ResultEntry& a, const ResultEntry& b) {
        return a.numerator > b.numerator || (a.numerator == b.numerator && a.id < b.id);
    });
    const double cand_m1 =
        candidates.size() > want_ ? candidates[want_].numerator : kNegInf;
    candidates.resize(std::min<std::size_t>(want_, candidates.size()));
    result_ = candidates;

    double bound = std::max(cand_m1, rejected_max);
    if (!std::isfinite(bound)) bound = 0.0;
    bound = std::max(bound, 0.0);
    pop_m1_ = std::min(bound, result_.back().numerator);

    for (const ResultEntry& re : result_) remember(re.id, re.numerator);
    for (const ResultEntry& re : result_) res.top.push_back({re.id, re.numerator / w});

    if (shift_count_ % capacity_ == 0) sweep_cache();
    return res;
}

}  // namespace srm
