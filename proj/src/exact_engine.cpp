#include "srm/exact_engine.hpp"

#include <algorithm>
#include <queue>

namespace srm {

std::optional<std::uint32_t> rank_in_query(ObjectId o, const RangeQuery& q, const ObjectSet& objects) {
    const double d = dist(objects.location(o), q.location);
    if (d > q.radius) return std::nullopt;
    std::uint32_t before = 0;
    for (ObjectId other = 0; other < objects.size(); ++other) {
        if (other == o) continue;
        const double od = dist(objects.location(other), q.location);
        if (od > q.radius) continue;
        if (od < d || (od == d && other < o)) ++before;
    }
    return before + 1;
}

double popularity(ObjectId o, const SlidingWindow& window, const ObjectSet& objects) {
    std::int64_t numerator = 0;
    std::uint32_t fill = 0;
    for (const RangeQuery& q : window) {
        ++fill;
        if (auto r = rank_in_query(o, q, objects))
            numerator += static_cast<std::int64_t>(objects.size()) - *r + 1;
    }
    if (fill == 0) return 0.0;
    return static_cast<double>(numerator) / static_cast<double>(fill);
}

ExactEngine::ExactEngine(const ObjectSet& objects, std::uint32_t window_capacity)
    : objects_(objects), capacity_(window_capacity), scores_(objects.size(), 0) {}

ExactStepResult ExactEngine::step(const RangeQuery& qn, std::uint32_t m) {
    ExactStepResult res;
    const auto n = static_cast<std::int64_t>(objects_.size());

    if (window_.size() == capacity_) {
        const Slot& old = window_.front();
        res.opq += old.ranked.size();
        for (const auto& [id, rank] : old.ranked) scores_[id] -= n - rank + 1;
        window_.pop_front();
    }

    Slot slot;
    slot.query = qn;
    std::vector<std::pair<double, ObjectId>> qualifying;
    for (ObjectId o = 0; o < objects_.size(); ++o) {
        const double d = dist(objects_.location(o), qn.location);
        if (d <= qn.radius) qualifying.emplace_back(d, o);
    }
    std::sort(qualifying.begin(), qualifying.end());
    slot.ranked.reserve(qualifying.size());
    for (std::uint32_t i = 0; i < qualifying.size(); ++i) {
        const ObjectId id = qualifying[i].second;
        slot.ranked.emplace_back(id, i + 1);
        scores_[id] += n - static_cast<std::int64_t>(i + 1) + 1;
    }
    res.opq += slot.ranked.size();
    window_.push_back(std::move(slot));

    // top-m by (score desc, id asc); the heap keeps the current worst on top
    const std::uint32_t want = std::min<std::uint32_t>(m, objects_.size());
    auto better = [](const TopEntry& a, const TopEntry& b) {
        return a.score > b.score || (a.score == b.score && a.id < b.id);
    };
    std::priority_queue<TopEntry, std::vector<TopEntry>, decltype(better)> heap(better);
    const auto fill = static_cast<double>(window_.size());
    for (ObjectId o = 0; o < objects_.size(); ++o) {
        const TopEntry e{o, static_cast<double>(scores_[o]) / fill};
        if (heap.size() < want) {
            heap.push(e);
        } else if (better(e, heap.top())) {
            heap.pop();
            heap.push(e);
        }
    }
    res.top.resize(heap.size());
    for (auto i = static_cast<std::int64_t>(heap.size()) - 1; i >= 0; --i) {
        res.top[static_cast<std::size_t>(i)] = heap.top();
        heap.pop();
    }
    return res;
}

}  // namespace srm
