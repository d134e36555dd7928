// Test-only brute-force oracles, independent of the engine code paths they check.
#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "srm/approx_engine.hpp"
#include "srm/exact_engine.hpp"
#include "srm/geometry.hpp"
#include "srm/irf.hpp"

namespace oracle {

using namespace srm;

// Rank of o among all N objects by (distance, id). For range queries this
// equals the rank among the qualifying objects whenever o qualifies.
inline std::uint32_t true_rank(ObjectId o, const Point& q, const ObjectSet& objects) {
    const double d = dist(objects.location(o), q);
    std::uint32_t before = 0;
    for (ObjectId other = 0; other < objects.size(); ++other) {
        if (other == o) continue;
        const double od = dist(objects.location(other), q);
        if (od < d || (od == d && other < o)) ++before;
    }
    return before + 1;
}

inline ObjectSet random_objects(std::uint32_t n, std::mt19937_64& rng, double extent = 1000.0) {
    std::uniform_real_distribution<double> u(0.0, extent);
    std::vector<Point> pts;
    pts.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) pts.push_back({u(rng), u(rng)});
    return ObjectSet(std::move(pts));
}

inline Point random_point_in(const Cell& c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(c.min_corner.x, c.max_corner.x);
    std::uniform_real_distribution<double> uy(c.min_corner.y, c.max_corner.y);
    return {ux(rng), uy(rng)};
}

// Exact top-m recomputed from nothing but the window contents.
inline std::vector<TopEntry> exact_topm_from_scratch(const std::vector<RangeQuery>& window,
                                                     const ObjectSet& objects, std::uint32_t m) {
    const auto n = static_cast<std::int64_t>(objects.size());
    std::vector<std::int64_t> score(objects.size(), 0);
    for (const RangeQuery& q : window) {
        std::vector<std::pair<double, ObjectId>> qualifying;
        for (ObjectId o = 0; o < objects.size(); ++o) {
            const double d = dist(objects.location(o), q.location);
            if (d <= q.radius) qualifying.emplace_back(d, o);
        }
        std::sort(qualifying.begin(), qualifying.end());
        for (std::uint32_t i = 0; i < qualifying.size(); ++i)
            score[qualifying[i].second] += n - static_cast<std::int64_t>(i + 1) + 1;
    }
    std::vector<ObjectId> ids(objects.size());
    for (ObjectId o = 0; o < objects.size(); ++o) ids[o] = o;
    std::sort(ids.begin(), ids.end(), [&](ObjectId a, ObjectId b) {
        return score[a] > score[b] || (score[a] == score[b] && a < b);
    });
    std::vector<TopEntry> top;
    const auto fill = static_cast<double>(window.size());
    for (std::uint32_t i = 0; i < std::min<std::uint32_t>(m, objects.size()); ++i)
        top.push_back({ids[i], static_cast<double>(score[ids[i]]) / fill});
    return top;
}

// Full-table approximate popularity oracle: maintains the numerator of every
// object by scanning the rank list of each arriving/expiring query, with the
// same membership rule and zeta as the engine. Top-m by (numerator desc, id).
class FromScratchApprox {
  public:
    FromScratchApprox(const IrfIndex& index, std::uint32_t capacity, std::uint32_t m)
        : index_(index), capacity_(capacity), m_(std::min(m, index.object_count())),
          factor_(1.0 + index.config().epsilon / 2.0), numerators_(index.object_count(), 0.0) {}

    std::vector<TopEntry> step(const RangeQuery& qn) {
        if (window_.size() == capacity_) {
            apply(window_.front(), -1.0);
            window_.erase(window_.begin());
        }
        window_.push_back(qn);
        apply(qn, +1.0);

        std::vector<ObjectId> ids(index_.object_count());
        for (ObjectId o = 0; o < ids.size(); ++o) ids[o] = o;
        std::sort(ids.begin(), ids.end(), [&](ObjectId a, ObjectId b) {
            return numerators_[a] > numerators_[b] || (numerators_[a] == numerators_[b] && a < b);
        });
        std::vector<TopEntry> top;
        const auto fill = static_cast<double>(window_.size());
        for (std::uint32_t i = 0; i < m_; ++i) top.push_back({ids[i], numerators_[ids[i]] / fill});
        return top;
    }

    double numerator(ObjectId o) const { return numerators_[o]; }

  private:
    void apply(const RangeQuery& q, double sign) {
        const RankList& list = index_.list_at(q.location);
        for (const RankEntry& e : list.entries) {
            if (!q.covers(index_.objects().location(e.object_id))) continue;
            numerators_[e.object_id] +=
                sign * zeta_contribution(index_.object_count(), factor_, true, e.lower_rank);
        }
    }

    const IrfIndex& index_;
    std::uint32_t capacity_;
    std::uint32_t m_;
    double factor_;
    std::vector<double> numerators_;
    std::vector<RangeQuery> window_;
};

}  // namespace oracle
