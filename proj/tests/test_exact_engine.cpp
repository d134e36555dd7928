#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "srm/exact_engine.hpp"

using namespace srm;

namespace {

RangeQuery make_query(double x, double y, double r, std::uint64_t seq) {
    return RangeQuery{{x, y}, r, seq};
}

std::vector<RangeQuery> random_stream(const ObjectSet& objects, std::size_t count, std::mt19937_64& rng) {
    const Cell box = objects.bounding_box();
    const double diag = dist(box.min_corner, box.max_corner);
    std::uniform_real_distribution<double> radius(diag * 0.02, diag * 0.25);
    std::vector<RangeQuery> queries;
    for (std::size_t i = 0; i < count; ++i) {
        RangeQuery q;
        q.location = oracle::random_point_in(box, rng);
        q.radius = radius(rng);
        q.sequence_no = i;
        queries.push_back(q);
    }
    return queries;
}

}  // namespace

TEST_CASE("rank within a query") {
    const ObjectSet objects({{0, 0}, {5, 0}, {10, 0}});
    CHECK(rank_in_query(0, make_query(0, 0, 1, 0), objects) == 1);
    CHECK(rank_in_query(0, make_query(2, 0, 1, 0), objects) == std::nullopt);  // distance 2, radius 1
    CHECK(rank_in_query(1, make_query(4, 0, 8, 0), objects) == 1);
    CHECK(rank_in_query(0, make_query(4, 0, 8, 0), objects) == 2);
    CHECK(rank_in_query(2, make_query(4, 0, 8, 0), objects) == 3);
}

TEST_CASE("rank matches the position in a fully sorted filtered list") {
    std::mt19937_64 rng(61);
    const ObjectSet objects = oracle::random_objects(30, rng);
    const auto queries = random_stream(objects, 40, rng);
    for (const RangeQuery& q : queries) {
        std::vector<std::pair<double, ObjectId>> sorted;
        for (ObjectId o = 0; o < objects.size(); ++o) {
            const double d = dist(objects.location(o), q.location);
            if (d <= q.radius) sorted.emplace_back(d, o);
        }
        std::sort(sorted.begin(), sorted.end());
        for (ObjectId o = 0; o < objects.size(); ++o) {
            const auto r = rank_in_query(o, q, objects);
            auto it = std::find_if(sorted.begin(), sorted.end(),
                                   [&](const auto& p) { return p.second == o; });
            if (it == sorted.end()) {
                CHECK(r == std::nullopt);
            } else {
                REQUIRE(r.has_value());
                CHECK(*r == static_cast<std::uint32_t>(it - sorted.begin()) + 1);
                // for range constraints the rank among qualifying objects
                // equals the rank among all N objects
                CHECK(*r == oracle::true_rank(o, q.location, objects));
            }
        }
    }
}

TEST_CASE("popularity direct substitution") {
    const ObjectSet objects({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}, {7, 0}});
    SlidingWindow w(4);
    w.push(make_query(1.1, 0, 1.5, 0));  // o1 nearest (d=0.1), o0 d=1.1, o2 d=0.9
    // ranks: o1=1, o2=2, o0=3
    CHECK(popularity(1, w, objects) == doctest::Approx(8.0));  // (8-1+1)/1
    CHECK(popularity(2, w, objects) == doctest::Approx(7.0));
    CHECK(popularity(0, w, objects) == doctest::Approx(6.0));
    CHECK(popularity(7, w, objects) == 0.0);  // outside every range
}

TEST_CASE("popularity equals brute recomputation over a window") {
    std::mt19937_64 rng(67);
    const ObjectSet objects = oracle::random_objects(30, rng);
    const auto queries = random_stream(objects, 5, rng);
    SlidingWindow w(5);
    for (const auto& q : queries) w.push(q);

    const auto n = static_cast<std::int64_t>(objects.size());
    for (ObjectId o = 0; o < objects.size(); ++o) {
        std::int64_t numerator = 0;
        for (const auto& q : queries) {
            if (auto r = rank_in_query(o, q, objects)) numerator += n - *r + 1;
        }
        CHECK(popularity(o, w, objects) ==
              doctest::Approx(static_cast<double>(numerator) / 5.0).epsilon(1e-12));
        CHECK(popularity(o, w, objects) >= 0.0);
        CHECK(popularity(o, w, objects) <= static_cast<double>(n));
    }
}

TEST_CASE("first query returns the nearest qualifying object") {
    const ObjectSet objects({{0, 0}, {5, 5}, {9, 9}});
    ExactEngine engine(objects, 4);
    const auto res = engine.step(make_query(5.2, 5.2, 3.0, 0), 1);
    REQUIRE(res.top.size() == 1);
    CHECK(res.top[0].id == 1);
    CHECK(res.opq == 1);
}

TEST_CASE("query with no qualifying objects only evicts") {
    const ObjectSet objects({{0, 0}, {1, 1}});
    ExactEngine engine(objects, 2);
    engine.step(make_query(0, 0, 5, 0), 2);
    const auto before = engine.step(make_query(0.5, 0.5, 5, 1), 2);
    const auto res = engine.step(make_query(1000, 1000, 0.5, 2), 2);  // far away, window full
    CHECK(res.opq == 2);  // eviction of the first query's two objects, nothing new
    REQUIRE(res.top.size() == 2);
    CHECK(res.top[0].score <= before.top[0].score);
}

TEST_CASE("incremental step equals from-scratch recomputation") {
    std::mt19937_64 rng(71);
    const ObjectSet objects = oracle::random_objects(40, rng);
    const auto queries = random_stream(objects, 100, rng);
    const std::uint32_t w = 10, m = 10;

    ExactEngine engine(objects, w);
    std::vector<RangeQuery> window;
    for (const auto& q : queries) {
        const auto res = engine.step(q, m);
        if (window.size() == w) window.erase(window.begin());
        window.push_back(q);
        const auto expect = oracle::exact_topm_from_scratch(window, objects, m);
        REQUIRE(res.top.size() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(res.top[i].id == expect[i].id);
            CHECK(res.top[i].score == expect[i].score);
        }
        // no excluded object may beat an included one
        for (ObjectId o = 0; o < objects.size(); ++o) {
            const double score = engine.popularity_of(o);
            const bool included =
                std::any_of(res.top.begin(), res.top.end(), [&](const TopEntry& e) { return e.id == o; });
            if (!included) CHECK(score <= res.top.back().score);
            CHECK(score >= 0.0);
            CHECK(score <= static_cast<double>(objects.size()));
        }
    }
}

TEST_CASE("opq accounting is the size of both affected sets") {
    std::mt19937_64 rng(73);
    const ObjectSet objects = oracle::random_objects(50, rng);
    const auto queries = random_stream(objects, 30, rng);
    ExactEngine engine(objects, 5);
    std::vector<RangeQuery> window;
    for (const auto& q : queries) {
        const auto res = engine.step(q, 3);
        std::uint64_t expected = 0;
        for (ObjectId o = 0; o < objects.size(); ++o)
            if (dist(objects.location(o), q.location) <= q.radius) ++expected;
        if (window.size() == 5) {
            const RangeQuery& old = window.front();
            for (ObjectId o = 0; o < objects.size(); ++o)
                if (dist(objects.location(o), old.location) <= old.radius) ++expected;
            window.erase(window.begin());
        }
        window.push_back(q);
        CHECK(res.opq == expected);
    }
}
