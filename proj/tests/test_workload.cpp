#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "srm/harness.hpp"
#include "srm/workload.hpp"

using namespace srm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::ofstream out(name);
    out << content;
    return name;
}

}  // namespace

TEST_CASE("object csv loading") {
    const std::string ok = write_temp("objs_ok.csv", "id,x,y\n0,1.5,2.5\n2,3,4\n1,0,0\n");
    const ObjectSet set = load_objects(ok);
    CHECK(set.size() == 3);
    CHECK(set.location(0) == Point{1.5, 2.5});
    CHECK(set.location(2) == Point{3, 4});
    std::remove(ok.c_str());

    const std::string dup = write_temp("objs_dup.csv", "id,x,y\n0,1,1\n0,2,2\n");
    CHECK_THROWS_WITH_AS(load_objects(dup), doctest::Contains("duplicate id 0"), std::runtime_error);
    std::remove(dup.c_str());

    const std::string gap = write_temp("objs_gap.csv", "id,x,y\n0,1,1\n5,2,2\n");
    CHECK_THROWS_AS(load_objects(gap), std::runtime_error);
    std::remove(gap.c_str());

    const std::string bad = write_temp("objs_bad.csv", "id,x,y\n0,1,1\n1,x,2\n");
    CHECK_THROWS_WITH_AS(load_objects(bad), doctest::Contains("line 3"), std::runtime_error);
    std::remove(bad.c_str());

    const std::string head = write_temp("objs_head.csv", "x,y\n0,1\n");
    CHECK_THROWS_WITH_AS(load_objects(head), doctest::Contains("header"), std::runtime_error);
    std::remove(head.c_str());
}

TEST_CASE("query csv loading") {
    const std::string ok = write_temp("qs.csv", "x,y,radius,seq\n1,2,3,1\n4,5,6,0\n");
    const auto queries = load_queries(ok);
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].sequence_no == 0);  // sorted by arrival order
    CHECK(queries[0].location == Point{4, 5});
    std::remove(ok.c_str());

    const std::string bad = write_temp("qs_bad.csv", "x,y,radius,seq\n1,2,-1,0\n");
    CHECK_THROWS_AS(load_queries(bad), std::runtime_error);
    std::remove(bad.c_str());
}

TEST_CASE("streams are deterministic for a fixed seed") {
    std::mt19937_64 rng(127);
    const ObjectSet objects = oracle::random_objects(100, rng);
    WorkloadConfig config;
    config.seed = 99;
    config.anchor_count = 32;
    for (const auto kind :
         {QueryGeneratorKind::Uniform, QueryGeneratorKind::Skewed, QueryGeneratorKind::Centroid}) {
        config.generator = kind;
        QueryGenerator a(config, objects);
        QueryGenerator b(config, objects);
        for (int i = 0; i < 200; ++i) {
            const RangeQuery qa = a.next();
            const RangeQuery qb = b.next();
            CHECK(qa.location == qb.location);
            CHECK(qa.radius == qb.radius);
            CHECK(qa.sequence_no == qb.sequence_no);
        }
    }
}

TEST_CASE("uniform generator anchor frequencies pass a chi-square sanity check") {
    std::mt19937_64 rng(131);
    const ObjectSet objects = oracle::random_objects(50, rng);
    WorkloadConfig config;
    config.anchor_count = 64;
    config.seed = 5;
    QueryGenerator gen(config, objects);

    std::map<std::pair<double, double>, std::uint64_t> counts;
    const std::uint64_t draws = 100000;
    for (std::uint64_t i = 0; i < draws; ++i) {
        const RangeQuery q = gen.next();
        ++counts[{q.location.x, q.location.y}];
    }
    REQUIRE(counts.size() == 64);
    const double expected = static_cast<double>(draws) / 64.0;
    double chi2 = 0.0;
    for (const auto& [_, c] : counts) {
        const double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    // chi-square with 63 dof: mean 63, sd ~11.2; anything under mean + 5 sd passes
    CHECK(chi2 < 63.0 + 5.0 * std::sqrt(2.0 * 63.0));
}

TEST_CASE("skewed generator prefers early anchors") {
    std::mt19937_64 rng(137);
    const ObjectSet objects = oracle::random_objects(50, rng);
    WorkloadConfig config;
    config.generator = QueryGeneratorKind::Skewed;
    config.anchor_count = 16;
    config.seed = 6;
    QueryGenerator gen(config, objects);
    std::map<std::pair<double, double>, std::uint64_t> counts;
    for (int i = 0; i < 20000; ++i) {
        const RangeQuery q = gen.next();
        ++counts[{q.location.x, q.location.y}];
    }
    const Point first = gen.anchors()[0];
    const Point last = gen.anchors()[15];
    CHECK(counts[{first.x, first.y}] > 4 * counts[{last.x, last.y}]);
}

TEST_CASE("centroid generator borrows radii for single-check-in users") {
    std::mt19937_64 rng(139);
    const ObjectSet objects = oracle::random_objects(50, rng);
    WorkloadConfig config;
    config.generator = QueryGeneratorKind::Centroid;
    config.anchor_count = 200;
    config.seed = 7;
    QueryGenerator gen(config, objects);
    for (int i = 0; i < 2000; ++i) {
        const RangeQuery q = gen.next();
        CHECK(q.radius > 0.0);  // even single-check-in users carry a usable radius
    }
}

TEST_CASE("run_experiment self comparison gives ratio 1 and full overlap") {
    // manual fine grid with rank-exact anchor leaves: r_hat == r, so the two
    // engines agree and the ratio machinery must report exactly 1
    const ObjectSet objects(
        {{7.3, 11.9}, {51.2, 9.1}, {23.7, 55.4}, {58.8, 49.3}, {11.1, 38.6}, {40.2, 30.7}});
    const Cell root{{0, 0}, {64, 64}};
    std::vector<std::pair<Cell, std::uint16_t>> leaves;
    for (std::uint32_t gy = 0; gy < 64; ++gy)
        for (std::uint32_t gx = 0; gx < 64; ++gx)
            leaves.push_back({{{double(gx), double(gy)}, {double(gx + 1), double(gy + 1)}}, 6});
    Quadtree tree = rebuild_from_leaves(root, leaves);
    PartitionConfig pc;
    pc.epsilon = 0.0;
    pc.block_size = 4;
    std::vector<RankList> lists;
    for (const auto& [cell, d] : leaves) lists.push_back(build_rank_list(objects, cell, 4));
    IrfIndex index(objects, std::move(tree), std::move(lists), pc);
    index.cache_leaf_depths();

    const std::vector<Point> anchors = {{9.4, 13.2}, {47.6, 14.8}, {26.3, 50.1}, {37.7, 33.4}};
    for (const Point& a : anchors) {
        const Cell leaf = index.tree().locate_leaf(a);
        for (ObjectId o = 0; o < objects.size(); ++o) {
            const RankBounds b = rank_bounds(o, leaf, objects);
            REQUIRE(b.lower == b.upper);
        }
    }

    WorkloadConfig config;
    config.window = 6;
    config.m = 4;
    config.shifts = 60;
    config.epsilon = 0.0;
    config.seed = 21;

    std::vector<RangeQuery> queries;
    for (std::uint64_t t = 0; t < config.window + config.shifts; ++t)
        queries.push_back({anchors[t % anchors.size()], 20.0 + 7.0 * double(t % 5), t});

    const MetricsSummary summary =
        run_experiment(config, objects, &index, EngineSelection::Both, nullptr, &queries);
    CHECK(summary.measured_shifts == 60);
    CHECK(summary.ratio_mean_of_shifts == doctest::Approx(1.0));
    CHECK(summary.ratio_mean_pooled == doctest::Approx(1.0));
    REQUIRE(!summary.overlap_pct.empty());
    CHECK(summary.overlap_pct.front().first == config.m);
    CHECK(summary.overlap_pct.front().second == doctest::Approx(100.0));
    // overlap must be monotone in k
    for (std::size_t i = 1; i < summary.overlap_pct.size(); ++i)
        CHECK(summary.overlap_pct[i].second >= summary.overlap_pct[i - 1].second - 1e-9);
}

TEST_CASE("json lines are deterministic apart from timing") {
    std::mt19937_64 rng(151);
    const ObjectSet objects = oracle::random_objects(30, rng);
    PartitionConfig pc;
    pc.epsilon = 2.0;
    const IrfIndex index = build_index(objects, pc);

    WorkloadConfig config;
    config.window = 5;
    config.m = 3;
    config.shifts = 30;
    config.epsilon = 2.0;
    config.seed = 33;
    config.anchor_count = 8;

    auto strip_rpq = [](const std::string& s) {
        std::string out;
        std::istringstream in(s);
        std::string line;
        while (std::getline(in, line)) {
            const auto pos = line.find("\"rpq_ns\":");
            if (pos != std::string::npos) {
                const auto end = line.find(',', pos);
                line.erase(pos, end - pos + 1);
            }
            out += line;
            out += '\n';
        }
        return out;
    };

    std::ostringstream a, b;
    run_experiment(config, objects, &index, EngineSelection::Both, &a);
    run_experiment(config, objects, &index, EngineSelection::Both, &b);
    CHECK(strip_rpq(a.str()) == strip_rpq(b.str()));
    CHECK(a.str().find("\"tier\"") != std::string::npos);
    CHECK(a.str().find("\"warmup\":true") != std::string::npos);
}

TEST_CASE("sweep produces one group per value") {
    std::mt19937_64 rng(157);
    const ObjectSet objects = oracle::random_objects(30, rng);
    WorkloadConfig config;
    config.window = 5;
    config.m = 3;
    config.shifts = 15;
    config.seed = 41;
    config.anchor_count = 8;
    config.repetitions = 1;

    const auto groups =
        run_sweep(config, objects, "epsilon", {1, 2, 3, 4, 5}, EngineSelection::Both, nullptr);
    REQUIRE(groups.size() == 5);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        CHECK(groups[i].param == "epsilon");
        CHECK(groups[i].value == doctest::Approx(1.0 + static_cast<double>(i)));
        CHECK(groups[i].summary.measured_shifts == 15);
    }
    CHECK_THROWS_AS(run_sweep(config, objects, "bogus", {1}, EngineSelection::Both, nullptr),
                    std::invalid_argument);
}

TEST_CASE("workload config validation") {
    WorkloadConfig bad;
    bad.radius_pct = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.window = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.shifts = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
