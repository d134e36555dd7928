// srm - monitor the top-m most popular spatial objects over a sliding window
// of range queries, with an exact baseline engine and an IRF-backed
// approximate engine.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "srm/harness.hpp"
#include "srm/irf.hpp"
#include "srm/workload.hpp"

namespace {

struct CommonOpts {
    std::string objects_path;
    std::uint32_t synthetic_n = 0;
    std::string object_dist = "uniform";
    std::string index_path;
    std::string queries_path;
    std::string out_path;
    std::string generator = "uniform";
    std::string engine = "both";
    srm::WorkloadConfig config;
};

void add_workload_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--window", o.config.window, "sliding window size |W|");
    cmd->add_option("--m", o.config.m, "number of monitored objects");
    cmd->add_option("--radius-pct", o.config.radius_pct, "query radius, % of dataspace diagonal");
    cmd->add_option("--epsilon", o.config.epsilon, "approximation parameter");
    cmd->add_option("--block-size", o.config.block_size, "rank list block size B");
    cmd->add_option("--shifts", o.config.shifts, "measured window shifts");
    cmd->add_option("--seed", o.config.seed, "stream RNG seed");
    cmd->add_option("--max-depth", o.config.max_depth, "quadtree depth cap");
    cmd->add_option("--anchors", o.config.anchor_count, "query anchor count (0 = auto)");
    cmd->add_option("--zipf", o.config.zipf_exponent, "skew exponent for the skewed generator");
    cmd->add_option("--reps", o.config.repetitions, "repetitions averaged in summaries");
    cmd->add_option("--generator", o.generator, "query generator: uniform|skewed|centroid");
}

void add_object_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--objects", o.objects_path, "object CSV (header id,x,y)");
    cmd->add_option("--synthetic", o.synthetic_n, "generate N synthetic objects instead");
    cmd->add_option("--object-dist", o.object_dist, "synthetic distribution: uniform|clustered");
}

srm::ObjectSet resolve_objects(const CommonOpts& o) {
    if (!o.objects_path.empty()) return srm::load_objects(o.objects_path);
    if (o.synthetic_n > 0)
        return srm::synthetic_objects(o.synthetic_n, srm::parse_object_distribution(o.object_dist),
                                      o.config.seed);
    throw CLI::ValidationError("either --objects or --synthetic is required");
}

srm::PartitionConfig partition_config(const CommonOpts& o) {
    srm::PartitionConfig pc;
    pc.epsilon = o.config.epsilon;
    pc.block_size = o.config.block_size;
    pc.max_depth = o.config.max_depth;
    return pc;
}

std::unique_ptr<std::ofstream> open_out(const std::string& path, std::ostream*& stream) {
    stream = nullptr;
    if (path.empty()) return nullptr;
    if (path == "-") {
        stream = &std::cout;
        return nullptr;
    }
    auto file = std::make_unique<std::ofstream>(path);
    if (!*file) throw std::runtime_error("cannot open output file " + path);
    stream = file.get();
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"top-m spatial rank aggregation over a sliding window of range queries"};
    app.require_subcommand(1);

    CommonOpts o;

    auto* build = app.add_subcommand("build-index", "build an IRF index and save it");
    add_object_flags(build, o);
    add_workload_flags(build, o);
    build->add_option("--index", o.index_path, "output index path")->required();

    auto* run = app.add_subcommand("run", "drive engines over a stream, emit JSON lines");
    add_object_flags(run, o);
    add_workload_flags(run, o);
    run->add_option("--index", o.index_path, "prebuilt index to load");
    run->add_option("--queries", o.queries_path, "query CSV (header x,y,radius,seq)");
    run->add_option("--out", o.out_path, "JSON-lines output path, '-' for stdout");
    run->add_option("--engine", o.engine, "exact|approx|both");

    auto* compare = app.add_subcommand("compare", "run both engines, print summary JSON");
    add_object_flags(compare, o);
    add_workload_flags(compare, o);
    compare->add_option("--index", o.index_path, "prebuilt index to load");
    compare->add_option("--out", o.out_path, "JSON-lines output path for per-shift records");

    auto* sweep = app.add_subcommand("sweep", "repeat an experiment over parameter values");
    add_object_flags(sweep, o);
    add_workload_flags(sweep, o);
    std::string sweep_param;
    std::vector<double> sweep_values;
    sweep->add_option("--param", sweep_param, "window|m|radius-pct|epsilon|block-size")->required();
    sweep->add_option("--values", sweep_values, "comma separated values")->required()->delimiter(',');
    sweep->add_option("--out", o.out_path, "JSON-lines output path");
    sweep->add_option("--engine", o.engine, "exact|approx|both");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (build->parsed()) {
            const srm::ObjectSet objects = resolve_objects(o);
            o.config.validate();
            const srm::IrfIndex index = srm::build_index(objects, partition_config(o));
            srm::save_index(index, o.index_path);
            std::cout << "built index: " << index.tree().leaf_count() << " leaves, N="
                      << index.object_count() << ", epsilon=" << o.config.epsilon << "\n";
            return 0;
        }

        const srm::EngineSelection engines =
            compare->parsed() ? srm::EngineSelection::Both : srm::parse_engine(o.engine);

        srm::ObjectSet objects = [&] {
            if (!o.index_path.empty() && o.objects_path.empty() && o.synthetic_n == 0)
                return srm::load_index(o.index_path).objects();
            return resolve_objects(o);
        }();
        o.config.validate();

        std::unique_ptr<srm::IrfIndex> index;
        if (engines != srm::EngineSelection::Exact) {
            if (!o.index_path.empty()) {
                index = std::make_unique<srm::IrfIndex>(srm::load_index(o.index_path));
                if (index->object_count() != objects.size())
                    throw std::runtime_error("index/object count mismatch");
            } else {
                index = std::make_unique<srm::IrfIndex>(srm::build_index(objects, partition_config(o)));
            }
        }

        std::ostream* out = nullptr;
        auto out_file = open_out(o.out_path, out);

        if (run->parsed()) {
            std::optional<std::vector<srm::RangeQuery>> fixed;
            if (!o.queries_path.empty()) fixed = srm::load_queries(o.queries_path);
            const srm::MetricsSummary summary = srm::run_experiment(
                o.config, objects, index.get(), engines, out, fixed ? &*fixed : nullptr);
            std::cerr << srm::summary_to_json(summary) << "\n";
            return 0;
        }
        if (compare->parsed()) {
            const srm::MetricsSummary summary =
                srm::run_repetitions(o.config, objects, index.get(), engines, out);
            std::cout << srm::summary_to_json(summary) << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            const auto groups = srm::run_sweep(o.config, objects, sweep_param, sweep_values, engines, out);
            for (const auto& g : groups) {
                std::cout << "{\"group\":\"" << g.param << "\",\"value\":" << g.value
                          << ",\"summary\":" << srm::summary_to_json(g.summary) << "}\n";
            }
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
