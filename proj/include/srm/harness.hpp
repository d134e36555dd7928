#pragma once

#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "srm/approx_engine.hpp"
#include "srm/exact_engine.hpp"
#include "srm/irf.hpp"
#include "srm/workload.hpp"

namespace srm {

enum class EngineSelection : std::uint8_t { Exact, Approx, Both };

EngineSelection parse_engine(const std::string& name);

/// Aggregated metrics over the measured (post-warmup) shifts of one stream.
struct MetricsSummary {
    std::uint64_t measured_shifts = 0;
    double mean_opq_exact = 0.0;
    double mean_opq_approx = 0.0;
    double mean_rpq_ns_exact = 0.0;
    double mean_rpq_ns_approx = 0.0;
    // approximation ratio, averaged per shift then over shifts / pooled over positions
    double ratio_mean_of_shifts = 0.0;
    double ratio_mean_pooled = 0.0;
    std::uint64_t ratio_skipped_positions = 0;
    std::vector<std::pair<std::uint32_t, double>> overlap_pct;  // (k, mean %)
    std::map<std::string, std::uint64_t> tier_counts;

    void accumulate(const MetricsSummary& other);  // running mean across repetitions
    std::uint32_t accumulated = 0;
};

/// Drives the selected engines over one query stream: `config.window` warm-up
/// shifts followed by `config.shifts` measured shifts. Per-shift records are
/// written as JSON lines to `jsonl` when given. `fixed_queries` overrides the
/// generator. Record fields other than rpq_ns are deterministic for a fixed
/// (config, seed).
MetricsSummary run_experiment(const WorkloadConfig& config, const ObjectSet& objects,
                              const IrfIndex* index, EngineSelection engines, std::ostream* jsonl,
                              const std::vector<RangeQuery>* fixed_queries = nullptr,
                              std::uint32_t repetition = 0);

/// Repetition loop around run_experiment with derived seeds; summaries averaged.
MetricsSummary run_repetitions(const WorkloadConfig& config, const ObjectSet& objects,
                               const IrfIndex* index, EngineSelection engines, std::ostream* jsonl);

struct SweepGroup {
    std::string param;
    double value = 0.0;
    MetricsSummary summary;
};

/// Runs one experiment per parameter value. Groups may run in parallel; the
/// SRM_THREADS environment variable caps the worker count. Indexes are built
/// once per distinct (epsilon, block size) and shared read-only.
std::vector<SweepGroup> run_sweep(const WorkloadConfig& base, const ObjectSet& objects,
                                  const std::string& param, const std::vector<double>& values,
                                  EngineSelection engines, std::ostream* jsonl);

std::string summary_to_json(const MetricsSummary& summary);

}  // namespace srm
