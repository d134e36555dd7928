#include "srm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace srm {

using nlohmann::json;

EngineSelection parse_engine(const std::string& name) {
    if (name == "exact") return EngineSelection::Exact;
    if (name == "approx") return EngineSelection::Approx;
    if (name == "both") return EngineSelection::Both;
    throw std::invalid_argument("unknown engine '" + name + "' (exact|approx|both)");
}

namespace {

std::vector<std::uint32_t> overlap_grid(std::uint32_t m, std::uint32_t n) {
    std::vector<std::uint32_t> ks;
    for (std::uint32_t k = 10; k <= 200; k += 10) ks.push_back(k);
    ks.push_back(m);
    if (m <= std::numeric_limits<std::uint32_t>::max() / 2) ks.push_back(2 * m);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    ks.erase(std::remove_if(ks.begin(), ks.end(), [&](std::uint32_t k) { return k > n; }), ks.end());
    return ks;
}

json result_to_json(const std::vector<TopEntry>& top) {
    json arr = json::array();
    for (const TopEntry& e : top) arr.push_back({{"id", e.id}, {"score", e.score}});
    return arr;
}

}  // namespace

void MetricsSummary::accumulate(const MetricsSummary& other) {
    const double a = static_cast<double>(accumulated);
    const double b = a + 1.0;
    auto mix = [&](double mine, double theirs) { return (mine * a + theirs) / b; };
    measured_shifts = other.measured_shifts;
    mean_opq_exact = mix(mean_opq_exact, other.mean_opq_exact);
    mean_opq_approx = mix(mean_opq_approx, other.mean_opq_approx);
    mean_rpq_ns_exact = mix(mean_rpq_ns_exact, other.mean_rpq_ns_exact);
    mean_rpq_ns_approx = mix(mean_rpq_ns_approx, other.mean_rpq_ns_approx);
    ratio_mean_of_shifts = mix(ratio_mean_of_shifts, other.ratio_mean_of_shifts);
    ratio_mean_pooled = mix(ratio_mean_pooled, other.ratio_mean_pooled);
    ratio_skipped_positions += other.ratio_skipped_positions;
    if (overlap_pct.empty()) {
        overlap_pct = other.overlap_pct;
    } else {
        for (std::size_t i = 0; i < overlap_pct.size() && i < other.overlap_pct.size(); ++i)
            overlap_pct[i].second = mix(overlap_pct[i].second, other.overlap_pct[i].second);
    }
    for (const auto& [tier, count] : other.tier_counts) tier_counts[tier] += count;
    ++accumulated;
}

MetricsSummary run_experiment(const WorkloadConfig& config, const ObjectSet& objects,
                              const IrfIndex* index, EngineSelection engines, std::ostream* jsonl,
                              const std::vector<RangeQuery>* fixed_queries, std::uint32_t repetition) {
    config.validate();
    const bool want_exact = engines != EngineSelection::Approx;
    const bool want_approx = engines != EngineSelection::Exact;
    if (want_approx && index == nullptr)
        throw std::invalid_argument("run_experiment: approximate engine requires an index");

    std::unique_ptr<ExactEngine> exact;
    std::unique_ptr<ApproxEngine> approx;
    if (want_exact) exact = std::make_unique<ExactEngine>(objects, config.window);
    if (want_approx) approx = std::make_unique<ApproxEngine>(*index, config.window, config.m);

    WorkloadConfig gen_config = config;
    gen_config.seed = config.seed + 1000003ULL * repetition;
    QueryGenerator generator(gen_config, objects);

    const std::uint64_t total_shifts = static_cast<std::uint64_t>(config.window) + config.shifts;
    const auto ks = overlap_grid(config.m, objects.size());

    MetricsSummary out;
    std::vector<double> overlap_sum(ks.size(), 0.0);
    double opq_exact_sum = 0, opq_approx_sum = 0, rpq_exact_sum = 0, rpq_approx_sum = 0;
    double ratio_shift_sum = 0;
    std::uint64_t ratio_shifts = 0;
    double ratio_pool_sum = 0;
    std::uint64_t ratio_pool_count = 0;
    std::uint64_t overlap_shifts = 0;

    std::vector<std::int64_t> top_scores;  // scratch for overlap thresholds

    for (std::uint64_t shift = 0; shift < total_shifts; ++shift) {
        RangeQuery q;
        if (fixed_queries != nullptr) {
            if (shift >= fixed_queries->size())
                throw std::runtime_error("run_experiment: query file exhausted before stream end");
            q = (*fixed_queries)[shift];
        } else {
            q = generator.next();
        }

        const bool warmup = shift < config.window;

        ExactStepResult exact_res;
        std::uint64_t exact_ns = 0;
        if (want_exact) {
            const auto t0 = std::chrono::steady_clock::now();
            exact_res = exact->step(q, config.m);
            exact_ns = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
                    .count());
        }

        ApproxStepResult approx_res;
        std::uint64_t approx_ns = 0;
        if (want_approx) {
            const auto t0 = std::chrono::steady_clock::now();
            approx_res = approx->step(q);
            approx_ns = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
                    .count());
        }

        if (jsonl != nullptr) {
            if (want_exact) {
                json rec{{"shift", shift},     {"engine", "exact"},   {"warmup", warmup},
                         {"opq", exact_res.opq}, {"rpq_ns", exact_ns}, {"rep", repetition},
                         {"result", result_to_json(exact_res.top)}};
                *jsonl << rec.dump() << '\n';
            }
            if (want_approx) {
                json rec{{"shift", shift},
                         {"engine", "approx"},
                         {"warmup", warmup},
                         {"opq", approx_res.stats.opq},
                         {"rpq_ns", approx_ns},
                         {"rep", repetition},
                         {"tier", to_string(approx_res.stats.tier)},
                         {"result", result_to_json(approx_res.top)}};
                *jsonl << rec.dump() << '\n';
            }
        }

        if (warmup) continue;

        ++out.measured_shifts;
        if (want_exact) {
            opq_exact_sum += static_cast<double>(exact_res.opq);
            rpq_exact_sum += static_cast<double>(exact_ns);
        }
        if (want_approx) {
            opq_approx_sum += static_cast<double>(approx_res.stats.opq);
            rpq_approx_sum += static_cast<double>(approx_ns);
            ++out.tier_counts[to_string(approx_res.stats.tier)];
        }

        if (want_exact && want_approx) {
            // positionwise approximation ratio; zero-popularity positions are
            // skipped (ratio undefined), matching pairs of zeros count as 1
            double shift_sum = 0;
            std::uint64_t shift_count = 0;
            const std::size_t positions = std::min(exact_res.top.size(), approx_res.top.size());
            for (std::size_t i = 0; i < positions; ++i) {
                const double rho = exact_res.top[i].score;
                const double rho_hat = approx_res.top[i].score;
                double r;
                if (rho > 0.0 && rho_hat > 0.0)
                    r = std::max(rho_hat / rho, rho / rho_hat);
                else if (rho == 0.0 && rho_hat == 0.0)
                    r = 1.0;
                else {
                    ++out.ratio_skipped_positions;
                    continue;
                }
                shift_sum += r;
                ++shift_count;
                ratio_pool_sum += r;
                ++ratio_pool_count;
            }
            if (shift_count > 0) {
                ratio_shift_sum += shift_sum / static_cast<double>(shift_count);
                ++ratio_shifts;
            }

            // overlap of the approximate top-m with the exact top-k, ties in
            // exact popularity treated as rank-equivalent
            if (!ks.empty()) {
                const std::uint32_t max_k = ks.back();
                top_scores.resize(objects.size());
                for (ObjectId o = 0; o < objects.size(); ++o) top_scores[o] = exact->score_numerator(o);
                const std::uint32_t keep = std::min<std::uint32_t>(max_k, objects.size());
                std::nth_element(top_scores.begin(), top_scores.begin() + (keep - 1), top_scores.end(),
                                 std::greater<>());
                std::sort(top_scores.begin(), top_scores.begin() + keep, std::greater<>());
                for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                    const std::int64_t threshold = top_scores[ks[ki] - 1];
                    std::uint32_t inside = 0;
                    for (const TopEntry& e : approx_res.top)
                        if (exact->score_numerator(e.id) >= threshold) ++inside;
                    overlap_sum[ki] +=
                        100.0 * static_cast<double>(inside) / static_cast<double>(approx_res.top.size());
                }
                ++overlap_shifts;
            }
        }
    }

    const auto measured = static_cast<double>(std::max<std::uint64_t>(out.measured_shifts, 1));
    out.mean_opq_exact = opq_exact_sum / measured;
    out.mean_opq_approx = opq_approx_sum / measured;
    out.mean_rpq_ns_exact = rpq_exact_sum / measured;
    out.mean_rpq_ns_approx = rpq_approx_sum / measured;
    out.ratio_mean_of_shifts = ratio_shifts ? ratio_shift_sum / static_cast<double>(ratio_shifts) : 0.0;
    out.ratio_mean_pooled = ratio_pool_count ? ratio_pool_sum / static_cast<double>(ratio_pool_count) : 0.0;
    if (overlap_shifts > 0) {
        for (std::size_t ki = 0; ki < ks.size(); ++ki)
            out.overlap_pct.emplace_back(ks[ki], overlap_sum[ki] / static_cast<double>(overlap_shifts));
    }
    return out;
}

MetricsSummary run_repetitions(const WorkloadConfig& config, const ObjectSet& objects,
                               const IrfIndex* index, EngineSelection engines, std::ostream* jsonl) {
    MetricsSummary total;
    for (std::uint32_t rep = 0; rep < config.repetitions; ++rep) {
        total.accumulate(run_experiment(config, objects, index, engines, jsonl, nullptr, rep));
    }
    return total;
}

std::vector<SweepGroup> run_sweep(const WorkloadConfig& base, const ObjectSet& objects,
                                  const std::string& param, const std::vector<double>& values,
                                  EngineSelection engines, std::ostream* jsonl) {
    if (values.empty()) throw std::invalid_argument("sweep: no values given");

    auto apply = [&](WorkloadConfig& c, double v) {
        if (param == "window")
            c.window = static_cast<std::uint32_t>(v);
        else if (param == "m")
            c.m = static_cast<std::uint32_t>(v);
        else if (param == "radius-pct")
            c.radius_pct = v;
        else if (param == "epsilon")
            c.epsilon = v;
        else if (param == "block-size")
            c.block_size = static_cast<std::uint32_t>(v);
        else
            throw std::invalid_argument("sweep: unknown param '" + param +
                                        "' (window|m|radius-pct|epsilon|block-size)");
        c.validate();
    };

    const bool want_approx = engines != EngineSelection::Exact;

    // one index per distinct (epsilon, block size); shared read-only
    std::vector<WorkloadConfig> configs(values.size(), base);
    for (std::size_t i = 0; i < values.size(); ++i) apply(configs[i], values[i]);

    std::map<std::pair<double, std::uint32_t>, std::shared_ptr<IrfIndex>> indexes;
    if (want_approx) {
        for (const auto& c : configs) {
            const auto key = std::make_pair(c.epsilon, c.block_size);
            if (indexes.count(key)) continue;
            PartitionConfig pc;
            pc.epsilon = c.epsilon;
            pc.block_size = c.block_size;
            pc.max_depth = c.max_depth;
            indexes[key] = std::make_shared<IrfIndex>(build_index(objects, pc));
        }
    }

    std::uint32_t workers = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("SRM_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) workers = static_cast<std::uint32_t>(parsed);
    }
    workers = std::min<std::uint32_t>(workers, static_cast<std::uint32_t>(values.size()));
    workers = std::max<std::uint32_t>(workers, 1);

    std::vector<SweepGroup> groups(values.size());
    std::vector<std::ostringstream> buffers(values.size());
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= values.size()) return;
            const WorkloadConfig& c = configs[i];
            const IrfIndex* idx = nullptr;
            if (want_approx) idx = indexes.at({c.epsilon, c.block_size}).get();
            groups[i].param = param;
            groups[i].value = values[i];
            groups[i].summary =
                run_repetitions(c, objects, idx, engines, jsonl ? &buffers[i] : nullptr);
        }
    };
    for (std::uint32_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (jsonl != nullptr) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            *jsonl << buffers[i].str();
            json rec{{"group", param}, {"value", values[i]},
                     {"summary", json::parse(summary_to_json(groups[i].summary))}};
            *jsonl << rec.dump() << '\n';
        }
    }
    return groups;
}

std::string summary_to_json(const MetricsSummary& s) {
    json j{{"measured_shifts", s.measured_shifts},
           {"mean_opq_exact", s.mean_opq_exact},
           {"mean_opq_approx", s.mean_opq_approx},
           {"mean_rpq_ns_exact", s.mean_rpq_ns_exact},
           {"mean_rpq_ns_approx", s.mean_rpq_ns_approx},
           {"ratio_mean_of_shifts", s.ratio_mean_of_shifts},
           {"ratio_mean_pooled", s.ratio_mean_pooled},
           {"ratio_skipped_positions", s.ratio_skipped_positions}};
    json overlap = json::array();
    for (const auto& [k, pct] : s.overlap_pct) overlap.push_back({{"k", k}, {"pct", pct}});
    j["overlap"] = overlap;
    json tiers = json::object();
    for (const auto& [tier, count] : s.tier_counts) tiers[tier] = count;
    j["tiers"] = tiers;
    return j.dump();
}

}  // namespace srm
