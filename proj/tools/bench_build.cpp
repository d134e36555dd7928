// Index-build benchmark: serial reference driver vs OpenMP driver, plus
// engine step throughput on the built index.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "srm/approx_engine.hpp"
#include "srm/exact_engine.hpp"
#include "srm/harness.hpp"
#include "srm/irf.hpp"
#include "srm/workload.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::uint32_t n = 20000;
    double epsilon = 3.0;
    std::uint64_t bench_shifts = 2000;
    if (argc > 1) n = static_cast<std::uint32_t>(std::stoul(argv[1]));
    if (argc > 2) epsilon = std::stod(argv[2]);
    if (argc > 3) bench_shifts = std::stoull(argv[3]);

    const srm::ObjectSet objects = srm::synthetic_objects(n, srm::ObjectDistribution::Uniform, 7);
    srm::PartitionConfig pc;
    pc.epsilon = epsilon;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    auto t0 = std::chrono::steady_clock::now();
    const srm::IrfIndex serial = srm::build_index_serial(objects, pc);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const srm::IrfIndex parallel = srm::build_index(objects, pc);
    const double parallel_s = seconds_since(t0);

    std::printf("index build  N=%u epsilon=%.2f leaves=%u\n", n, epsilon, serial.tree().leaf_count());
    std::printf("  serial driver:   %8.3f s\n", serial_s);
    std::printf("  openmp driver:   %8.3f s  (speedup %.2fx)\n", parallel_s, serial_s / parallel_s);
    std::printf("  outputs identical: %s\n", serial == parallel ? "yes" : "NO");

    srm::WorkloadConfig wc;
    wc.epsilon = epsilon;
    wc.shifts = bench_shifts;
    wc.seed = 11;
    srm::QueryGenerator gen(wc, objects);

    srm::ExactEngine exact(objects, wc.window);
    srm::ApproxEngine approx(parallel, wc.window, wc.m);
    std::uint64_t opq_exact = 0, opq_approx = 0;
    double exact_s = 0.0, approx_s = 0.0;
    for (std::uint64_t i = 0; i < wc.window + bench_shifts; ++i) {
        const srm::RangeQuery q = gen.next();
        const bool measured = i >= wc.window;
        t0 = std::chrono::steady_clock::now();
        const auto er = exact.step(q, wc.m);
        if (measured) {
            exact_s += seconds_since(t0);
            opq_exact += er.opq;
        }
        t0 = std::chrono::steady_clock::now();
        const auto ar = approx.step(q);
        if (measured) {
            approx_s += seconds_since(t0);
            opq_approx += ar.stats.opq;
        }
    }
    const double shifts = static_cast<double>(bench_shifts);
    std::printf("engine steps over %llu shifts (|W|=%u, m=%u)\n",
                static_cast<unsigned long long>(bench_shifts), wc.window, wc.m);
    std::printf("  exact:  %8.1f us/shift  mean OPQ %.1f\n", 1e6 * exact_s / shifts,
                static_cast<double>(opq_exact) / shifts);
    std::printf("  approx: %8.1f us/shift  mean OPQ %.1f\n", 1e6 * approx_s / shifts,
                static_cast<double>(opq_approx) / shifts);
    return 0;
}
