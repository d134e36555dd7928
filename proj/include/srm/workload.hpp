#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "srm/exact_engine.hpp"
#include "srm/geometry.hpp"

namespace srm {

enum class QueryGeneratorKind : std::uint8_t { Uniform, Skewed, Centroid };
enum class ObjectDistribution : std::uint8_t { Uniform, Clustered };

QueryGeneratorKind parse_generator(const std::string& name);
ObjectDistribution parse_object_distribution(const std::string& name);

struct WorkloadConfig {
    std::uint32_t window = 400;
    std::uint32_t m = 10;
    double radius_pct = 4.0;  // percent of the dataspace diagonal
    double epsilon = 3.0;
    std::uint32_t block_size = 128;
    std::uint64_t shifts = 10000;
    std::uint64_t seed = 1;
    QueryGeneratorKind generator = QueryGeneratorKind::Uniform;
    std::uint32_t anchor_count = 0;  // 0: max(64, N/50)
    double zipf_exponent = 1.0;
    std::uint32_t repetitions = 3;
    int max_depth = 16;

    void validate() const;
};

/// CSV with header "id,x,y". Rejects duplicate or non-dense ids and reports
/// parse errors with their line number.
ObjectSet load_objects(const std::string& path);
void save_objects_csv(const ObjectSet& objects, const std::string& path);

/// Optional query input: CSV with header "x,y,radius,seq".
std::vector<RangeQuery> load_queries(const std::string& path);

ObjectSet synthetic_objects(std::uint32_t n, ObjectDistribution distribution, std::uint64_t seed);

/// Seeded, reproducible infinite query stream over a fixed anchor set.
///   uniform  - anchors picked uniformly with replacement
///   skewed   - anchors picked with Zipf(zipf_exponent) frequencies
///   centroid - per synthetic user: location at the centroid of its check-ins,
///              radius covering them; single-check-in users borrow a radius
class QueryGenerator {
  public:
    QueryGenerator(const WorkloadConfig& config, const ObjectSet& objects);

    RangeQuery next();

    const std::vector<Point>& anchors() const { return anchors_; }
    double base_radius() const { return base_radius_; }

  private:
    QueryGeneratorKind kind_;
    std::mt19937_64 rng_;
    std::vector<Point> anchors_;
    std::vector<double> radii_;       // per anchor (centroid mode); otherwise base radius
    std::vector<double> zipf_cdf_;    // skewed mode
    double base_radius_ = 0.0;
    std::uint64_t next_seq_ = 0;
};

}  // namespace srm
