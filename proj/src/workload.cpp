#include "srm/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace srm {

QueryGeneratorKind parse_generator(const std::string& name) {
    if (name == "uniform") return QueryGeneratorKind::Uniform;
    if (name == "skewed") return QueryGeneratorKind::Skewed;
    if (name == "centroid") return QueryGeneratorKind::Centroid;
    throw std::invalid_argument("unknown generator '" + name + "' (uniform|skewed|centroid)");
}

ObjectDistribution parse_object_distribution(const std::string& name) {
    if (name == "uniform") return ObjectDistribution::Uniform;
    if (name == "clustered") return ObjectDistribution::Clustered;
    throw std::invalid_argument("unknown object distribution '" + name + "' (uniform|clustered)");
}

void WorkloadConfig::validate() const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (!(radius_pct > 0.0) || radius_pct > 100.0)
        throw std::invalid_argument("radius-pct must be in (0, 100]");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    if (block_size < 1) throw std::invalid_argument("block-size must be >= 1");
    if (shifts < 1) throw std::invalid_argument("shifts must be >= 1");
    if (!(zipf_exponent > 0.0)) throw std::invalid_argument("zipf exponent must be > 0");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("max-depth must be >= 1");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double(const std::string& s, std::uint64_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace

ObjectSet load_objects(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open objects file " + path);
    std::string line;
    std::uint64_t line_no = 0;

    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "id,x,y") throw std::runtime_error(path + ": expected header 'id,x,y'");

    std::vector<std::pair<ObjectId, Point>> pairs;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected 3 fields");
        std::uint64_t id;
        try {
            std::size_t pos = 0;
            id = std::stoull(fields[0], &pos);
            if (pos != fields[0].size()) throw std::invalid_argument("");
        } catch (...) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad id '" + fields[0] + "'");
        }
        const double x = parse_double(fields[1], line_no, "x");
        const double y = parse_double(fields[2], line_no, "y");
        pairs.emplace_back(static_cast<ObjectId>(id), Point{x, y});
    }
    if (pairs.empty()) throw std::runtime_error(path + ": no objects");
    try {
        return ObjectSet::from_pairs(pairs);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_objects_csv(const ObjectSet& objects, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "id,x,y\n";
    out.precision(17);
    for (ObjectId o = 0; o < objects.size(); ++o) {
        const Point& p = objects.location(o);
        out << o << ',' << p.x << ',' << p.y << '\n';
    }
}

std::vector<RangeQuery> load_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open queries file " + path);
    std::string line;
    std::uint64_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "x,y,radius,seq") throw std::runtime_error(path + ": expected header 'x,y,radius,seq'");

    std::vector<RangeQuery> queries;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected 4 fields");
        RangeQuery q;
        q.location.x = parse_double(fields[0], line_no, "x");
        q.location.y = parse_double(fields[1], line_no, "y");
        q.radius = parse_double(fields[2], line_no, "radius");
        q.sequence_no = static_cast<std::uint64_t>(parse_double(fields[3], line_no, "seq"));
        if (q.radius <= 0.0)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": radius must be > 0");
        queries.push_back(q);
    }
    std::sort(queries.begin(), queries.end(),
              [](const RangeQuery& a, const RangeQuery& b) { return a.sequence_no < b.sequence_no; });
    return queries;
}

ObjectSet synthetic_objects(std::uint32_t n, ObjectDistribution distribution, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("synthetic_objects: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1000.0);
    std::vector<Point> pts;
    pts.reserve(n);
    if (distribution == ObjectDistribution::Uniform) {
        for (std::uint32_t i = 0; i < n; ++i) pts.push_back({unit(rng), unit(rng)});
    } else {
        // Gaussian blobs around a handful of hot spots, remainder uniform.
        const std::uint32_t clusters = std::max<std::uint32_t>(4, n / 2000);
        std::vector<Point> centers;
        for (std::uint32_t c = 0; c < clusters; ++c) centers.push_back({unit(rng), unit(rng)});
        std::normal_distribution<double> spread(0.0, 25.0);
        std::uniform_int_distribution<std::uint32_t> pick(0, clusters - 1);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (std::uint32_t i = 0; i < n; ++i) {
            if (coin(rng) < 0.9) {
                const Point& c = centers[pick(rng)];
                pts.push_back({c.x + spread(rng), c.y + spread(rng)});
            } else {
                pts.push_back({unit(rng), unit(rng)});
            }
        }
    }
    return ObjectSet(std::move(pts));
}

QueryGenerator::QueryGenerator(const WorkloadConfig& config, const ObjectSet& objects)
    : kind_(config.generator), rng_(config.seed) {
    const Cell box = objects.bounding_box();
    const double diagonal = dist(box.min_corner, box.max_corner);
    base_radius_ = config.radius_pct / 100.0 * diagonal;
    if (!(base_radius_ > 0.0)) base_radius_ = 1.0;  // degenerate dataspace

    std::uint32_t count = config.anchor_count;
    if (count == 0) count = std::max<std::uint32_t>(64, objects.size() / 50);

    std::uniform_real_distribution<double> ux(box.min_corner.x, box.max_corner.x);
    std::uniform_real_distribution<double> uy(box.min_corner.y, box.max_corner.y);

    if (kind_ == QueryGeneratorKind::Centroid) {
        // One user per anchor: a cluster of check-ins; the query covers them.
        std::poisson_distribution<int> extra(3.0);
        std::normal_distribution<double> spread(0.0, 0.01 * diagonal);
        std::vector<std::uint32_t> single_users;
        anchors_.reserve(count);
        radii_.reserve(count);
        for (std::uint32_t u = 0; u < count; ++u) {
            const Point center{ux(rng_), uy(rng_)};
            const int checkins = 1 + extra(rng_);
            std::vector<Point> pts;
            pts.reserve(static_cast<std::size_t>(checkins));
            for (int i = 0; i < checkins; ++i)
                pts.push_back({center.x + spread(rng_), center.y + spread(rng_)});
            Point centroid{0.0, 0.0};
            for (const Point& p : pts) {
                centroid.x += p.x;
                centroid.y += p.y;
            }
            centroid.x /= static_cast<double>(pts.size());
            centroid.y /= static_cast<double>(pts.size());
            double radius = 0.0;
            for (const Point& p : pts) radius = std::max(radius, dist(centroid, p));
            anchors_.push_back(centroid);
            radii_.push_back(radius);
            if (checkins == 1) single_users.push_back(u);
        }
        // single-check-in users get a radius from another user
        std::uniform_int_distribution<std::uint32_t> other(0, count - 1);
        for (std::uint32_t u : single_users) {
            std::uint32_t donor = u;
            while (donor == u || radii_[donor] <= 0.0) {
                donor = other(rng_);
                if (count == 1) break;
            }
            radii_[u] = radii_[donor] > 0.0 ? radii_[donor] : base_radius_;
        }
    } else {
        anchors_.reserve(count);
        for (std::uint32_t a = 0; a < count; ++a) anchors_.push_back({ux(rng_), uy(rng_)});
        if (kind_ == QueryGeneratorKind::Skewed) {
            zipf_cdf_.resize(count);
            double total = 0.0;
            for (std::uint32_t k = 0; k < count; ++k) {
                total += 1.0 / std::pow(static_cast<double>(k + 1), config.zipf_exponent);
                zipf_cdf_[k] = total;
            }
        }
    }
}

RangeQuery QueryGenerator::next() {
    std::uint32_t pick;
    if (kind_ == QueryGeneratorKind::Skewed) {
        std::uniform_real_distribution<double> u(0.0, zipf_cdf_.back());
        const double r = u(rng_);
        pick = static_cast<std::uint32_t>(
            std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), r) - zipf_cdf_.begin());
        if (pick >= anchors_.size()) pick = static_cast<std::uint32_t>(anchors_.size()) - 1;
    } else {
        std::uniform_int_distribution<std::uint32_t> u(0, static_cast<std::uint32_t>(anchors_.size()) - 1);
        pick = u(rng_);
    }
    RangeQuery q;
    q.location = anchors_[pick];
    q.radius = kind_ == QueryGeneratorKind::Centroid ? radii_[pick] : base_radius_;
    q.sequence_no = next_seq_++;
    return q;
}

}  // namespace srm
