#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "srm/irf.hpp"

// On-disk layout (little-endian), version 1:
//   magic "IRF1" | version u32 | N u32 | epsilon f64 | B u32 | max_depth i32
//   | leaf_count u32 | root cell 4xf64
//   | objects N x (x f64, y f64)
//   | per leaf: cell 4xf64, depth u16, N x (object_id u32, lower_rank u32, min_distance f64)
//   | crc32 u32 over everything above

namespace srm {

namespace {

constexpr char kMagic[4] = {'I', 'R', 'F', '1'};
constexpr std::uint32_t kVersion = 1;

class CrcWriter {
  public:
    explicit CrcWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("save_index: cannot open " + path);
    }
    void write(const void* data, std::size_t len) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(len));
    }
    template <typename T>
    void put(const T& v) {
        write(&v, sizeof(T));
    }
    void finish() {
        const auto crc = static_cast<std::uint32_t>(crc_);
        out_.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
        out_.flush();
        if (!out_) throw std::runtime_error("save_index: write failure");
    }

  private:
    std::ofstream out_;
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

class CrcReader {
  public:
    explicit CrcReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("load_index: cannot open " + path);
        in_.seekg(0, std::ios::end);
        total_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0);
        if (total_ < sizeof(kMagic) + sizeof(std::uint32_t))
            throw std::runtime_error("load_index: file truncated");
        payload_ = total_ - sizeof(std::uint32_t);
    }
    void read(void* data, std::size_t len) {
        if (consumed_ + len > payload_) throw std::runtime_error("load_index: file truncated");
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (!in_) throw std::runtime_error("load_index: read failure");
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(len));
        consumed_ += len;
    }
    template <typename T>
    T get() {
        T v;
        read(&v, sizeof(T));
        return v;
    }
    void verify_crc() {
        if (consumed_ != payload_) throw std::runtime_error("load_index: trailing data");
        std::uint32_t stored;
        in_.read(reinterpret_cast<char*>(&stored), sizeof(stored));
        if (!in_) throw std::runtime_error("load_index: read failure");
        if (stored != static_cast<std::uint32_t>(crc_))
            throw std::runtime_error("load_index: checksum mismatch (corrupt file)");
    }

  private:
    std::ifstream in_;
    std::uint64_t total_ = 0;
    std::uint64_t payload_ = 0;
    std::uint64_t consumed_ = 0;
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

void put_cell(CrcWriter& w, const Cell& c) {
    w.put(c.min_corner.x);
    w.put(c.min_corner.y);
    w.put(c.max_corner.x);
    w.put(c.max_corner.y);
}

Cell get_cell(CrcReader& r) {
    Cell c;
    c.min_corner.x = r.get<double>();
    c.min_corner.y = r.get<double>();
    c.max_corner.x = r.get<double>();
    c.max_corner.y = r.get<double>();
    return c;
}

}  // namespace

void save_index(const IrfIndex& index, const std::string& path) {
    CrcWriter w(path);
    w.write(kMagic, sizeof(kMagic));
    w.put(kVersion);
    w.put(index.object_count());
    w.put(index.config().epsilon);
    w.put(index.config().block_size);
    w.put(static_cast<std::int32_t>(index.config().max_depth));
    w.put(index.tree().leaf_count());
    put_cell(w, index.tree().root_cell());

    for (const Point& p : index.objects().locations()) {
        w.put(p.x);
        w.put(p.y);
    }

    const auto leaf_nodes = index.tree().leaf_node_indices();
    for (std::uint32_t li = 0; li < leaf_nodes.size(); ++li) {
        const auto& node = index.tree().node(leaf_nodes[li]);
        put_cell(w, node.cell);
        w.put(node.depth);
        for (const RankEntry& e : index.list(li).entries) {
            w.put(e.object_id);
            w.put(e.lower_rank);
            w.put(e.min_distance);
        }
    }
    w.finish();
}

IrfIndex load_index(const std::string& path) {
    CrcReader r(path);

    char magic[4];
    r.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_index: bad magic (not an IRF file)");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion)
        throw std::runtime_error("load_index: unsupported version " + std::to_string(version));

    const auto n = r.get<std::uint32_t>();
    PartitionConfig config;
    config.epsilon = r.get<double>();
    config.block_size = r.get<std::uint32_t>();
    config.max_depth = r.get<std::int32_t>();
    const auto leaf_count = r.get<std::uint32_t>();
    const Cell root = get_cell(r);

    std::vector<Point> locations(n);
    for (auto& p : locations) {
        p.x = r.get<double>();
        p.y = r.get<double>();
    }
    ObjectSet objects(std::move(locations));

    std::vector<std::pair<Cell, std::uint16_t>> leaves(leaf_count);
    std::vector<RankList> lists(leaf_count);
    for (std::uint32_t li = 0; li < leaf_count; ++li) {
        leaves[li].first = get_cell(r);
        leaves[li].second = r.get<std::uint16_t>();
        RankList& list = lists[li];
        list.cell = leaves[li].first;
        list.entries.resize(n);
        for (auto& e : list.entries) {
            e.object_id = r.get<std::uint32_t>();
            e.lower_rank = r.get<std::uint32_t>();
            e.min_distance = r.get<double>();
        }
        assemble_blocks(list, objects, config.block_size);
    }
    r.verify_crc();

    Quadtree tree = rebuild_from_leaves(root, leaves);
    IrfIndex index(std::move(objects), std::move(tree), std::move(lists), config);
    index.cache_leaf_depths();
    return index;
}

}  // namespace srm
