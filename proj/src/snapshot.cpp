#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "ntk/errors.hpp"
#include "ntk/net.hpp"

namespace ntk {

namespace {

constexpr char kMagic[8] = {'N', 'T', 'K', 'S', 'N', 'A', 'P', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("snapshot: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(os, std::bit_cast<std::uint64_t>(m(i, j)));
}

void get_matrix(std::istream& is, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std::bit_cast<double>(get_u64(is));
}

}  // namespace

void save_snapshot(const std::filesystem::path& path, const NetworkParams& p, const SnapshotMeta& meta) {
    nlohmann::json h;
    h["format"] = "ntklab-snapshot";
    h["version"] = 1;
    h["dims"] = {{"d", p.dims.d}, {"widths", p.dims.widths}};
    h["seed"] = meta.seed;
    h["activation"] = meta.activation;
    h["layout"] = "f64le row-major: V, W0..W(L-1), w_out";
    const std::string header = h.dump();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("snapshot: cannot open " + path.string());
    os.write(kMagic, 8);
    put_u64(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    put_matrix(os, p.V);
    for (const auto& w : p.W) put_matrix(os, w);
    put_matrix(os, p.w_out);
    if (!os) throw ConfigError("snapshot: write failed for " + path.string());
}

NetworkParams load_snapshot(const std::filesystem::path& path, SnapshotMeta* meta) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("snapshot: cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("snapshot: bad magic");
    const std::uint64_t len = get_u64(is);
    if (len > (1u << 24)) throw ConfigError("snapshot: header too large");
    std::string header(len, '\0');
    if (!is.read(header.data(), static_cast<std::streamsize>(len))) throw ConfigError("snapshot: truncated header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("snapshot: bad header: ") + e.what());
    }
    NetworkParams p;
    p.dims.d = h.at("dims").at("d").get<int>();
    p.dims.widths = h.at("dims").at("widths").get<std::vector<int>>();
    p.dims.validate();
    const int L = p.dims.L();
    p.V.resize(p.dims.widths[0], p.dims.d);
    get_matrix(is, p.V);
    p.W.resize(L);
    for (int l = 0; l < L; ++l) {
        p.W[l].resize(p.dims.widths[l + 1], p.dims.widths[l]);
        get_matrix(is, p.W[l]);
    }
    Eigen::MatrixXd w(p.dims.widths[L], 1);
    get_matrix(is, w);
    p.w_out = w.col(0);
    if (meta) {
        meta->seed = h.value("seed", std::uint64_t{0});
        meta->activation = h.value("activation", std::string{});
    }
    return p;
}

}  // namespace ntk
