#include "lampe/matrix_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace lampe {

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'P', 'E', '1'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
    const std::array<unsigned char, 4> b = {
        static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_i64_le(std::ostream& os, std::int64_t v) {
    const auto u = static_cast<std::uint64_t>(v);
    std::array<unsigned char, 8> b{};
    for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<unsigned char>((u >> (8 * k)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::int64_t get_i64_le(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t u = 0;
    for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(k)]) << (8 * k);
    return static_cast<std::int64_t>(u);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    return out;
}

LoadedMatrix read_matrix_binary(std::istream& in, const std::filesystem::path& path) {
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (magic != kMagic) throw parse_error("bad magic in " + path.string());
    LoadedMatrix loaded;
    loaded.cfg.l = get_u32_le(in);
    loaded.cfg.m = get_u32_le(in);
    loaded.cfg.s1 = get_u32_le(in);
    loaded.cfg.s2 = get_u32_le(in);
    loaded.cfg.n = 0;
    if (!in) throw parse_error("truncated header in " + path.string());
    loaded.pe = RelPositionMatrix(loaded.cfg.l);
    for (std::int64_t i = 0; i < loaded.cfg.l; ++i) {
        std::int32_t* row = loaded.pe.row(i);
        for (std::int64_t j = 0; j <= i; ++j) {
            row[j] = static_cast<std::int32_t>(get_i64_le(in));
        }
    }
    if (!in) throw parse_error("truncated payload in " + path.string());
    return loaded;
}

LoadedMatrix read_matrix_csv(std::istream& in, const std::filesystem::path& path) {
    std::string line;
    std::int64_t max_i = -1;
    std::vector<std::array<std::int64_t, 3>> triples;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.find_first_not_of("ijvalue, \r") == std::string::npos) continue;
        std::int64_t i, j, v;
        char c1, c2;
        std::istringstream ls(line);
        if (!(ls >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',') {
            throw parse_error("bad CSV row at line " + std::to_string(lineno) + " in " + path.string());
        }
        triples.push_back({i, j, v});
        max_i = std::max(max_i, i);
    }
    if (max_i < 0) throw parse_error("empty matrix CSV: " + path.string());
    LoadedMatrix loaded;
    loaded.pe = RelPositionMatrix(max_i + 1);
    std::int64_t max_v = 0;
    for (const auto& [i, j, v] : triples) {
        if (j < 0 || j > i) throw parse_error("non-causal pair in " + path.string());
        loaded.pe.row(i)[j] = static_cast<std::int32_t>(v);
        max_v = std::max(max_v, v);
    }
    // CSV carries no config header; reconstruct the little that is implied.
    loaded.cfg.l = max_i + 1;
    loaded.cfg.m = max_v + 1;
    loaded.cfg.s1 = 0;
    loaded.cfg.s2 = 0;
    loaded.cfg.n = 0;
    return loaded;
}

}  // namespace

void write_matrix_csv(const RelPositionMatrix& pe, const std::filesystem::path& path) {
    auto out = open_out(path, std::ios::out);
    out << "i,j,value\n";
    for (std::int64_t i = 0; i < pe.size(); ++i) {
        const std::int32_t* row = pe.row(i);
        for (std::int64_t j = 0; j <= i; ++j) {
            out << i << ',' << j << ',' << row[j] << '\n';
        }
    }
    if (!out) throw io_error("write failed: " + path.string());
}

void write_matrix_binary(const RelPositionMatrix& pe, const MappingConfig& cfg,
                         const std::filesystem::path& path) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write(kMagic.data(), 4);
    put_u32_le(out, static_cast<std::uint32_t>(cfg.l));
    put_u32_le(out, static_cast<std::uint32_t>(cfg.m));
    put_u32_le(out, static_cast<std::uint32_t>(cfg.s1));
    put_u32_le(out, static_cast<std::uint32_t>(cfg.s2));
    for (std::int64_t i = 0; i < pe.size(); ++i) {
        const std::int32_t* row = pe.row(i);
        for (std::int64_t j = 0; j <= i; ++j) put_i64_le(out, row[j]);
    }
    if (!out) throw io_error("write failed: " + path.string());
}

LoadedMatrix read_matrix(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::array<char, 4> probe{};
    in.read(probe.data(), 4);
    in.seekg(0);
    if (probe == kMagic) return read_matrix_binary(in, path);
    return read_matrix_csv(in, path);
}

MappingConfig parse_config_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw parse_error("config JSON: expected an object");
    MappingConfig cfg;
    try {
        cfg.l = doc.at("l").get<std::int64_t>();
        cfg.m = doc.at("m").get<std::int64_t>();
        cfg.s1 = doc.at("s1").get<std::int64_t>();
        cfg.s2 = doc.at("s2").get<std::int64_t>();
        cfg.n = doc.value("n", std::int64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("config JSON: ") + e.what());
    }
    return cfg;
}

MappingConfig read_config_json(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

std::string config_to_json(const MappingConfig& cfg) {
    nlohmann::json doc{{"l", cfg.l}, {"m", cfg.m}, {"s1", cfg.s1}, {"s2", cfg.s2}, {"n", cfg.n}};
    return doc.dump(2) + "\n";
}

void write_config_json(const MappingConfig& cfg, const std::filesystem::path& path) {
    auto out = open_out(path, std::ios::out);
    out << config_to_json(cfg);
    if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace lampe
