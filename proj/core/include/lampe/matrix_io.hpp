#pragma once

#include <filesystem>
#include <string>

#include "lampe/config.hpp"
#include "lampe/pe_map.hpp"

namespace lampe {

/// Textual export, one causal pair per line: "i,j,value" with a header row.
void write_matrix_csv(const RelPositionMatrix& pe, const std::filesystem::path& path);

/// Compact binary form. Header: magic "LPE1", then u32 l, m, s1, s2
/// (little-endian); payload: row-major lower-triangular entries as
/// little-endian i64.
void write_matrix_binary(const RelPositionMatrix& pe, const MappingConfig& cfg,
                         const std::filesystem::path& path);

struct LoadedMatrix {
    RelPositionMatrix pe;
    MappingConfig cfg;  // n is not stored in the binary header and loads as 0
};

/// Reads either format; binary is detected by the leading magic.
LoadedMatrix read_matrix(const std::filesystem::path& path);

/// Config files: JSON object with keys l, m, s1, s2, n.
MappingConfig read_config_json(const std::filesystem::path& path);
MappingConfig parse_config_json(const std::string& text);
std::string config_to_json(const MappingConfig& cfg);
void write_config_json(const MappingConfig& cfg, const std::filesystem::path& path);

}  // namespace lampe
