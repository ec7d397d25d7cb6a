#pragma once

// ITL1 container: the single on-disk format for slices, profiles, TL curves,
// grids and checkpoints.
//
//   bytes 0..3    magic "ITL1"
//   bytes 4..7    u32 little-endian version (= 1)
//   bytes 8..15   u64 little-endian length of the JSON header in bytes
//   ...           UTF-8 JSON header
//   ...           payload: little-endian IEEE-754 binary32, fields concatenated
//                 in header order, each field row-major
//
// The header always carries "dtype": "f32le" and a "fields" array of
// {"name", "shape"} records; everything else lives under "meta".

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace infratl {

using json = nlohmann::json;

struct ContainerField {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> data;

    std::size_t size() const;
};

struct Container {
    static constexpr std::uint32_t kVersion = 1;

    json meta = json::object();
    std::vector<ContainerField> fields;

    ContainerField& add(std::string name, std::vector<std::size_t> shape,
                        std::vector<float> data);
    const ContainerField& field(const std::string& name) const;
    bool has(const std::string& name) const;
};

std::vector<char> encode_container(const Container& c);
Container decode_container(std::span<const char> bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// FNV-1a 64-bit hash of a file's bytes, hex-encoded. Used for run provenance.
std::string file_hash(const std::filesystem::path& path);

}  // namespace infratl
