#include "infratl/container.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

#include "infratl/error.hpp"

namespace infratl {

static_assert(std::endian::native == std::endian::little,
              "ITL1 payloads are written by memcpy; big-endian hosts need byte swaps");

namespace {

constexpr char kMagic[4] = {'I', 'T', 'L', '1'};

template <typename T>
void put(std::vector<char>& out, T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const char> bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::size_t ContainerField::size() const { return product(shape); }

ContainerField& Container::add(std::string name, std::vector<std::size_t> shape,
                               std::vector<float> data) {
    require(!has(name), ErrorKind::shape, "duplicate container field '" + name + "'");
    require(product(shape) == data.size(), ErrorKind::shape,
            "field '" + name + "' data size does not match its shape");
    fields.push_back({std::move(name), std::move(shape), std::move(data)});
    return fields.back();
}

const ContainerField& Container::field(const std::string& name) const {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const ContainerField& f) { return f.name == name; });
    if (it == fields.end()) fail(ErrorKind::io, "container has no field '" + name + "'");
    return *it;
}

bool Container::has(const std::string& name) const {
    return std::any_of(fields.begin(), fields.end(),
                       [&](const ContainerField& f) { return f.name == name; });
}

std::vector<char> encode_container(const Container& c) {
    json header;
    header["dtype"] = "f32le";
    header["fields"] = json::array();
    for (const auto& f : c.fields) {
        header["fields"].push_back({{"name", f.name}, {"shape", f.shape}});
    }
    if (!c.fields.empty()) header["shape"] = c.fields.front().shape;
    header["meta"] = c.meta;
    const std::string text = header.dump();

    std::vector<char> out;
    std::size_t payload = 0;
    for (const auto& f : c.fields) payload += f.data.size() * sizeof(float);
    out.reserve(16 + text.size() + payload);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put<std::uint32_t>(out, Container::kVersion);
    put<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& f : c.fields) {
        const auto* p = reinterpret_cast<const char*>(f.data.data());
        out.insert(out.end(), p, p + f.data.size() * sizeof(float));
    }
    return out;
}

Container decode_container(std::span<const char> bytes) {
    require(bytes.size() >= 16, ErrorKind::io, "ITL1: truncated preamble");
    require(std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()), ErrorKind::io,
            "ITL1: bad magic");
    const auto version = get<std::uint32_t>(bytes, 4);
    require(version == Container::kVersion, ErrorKind::io,
            "ITL1: unsupported version " + std::to_string(version));
    const auto header_len = get<std::uint64_t>(bytes, 8);
    require(header_len <= bytes.size() - 16, ErrorKind::io, "ITL1: truncated header");

    json header;
    try {
        header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_len);
    } catch (const json::exception& e) {
        fail(ErrorKind::io, std::string("ITL1: malformed JSON header: ") + e.what());
    }
    require(header.value("dtype", "") == "f32le", ErrorKind::io, "ITL1: dtype must be f32le");

    Container c;
    c.meta = header.value("meta", json::object());
    std::size_t offset = 16 + header_len;
    for (const auto& fj : header.at("fields")) {
        ContainerField f;
        f.name = fj.at("name").get<std::string>();
        f.shape = fj.at("shape").get<std::vector<std::size_t>>();
        const std::size_t n = product(f.shape);
        require(offset + n * sizeof(float) <= bytes.size(), ErrorKind::io,
                "ITL1: payload truncated in field '" + f.name + "'");
        f.data.resize(n);
        std::memcpy(f.data.data(), bytes.data() + offset, n * sizeof(float));
        offset += n * sizeof(float);
        c.fields.push_back(std::move(f));
    }
    require(offset == bytes.size(), ErrorKind::io, "ITL1: trailing bytes after payload");
    return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
    const auto bytes = encode_container(c);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path.string());
}

namespace {

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Container read_container(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    try {
        return decode_container(bytes);
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

std::string file_hash(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace infratl
