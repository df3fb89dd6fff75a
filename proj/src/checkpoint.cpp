#include "w4mu/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "w4mu/errors.hpp"

namespace w4mu::harness {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'W', '4', 'M', 'U'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("checkpoint: truncated while reading " + what);
    return v;
}

}  // namespace

void save_checkpoint(const std::vector<ParamSet>& sets, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open '" + path + "'");
    out.write(kMagic, 4);
    put(out, kVersion);
    std::uint32_t count = 0;
    for (const auto& s : sets) count += static_cast<std::uint32_t>(s.entries.size());
    put(out, count);
    for (const auto& s : sets) {
        for (const auto& [key, t] : s.entries) {
            std::string name = s.name + "." + key;
            if (name.size() > 0xffff) throw ContractError("checkpoint: name too long");
            put(out, static_cast<std::uint16_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            put(out, static_cast<std::uint8_t>(t.shape.size()));
            for (std::size_t d : t.shape) put(out, static_cast<std::uint32_t>(d));
            out.write(reinterpret_cast<const char*>(t.data.data()),
                      static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        }
    }
    if (!out) throw IoError("save_checkpoint: write failure on '" + path + "'");
}

std::vector<ParamSet> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("load_checkpoint: bad magic in '" + path + "'");
    std::uint32_t version = get<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw ParseError("load_checkpoint: unsupported version " + std::to_string(version));
    std::uint32_t count = get<std::uint32_t>(in, "array count");

    std::vector<ParamSet> sets;
    for (std::uint32_t a = 0; a < count; ++a) {
        std::uint16_t name_len = get<std::uint16_t>(in, "name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw IoError("load_checkpoint: truncated name");
        auto dot = name.find('.');
        if (dot == std::string::npos)
            throw ParseError("load_checkpoint: array name '" + name + "' lacks a set prefix");
        std::string set_name = name.substr(0, dot);
        std::string key = name.substr(dot + 1);

        std::uint8_t ndim = get<std::uint8_t>(in, "ndim");
        std::vector<std::size_t> shape(ndim);
        std::size_t total = 1;
        for (auto& d : shape) {
            d = get<std::uint32_t>(in, "dim");
            total *= d;
        }
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (!in) throw IoError("load_checkpoint: truncated data for '" + name + "'");

        if (sets.empty() || sets.back().name != set_name) {
            ParamSet s;
            s.name = set_name;
            sets.push_back(std::move(s));
        }
        sets.back().entries.emplace_back(key, std::move(t));
    }
    return sets;
}

ParamSet load_checkpoint_set(const std::string& path, const std::string& set_name) {
    for (auto& s : load_checkpoint(path)) {
        if (s.name == set_name) return s;
    }
    throw ParseError("load_checkpoint: no set '" + set_name + "' in '" + path + "'");
}

}  // namespace w4mu::harness
