#pragma once

#include "uniloc/numcore/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace uniloc::numcore {

struct ParamEntry {
    Matrix tensor;
    Matrix grad;
};

// Named trainable tensors with gradient buffers. Iteration is ordered by path.
class ParamStore {
public:
    using Map = std::map<std::string, ParamEntry, std::less<>>;

    // Adds a tensor; throws ErrorKind::contract if the path already exists.
    void add(std::string path, Matrix tensor);
    // Glorot-uniform weight [fanIn x fanOut] plus zero bias [1 x fanOut] under
    // "<prefix>/W" and "<prefix>/b". The draw depends only on (seed, prefix).
    void add_linear(const std::string& prefix, std::size_t fanIn, std::size_t fanOut,
                    std::uint64_t seed);

    bool contains(std::string_view path) const;
    const Matrix& tensor(std::string_view path) const;
    Matrix& tensor(std::string_view path);
    const Matrix& grad(std::string_view path) const;
    Matrix& grad(std::string_view path);

    void zero_grad();
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t parameter_count() const;
    std::vector<std::string> paths(std::string_view prefix = {}) const;

    // Copies every entry whose path starts with prefix from other, replacing existing values.
    void copy_prefix_from(const ParamStore& other, std::string_view prefix);
    void erase_prefix(std::string_view prefix);

    Map::const_iterator begin() const { return entries_.begin(); }
    Map::const_iterator end() const { return entries_.end(); }
    Map::iterator begin() { return entries_.begin(); }
    Map::iterator end() { return entries_.end(); }

    // Binary format: "ULOC", u32 version, then per entry (sorted by path):
    // u32 path length, path bytes, u32 rows, u32 cols, little-endian f64 payload.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& file) const;
    static ParamStore load(std::istream& in);
    static ParamStore load(const std::filesystem::path& file);

    static constexpr std::uint32_t kFormatVersion = 1;

private:
    const ParamEntry& entry(std::string_view path) const;
    ParamEntry& entry(std::string_view path);

    Map entries_;
};

bool tensors_equal(const ParamStore& a, const ParamStore& b, std::string_view prefix = {});

} // namespace uniloc::numcore
