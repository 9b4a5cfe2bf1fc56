#include "uniloc/numcore/param_store.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/rng.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace uniloc::numcore {

namespace {

constexpr std::array<char, 4> kMagic{'U', 'L', 'O', 'C'};

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> bytes{};
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    out.write(bytes.data(), 4);
}

void write_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(bytes.data(), 8);
}

bool read_bytes(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    if (!read_bytes(in, reinterpret_cast<char*>(b.data()), 4))
        raise(ErrorKind::parse, std::string("truncated param file reading ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double read_f64(std::istream& in) {
    std::array<unsigned char, 8> b{};
    if (!read_bytes(in, reinterpret_cast<char*>(b.data()), 8))
        raise(ErrorKind::parse, "truncated param file payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

} // namespace

void ParamStore::add(std::string path, Matrix tensor) {
    if (entries_.contains(path)) raise(ErrorKind::contract, "duplicate parameter path " + path);
    Matrix grad(tensor.rows(), tensor.cols());
    entries_.emplace(std::move(path), ParamEntry{std::move(tensor), std::move(grad)});
}

void ParamStore::add_linear(const std::string& prefix, std::size_t fanIn, std::size_t fanOut,
                            std::uint64_t seed) {
    Rng rng(mix_seed(seed, fnv1a64(prefix)));
    const double limit = std::sqrt(6.0 / static_cast<double>(fanIn + fanOut));
    Matrix w(fanIn, fanOut);
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    add(prefix + "/W", std::move(w));
    add(prefix + "/b", Matrix(1, fanOut));
}

bool ParamStore::contains(std::string_view path) const { return entries_.find(path) != entries_.end(); }

const ParamEntry& ParamStore::entry(std::string_view path) const {
    auto it = entries_.find(path);
    if (it == entries_.end()) raise(ErrorKind::lookup, "no parameter at path " + std::string(path));
    return it->second;
}

ParamEntry& ParamStore::entry(std::string_view path) {
    auto it = entries_.find(path);
    if (it == entries_.end()) raise(ErrorKind::lookup, "no parameter at path " + std::string(path));
    return it->second;
}

const Matrix& ParamStore::tensor(std::string_view path) const { return entry(path).tensor; }
Matrix& ParamStore::tensor(std::string_view path) { return entry(path).tensor; }
const Matrix& ParamStore::grad(std::string_view path) const { return entry(path).grad; }
Matrix& ParamStore::grad(std::string_view path) { return entry(path).grad; }

void ParamStore::zero_grad() {
    for (auto& [path, e] : entries_) e.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [path, e] : entries_) n += e.tensor.size();
    return n;
}

std::vector<std::string> ParamStore::paths(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [path, e] : entries_)
        if (starts_with(path, prefix)) out.push_back(path);
    return out;
}

void ParamStore::copy_prefix_from(const ParamStore& other, std::string_view prefix) {
    for (const auto& [path, e] : other.entries_) {
        if (!starts_with(path, prefix)) continue;
        entries_.insert_or_assign(path, ParamEntry{e.tensor, Matrix(e.tensor.rows(), e.tensor.cols())});
    }
}

void ParamStore::erase_prefix(std::string_view prefix) {
    std::erase_if(entries_, [&](const auto& kv) { return starts_with(kv.first, prefix); });
}

void ParamStore::save(std::ostream& out) const {
    out.write(kMagic.data(), kMagic.size());
    write_u32(out, kFormatVersion);
    for (const auto& [path, e] : entries_) {
        write_u32(out, static_cast<std::uint32_t>(path.size()));
        out.write(path.data(), static_cast<std::streamsize>(path.size()));
        write_u32(out, static_cast<std::uint32_t>(e.tensor.rows()));
        write_u32(out, static_cast<std::uint32_t>(e.tensor.cols()));
        for (double v : e.tensor.data()) write_f64(out, v);
    }
    if (!out) raise(ErrorKind::io, "failed writing param store");
}

void ParamStore::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) raise(ErrorKind::io, "cannot open " + file.string() + " for writing");
    save(out);
}

ParamStore ParamStore::load(std::istream& in) {
    std::array<char, 4> magic{};
    if (!read_bytes(in, magic.data(), 4) || magic != kMagic)
        raise(ErrorKind::parse, "bad param file magic");
    const std::uint32_t version = read_u32(in, "version");
    if (version != kFormatVersion)
        raise(ErrorKind::parse, "unsupported param file version " + std::to_string(version));

    ParamStore store;
    while (in.peek() != std::char_traits<char>::eof()) {
        const std::uint32_t len = read_u32(in, "path length");
        std::string path(len, '\0');
        if (!read_bytes(in, path.data(), len)) raise(ErrorKind::parse, "truncated parameter path");
        const std::uint32_t rows = read_u32(in, "rows");
        const std::uint32_t cols = read_u32(in, "cols");
        std::vector<double> data(static_cast<std::size_t>(rows) * cols);
        for (double& v : data) v = read_f64(in);
        store.add(std::move(path), Matrix(rows, cols, std::move(data)));
    }
    return store;
}

ParamStore ParamStore::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open " + file.string());
    return load(in);
}

bool tensors_equal(const ParamStore& a, const ParamStore& b, std::string_view prefix) {
    const auto pa = a.paths(prefix);
    if (pa != b.paths(prefix)) return false;
    for (const auto& p : pa)
        if (!(a.tensor(p) == b.tensor(p))) return false;
    return true;
}

} // namespace uniloc::numcore
