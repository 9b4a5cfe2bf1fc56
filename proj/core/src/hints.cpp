#include "uniloc/scenegen/hints.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace uniloc::scenegen {

namespace {

constexpr std::uint64_t kTextSalt = 0x7465787473616c74ULL;  // "textsalt"
constexpr std::uint64_t kImageSalt = 0x696d6773616c7421ULL; // "imgsalt!"

} // namespace

std::string region_label(double u, double v) {
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0))
        raise(ErrorKind::contract, "region_label needs u, v in [0,1], got (" + std::to_string(u) + ", " +
                                       std::to_string(v) + ")");
    const char* vBand = v < 0.5 ? "top" : "bottom";
    const char* uBand = u < 0.4 ? "left" : (u < 0.6 ? "center" : "right");
    return std::string(vBand) + " " + uBand;
}

std::string_view color_name(const std::array<double, 3>& rgb) {
    std::string_view best = kColorAnchors.front().name;
    double bestDist = std::numeric_limits<double>::infinity();
    for (const auto& anchor : kColorAnchors) {
        double d = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double diff = rgb[static_cast<std::size_t>(c)] - anchor.rgb[static_cast<std::size_t>(c)];
            d += diff * diff;
        }
        if (d < bestDist) {
            bestDist = d;
            best = anchor.name;
        }
    }
    return best;
}

std::string make_hint(const std::array<double, 3>& rgb, Category category, const std::array<double, 2>& meanUV) {
    std::string hint = "the ";
    hint += color_name(rgb);
    hint += ' ';
    hint += category_words(category);
    hint += " is at the ";
    hint += region_label(meanUV[0], meanUV[1]);
    return hint;
}

std::string make_hint(const InstanceRecord& rec) {
    return make_hint(rec.instance3d.colorRGB, rec.instance3d.category, rec.meanUV);
}

std::string strip_position(std::string_view hint) {
    const auto pos = hint.find(" is at the ");
    return std::string(pos == std::string_view::npos ? hint : hint.substr(0, pos));
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::vector<double> stub_embed(const std::vector<std::string>& tokens, EmbedSpace space, std::size_t dim) {
    if (dim == 0) raise(ErrorKind::contract, "stub_embed dimension must be positive");
    if (tokens.empty()) raise(ErrorKind::contract, "stub_embed needs at least one token");
    const std::uint64_t salt = space == EmbedSpace::textSpace ? kTextSalt : kImageSalt;
    std::vector<double> out(dim, 0.0);
    std::vector<double> v(dim);
    // Summing in sorted order makes the result independent of token order bit-for-bit.
    std::vector<std::string> sorted = tokens;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& tok : sorted) {
        numcore::Rng rng(numcore::mix_seed(salt, numcore::fnv1a64(tok)));
        double n2 = 0.0;
        for (double& x : v) {
            x = rng.normal();
            n2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (std::size_t i = 0; i < dim; ++i) out[i] += v[i] * inv;
    }
    for (double& x : out) x /= static_cast<double>(tokens.size());
    return out;
}

std::vector<std::string> image_tokens(const Instance3D& inst) {
    std::vector<std::string> tokens = tokenize(category_words(inst.category));
    tokens.emplace_back(color_name(inst.colorRGB));
    return tokens;
}

} // namespace uniloc::scenegen
