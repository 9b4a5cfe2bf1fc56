#pragma once

#include "uniloc/scenegen/types.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace uniloc::scenegen {

// "<top|bottom> <left|center|right>" from a normalized mean UV. Bands are half-open:
// u in [0,0.4) left, [0.4,0.6) center, [0.6,1] right; v < 0.5 top, otherwise bottom.
std::string region_label(double u, double v);

struct NamedColor {
    std::string_view name;
    std::array<double, 3> rgb;
};

inline constexpr std::array<NamedColor, 8> kColorAnchors{{
    {"black", {0.0, 0.0, 0.0}},
    {"white", {1.0, 1.0, 1.0}},
    {"red", {1.0, 0.0, 0.0}},
    {"green", {0.0, 0.5, 0.0}},
    {"blue", {0.0, 0.0, 1.0}},
    {"yellow", {1.0, 1.0, 0.0}},
    {"gray", {0.5, 0.5, 0.5}},
    {"brown", {0.6, 0.4, 0.2}},
}};

// Nearest anchor by Euclidean RGB distance (first anchor wins ties).
std::string_view color_name(const std::array<double, 3>& rgb);

// "the <color> <category> is at the <region>"
std::string make_hint(const InstanceRecord& rec);
std::string make_hint(const std::array<double, 3>& rgb, Category category, const std::array<double, 2>& meanUV);
// Drops the trailing " is at the <region>" phrase, if present.
std::string strip_position(std::string_view hint);

std::vector<std::string> tokenize(std::string_view text);

enum class EmbedSpace : std::uint8_t { textSpace, imageSpace };

// Frozen surrogate encoder: mean over tokens of a per-(space, token) pseudo-random unit vector.
std::vector<double> stub_embed(const std::vector<std::string>& tokens, EmbedSpace space, std::size_t dim);

// Tokens seen by the frozen image surrogate for one instance.
std::vector<std::string> image_tokens(const Instance3D& inst);

} // namespace uniloc::scenegen
