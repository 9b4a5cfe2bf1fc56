#pragma once

#include "uniloc/numcore/graph.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace uniloc::scene {

using numcore::Graph;
using numcore::Matrix;
using numcore::ParamStore;
using numcore::Var;

enum class Modality : std::uint8_t { text, image, point };
inline constexpr std::array<Modality, 3> kAllModalities{Modality::text, Modality::image, Modality::point};
std::string_view modality_key(Modality m) noexcept;
Modality modality_from_key(std::string_view key);

enum class PoolMode : std::uint8_t { sap, max };

inline constexpr std::size_t kMaxInstances = 12;

struct SapConfig {
    std::size_t heads = 4;
    std::array<std::size_t, 3> depth{1, 2, 2}; // text, image, point
    std::size_t ffnHidden = 0;                 // 0 means 2 * D
    PoolMode pool = PoolMode::sap;

    std::size_t depth_for(Modality m) const { return depth[static_cast<std::size_t>(m)]; }
};

// Padded instance descriptors of one scene.
struct SceneInstanceSet {
    Matrix F;               // kMaxInstances x D, masked rows zero
    std::vector<bool> mask; // kMaxInstances entries
    Modality modality = Modality::text;
};

// Builds a padded set from 1..12 descriptor rows (slots 0..n-1 unmasked).
SceneInstanceSet make_instance_set(const Matrix& rows, Modality modality);

// "sap/<m>/attn<l>" blocks and the "sap/<m>/pool" scoring MLP (D -> D -> D -> 1).
void init_sap(ParamStore& store, Modality m, std::size_t dim, const SapConfig& cfg, std::uint64_t seed);

// Graph versions over B scenes stacked as B*12 rows with a B*12 mask.
Var sap_attention(Graph& g, Var f, const std::vector<bool>& mask, Modality m, const SapConfig& cfg);
Var sap_weights(Graph& g, Var t, const std::vector<bool>& mask, Modality m);
// Weighted sum per scene followed by row normalization; B x D.
Var sap_pool(Graph& g, Var t, Var w);
// Full pipeline. counts[b] instance rows of `instances` belong to scene b, in order.
Var scene_descriptors(Graph& g, Var instances, const std::vector<std::size_t>& counts, Modality m,
                      const SapConfig& cfg);

// Single-scene conveniences.
Matrix sap_attention(const SceneInstanceSet& set, const ParamStore& store, const SapConfig& cfg);
std::vector<double> sap_weights(const Matrix& t, const std::vector<bool>& mask, const ParamStore& store,
                                Modality m);
std::vector<double> sap_pool(const Matrix& t, const std::vector<double>& w);
std::vector<double> scene_descriptor(const SceneInstanceSet& set, const ParamStore& store, const SapConfig& cfg);

} // namespace uniloc::scene
