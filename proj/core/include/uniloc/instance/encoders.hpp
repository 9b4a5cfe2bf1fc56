#pragma once

#include "uniloc/numcore/graph.hpp"
#include "uniloc/scenegen/types.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace uniloc::instance {

using numcore::Graph;
using numcore::Matrix;
using numcore::ParamStore;
using numcore::Var;

struct TextInstanceInput {
    std::string hint;
};

struct ImageInstanceInput {
    std::vector<double> stubSemantic;
    std::array<double, 3> meanRGB{};
    double normalizedPixelCount = 0.0;
    std::array<double, 2> meanUV{};
};

struct PointInstanceInput {
    std::vector<scenegen::Vec3> points; // scene-local frame
    std::array<double, 3> meanRGB{};
    double normalizedPointCount = 0.0;
    std::array<double, 2> meanUV{};
};

struct EncoderOptions {
    // false: UV embeddings are replaced by zeros and position phrases are dropped from hints.
    bool useUv = true;
};

// Counts are divided by this and clipped to 1.
inline constexpr double kCountScale = 256.0;

// Parameter layout (every block is a 3-layer MLP with hidden width D):
//   text/mlp
//   image/{sem,color,num,uv} -> image/fuse
//   point/pointnet (per point) , point/{color,uv,num} -> point/proj
void init_text_branch(ParamStore& store, std::size_t stubDim, std::size_t dim, std::uint64_t seed);
void init_image_branch(ParamStore& store, std::size_t stubDim, std::size_t dim, std::uint64_t seed);
void init_point_branch(ParamStore& store, std::size_t dim, std::uint64_t seed);

// Stub width expected by the text / image branch of a store.
std::size_t text_stub_dim(const ParamStore& store);
std::size_t branch_dim(const ParamStore& store, std::string_view branch);

TextInstanceInput make_text_input(const scenegen::InstanceRecord& rec, const EncoderOptions& opts = {});
ImageInstanceInput make_image_input(const scenegen::InstanceRecord& rec);
PointInstanceInput make_point_input(const scenegen::InstanceRecord& rec, const std::array<double, 2>& origin);

// Batched encoders: one output row per input, each row unit norm.
Var encode_text_batch(Graph& g, std::span<const TextInstanceInput> in, const EncoderOptions& opts = {});
Var encode_image_batch(Graph& g, std::span<const ImageInstanceInput> in, const EncoderOptions& opts = {});
Var encode_point_batch(Graph& g, std::span<const PointInstanceInput> in, const EncoderOptions& opts = {});
// Centroid-centred per-point MLP followed by a max over each instance's points (not normalized).
Var point_semantic_batch(Graph& g, std::span<const std::vector<scenegen::Vec3>> pointSets);

std::vector<double> encode_text_instance(const TextInstanceInput& in, const ParamStore& store,
                                         const EncoderOptions& opts = {});
std::vector<double> encode_image_instance(const ImageInstanceInput& in, const ParamStore& store,
                                          const EncoderOptions& opts = {});
std::vector<double> encode_point_instance(const PointInstanceInput& in, const ParamStore& store,
                                          const EncoderOptions& opts = {});
std::vector<double> point_semantic_encode(const std::vector<scenegen::Vec3>& points, const ParamStore& store);

} // namespace uniloc::instance
