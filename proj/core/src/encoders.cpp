#include "uniloc/instance/encoders.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/nn.hpp"
#include "uniloc/scenegen/hints.hpp"

#include <algorithm>
#include <cmath>

namespace uniloc::instance {

namespace {

using numcore::add_mlp3;
using numcore::mlp3_forward;

Matrix rows_of(std::size_t n, std::size_t cols, const auto& fill) {
    Matrix m(n, cols);
    for (std::size_t r = 0; r < n; ++r) fill(r, m.row_span(r));
    return m;
}

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values)
        if (!std::isfinite(v)) raise(ErrorKind::numeric, std::string("non-finite value in ") + what);
}

// Summing sorted values keeps the centroid bit-identical under any point order.
double order_free_mean(const std::vector<scenegen::Vec3>& pts, double scenegen::Vec3::*axis) {
    std::vector<double> v;
    v.reserve(pts.size());
    for (const auto& p : pts) v.push_back(p.*axis);
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double clip_count(double n) { return std::min(1.0, n / kCountScale); }

Var zero_embedding(Graph& g, std::size_t n, std::string_view prefix) {
    const std::size_t width = g.store().tensor(std::string(prefix) + "/2/W").cols();
    return g.constant(Matrix(n, width));
}

} // namespace

void init_text_branch(ParamStore& store, std::size_t stubDim, std::size_t dim, std::uint64_t seed) {
    add_mlp3(store, "text/mlp", stubDim, dim, dim, seed);
}

void init_image_branch(ParamStore& store, std::size_t stubDim, std::size_t dim, std::uint64_t seed) {
    add_mlp3(store, "image/sem", stubDim, dim, dim, seed);
    add_mlp3(store, "image/color", 3, dim, dim, seed);
    add_mlp3(store, "image/num", 1, dim, dim, seed);
    add_mlp3(store, "image/uv", 2, dim, dim, seed);
    add_mlp3(store, "image/fuse", 4 * dim, dim, dim, seed);
}

void init_point_branch(ParamStore& store, std::size_t dim, std::uint64_t seed) {
    add_mlp3(store, "point/pointnet", 3, dim, dim, seed);
    add_mlp3(store, "point/color", 3, dim, dim, seed);
    add_mlp3(store, "point/num", 1, dim, dim, seed);
    add_mlp3(store, "point/uv", 2, dim, dim, seed);
    add_mlp3(store, "point/proj", 4 * dim, dim, dim, seed);
}

std::size_t text_stub_dim(const ParamStore& store) { return store.tensor("text/mlp/0/W").rows(); }

std::size_t branch_dim(const ParamStore& store, std::string_view branch) {
    if (branch == "text") return store.tensor("text/mlp/2/W").cols();
    if (branch == "image") return store.tensor("image/fuse/2/W").cols();
    if (branch == "point") return store.tensor("point/proj/2/W").cols();
    raise(ErrorKind::lookup, "unknown branch '" + std::string(branch) + "'");
}

TextInstanceInput make_text_input(const scenegen::InstanceRecord& rec, const EncoderOptions& opts) {
    return {opts.useUv ? rec.hint : scenegen::strip_position(rec.hint)};
}

ImageInstanceInput make_image_input(const scenegen::InstanceRecord& rec) {
    return {rec.stubImageVec, rec.instance3d.colorRGB, clip_count(static_cast<double>(rec.pixelCount)), rec.meanUV};
}

PointInstanceInput make_point_input(const scenegen::InstanceRecord& rec, const std::array<double, 2>& origin) {
    PointInstanceInput in;
    in.points.reserve(rec.instance3d.points.size());
    for (const auto& p : rec.instance3d.points) in.points.push_back({p.x - origin[0], p.y - origin[1], p.z});
    in.meanRGB = rec.instance3d.colorRGB;
    in.normalizedPointCount = clip_count(static_cast<double>(rec.instance3d.points.size()));
    in.meanUV = rec.meanUV;
    return in;
}

Var encode_text_batch(Graph& g, std::span<const TextInstanceInput> in, const EncoderOptions& opts) {
    if (in.empty()) raise(ErrorKind::contract, "text batch is empty");
    const std::size_t stubDim = text_stub_dim(g.store());
    Matrix stubs(in.size(), stubDim);
    for (std::size_t r = 0; r < in.size(); ++r) {
        const auto tokens = scenegen::tokenize(opts.useUv ? in[r].hint : scenegen::strip_position(in[r].hint));
        if (tokens.empty()) raise(ErrorKind::contract, "hint has no tokens");
        const auto v = scenegen::stub_embed(tokens, scenegen::EmbedSpace::textSpace, stubDim);
        std::copy(v.begin(), v.end(), stubs.row_span(r).begin());
    }
    return l2_normalize_rows(g, mlp3_forward(g, g.constant(std::move(stubs)), "text/mlp"));
}

Var encode_image_batch(Graph& g, std::span<const ImageInstanceInput> in, const EncoderOptions& opts) {
    if (in.empty()) raise(ErrorKind::contract, "image batch is empty");
    const std::size_t n = in.size();
    const std::size_t stubDim = g.store().tensor("image/sem/0/W").rows();
    for (const auto& x : in) {
        if (x.stubSemantic.size() != stubDim)
            raise(ErrorKind::dimension, "image stub width " + std::to_string(x.stubSemantic.size()) +
                                            " != " + std::to_string(stubDim));
        require_finite(x.stubSemantic, "image stub");
        require_finite(x.meanRGB, "image color");
        require_finite(x.meanUV, "image uv");
        require_finite(std::span<const double>(&x.normalizedPixelCount, 1), "image pixel count");
    }
    const Var sem = g.constant(rows_of(n, stubDim, [&](std::size_t r, std::span<double> row) {
        std::copy(in[r].stubSemantic.begin(), in[r].stubSemantic.end(), row.begin());
    }));
    const Var rgb = g.constant(rows_of(n, 3, [&](std::size_t r, std::span<double> row) {
        std::copy(in[r].meanRGB.begin(), in[r].meanRGB.end(), row.begin());
    }));
    const Var num = g.constant(rows_of(n, 1, [&](std::size_t r, std::span<double> row) {
        row[0] = in[r].normalizedPixelCount;
    }));
    const std::array<Var, 4> parts{
        mlp3_forward(g, sem, "image/sem"), mlp3_forward(g, rgb, "image/color"), mlp3_forward(g, num, "image/num"),
        opts.useUv ? mlp3_forward(g, g.constant(rows_of(n, 2, [&](std::size_t r, std::span<double> row) {
                         row[0] = in[r].meanUV[0];
                         row[1] = in[r].meanUV[1];
                     })),
                                  "image/uv")
                   : zero_embedding(g, n, "image/uv")};
    return l2_normalize_rows(g, mlp3_forward(g, concat_cols(g, parts), "image/fuse"));
}

Var point_semantic_batch(Graph& g, std::span<const std::vector<scenegen::Vec3>> pointSets) {
    std::size_t total = 0;
    for (const auto& s : pointSets) {
        if (s.empty()) raise(ErrorKind::contract, "point set is empty");
        total += s.size();
    }
    Matrix pts(total, 3);
    std::vector<std::vector<std::size_t>> groups(pointSets.size());
    std::size_t row = 0;
    for (std::size_t i = 0; i < pointSets.size(); ++i) {
        const double cx = order_free_mean(pointSets[i], &scenegen::Vec3::x);
        const double cy = order_free_mean(pointSets[i], &scenegen::Vec3::y);
        const double cz = order_free_mean(pointSets[i], &scenegen::Vec3::z);
        groups[i].reserve(pointSets[i].size());
        for (const auto& p : pointSets[i]) {
            pts(row, 0) = p.x - cx;
            pts(row, 1) = p.y - cy;
            pts(row, 2) = p.z - cz;
            require_finite(pts.row_span(row), "point coordinates");
            groups[i].push_back(row++);
        }
    }
    return group_max(g, mlp3_forward(g, g.constant(std::move(pts)), "point/pointnet"), std::move(groups));
}

Var encode_point_batch(Graph& g, std::span<const PointInstanceInput> in, const EncoderOptions& opts) {
    if (in.empty()) raise(ErrorKind::contract, "point batch is empty");
    const std::size_t n = in.size();
    std::vector<std::vector<scenegen::Vec3>> sets;
    sets.reserve(n);
    for (const auto& x : in) {
        require_finite(x.meanRGB, "point color");
        require_finite(x.meanUV, "point uv");
        sets.push_back(x.points);
    }
    const Var rgb = g.constant(rows_of(n, 3, [&](std::size_t r, std::span<double> row) {
        std::copy(in[r].meanRGB.begin(), in[r].meanRGB.end(), row.begin());
    }));
    const Var num = g.constant(rows_of(n, 1, [&](std::size_t r, std::span<double> row) {
        row[0] = in[r].normalizedPointCount;
    }));
    const std::array<Var, 4> parts{
        point_semantic_batch(g, sets), mlp3_forward(g, rgb, "point/color"),
        opts.useUv ? mlp3_forward(g, g.constant(rows_of(n, 2, [&](std::size_t r, std::span<double> row) {
                         row[0] = in[r].meanUV[0];
                         row[1] = in[r].meanUV[1];
                     })),
                                  "point/uv")
                   : zero_embedding(g, n, "point/uv"),
        mlp3_forward(g, num, "point/num")};
    return l2_normalize_rows(g, mlp3_forward(g, concat_cols(g, parts), "point/proj"));
}

namespace {

template <typename Input, typename Fn>
std::vector<double> encode_one(const Input& in, const ParamStore& store, Fn fn) {
    Graph g(store);
    const auto& m = g.value(fn(g, std::span<const Input>(&in, 1)));
    return {m.data().begin(), m.data().end()};
}

} // namespace

std::vector<double> encode_text_instance(const TextInstanceInput& in, const ParamStore& store,
                                         const EncoderOptions& opts) {
    return encode_one(in, store, [&](Graph& g, auto s) { return encode_text_batch(g, s, opts); });
}

std::vector<double> encode_image_instance(const ImageInstanceInput& in, const ParamStore& store,
                                          const EncoderOptions& opts) {
    return encode_one(in, store, [&](Graph& g, auto s) { return encode_image_batch(g, s, opts); });
}

std::vector<double> encode_point_instance(const PointInstanceInput& in, const ParamStore& store,
                                          const EncoderOptions& opts) {
    return encode_one(in, store, [&](Graph& g, auto s) { return encode_point_batch(g, s, opts); });
}

std::vector<double> point_semantic_encode(const std::vector<scenegen::Vec3>& points, const ParamStore& store) {
    return encode_one(points, store, [](Graph& g, auto s) { return point_semantic_batch(g, s); });
}

} // namespace uniloc::instance
