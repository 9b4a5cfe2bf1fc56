#include "doctest.h"

#include "../support/helpers.hpp"
#include "uniloc/errors.hpp"
#include "uniloc/instance/encoders.hpp"
#include "uniloc/numcore/gradcheck.hpp"
#include "uniloc/scenegen/hints.hpp"
#include "uniloc/scenegen/world.hpp"

#include <cmath>
#include <limits>

using namespace uniloc;
using namespace uniloc::instance;
using numcore::Rng;

namespace {

constexpr std::size_t kStub = 16;
constexpr std::size_t kDim = 8;

ParamStore all_branches(std::uint64_t seed, std::size_t stub = kStub, std::size_t dim = kDim) {
    ParamStore s;
    init_text_branch(s, stub, dim, seed);
    init_image_branch(s, stub, dim, seed);
    init_point_branch(s, dim, seed);
    return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(oracle::dotv(v, v)); }
double cosine(const std::vector<double>& a, const std::vector<double>& b) { return oracle::dotv(a, b) / (norm(a) * norm(b)); }

ImageInstanceInput random_image(Rng& rng, std::size_t stub = kStub) {
    ImageInstanceInput in;
    for (std::size_t i = 0; i < stub; ++i) in.stubSemantic.push_back(rng.normal());
    in.meanRGB = {rng.uniform(), rng.uniform(), rng.uniform()};
    in.normalizedPixelCount = rng.uniform();
    in.meanUV = {rng.uniform(), rng.uniform()};
    return in;
}

PointInstanceInput random_points(Rng& rng, std::size_t n) {
    PointInstanceInput in;
    for (std::size_t i = 0; i < n; ++i) in.points.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 5)});
    in.meanRGB = {rng.uniform(), rng.uniform(), rng.uniform()};
    in.normalizedPointCount = static_cast<double>(n) / kCountScale;
    in.meanUV = {rng.uniform(), rng.uniform()};
    return in;
}

oracle::Vec mlp3_oracle(const ParamStore& s, const std::string& p, const oracle::Vec& x) {
    auto W = [&](int i) { return testing::to_mat(s.tensor(p + "/" + std::to_string(i) + "/W")); };
    auto b = [&](int i) { return testing::to_mat(s.tensor(p + "/" + std::to_string(i) + "/b"))[0]; };
    return oracle::mlp3(x, W(0), b(0), W(1), b(1), W(2), b(2));
}

} // namespace

TEST_CASE("text branch") {
    const auto s = all_branches(9);
    const TextInstanceInput a{"the red pole is at the top left"};
    const TextInstanceInput b{"the gray building is at the bottom right"};
    const auto fa = encode_text_instance(a, s);
    CHECK(fa.size() == kDim);
    CHECK(std::abs(norm(fa) - 1.0) < 1e-9);
    CHECK(fa == encode_text_instance(a, s));
    CHECK(cosine(fa, encode_text_instance(b, s)) < 1.0);
    CHECK_THROWS_AS(encode_text_instance({"   "}, s), Error);

    // Oracle: stub -> mlp -> normalize.
    const auto stub = scenegen::stub_embed(scenegen::tokenize(a.hint), scenegen::EmbedSpace::textSpace, kStub);
    const auto want = oracle::normalized(mlp3_oracle(s, "text/mlp", stub));
    for (std::size_t i = 0; i < kDim; ++i) CHECK(std::abs(fa[i] - want[i]) < 1e-12);

    // Without UV the position phrase is ignored.
    const EncoderOptions noUv{false};
    CHECK(encode_text_instance(a, s, noUv) == encode_text_instance({"the red pole"}, s));
}

TEST_CASE("image branch") {
    const auto s = all_branches(9);
    Rng rng(4);
    const auto in = random_image(rng);
    const auto f = encode_image_instance(in, s);
    CHECK(f.size() == kDim);
    CHECK(std::abs(norm(f) - 1.0) < 1e-9);
    CHECK(f == encode_image_instance(in, s));

    auto moved = in;
    moved.meanUV = {1.0 - in.meanUV[0], 1.0 - in.meanUV[1]};
    CHECK(cosine(f, encode_image_instance(moved, s)) < 1.0 - 1e-6);
    // With UV disabled, moving the UV has no effect.
    const EncoderOptions noUv{false};
    CHECK(encode_image_instance(in, s, noUv) == encode_image_instance(moved, s, noUv));

    // Oracle: four sub-embeddings, concatenated, fused.
    oracle::Vec cat = mlp3_oracle(s, "image/sem", in.stubSemantic);
    for (const auto& part : {mlp3_oracle(s, "image/color", {in.meanRGB.begin(), in.meanRGB.end()}),
                             mlp3_oracle(s, "image/num", {in.normalizedPixelCount}),
                             mlp3_oracle(s, "image/uv", {in.meanUV.begin(), in.meanUV.end()})})
        cat.insert(cat.end(), part.begin(), part.end());
    const auto want = oracle::normalized(mlp3_oracle(s, "image/fuse", cat));
    for (std::size_t i = 0; i < kDim; ++i) CHECK(std::abs(f[i] - want[i]) < 1e-12);

    auto bad = in;
    bad.meanRGB[1] = std::numeric_limits<double>::quiet_NaN();
    try {
        encode_image_instance(bad, s);
        FAIL("expected numeric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
    }
    bad = in;
    bad.stubSemantic.pop_back();
    CHECK_THROWS_AS(encode_image_instance(bad, s), Error);
}

TEST_CASE("point semantic encoder") {
    const auto s = all_branches(9);
    Rng rng(6);
    const auto in = random_points(rng, 40);
    const auto base = point_semantic_encode(in.points, s);
    CHECK(base.size() == kDim);

    auto shuffled = in.points;
    rng.shuffle(shuffled);
    CHECK(point_semantic_encode(shuffled, s) == base);

    auto doubled = in.points;
    doubled.insert(doubled.end(), in.points.begin(), in.points.end());
    const auto dup = point_semantic_encode(doubled, s);
    for (std::size_t i = 0; i < kDim; ++i) CHECK(std::abs(dup[i] - base[i]) < 1e-12);

    // A single point is centred to the origin.
    const auto single = point_semantic_encode({{4, -2, 7}}, s);
    const auto want = mlp3_oracle(s, "point/pointnet", {0, 0, 0});
    for (std::size_t i = 0; i < kDim; ++i) CHECK(std::abs(single[i] - want[i]) < 1e-12);

    CHECK_THROWS_AS(point_semantic_encode({}, s), Error);
}

TEST_CASE("point branch") {
    const auto s = all_branches(9);
    Rng rng(8);
    const auto in = random_points(rng, 30);
    const auto f = encode_point_instance(in, s);
    CHECK(f.size() == kDim);
    CHECK(std::abs(norm(f) - 1.0) < 1e-9);

    auto perm = in;
    rng.shuffle(perm.points);
    const auto fp = encode_point_instance(perm, s);
    for (std::size_t i = 0; i < kDim; ++i) CHECK(std::abs(fp[i] - f[i]) < 1e-12);

    auto dup = in;
    dup.points.insert(dup.points.end(), in.points.begin(), in.points.end());
    const auto fd = encode_point_instance(dup, s);
    for (std::size_t i = 0; i < kDim; ++i) CHECK(std::abs(fd[i] - f[i]) < 1e-12);

    auto zeroUv = in;
    zeroUv.meanUV = {0, 0};
    CHECK(cosine(f, encode_point_instance(zeroUv, s)) < 1.0 - 1e-9);
}

TEST_CASE("batched encoders match single encoders") {
    const auto s = all_branches(3);
    Rng rng(10);
    std::vector<ImageInstanceInput> imgs;
    std::vector<PointInstanceInput> pts;
    std::vector<TextInstanceInput> txt{{"the red pole is at the top left"}, {"the blue fence is at the top right"},
                                       {"the green tree is at the bottom center"}};
    for (int i = 0; i < 3; ++i) {
        imgs.push_back(random_image(rng));
        pts.push_back(random_points(rng, 5 + 7 * static_cast<std::size_t>(i)));
    }
    Graph g(s);
    const Matrix T = g.value(encode_text_batch(g, txt));
    const Matrix I = g.value(encode_image_batch(g, imgs));
    const Matrix P = g.value(encode_point_batch(g, pts));
    for (std::size_t r = 0; r < 3; ++r) {
        const auto t = encode_text_instance(txt[r], s);
        const auto im = encode_image_instance(imgs[r], s);
        const auto p = encode_point_instance(pts[r], s);
        for (std::size_t c = 0; c < kDim; ++c) {
            CHECK(T(r, c) == doctest::Approx(t[c]).epsilon(1e-12));
            CHECK(I(r, c) == doctest::Approx(im[c]).epsilon(1e-12));
            CHECK(P(r, c) == doctest::Approx(p[c]).epsilon(1e-12));
        }
    }
}

TEST_CASE("inputs from generated records") {
    scenegen::WorldConfig cfg;
    cfg.numScenes = 2;
    cfg.stubDim = kStub;
    const auto scenes = scenegen::generate_world(cfg);
    const auto& rec = scenes[0].instances[0];
    const auto img = make_image_input(rec);
    CHECK(img.stubSemantic == rec.stubImageVec);
    CHECK(img.normalizedPixelCount <= 1.0);
    const auto pt = make_point_input(rec, scenes[0].location);
    CHECK(pt.points.size() == rec.instance3d.points.size());
    CHECK(pt.points[0].x == doctest::Approx(rec.instance3d.points[0].x - scenes[0].location[0]));
    CHECK(make_text_input(rec).hint == rec.hint);
    CHECK(make_text_input(rec, {false}).hint.find(" is at ") == std::string::npos);
    const auto s = all_branches(1);
    CHECK(encode_image_instance(img, s).size() == kDim);
}

TEST_CASE("branch gradients match finite differences") {
    auto s = all_branches(5, 6, 4);
    Rng rng(12);
    std::vector<ImageInstanceInput> imgs{random_image(rng, 6), random_image(rng, 6)};
    std::vector<PointInstanceInput> pts{random_points(rng, 6), random_points(rng, 9)};
    std::vector<TextInstanceInput> txt{{"the red pole"}, {"the blue fence is at the top right"}};
    const Matrix target = testing::random_matrix(2, 4, 13);
    auto build = [&](Graph& g) {
        const Var t = encode_text_batch(g, txt);
        const Var i = encode_image_batch(g, imgs);
        const Var p = encode_point_batch(g, pts);
        const Var c = g.constant(target);
        return add(g, add(g, sum_all(g, hadamard(g, t, c)), sum_all(g, hadamard(g, i, i))),
                   sum_squares(g, add(g, p, c)));
    };
    const auto report = numcore::grad_check(build, s, 3);
    CHECK(report.worst() < 1e-4);
    CHECK(report.worstByPath.size() == s.paths().size());
}
