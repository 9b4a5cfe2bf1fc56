#include "doctest.h"

#include "../support/helpers.hpp"
#include "uniloc/errors.hpp"
#include "uniloc/loss/contrastive.hpp"
#include "uniloc/numcore/gradcheck.hpp"

#include <cmath>

using namespace uniloc;
using namespace uniloc::loss;

TEST_CASE("single pair loss is zero") {
    BatchPair p{testing::random_unit_rows(1, 5, 1), testing::random_unit_rows(1, 5, 2), 0.1};
    CHECK(info_nce_symmetric(0, p) == 0.0);
    CHECK(batch_contrastive(p) == 0.0);
}

TEST_CASE("orthonormal 2x2 case") {
    const Matrix eye{{1, 0}, {0, 1}};
    const BatchPair p{eye, eye, 1.0};
    // Hand oracle: each direction is -log(e / (e + 1)) = log(1 + e^-1).
    const double want = 2.0 * std::log(1.0 + std::exp(-1.0));
    CHECK(std::abs(info_nce_symmetric(0, p) - want) < 1e-10);
    CHECK(std::abs(info_nce_symmetric(1, p) - want) < 1e-10);
    CHECK(std::abs(batch_contrastive(p) - want) < 1e-10);
    CHECK(std::abs(want - 0.62652) < 1e-5);
}

TEST_CASE("matches row oracle and is swap symmetric") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const BatchPair p{testing::random_unit_rows(6, 4, seed), testing::random_unit_rows(6, 4, seed + 100), 0.1};
        const BatchPair q{p.b, p.a, p.tau};
        const auto A = testing::to_mat(p.a), B = testing::to_mat(p.b);
        double mean = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            const double want = oracle::info_nce_row(A, B, i, p.tau);
            CHECK(std::abs(info_nce_symmetric(i, p) - want) < 1e-10);
            CHECK(std::abs(info_nce_symmetric(i, p) - info_nce_symmetric(i, q)) < 1e-12);
            mean += want / 6.0;
        }
        CHECK(std::abs(batch_contrastive(p) - mean) < 1e-10);

        // Graph op agrees with the direct evaluation.
        numcore::ParamStore none;
        Graph g(none);
        const double viaGraph = g.value(batch_contrastive(g, g.constant(p.a), g.constant(p.b), p.tau))(0, 0);
        CHECK(std::abs(viaGraph - batch_contrastive(p)) < 1e-12);
    }
}

TEST_CASE("duplicate rows are in-batch false negatives") {
    const Matrix a{{1, 0}, {1, 0}};
    const BatchPair p{a, a, 0.1};
    // Every logit equals 10, so each direction is log 2.
    const double want = 2.0 * std::log(2.0);
    CHECK(batch_contrastive(p) > 0.0);
    CHECK(std::abs(batch_contrastive(p) - want) < 1e-12);
    CHECK(std::abs(batch_contrastive(p) - oracle::info_nce_row(testing::to_mat(a), testing::to_mat(a), 0, 0.1)) < 1e-12);
}

TEST_CASE("joint row permutation leaves the loss unchanged") {
    const Matrix a = testing::random_unit_rows(5, 3, 7), b = testing::random_unit_rows(5, 3, 8);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    Matrix pa(5, 3), pb(5, 3);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            pa(r, c) = a(perm[r], c);
            pb(r, c) = b(perm[r], c);
        }
    CHECK(std::abs(batch_contrastive({a, b, 0.1}) - batch_contrastive({pa, pb, 0.1})) < 1e-12);
}

TEST_CASE("raising diagonal similarity lowers the loss") {
    // Rows in 3D: positives move toward each other while off-diagonal dot products stay at 0.
    auto pair = [](double angle) {
        Matrix a{{1, 0, 0}, {0, 1, 0}};
        Matrix b{{std::cos(angle), 0, std::sin(angle)}, {0, std::cos(angle), 0}};
        b(1, 2) = -std::sin(angle);
        return BatchPair{a, b, 0.5};
    };
    // Off-diagonals: a0.b1 = 0, a1.b0 = 0 for every angle.
    CHECK(batch_contrastive(pair(0.2)) < batch_contrastive(pair(0.6)));
    CHECK(batch_contrastive(pair(0.6)) < batch_contrastive(pair(1.2)));
}

TEST_CASE("errors") {
    const Matrix a = testing::random_unit_rows(2, 3, 1);
    CHECK_THROWS_AS(batch_contrastive({a, a, 0.0}), Error);
    CHECK_THROWS_AS(batch_contrastive({a, a, -1.0}), Error);
    CHECK_THROWS_AS(batch_contrastive({Matrix(0, 3), Matrix(0, 3), 0.1}), Error);
    CHECK_THROWS_AS(batch_contrastive({a, testing::random_unit_rows(3, 3, 2), 0.1}), Error);
    CHECK_THROWS_AS(info_nce_symmetric(2, {a, a, 0.1}), Error);
    try {
        batch_contrastive({a, a, 0.0});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}

TEST_CASE("combined scene loss") {
    CHECK(combined_scene_loss(1.0, 2.0, 0.3) == doctest::Approx(1.7).epsilon(1e-15));
    CHECK(combined_scene_loss(1.25, 7.0, 1.0) == 1.25);
    CHECK(combined_scene_loss(1.25, 7.0, 0.0) == 7.0);
    CHECK_THROWS_AS(combined_scene_loss(1, 1, 1.5), Error);
    CHECK_THROWS_AS(combined_scene_loss(1, 1, -0.1), Error);
}

TEST_CASE("loss gradient matches finite differences") {
    numcore::ParamStore s;
    s.add("a", testing::random_matrix(4, 3, 1));
    s.add("b", testing::random_matrix(4, 3, 2));
    s.add("c", testing::random_matrix(4, 3, 3));
    auto build = [](Graph& g) {
        const Var a = l2_normalize_rows(g, g.param("a"));
        const Var b = l2_normalize_rows(g, g.param("b"));
        const Var c = l2_normalize_rows(g, g.param("c"));
        return combined_scene_loss(g, batch_contrastive(g, a, b, 0.1), batch_contrastive(g, a, c, 0.1), 0.3);
    };
    CHECK(numcore::grad_check(build, s, 1).worst() < 1e-4);
}
