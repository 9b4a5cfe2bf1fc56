#pragma once

#include "oracles.hpp"
#include "uniloc/numcore/matrix.hpp"
#include "uniloc/numcore/rng.hpp"

#include <cstdint>

namespace testing {

inline oracle::Mat to_mat(const uniloc::numcore::Matrix& m) {
    oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

inline uniloc::numcore::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                             double lo = -1.0, double hi = 1.0) {
    uniloc::numcore::Rng rng(seed);
    uniloc::numcore::Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

inline uniloc::numcore::Matrix random_unit_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    uniloc::numcore::Rng rng(seed);
    uniloc::numcore::Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double n = 0.0;
        for (double& v : m.row_span(r)) {
            v = rng.normal();
            n += v * v;
        }
        for (double& v : m.row_span(r)) v /= std::sqrt(n);
    }
    return m;
}

} // namespace testing
