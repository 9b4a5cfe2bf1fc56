#pragma once

// Straight-line reference implementations used only by tests. They operate on
// nested std::vector and share no code with the library's kernels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.size(), Vec(b.empty() ? 0 : b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < c[i].size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

inline Vec vec_mat(const Vec& x, const Mat& w, const Vec& b) {
    Vec y(b);
    for (std::size_t j = 0; j < y.size(); ++j)
        for (std::size_t k = 0; k < x.size(); ++k) y[j] += x[k] * w[k][j];
    return y;
}

inline Vec relu(Vec v) {
    for (double& x : v) x = std::max(0.0, x);
    return v;
}

inline double dotv(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec normalized(Vec v) {
    const double n = std::sqrt(dotv(v, v));
    for (double& x : v) x /= n;
    return v;
}

inline Vec add(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec softmax(const Vec& z) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : z) mx = std::max(mx, v);
    Vec e(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (e[i] = std::exp(z[i] - mx));
    for (double& v : e) v /= s;
    return e;
}

// Symmetric InfoNCE for row i written directly from the two log-ratio terms.
inline double info_nce_row(const Mat& a, const Mat& b, std::size_t i, double tau) {
    const std::size_t n = a.size();
    double denomAB = 0.0, denomBA = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        denomAB += std::exp(dotv(a[i], b[j]) / tau);
        denomBA += std::exp(dotv(b[i], a[j]) / tau);
    }
    const double pos = dotv(a[i], b[i]) / tau;
    return -(pos - std::log(denomAB)) - (pos - std::log(denomBA));
}

// Straight-line Adam step over a flat parameter vector.
struct Adam {
    Vec m, v;
    int t = 0;
    void step(Vec& w, const Vec& g, double lr) {
        if (m.empty()) {
            m.assign(w.size(), 0.0);
            v.assign(w.size(), 0.0);
        }
        ++t;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mh = m[i] / (1.0 - std::pow(0.9, t));
            const double vh = v[i] / (1.0 - std::pow(0.999, t));
            w[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
        }
    }
};

// Sorts every db row by (score desc, id asc) and returns the ranked ids.
inline std::vector<std::size_t> rank_all(const Mat& db, const std::vector<std::size_t>& ids,
                                         const Vec& q) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t r = 0; r < db.size(); ++r) scored.emplace_back(dotv(db[r], q), ids[r]);
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    std::vector<std::size_t> out;
    for (const auto& s : scored) out.push_back(s.second);
    return out;
}

} // namespace oracle

namespace oracle {

// Region table: index = 3 * (v >= 0.5) + (u >= 0.4) + (u >= 0.6).
inline std::string region(double u, double v) {
    static const char* table[6] = {"top left", "top center", "top right",
                                   "bottom left", "bottom center", "bottom right"};
    const int idx = 3 * (v >= 0.5 ? 1 : 0) + (u >= 0.4 ? 1 : 0) + (u >= 0.6 ? 1 : 0);
    return table[idx];
}

// Camera-frame projection with an explicit 3x4 multiply.
inline std::optional<std::pair<double, double>> project(const std::array<double, 16>& pose, double fx, double fy,
                                                        double cx, double cy, double x, double y, double z) {
    double c[3];
    for (int r = 0; r < 3; ++r) c[r] = pose[4 * r] * x + pose[4 * r + 1] * y + pose[4 * r + 2] * z + pose[4 * r + 3];
    if (c[2] <= 0) return std::nullopt;
    return std::make_pair(fx * c[0] / c[2] + cx, fy * c[1] / c[2] + cy);
}

} // namespace oracle

namespace oracle {

// Three linear layers with ReLU between, weights given as (W, b) pairs.
inline Vec mlp3(const Vec& x, const Mat& w0, const Vec& b0, const Mat& w1, const Vec& b1, const Mat& w2,
                const Vec& b2) {
    return vec_mat(relu(vec_mat(relu(vec_mat(x, w0, b0)), w1, b1)), w2, b2);
}

} // namespace oracle

namespace oracle {

// Brute-force Recall@k: rank every database row, optionally without the query's own id,
// and look for a correct id among the first k.
inline double recall(const Mat& db, const std::vector<std::size_t>& ids, const std::vector<std::array<double, 2>>& locs,
                     const Mat& queries, const std::vector<std::size_t>& qids,
                     const std::vector<std::array<double, 2>>& qlocs, std::size_t k, bool exact, double d,
                     bool excludeSelf) {
    std::size_t hit = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        Mat sub;
        std::vector<std::size_t> subIds;
        for (std::size_t r = 0; r < db.size(); ++r) {
            if (excludeSelf && ids[r] == qids[q]) continue;
            sub.push_back(db[r]);
            subIds.push_back(ids[r]);
        }
        const auto ranked = rank_all(sub, subIds, queries[q]);
        bool ok = false;
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
            const std::size_t id = ranked[i];
            if (exact) {
                ok = ok || id == qids[q];
            } else {
                std::size_t r = 0;
                while (ids[r] != id) ++r;
                const double dx = locs[r][0] - qlocs[q][0], dy = locs[r][1] - qlocs[q][1];
                ok = ok || std::sqrt(dx * dx + dy * dy) <= d;
            }
        }
        hit += ok ? 1 : 0;
    }
    return queries.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(queries.size());
}

} // namespace oracle
