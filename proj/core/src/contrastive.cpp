#include "uniloc/loss/contrastive.hpp"

#include "uniloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace uniloc::loss {

namespace {

void check_pair(const BatchPair& pair) {
    if (!(pair.tau > 0.0)) raise(ErrorKind::config, "temperature must be positive, got " + std::to_string(pair.tau));
    if (pair.a.rows() == 0) raise(ErrorKind::contract, "contrastive batch is empty");
    if (!pair.a.same_shape(pair.b))
        raise(ErrorKind::dimension, "contrastive pair shapes differ: " + std::to_string(pair.a.rows()) + "x" +
                                        std::to_string(pair.a.cols()) + " vs " + std::to_string(pair.b.rows()) +
                                        "x" + std::to_string(pair.b.cols()));
}

double log_sum_exp(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

// Both directional terms for every row, from one logit matrix.
std::vector<double> all_terms(const BatchPair& p) {
    const std::size_t n = p.a.rows();
    const Matrix s = numcore::matmul(p.a, numcore::transpose(p.b));
    std::vector<double> out(n);
    std::vector<double> row(n), col(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = s(i, j) / p.tau;
            col[j] = s(j, i) / p.tau;
        }
        const double diag = s(i, i) / p.tau;
        out[i] = (log_sum_exp(row) - diag) + (log_sum_exp(col) - diag);
    }
    return out;
}

} // namespace

double info_nce_symmetric(std::size_t i, const BatchPair& pair) {
    check_pair(pair);
    if (i >= pair.a.rows()) raise(ErrorKind::contract, "row index out of range");
    return all_terms(pair)[i];
}

double batch_contrastive(const BatchPair& pair) {
    check_pair(pair);
    double sum = 0.0;
    for (double t : all_terms(pair)) sum += t;
    return sum / static_cast<double>(pair.a.rows());
}

double combined_scene_loss(double lossIT, double lossIP, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) raise(ErrorKind::config, "alpha must be in [0,1], got " + std::to_string(alpha));
    if (alpha == 1.0) return lossIT;
    if (alpha == 0.0) return lossIP;
    return alpha * lossIT + (1.0 - alpha) * lossIP;
}

Var batch_contrastive(Graph& g, Var a, Var b, double tau) { return symmetric_info_nce(g, a, b, tau); }

Var combined_scene_loss(Graph& g, Var lossIT, Var lossIP, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) raise(ErrorKind::config, "alpha must be in [0,1], got " + std::to_string(alpha));
    return add(g, scale(g, lossIT, alpha), scale(g, lossIP, 1.0 - alpha));
}

} // namespace uniloc::loss
