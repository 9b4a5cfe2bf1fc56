#pragma once

#include "uniloc/numcore/graph.hpp"

namespace uniloc::loss {

using numcore::Graph;
using numcore::Matrix;
using numcore::Var;

// Row i of a pairs with row i of b.
struct BatchPair {
    Matrix a;
    Matrix b;
    double tau = 0.1;
};

// -log softmax_i(row i of a.b^T / tau) - log softmax_i(row i of b.a^T / tau)
double info_nce_symmetric(std::size_t i, const BatchPair& pair);
// Mean of info_nce_symmetric over the batch.
double batch_contrastive(const BatchPair& pair);
// alpha * lossIT + (1 - alpha) * lossIP, alpha in [0, 1].
double combined_scene_loss(double lossIT, double lossIP, double alpha);

Var batch_contrastive(Graph& g, Var a, Var b, double tau);
Var combined_scene_loss(Graph& g, Var lossIT, Var lossIP, double alpha);

} // namespace uniloc::loss
