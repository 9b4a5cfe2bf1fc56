#include "uniloc/numcore/nn.hpp"

#include "uniloc/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace uniloc::numcore {

namespace {

std::string join(std::string_view prefix, std::string_view leaf) {
    std::string s(prefix);
    s += '/';
    s += leaf;
    return s;
}

} // namespace

void add_mlp3(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
              std::size_t out, std::uint64_t seed) {
    store.add_linear(prefix + "/0", in, hidden, seed);
    store.add_linear(prefix + "/1", hidden, hidden, seed);
    store.add_linear(prefix + "/2", hidden, out, seed);
}

void add_mhsa_block(ParamStore& store, const std::string& prefix, std::size_t dim,
                    std::size_t ffnHidden, std::uint64_t seed) {
    for (const char* p : {"/q", "/k", "/v", "/o"}) store.add_linear(prefix + p, dim, dim, seed);
    store.add_linear(prefix + "/ffn/0", dim, ffnHidden, seed);
    store.add_linear(prefix + "/ffn/1", ffnHidden, dim, seed);
}

Var linear_forward(Graph& g, Var x, std::string_view prefix) {
    const Var w = g.param(join(prefix, "W"));
    const Var b = g.param(join(prefix, "b"));
    if (g.value(x).cols() != g.value(w).rows())
        raise(ErrorKind::dimension, std::string(prefix) + ": input width " +
                                        std::to_string(g.value(x).cols()) + " != " +
                                        std::to_string(g.value(w).rows()));
    return add_bias(g, matmul(g, x, w), b);
}

Var mlp3_forward(Graph& g, Var x, std::string_view prefix) {
    Var h = relu(g, linear_forward(g, x, join(prefix, "0")));
    h = relu(g, linear_forward(g, h, join(prefix, "1")));
    return linear_forward(g, h, join(prefix, "2"));
}

Var mhsa_block_forward(Graph& g, Var x, const std::vector<bool>& mask, std::string_view prefix,
                       std::size_t heads, std::size_t groupSize) {
    const std::size_t dim = g.value(x).cols();
    if (heads == 0 || dim % heads != 0)
        raise(ErrorKind::config, "embedding dim " + std::to_string(dim) + " not divisible by " +
                                     std::to_string(heads) + " heads");
    const Var q = linear_forward(g, x, join(prefix, "q"));
    const Var k = linear_forward(g, x, join(prefix, "k"));
    const Var v = linear_forward(g, x, join(prefix, "v"));
    const Var attended = multihead_attention(g, q, k, v, mask, groupSize, heads);
    const Var h = add(g, x, linear_forward(g, attended, join(prefix, "o")));
    Var ffn = relu(g, linear_forward(g, h, join(prefix, "ffn/0")));
    ffn = linear_forward(g, ffn, join(prefix, "ffn/1"));
    return mask_rows(g, add(g, h, ffn), mask);
}

Matrix linear_forward(const Matrix& x, std::string_view prefix, const ParamStore& store) {
    Graph g(store);
    return g.value(linear_forward(g, g.constant(x), prefix));
}

Matrix mlp3_forward(const Matrix& x, std::string_view prefix, const ParamStore& store) {
    Graph g(store);
    return g.value(mlp3_forward(g, g.constant(x), prefix));
}

Matrix mhsa_block_forward(const Matrix& x, const std::vector<bool>& mask, std::string_view prefix,
                          const ParamStore& store, std::size_t heads) {
    Graph g(store);
    return g.value(mhsa_block_forward(g, g.constant(x), mask, prefix, heads, x.rows()));
}

std::vector<double> softmax(std::span<const double> logits, const std::vector<bool>& mask) {
    if (mask.size() != logits.size()) raise(ErrorKind::dimension, "softmax mask length mismatch");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i]) mx = std::max(mx, logits[i]);
    if (mx == -std::numeric_limits<double>::infinity())
        raise(ErrorKind::emptyScene, "softmax with every entry masked");
    std::vector<double> out(logits.size(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i]) z += (out[i] = std::exp(logits[i] - mx));
    for (double& v : out) v /= z;
    return out;
}

} // namespace uniloc::numcore
