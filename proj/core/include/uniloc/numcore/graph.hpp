#pragma once

#include "uniloc/numcore/matrix.hpp"
#include "uniloc/numcore/param_store.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uniloc::numcore {

struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const noexcept { return id != std::numeric_limits<std::size_t>::max(); }
};

// Tape of recorded operations over one forward pass. Parameters are read from a
// const ParamStore, so several graphs may evaluate one frozen store concurrently.
// backward() writes parameter gradients into a caller-supplied store.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, const Matrix& outGrad)>;

    explicit Graph(const ParamStore& store) : store_(&store) {}

    const ParamStore& store() const noexcept { return *store_; }

    // Leaf bound to a store entry; repeated calls with the same path return the same node.
    Var param(std::string_view path);
    // Leaf without gradient (frozen inputs such as stub embeddings).
    Var constant(Matrix value);

    const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requiresGrad; }
    // True once backward() has produced a gradient buffer for v.
    bool has_grad(Var v) const { return !nodes_.at(v.id).grad.empty(); }
    const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Reverse pass from a 1x1 root. Parameter gradients are added into target.
    void backward(Var root, ParamStore& target);

    // Op-author interface.
    Var record(Matrix value, std::span<const Var> parents, BackwardFn fn);
    void accumulate(Var v, const Matrix& g);
    Matrix& grad_buffer(Var v);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        BackwardFn backward;
        bool requiresGrad = false;
        std::string paramPath;
    };

    const ParamStore* store_;
    std::vector<Node> nodes_;
    std::map<std::string, std::size_t, std::less<>> paramNodes_;
};

// Differentiable operations. Shapes are checked and reported as ErrorKind::dimension.
Var matmul(Graph& g, Var a, Var b);
Var add_bias(Graph& g, Var x, Var bias);
Var add(Graph& g, Var a, Var b);
Var scale(Graph& g, Var x, double factor);
Var hadamard(Graph& g, Var a, Var b);
Var relu(Graph& g, Var x);
Var sum_all(Graph& g, Var x);
Var sum_squares(Graph& g, Var x);
Var concat_cols(Graph& g, std::span<const Var> parts);
// Row-wise L2 normalization; a zero row raises ErrorKind::degenerateScene.
Var l2_normalize_rows(Graph& g, Var x);
// Output row i is the coordinate-wise max over rows groups[i] of x.
Var group_max(Graph& g, Var x, std::vector<std::vector<std::size_t>> groups);
// Output has totalRows rows; row slots[r] receives input row r, other rows are zero.
Var scatter_rows(Graph& g, Var x, std::vector<std::size_t> slots, std::size_t totalRows);
// Zeroes rows whose mask entry is false.
Var mask_rows(Graph& g, Var x, std::vector<bool> mask);
// Scaled dot-product attention over consecutive blocks of groupSize rows. Masked
// rows are excluded as keys and produce zero output rows. q, k, v are already projected.
Var multihead_attention(Graph& g, Var q, Var k, Var v, const std::vector<bool>& mask,
                        std::size_t groupSize, std::size_t heads);
// scores is n x 1; softmax within each block of groupSize rows over unmasked entries.
Var masked_group_softmax(Graph& g, Var scores, const std::vector<bool>& mask, std::size_t groupSize);
// Output row b = sum_i weights[b*groupSize+i] * x[b*groupSize+i].
Var group_weighted_sum(Graph& g, Var x, Var weights, std::size_t groupSize);
// Mean over rows of the two-directional InfoNCE term with positives on the diagonal.
Var symmetric_info_nce(Graph& g, Var a, Var b, double temperature);

} // namespace uniloc::numcore
