#include "uniloc/numcore/graph.hpp"

#include "uniloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uniloc::numcore {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        raise(ErrorKind::dimension, std::string(op) + ": " + shape(a) + " vs " + shape(b));
}

void add_into(Matrix& dst, const Matrix& src) {
    auto& d = dst.data();
    const auto& s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

} // namespace

// ---------------------------------------------------------------------------
// Graph

Var Graph::param(std::string_view path) {
    if (auto it = paramNodes_.find(path); it != paramNodes_.end()) return Var{it->second};
    Node node;
    node.value = store_->tensor(path);
    node.requiresGrad = true;
    node.paramPath = std::string(path);
    nodes_.push_back(std::move(node));
    const std::size_t id = nodes_.size() - 1;
    paramNodes_.emplace(std::string(path), id);
    return Var{id};
}

Var Graph::constant(Matrix value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Graph::record(Matrix value, std::span<const Var> parents, BackwardFn fn) {
    Node node;
    node.value = std::move(value);
    node.requiresGrad = std::any_of(parents.begin(), parents.end(),
                                    [&](Var p) { return nodes_.at(p.id).requiresGrad; });
    if (node.requiresGrad) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Matrix& Graph::grad_buffer(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
    return n.grad;
}

void Graph::accumulate(Var v, const Matrix& g) {
    if (!nodes_.at(v.id).requiresGrad) return;
    Matrix& buf = grad_buffer(v);
    check_same_shape(buf, g, "accumulate");
    add_into(buf, g);
}

void Graph::backward(Var root, ParamStore& target) {
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1)
        raise(ErrorKind::contract, "backward root must be 1x1, got " + shape(rv));
    for (auto& n : nodes_) n.grad = Matrix();
    if (!nodes_[root.id].requiresGrad) return;
    grad_buffer(root)(0, 0) = 1.0;

    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty()) continue;
        if (n.backward) {
            n.backward(*this, n.grad);
        } else if (!n.paramPath.empty()) {
            Matrix& tg = target.grad(n.paramPath);
            check_same_shape(tg, n.grad, "param grad");
            add_into(tg, n.grad);
        }
    }
}

// ---------------------------------------------------------------------------
// Ops

Var matmul(Graph& g, Var a, Var b) {
    Matrix out;
    gemm(g.value(a), false, g.value(b), false, out, false);
    const Var parents[] = {a, b};
    return g.record(std::move(out), parents, [a, b](Graph& gr, const Matrix& go) {
        if (gr.requires_grad(a)) {
            Matrix da;
            gemm(go, false, gr.value(b), true, da, false);
            gr.accumulate(a, da);
        }
        if (gr.requires_grad(b)) {
            Matrix db;
            gemm(gr.value(a), true, go, false, db, false);
            gr.accumulate(b, db);
        }
    });
}

Var add_bias(Graph& g, Var x, Var bias) {
    const Matrix& xv = g.value(x);
    const Matrix& bv = g.value(bias);
    if (bv.rows() != 1 || bv.cols() != xv.cols())
        raise(ErrorKind::dimension, "add_bias: " + shape(xv) + " with bias " + shape(bv));
    Matrix out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row_span(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
    }
    const Var parents[] = {x, bias};
    return g.record(std::move(out), parents, [x, bias](Graph& gr, const Matrix& go) {
        gr.accumulate(x, go);
        if (gr.requires_grad(bias)) {
            Matrix db(1, go.cols());
            for (std::size_t r = 0; r < go.rows(); ++r)
                for (std::size_t c = 0; c < go.cols(); ++c) db(0, c) += go(r, c);
            gr.accumulate(bias, db);
        }
    });
}

Var add(Graph& g, Var a, Var b) {
    check_same_shape(g.value(a), g.value(b), "add");
    Matrix out = g.value(a);
    add_into(out, g.value(b));
    const Var parents[] = {a, b};
    return g.record(std::move(out), parents, [a, b](Graph& gr, const Matrix& go) {
        gr.accumulate(a, go);
        gr.accumulate(b, go);
    });
}

Var scale(Graph& g, Var x, double factor) {
    Matrix out = g.value(x);
    for (double& v : out.data()) v *= factor;
    const Var parents[] = {x};
    return g.record(std::move(out), parents, [x, factor](Graph& gr, const Matrix& go) {
        Matrix dx = go;
        for (double& v : dx.data()) v *= factor;
        gr.accumulate(x, dx);
    });
}

Var hadamard(Graph& g, Var a, Var b) {
    check_same_shape(g.value(a), g.value(b), "hadamard");
    Matrix out = g.value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= g.value(b).data()[i];
    const Var parents[] = {a, b};
    return g.record(std::move(out), parents, [a, b](Graph& gr, const Matrix& go) {
        if (gr.requires_grad(a)) {
            Matrix da = go;
            for (std::size_t i = 0; i < da.size(); ++i) da.data()[i] *= gr.value(b).data()[i];
            gr.accumulate(a, da);
        }
        if (gr.requires_grad(b)) {
            Matrix db = go;
            for (std::size_t i = 0; i < db.size(); ++i) db.data()[i] *= gr.value(a).data()[i];
            gr.accumulate(b, db);
        }
    });
}

Var relu(Graph& g, Var x) {
    Matrix out = g.value(x);
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    const Var parents[] = {x};
    return g.record(std::move(out), parents, [x](Graph& gr, const Matrix& go) {
        Matrix dx = go;
        const auto& xv = gr.value(x).data();
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (!(xv[i] > 0.0)) dx.data()[i] = 0.0;
        gr.accumulate(x, dx);
    });
}

Var sum_all(Graph& g, Var x) {
    double s = 0.0;
    for (double v : g.value(x).data()) s += v;
    const Var parents[] = {x};
    return g.record(Matrix(1, 1, s), parents, [x](Graph& gr, const Matrix& go) {
        const Matrix& xv = gr.value(x);
        gr.accumulate(x, Matrix(xv.rows(), xv.cols(), go(0, 0)));
    });
}

Var sum_squares(Graph& g, Var x) {
    double s = 0.0;
    for (double v : g.value(x).data()) s += v * v;
    const Var parents[] = {x};
    return g.record(Matrix(1, 1, s), parents, [x](Graph& gr, const Matrix& go) {
        Matrix dx = gr.value(x);
        for (double& v : dx.data()) v *= 2.0 * go(0, 0);
        gr.accumulate(x, dx);
    });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
    if (parts.empty()) raise(ErrorKind::contract, "concat_cols of nothing");
    const std::size_t rows = g.value(parts.front()).rows();
    std::vector<std::size_t> offsets;
    std::size_t cols = 0;
    for (Var p : parts) {
        if (g.value(p).rows() != rows)
            raise(ErrorKind::dimension, "concat_cols row mismatch: " + shape(g.value(p)));
        offsets.push_back(cols);
        cols += g.value(p).cols();
    }
    Matrix out(rows, cols);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Matrix& pv = g.value(parts[k]);
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(pv.row_span(r).begin(), pv.row_span(r).end(), out.row_span(r).begin() + offsets[k]);
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return g.record(std::move(out), parts, [ps, offsets](Graph& gr, const Matrix& go) {
        for (std::size_t k = 0; k < ps.size(); ++k) {
            if (!gr.requires_grad(ps[k])) continue;
            const Matrix& pv = gr.value(ps[k]);
            Matrix d(pv.rows(), pv.cols());
            for (std::size_t r = 0; r < pv.rows(); ++r)
                for (std::size_t c = 0; c < pv.cols(); ++c) d(r, c) = go(r, offsets[k] + c);
            gr.accumulate(ps[k], d);
        }
    });
}

Var l2_normalize_rows(Graph& g, Var x) {
    const Matrix& xv = g.value(x);
    Matrix out = xv;
    std::vector<double> norms(xv.rows());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        norms[r] = l2_norm(xv.row_span(r));
        if (!(norms[r] > 0.0) || !std::isfinite(norms[r]))
            raise(ErrorKind::degenerateScene, "cannot normalize zero or non-finite row " + std::to_string(r));
        for (double& v : out.row_span(r)) v /= norms[r];
    }
    const Matrix y = out;
    const Var parents[] = {x};
    return g.record(std::move(out), parents, [x, y, norms](Graph& gr, const Matrix& go) {
        Matrix dx(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            const double proj = dot(y.row_span(r), go.row_span(r));
            for (std::size_t c = 0; c < y.cols(); ++c)
                dx(r, c) = (go(r, c) - y(r, c) * proj) / norms[r];
        }
        gr.accumulate(x, dx);
    });
}

Var group_max(Graph& g, Var x, std::vector<std::vector<std::size_t>> groups) {
    const Matrix& xv = g.value(x);
    Matrix out(groups.size(), xv.cols());
    std::vector<std::size_t> argmax(groups.size() * xv.cols());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& rows = groups[gi];
        if (rows.empty()) raise(ErrorKind::contract, "group_max over an empty group");
        for (std::size_t c = 0; c < xv.cols(); ++c) {
            std::size_t best = rows.front();
            for (std::size_t r : rows) {
                if (r >= xv.rows()) raise(ErrorKind::dimension, "group_max row index out of range");
                if (xv(r, c) > xv(best, c)) best = r;
            }
            out(gi, c) = xv(best, c);
            argmax[gi * xv.cols() + c] = best;
        }
    }
    const Var parents[] = {x};
    return g.record(std::move(out), parents, [x, argmax](Graph& gr, const Matrix& go) {
        const Matrix& xv = gr.value(x);
        Matrix dx(xv.rows(), xv.cols());
        for (std::size_t gi = 0; gi < go.rows(); ++gi)
            for (std::size_t c = 0; c < go.cols(); ++c) dx(argmax[gi * go.cols() + c], c) += go(gi, c);
        gr.accumulate(x, dx);
    });
}

Var scatter_rows(Graph& g, Var x, std::vector<std::size_t> slots, std::size_t totalRows) {
    const Matrix& xv = g.value(x);
    if (slots.size() != xv.rows()) raise(ErrorKind::dimension, "scatter_rows slot count mismatch");
    Matrix out(totalRows, xv.cols());
    for (std::size_t r = 0; r < slots.size(); ++r) {
        if (slots[r] >= totalRows) raise(ErrorKind::dimension, "scatter_rows slot out of range");
        std::copy(xv.row_span(r).begin(), xv.row_span(r).end(), out.row_span(slots[r]).begin());
    }
    const Var parents[] = {x};
    return g.record(std::move(out), parents, [x, slots](Graph& gr, const Matrix& go) {
        Matrix dx(slots.size(), go.cols());
        for (std::size_t r = 0; r < slots.size(); ++r)
            std::copy(go.row_span(slots[r]).begin(), go.row_span(slots[r]).end(), dx.row_span(r).begin());
        gr.accumulate(x, dx);
    });
}

Var mask_rows(Graph& g, Var x, std::vector<bool> mask) {
    Matrix out = g.value(x);
    if (mask.size() != out.rows()) raise(ErrorKind::dimension, "mask_rows mask length mismatch");
    for (std::size_t r = 0; r < out.rows(); ++r)
        if (!mask[r]) std::fill(out.row_span(r).begin(), out.row_span(r).end(), 0.0);
    const Var parents[] = {x};
    return g.record(std::move(out), parents, [x, mask](Graph& gr, const Matrix& go) {
        Matrix dx = go;
        for (std::size_t r = 0; r < dx.rows(); ++r)
            if (!mask[r]) std::fill(dx.row_span(r).begin(), dx.row_span(r).end(), 0.0);
        gr.accumulate(x, dx);
    });
}

Var multihead_attention(Graph& g, Var q, Var k, Var v, const std::vector<bool>& mask,
                        std::size_t groupSize, std::size_t heads) {
    const Matrix& Q = g.value(q);
    const Matrix& K = g.value(k);
    const Matrix& V = g.value(v);
    check_same_shape(Q, K, "attention q/k");
    check_same_shape(Q, V, "attention q/v");
    const std::size_t n = Q.rows();
    const std::size_t dim = Q.cols();
    if (heads == 0 || dim % heads != 0)
        raise(ErrorKind::config, "embedding dim " + std::to_string(dim) + " not divisible by " +
                                     std::to_string(heads) + " heads");
    if (groupSize == 0 || n % groupSize != 0 || mask.size() != n)
        raise(ErrorKind::dimension, "attention rows/mask/group size mismatch");
    const std::size_t groups = n / groupSize;
    const std::size_t dh = dim / heads;
    const double scaleFactor = 1.0 / std::sqrt(static_cast<double>(dh));

    for (std::size_t b = 0; b < groups; ++b) {
        bool any = false;
        for (std::size_t i = 0; i < groupSize; ++i) any = any || mask[b * groupSize + i];
        if (!any) raise(ErrorKind::emptyScene, "attention group " + std::to_string(b) + " fully masked");
    }

    // probs[(b*heads + h)*G*G + i*G + j]
    std::vector<double> probs(groups * heads * groupSize * groupSize, 0.0);
    Matrix out(n, dim);
    std::vector<double> logits(groupSize);
    for (std::size_t b = 0; b < groups; ++b) {
        const std::size_t base = b * groupSize;
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            double* P = probs.data() + (b * heads + h) * groupSize * groupSize;
            for (std::size_t i = 0; i < groupSize; ++i) {
                if (!mask[base + i]) continue;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < groupSize; ++j) {
                    if (!mask[base + j]) continue;
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) s += Q(base + i, off + c) * K(base + j, off + c);
                    logits[j] = s * scaleFactor;
                    mx = std::max(mx, logits[j]);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < groupSize; ++j) {
                    if (!mask[base + j]) continue;
                    P[i * groupSize + j] = std::exp(logits[j] - mx);
                    z += P[i * groupSize + j];
                }
                for (std::size_t j = 0; j < groupSize; ++j) {
                    if (!mask[base + j]) continue;
                    const double p = P[i * groupSize + j] / z;
                    P[i * groupSize + j] = p;
                    for (std::size_t c = 0; c < dh; ++c) out(base + i, off + c) += p * V(base + j, off + c);
                }
            }
        }
    }

    const Var parents[] = {q, k, v};
    return g.record(std::move(out), parents,
                    [q, k, v, mask, groupSize, heads, groups, dh, scaleFactor,
                     probs = std::move(probs)](Graph& gr, const Matrix& go) {
        const Matrix& Q = gr.value(q);
        const Matrix& K = gr.value(k);
        const Matrix& V = gr.value(v);
        Matrix dQ(Q.rows(), Q.cols()), dK(K.rows(), K.cols()), dV(V.rows(), V.cols());
        std::vector<double> dp(groupSize);
        for (std::size_t b = 0; b < groups; ++b) {
            const std::size_t base = b * groupSize;
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t off = h * dh;
                const double* P = probs.data() + (b * heads + h) * groupSize * groupSize;
                for (std::size_t i = 0; i < groupSize; ++i) {
                    if (!mask[base + i]) continue;
                    double weighted = 0.0;
                    for (std::size_t j = 0; j < groupSize; ++j) {
                        if (!mask[base + j]) continue;
                        const double p = P[i * groupSize + j];
                        double s = 0.0;
                        for (std::size_t c = 0; c < dh; ++c) {
                            s += go(base + i, off + c) * V(base + j, off + c);
                            dV(base + j, off + c) += p * go(base + i, off + c);
                        }
                        dp[j] = s;
                        weighted += p * s;
                    }
                    for (std::size_t j = 0; j < groupSize; ++j) {
                        if (!mask[base + j]) continue;
                        const double dl = P[i * groupSize + j] * (dp[j] - weighted) * scaleFactor;
                        for (std::size_t c = 0; c < dh; ++c) {
                            dQ(base + i, off + c) += dl * K(base + j, off + c);
                            dK(base + j, off + c) += dl * Q(base + i, off + c);
                        }
                    }
                }
            }
        }
        gr.accumulate(q, dQ);
        gr.accumulate(k, dK);
        gr.accumulate(v, dV);
    });
}

Var masked_group_softmax(Graph& g, Var scores, const std::vector<bool>& mask, std::size_t groupSize) {
    const Matrix& s = g.value(scores);
    if (s.cols() != 1) raise(ErrorKind::dimension, "masked_group_softmax expects a column, got " + shape(s));
    const std::size_t n = s.rows();
    if (groupSize == 0 || n % groupSize != 0 || mask.size() != n)
        raise(ErrorKind::dimension, "softmax rows/mask/group size mismatch");
    Matrix out(n, 1);
    for (std::size_t base = 0; base < n; base += groupSize) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = base; i < base + groupSize; ++i)
            if (mask[i]) mx = std::max(mx, s(i, 0));
        if (mx == -std::numeric_limits<double>::infinity())
            raise(ErrorKind::emptyScene, "softmax over a fully masked group");
        double z = 0.0;
        for (std::size_t i = base; i < base + groupSize; ++i)
            if (mask[i]) z += (out(i, 0) = std::exp(s(i, 0) - mx));
        for (std::size_t i = base; i < base + groupSize; ++i) out(i, 0) /= z;
    }
    const Matrix y = out;
    const Var parents[] = {scores};
    return g.record(std::move(out), parents, [scores, y, mask, groupSize](Graph& gr, const Matrix& go) {
        Matrix dx(y.rows(), 1);
        for (std::size_t base = 0; base < y.rows(); base += groupSize) {
            double inner = 0.0;
            for (std::size_t i = base; i < base + groupSize; ++i) inner += y(i, 0) * go(i, 0);
            for (std::size_t i = base; i < base + groupSize; ++i)
                if (mask[i]) dx(i, 0) = y(i, 0) * (go(i, 0) - inner);
        }
        gr.accumulate(scores, dx);
    });
}

Var group_weighted_sum(Graph& g, Var x, Var weights, std::size_t groupSize) {
    const Matrix& xv = g.value(x);
    const Matrix& wv = g.value(weights);
    if (wv.cols() != 1 || wv.rows() != xv.rows() || groupSize == 0 || xv.rows() % groupSize != 0)
        raise(ErrorKind::dimension, "group_weighted_sum: x " + shape(xv) + ", weights " + shape(wv));
    const std::size_t groups = xv.rows() / groupSize;
    Matrix out(groups, xv.cols());
    for (std::size_t b = 0; b < groups; ++b)
        for (std::size_t i = 0; i < groupSize; ++i) {
            const std::size_t r = b * groupSize + i;
            const double w = wv(r, 0);
            if (w == 0.0) continue;
            for (std::size_t c = 0; c < xv.cols(); ++c) out(b, c) += w * xv(r, c);
        }
    const Var parents[] = {x, weights};
    return g.record(std::move(out), parents, [x, weights, groupSize](Graph& gr, const Matrix& go) {
        const Matrix& xv = gr.value(x);
        const Matrix& wv = gr.value(weights);
        Matrix dx(xv.rows(), xv.cols());
        Matrix dw(wv.rows(), 1);
        for (std::size_t r = 0; r < xv.rows(); ++r) {
            const std::size_t b = r / groupSize;
            double s = 0.0;
            for (std::size_t c = 0; c < xv.cols(); ++c) {
                dx(r, c) = wv(r, 0) * go(b, c);
                s += xv(r, c) * go(b, c);
            }
            dw(r, 0) = s;
        }
        gr.accumulate(x, dx);
        gr.accumulate(weights, dw);
    });
}

Var symmetric_info_nce(Graph& g, Var a, Var b, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        raise(ErrorKind::config, "temperature must be positive and finite");
    const Matrix& A = g.value(a);
    const Matrix& B = g.value(b);
    check_same_shape(A, B, "symmetric_info_nce");
    const std::size_t n = A.rows();
    if (n == 0) raise(ErrorKind::contract, "symmetric_info_nce over an empty batch");

    Matrix logits;
    gemm(A, false, B, true, logits, false);
    for (double& v : logits.data()) v /= temperature;

    // rowP: softmax over each row; colP: softmax over each column (stored [row][col]).
    Matrix rowP(n, n), colP(n, n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += (rowP(i, j) = std::exp(logits(i, j) - mx));
        for (std::size_t j = 0; j < n; ++j) rowP(i, j) /= z;
        loss -= logits(i, i) - mx - std::log(z);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) z += (colP(i, j) = std::exp(logits(i, j) - mx));
        for (std::size_t i = 0; i < n; ++i) colP(i, j) /= z;
        loss -= logits(j, j) - mx - std::log(z);
    }
    loss /= static_cast<double>(n);

    const Var parents[] = {a, b};
    return g.record(Matrix(1, 1, loss), parents,
                    [a, b, n, temperature, rowP = std::move(rowP), colP = std::move(colP)](
                        Graph& gr, const Matrix& go) {
        const double coef = go(0, 0) / (static_cast<double>(n) * temperature);
        Matrix dS(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                dS(i, j) = coef * (rowP(i, j) + colP(i, j) - (i == j ? 2.0 : 0.0));
        if (gr.requires_grad(a)) {
            Matrix da;
            gemm(dS, false, gr.value(b), false, da, false);
            gr.accumulate(a, da);
        }
        if (gr.requires_grad(b)) {
            Matrix db;
            gemm(dS, true, gr.value(a), false, db, false);
            gr.accumulate(b, db);
        }
    });
}

} // namespace uniloc::numcore
