#pragma once

#include "uniloc/numcore/graph.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uniloc::numcore {

// Parameter layout helpers. Every linear layer lives at "<prefix>/W" and "<prefix>/b".
void add_mlp3(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
              std::size_t out, std::uint64_t seed);
// Attention projections "<prefix>/{q,k,v,o}" and feed-forward "<prefix>/ffn/{0,1}".
void add_mhsa_block(ParamStore& store, const std::string& prefix, std::size_t dim,
                    std::size_t ffnHidden, std::uint64_t seed);

// y = x W + b
Var linear_forward(Graph& g, Var x, std::string_view prefix);
// linear -> ReLU -> linear -> ReLU -> linear over "<prefix>/0..2"
Var mlp3_forward(Graph& g, Var x, std::string_view prefix);

// Residual attention block (no normalization layers) over consecutive groups of groupSize rows:
//   H = X + MHSA(X);  T = H + FFN(H);  masked rows of T are zero.
Var mhsa_block_forward(Graph& g, Var x, const std::vector<bool>& mask, std::string_view prefix,
                       std::size_t heads, std::size_t groupSize);

// Graph-free conveniences (forward only).
Matrix linear_forward(const Matrix& x, std::string_view prefix, const ParamStore& store);
Matrix mlp3_forward(const Matrix& x, std::string_view prefix, const ParamStore& store);
Matrix mhsa_block_forward(const Matrix& x, const std::vector<bool>& mask, std::string_view prefix,
                          const ParamStore& store, std::size_t heads);

// Masked softmax over one sequence; masked entries are 0. Throws emptyScene if nothing is unmasked.
std::vector<double> softmax(std::span<const double> logits, const std::vector<bool>& mask);

} // namespace uniloc::numcore
