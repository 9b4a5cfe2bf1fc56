#pragma once

#include "uniloc/numcore/param_store.hpp"

#include <cstddef>
#include <map>
#include <string>

namespace uniloc::numcore {

struct AdamMoments {
    Matrix m;
    Matrix v;
};

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step = 0;
    std::map<std::string, AdamMoments, std::less<>> moments;
};

// Bias-corrected Adam update over every store entry, then zeroes the gradients.
// Throws ErrorKind::numeric naming the path if any gradient is non-finite (store untouched).
void adam_step(ParamStore& store, AdamState& state, double lr);

// Multi-step schedule: base * 0.4^floor(epoch / 7).
double lr_at_epoch(std::size_t epoch, double base);

} // namespace uniloc::numcore
