#include "uniloc/numcore/optim.hpp"

#include "uniloc/errors.hpp"

#include <cmath>

namespace uniloc::numcore {

namespace {
constexpr double kDecayFactor = 0.4;
constexpr std::size_t kDecayEvery = 7;
} // namespace

void adam_step(ParamStore& store, AdamState& state, double lr) {
    if (!(lr > 0.0)) raise(ErrorKind::config, "learning rate must be positive");
    for (const auto& [path, e] : store)
        if (!e.grad.all_finite()) raise(ErrorKind::numeric, "non-finite gradient at " + path);

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);

    for (auto& [path, e] : store) {
        auto it = state.moments.find(path);
        if (it == state.moments.end()) {
            AdamMoments fresh{Matrix(e.tensor.rows(), e.tensor.cols()),
                              Matrix(e.tensor.rows(), e.tensor.cols())};
            it = state.moments.emplace(path, std::move(fresh)).first;
        }
        auto& m = it->second.m.data();
        auto& v = it->second.v.data();
        auto& w = e.tensor.data();
        auto& gr = e.grad.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gr[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gr[i] * gr[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
            gr[i] = 0.0;
        }
    }
}

double lr_at_epoch(std::size_t epoch, double base) {
    return base * std::pow(kDecayFactor, static_cast<double>(epoch / kDecayEvery));
}

} // namespace uniloc::numcore
