#include "uniloc/numcore/gradcheck.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uniloc::numcore {

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& [path, e] : worstByPath) w = std::max(w, e);
    return w;
}

std::string GradCheckReport::worst_path() const {
    std::string best;
    double w = -1.0;
    for (const auto& [path, e] : worstByPath)
        if (e > w) {
            w = e;
            best = path;
        }
    return best;
}

namespace {

double evaluate(const LossBuilder& build, const ParamStore& store) {
    Graph g(store);
    const Var root = build(g);
    return g.value(root)(0, 0);
}

} // namespace

GradCheckReport grad_check(const LossBuilder& build, ParamStore& store, std::uint64_t seed,
                           const GradCheckOptions& options) {
    store.zero_grad();
    {
        Graph g(store);
        const Var root = build(g);
        const Matrix& rv = g.value(root);
        if (rv.rows() != 1 || rv.cols() != 1)
            raise(ErrorKind::contract, "grad_check needs a scalar root");
        g.backward(root, store);
    }
    if (options.tamper) options.tamper(store);

    Rng rng(seed);
    GradCheckReport report;
    for (auto& [path, entry] : store) {
        std::vector<std::size_t> indices(entry.tensor.size());
        std::iota(indices.begin(), indices.end(), std::size_t{0});
        if (options.maxEntriesPerPath != 0 && indices.size() > options.maxEntriesPerPath) {
            rng.shuffle(indices);
            indices.resize(options.maxEntriesPerPath);
        }
        double worst = 0.0;
        for (std::size_t idx : indices) {
            double& w = entry.tensor.data()[idx];
            const double saved = w;
            w = saved + options.step;
            const double up = evaluate(build, store);
            w = saved - options.step;
            const double down = evaluate(build, store);
            w = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double analytic = entry.grad.data()[idx];
            const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
        report.worstByPath[path] = worst;
    }
    store.zero_grad();
    return report;
}

} // namespace uniloc::numcore
