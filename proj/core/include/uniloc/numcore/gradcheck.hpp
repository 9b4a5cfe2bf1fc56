#pragma once

#include "uniloc/numcore/graph.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace uniloc::numcore {

using LossBuilder = std::function<Var(Graph&)>;

struct GradCheckOptions {
    double step = 1e-5;
    // 0 checks every entry; otherwise a seeded sample of this many entries per path.
    std::size_t maxEntriesPerPath = 0;
    // Applied to the analytic gradients before comparison (used to self-test the checker).
    std::function<void(ParamStore&)> tamper;
};

struct GradCheckReport {
    std::map<std::string, double> worstByPath;
    double worst() const;
    std::string worst_path() const;
};

// Compares reverse-mode gradients of the scalar built by `build` against central finite
// differences. Error metric: |g - g_fd| / max(1, |g|, |g_fd|). Store values are restored and
// gradients zeroed on return.
GradCheckReport grad_check(const LossBuilder& build, ParamStore& store, std::uint64_t seed,
                           const GradCheckOptions& options = {});

} // namespace uniloc::numcore
