#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uniloc::train {

struct BlockCheck {
    std::string block;
    double worst = 0.0;
    std::string worstPath;
    std::size_t parameters = 0;
    double seconds = 0.0;
};

// Finite-difference checks for every trainable block at small sizes, ending with the full
// scene loss over two scenes of three instances at D = 8.
std::vector<BlockCheck> run_gradcheck_suite(std::uint64_t seed);

} // namespace uniloc::train
