#include "uniloc/cli/app.hpp"

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
    try {
        return uniloc::cli::run(argc, argv, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "uniloc: unexpected failure: " << e.what() << "\n";
        return 1;
    }
}
