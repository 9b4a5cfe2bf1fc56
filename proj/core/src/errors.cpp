#include "uniloc/errors.hpp"

namespace uniloc {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::lookup: return "lookup error";
    case ErrorKind::config: return "config error";
    case ErrorKind::emptyScene: return "empty-scene error";
    case ErrorKind::degenerateScene: return "degenerate-scene error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::generation: return "generation error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::data: return "data error";
    case ErrorKind::training: return "training error";
    case ErrorKind::evaluation: return "evaluation error";
    case ErrorKind::io: return "io error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

} // namespace uniloc
