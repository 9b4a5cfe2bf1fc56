#pragma once

#include <stdexcept>
#include <string>

namespace uniloc {

enum class ErrorKind {
    dimension,
    lookup,
    config,
    emptyScene,
    degenerateScene,
    numeric,
    contract,
    generation,
    parse,
    data,
    training,
    evaluation,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

inline void require(bool cond, ErrorKind kind, const char* message) {
    if (!cond) raise(kind, message);
}

} // namespace uniloc
