#pragma once

#include <stdexcept>
#include <string>

namespace sinkwatch {

// Raised for every precondition violation on public entry points. The CLI maps
// it to exit code 1; anything else escaping a subcommand maps to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ValidationError(message);
}

} // namespace sinkwatch
