#pragma once

#include <stdexcept>
#include <string>

namespace gnnbench {

// Bad inputs: malformed files, schema violations, incompatible arguments.
// The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A data-access audit violation. The CLI maps these to exit code 3.
struct AuditError : std::runtime_error {
    explicit AuditError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gnnbench
