#ifndef CAMPUSFLOW_ERRORS_HPP
#define CAMPUSFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace campusflow {

// Bad user input: unreadable files, schema violations, failed preconditions
// on loaded data. CLI maps these to exit status 2.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency fault (a kernel or caller bug, not bad input).
// CLI maps these to exit status 3.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace campusflow

#endif
