#pragma once

#include <stdexcept>
#include <string>

namespace fedlearn {

// Thrown when a caller breaks an operation's precondition (shape mismatch,
// empty input where one is required, out-of-range argument).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline void require(bool condition, const char* what) {
    if (!condition) {
        throw ContractViolation(what);
    }
}

inline void require(bool condition, const std::string& what) {
    if (!condition) {
        throw ContractViolation(what);
    }
}

} // namespace fedlearn
