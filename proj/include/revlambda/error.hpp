#pragma once

#include <stdexcept>
#include <string>

namespace revlambda {

enum class ErrorKind {
    Domain,        // argument outside the mathematical domain of a function
    Precondition,  // operation called on input violating its contract
    Degenerate,    // geometric degeneracy (zero length, zero chord)
    Guard,         // a priori bound or invariant violated during integration
    Convergence,   // iterative method failed
    Io,
    Usage,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Precondition: return "precondition violated";
        case ErrorKind::Degenerate: return "degenerate input";
        case ErrorKind::Guard: return "guard violation";
        case ErrorKind::Convergence: return "convergence failure";
        case ErrorKind::Io: return "I/O error";
        case ErrorKind::Usage: return "usage error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace revlambda
