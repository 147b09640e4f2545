#pragma once

#include <stdexcept>
#include <string>

namespace pcnf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON, unknown keys, unsupported combinations.
class InputError : public Error {
public:
    using Error::Error;
};

enum class InfeasibilityKind {
    Discretization,  // some factor has no admissible label tuple
    Local,           // bound tightening emptied a variable domain
};

class InfeasibleError : public Error {
public:
    InfeasibleError(InfeasibilityKind kind, const std::string& what) : Error(what), kind_(kind) {}
    [[nodiscard]] InfeasibilityKind kind() const { return kind_; }

private:
    InfeasibilityKind kind_;
};

// A configured size cap was hit (oracle enumeration, super-node count,
// simplex iterations).
class CapacityError : public Error {
public:
    using Error::Error;
};

}  // namespace pcnf
