#pragma once

#include <stdexcept>
#include <string>

namespace spinbath {

// Physical or numerical domain violation (e.g. a point outside the quantum well).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Failure of a model evaluation at run time (all samples degenerate, ...).
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace spinbath
