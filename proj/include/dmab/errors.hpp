#pragma once

#include <stdexcept>
#include <string>

namespace dmab {

// Malformed or inconsistent model/experiment description.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A caller broke an operation's precondition at run time (e.g. a policy
// picked an unavailable arm, or update() was called for the wrong arm).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

} // namespace dmab
