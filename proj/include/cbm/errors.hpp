#pragma once

#include <stdexcept>
#include <string>

namespace cbm {

/// Malformed input text (.lts, .mlts, .q files, term expressions).
/// Carries a human-readable location in what().
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A name (state, label, carrier element) that is not declared.
class LookupError : public std::runtime_error {
public:
    explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Values from different quantales mixed in one operation.
class QuantaleTypeError : public std::runtime_error {
public:
    explicit QuantaleTypeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller broke a documented precondition (e.g. universe not transition-closed).
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A configured bound was exceeded. `bound()` names the bound.
class ResourceError : public std::runtime_error {
public:
    ResourceError(const std::string& bound, const std::string& msg)
        : std::runtime_error(msg + " [bound: " + bound + "]"), bound_(bound) {}
    const std::string& bound() const { return bound_; }

private:
    std::string bound_;
};

} // namespace cbm
