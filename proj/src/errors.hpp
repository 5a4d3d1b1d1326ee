#pragma once

#include <stdexcept>
#include <string>

namespace etsim {

// Malformed file content (bad key, bad token, bad header).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model fitting failed (degenerate response, singular system).
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace etsim
