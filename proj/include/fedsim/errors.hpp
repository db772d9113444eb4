#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Mismatched parameter layouts or tensor dimensions.
class LayoutError : public std::runtime_error {
public:
    explicit LayoutError(const std::string& what) : std::runtime_error(what) {}
};

// A caller violated an operation precondition (empty batch, bad label, ...).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A file failed to parse; the message names the offending file.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedsim
