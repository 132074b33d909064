#pragma once

#include <stdexcept>
#include <string>

namespace cbc {

// Argument errors are reported as std::invalid_argument throughout.

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MetricUndefined : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cbc
