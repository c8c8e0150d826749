#pragma once

#include <stdexcept>
#include <string>

namespace udfmesh {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or unreadable file contents (OBJ, weights, dataset, corpus).
struct FormatError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Signed evaluation requested on an open-surface field kind.
struct UnsupportedKindError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

} // namespace udfmesh
