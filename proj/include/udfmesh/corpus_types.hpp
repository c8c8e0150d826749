#pragma once

#include "udfmesh/field.hpp"

#include <string>

namespace udfmesh {

struct CorpusShape {
    std::string name;
    FieldPtr source;
};

} // namespace udfmesh
