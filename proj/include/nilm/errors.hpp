#pragma once

#include <stdexcept>

namespace nilm {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: ConfigError -> 1, ParseError/InputError/AlignmentError -> 2,
// OrderingError/IntegrityError/CapabilityError -> 3.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OrderingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nilm
