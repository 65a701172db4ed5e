#pragma once

#include <stdexcept>
#include <string>

namespace rpf {

/// Root of every exception thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct InvalidMapError : Error { using Error::Error; };
struct DegenerateMapError : Error { using Error::Error; };
struct PairingError : Error { using Error::Error; };
struct InvalidParameters : Error { using Error::Error; };
struct WindowError : Error { using Error::Error; };
struct DivisionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct RadiusError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DependencyError : Error { using Error::Error; };

}  // namespace rpf
