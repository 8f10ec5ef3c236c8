#pragma once

#include <stdexcept>
#include <string>

namespace pbe {

/** \brief Base of every exception thrown by the library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error { using Error::Error; };
class InvalidArgument : public Error { using Error::Error; };
class SingularPointError : public Error { using Error::Error; };
class SolverError : public Error { using Error::Error; };
class EquilibrationError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace pbe
