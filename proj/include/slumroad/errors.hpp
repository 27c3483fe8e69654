#pragma once

#include <stdexcept>
#include <string>

namespace slumroad {

/// Base of every error raised by the library. `kind()` is the stable,
/// machine-readable name used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SLUMROAD_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

SLUMROAD_DEFINE_ERROR(ParseError);
SLUMROAD_DEFINE_ERROR(GeometryError);
SLUMROAD_DEFINE_ERROR(TopologyError);
SLUMROAD_DEFINE_ERROR(DomainError);
SLUMROAD_DEFINE_ERROR(ConvergenceError);
SLUMROAD_DEFINE_ERROR(InvalidAction);
SLUMROAD_DEFINE_ERROR(DeadlockError);
SLUMROAD_DEFINE_ERROR(ConfigError);
SLUMROAD_DEFINE_ERROR(ShapeError);
SLUMROAD_DEFINE_ERROR(IsolatedNodeError);
SLUMROAD_DEFINE_ERROR(EmptyMaskError);
SLUMROAD_DEFINE_ERROR(StateError);
SLUMROAD_DEFINE_ERROR(NumericalError);
SLUMROAD_DEFINE_ERROR(DisconnectedError);
SLUMROAD_DEFINE_ERROR(TooLargeError);
SLUMROAD_DEFINE_ERROR(UnknownVariant);

#undef SLUMROAD_DEFINE_ERROR

}  // namespace slumroad
