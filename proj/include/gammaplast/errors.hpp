#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gammaplast {

/// Base of every error raised by the library. `kind()` is the stable name
/// written to the structured stderr record by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define GAMMAPLAST_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(#Name, what) {}       \
  };

GAMMAPLAST_DEFINE_ERROR(DomainError)
GAMMAPLAST_DEFINE_ERROR(ArgumentError)
GAMMAPLAST_DEFINE_ERROR(InvariantError)
GAMMAPLAST_DEFINE_ERROR(SamplingError)
GAMMAPLAST_DEFINE_ERROR(ViolationError)
GAMMAPLAST_DEFINE_ERROR(NonConvergence)
GAMMAPLAST_DEFINE_ERROR(BarrierError)
GAMMAPLAST_DEFINE_ERROR(GridMismatch)
GAMMAPLAST_DEFINE_ERROR(DegenerateFit)
GAMMAPLAST_DEFINE_ERROR(ParseError)
GAMMAPLAST_DEFINE_ERROR(ValidationError)

#undef GAMMAPLAST_DEFINE_ERROR

}  // namespace gammaplast
