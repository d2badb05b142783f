#pragma once

#include <stdexcept>
#include <string>

namespace fracspec {

enum class ErrorKind {
  InvalidModel,
  Resolution,
  InvalidRegion,
  InvalidParameter,
  Compatibility,
  Support,
  Locality,
  IncompleteTable,
  IllConditioning,
  SpuriousMode,
  UnderDetermined,
  PoleProximity,
  InsufficientData,
  DensityFailure,
  Range,
  Config,
  Io
};

const char* kind_name(ErrorKind k);

// Every library failure carries a kind and the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace fracspec
