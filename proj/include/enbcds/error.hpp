#ifndef ENBCDS_ERROR_HPP
#define ENBCDS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace enbcds {

enum class ErrorKind {
  kUnknownGdf,
  kDegenerateRange,
  kCycleDetected,
  kNotMandatory,
  kNonConcaveMode,
  kUnresolvedTarget,
  kInvalidDistribution,
  kSyntaxError,
  kSchemaError,
  kValidationError,
  kEmptyCurve,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Domain error carrying a kind and, when known, the JSON-pointer style path
// of the offending entity.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string path = {})
      : std::runtime_error(message), kind_(kind), path_(std::move(path)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

}  // namespace enbcds

#endif  // ENBCDS_ERROR_HPP
