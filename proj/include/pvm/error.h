#ifndef PVM_ERROR_H_
#define PVM_ERROR_H_

#include <stdexcept>
#include <string>

namespace pvm {

enum class ErrorKind {
  kUsage = 1,     // bad arguments or configuration
  kData = 2,      // unreadable or inconsistent input data
  kNumerical = 3, // non-finite or undefined numerical result
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error UsageError(const std::string& message) {
  return Error(ErrorKind::kUsage, message);
}
inline Error DataError(const std::string& message) {
  return Error(ErrorKind::kData, message);
}
inline Error NumericalError(const std::string& message) {
  return Error(ErrorKind::kNumerical, message);
}

}  // namespace pvm

#endif  // PVM_ERROR_H_
