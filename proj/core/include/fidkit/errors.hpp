#pragma once

#include <stdexcept>
#include <string>

namespace fidkit {

// All library failures are thrown as Error; the kind maps to a CLI exit code.
class Error : public std::runtime_error {
 public:
  enum class Kind { Usage, Io, Data, Internal };

  Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(Error::Kind::Usage, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(Error::Kind::Io, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(Error::Kind::Data, msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
  throw Error(Error::Kind::Internal, msg);
}

}  // namespace fidkit
