#pragma once

#include <stdexcept>
#include <string>

namespace vlmedge {

/// Exception carrying a module-specific error code. Each module declares an
/// `enum class` of its failure modes and an alias of this template.
template <typename Errc>
class CodedError : public std::runtime_error {
 public:
  CodedError(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace vlmedge
