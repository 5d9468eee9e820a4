#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace smartclass {

/// Exception carrying a module-specific error code. Each module defines its
/// own code enum and a `to_string(Code)` overload found by ADL.
template <typename Code>
class Error : public std::runtime_error {
public:
    Error(Code code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
          code_(code), detail_(detail) {}

    explicit Error(Code code) : Error(code, std::string{}) {}

    Code code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Code code_;
    std::string detail_;
};

}  // namespace smartclass
