#pragma once

#include <stdexcept>
#include <string>

namespace radaa {

// Error with a stable machine-readable code. The code is what shows up in
// HTTP error bodies ({"error": code, "error_description": what()}).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& description)
        : std::runtime_error(description), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace radaa
