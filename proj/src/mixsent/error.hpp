#pragma once

#include <stdexcept>
#include <string>

namespace mixsent {

enum class ErrorCode {
    invalid_argument = 1,
    io = 2,
    format = 3,
    config = 4,
    shape = 5,
    internal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace mixsent
