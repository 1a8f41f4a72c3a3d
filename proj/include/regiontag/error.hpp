#pragma once

#include <stdexcept>
#include <string>

namespace regiontag {

// Maps onto the CLI exit codes: usage 2, data 3, internal 4.
enum class ErrorKind { Usage = 2, Data = 3, Internal = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void usage_error(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }
[[noreturn]] inline void data_error(const std::string& msg) { throw Error(ErrorKind::Data, msg); }
[[noreturn]] inline void internal_error(const std::string& msg) { throw Error(ErrorKind::Internal, msg); }

}  // namespace regiontag
