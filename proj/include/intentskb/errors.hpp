#pragma once

#include <stdexcept>
#include <string>

namespace intentskb {

// Malformed input data. Carries the 1-based line number when the source is a
// line-oriented file (0 when not applicable).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, std::size_t line, const std::string& reason)
        : std::runtime_error(file.empty()
                                 ? "line " + std::to_string(line) + ": " + reason
                                 : file + ":" + std::to_string(line) + ": " + reason),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

// Bad configuration or a missing/unusable input file. The CLI maps this to
// exit code 1, everything else to 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace intentskb
